#include "dense_array.hpp"

#include <cmath>
#include <cstring>

#include "error.hpp"

namespace vcore {

namespace {

std::size_t checked_element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw ValidationError("DenseArray: zero extent in shape " + shape_to_string(shape));
    n *= e;
  }
  return n;
}

}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_element_count(shape_), 0.0) {
  cols_ = shape_.empty() ? 0 : shape_.back();
}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (checked_element_count(shape_) != data_.size()) {
    throw ValidationError("DenseArray: " + std::to_string(data_.size()) +
                          " values do not fill shape " + shape_to_string(shape_));
  }
  cols_ = shape_.empty() ? 0 : shape_.back();
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols) {
  return DenseArray({rows, cols});
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols,
                              std::initializer_list<double> values) {
  return DenseArray({rows, cols}, std::vector<double>(values));
}

DenseArray DenseArray::vector(std::size_t n) { return DenseArray({n}); }

DenseArray DenseArray::vector(std::initializer_list<double> values) {
  return DenseArray({values.size()}, std::vector<double>(values));
}

DenseArray DenseArray::scalar(double v) { return DenseArray({1}, {v}); }

DenseArray DenseArray::full(std::vector<std::size_t> shape, double v) {
  DenseArray a(std::move(shape));
  a.fill(v);
  return a;
}

std::size_t DenseArray::rows() const {
  if (!is_matrix()) throw ValidationError("rows(): not a matrix, shape " + shape_string());
  return shape_[0];
}

std::size_t DenseArray::cols() const {
  if (!is_matrix()) throw ValidationError("cols(): not a matrix, shape " + shape_string());
  return shape_[1];
}

DenseArray DenseArray::plane(std::size_t t) const {
  if (rank() != 3) throw ValidationError("plane(): rank-3 array required, shape " + shape_string());
  if (t >= shape_[0]) throw ValidationError("plane(): index out of range");
  const std::size_t n = shape_[1] * shape_[2];
  DenseArray out({shape_[1], shape_[2]});
  std::memcpy(out.data(), data_.data() + t * n, n * sizeof(double));
  return out;
}

bool DenseArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void DenseArray::fill(double v) {
  for (double& x : data_) x = v;
}

std::string DenseArray::shape_string() const { return shape_to_string(shape_); }

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace vcore
