#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace vcore {

/// N-dimensional array of doubles in row-major order. The single value
/// carrier for the whole project: frame features, weights, masks, gradients.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> values);

  static DenseArray matrix(std::size_t rows, std::size_t cols);
  static DenseArray matrix(std::size_t rows, std::size_t cols,
                           std::initializer_list<double> values);
  static DenseArray vector(std::size_t n);
  static DenseArray vector(std::initializer_list<double> values);
  static DenseArray scalar(double v);
  static DenseArray full(std::vector<std::size_t> shape, double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool is_matrix() const { return rank() == 2; }
  bool is_vector() const { return rank() == 1; }
  bool is_scalar() const { return size() == 1; }
  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  /// For a rank-3 array, copies plane `t` (shape [d1, d2]) out as a matrix.
  DenseArray plane(std::size_t t) const;

  bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::size_t cols_ = 0;  // trailing extent, cached for 2-d indexing
};

/// "rows x cols" style rendering of an arbitrary shape, for error messages.
std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace vcore
