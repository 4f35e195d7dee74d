#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "error.hpp"

namespace vcore::ops {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_matrix(const DenseArray& a, const char* who) {
  if (!a.is_matrix()) {
    throw ValidationError(std::string(who) + ": matrix required, got shape " + a.shape_string());
  }
}

void require_same_shape(const DenseArray& a, const DenseArray& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(who) + ": shape mismatch " + a.shape_string() + " vs " +
                          b.shape_string());
  }
}

}  // namespace

DenseArray matmul(const DenseArray& a, const DenseArray& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul: inner extents differ, " + a.shape_string() + " * " +
                          b.shape_string());
  }
  DenseArray c = DenseArray::matrix(a.rows(), b.cols());
  matmul_acc(c, a, b);
  return c;
}

void matmul_acc(DenseArray& out, const DenseArray& a, const DenseArray& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k || out.rows() != m || out.cols() != n) {
    throw ValidationError("matmul_acc: inner extents differ, " + a.shape_string() + " * " +
                          b.shape_string() + " -> " + out.shape_string());
  }
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = arow[l];
      const double* brow = pb + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_acc(DenseArray& out, const DenseArray& a, const DenseArray& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k || out.rows() != m || out.cols() != n) {
    throw ValidationError("matmul_nt_acc: extents differ, " + a.shape_string() + " * T" +
                          b.shape_string() + " -> " + out.shape_string());
  }
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
      crow[j] += acc;
    }
  }
}

void matmul_tn_acc(DenseArray& out, const DenseArray& a, const DenseArray& b) {
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k || out.rows() != m || out.cols() != n) {
    throw ValidationError("matmul_tn_acc: extents differ, T" + a.shape_string() + " * " +
                          b.shape_string() + " -> " + out.shape_string());
  }
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = out.data();
  for (std::size_t l = 0; l < k; ++l) {
    const double* arow = pa + l * m;
    const double* brow = pb + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

DenseArray transpose(const DenseArray& a) {
  require_matrix(a, "transpose");
  DenseArray t = DenseArray::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

DenseArray add(const DenseArray& a, const DenseArray& b) {
  require_same_shape(a, b, "add");
  DenseArray c = a;
  double* pc = c.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < c.size(); ++i) pc[i] += pb[i];
  return c;
}

DenseArray scale(const DenseArray& a, double s) {
  DenseArray c = a;
  double* pc = c.data();
  for (std::size_t i = 0; i < c.size(); ++i) pc[i] *= s;
  return c;
}

DenseArray add_row_broadcast(const DenseArray& a, const DenseArray& bias) {
  require_matrix(a, "add_row_broadcast");
  if (!bias.is_vector() || bias.size() != a.cols()) {
    throw ValidationError("add_row_broadcast: bias " + bias.shape_string() +
                          " does not match matrix " + a.shape_string());
  }
  DenseArray c = a;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) c.at(i, j) += bias[j];
  return c;
}

DenseArray masked_softmax(const DenseArray& logits, const DenseArray& mask) {
  require_matrix(logits, "masked_softmax");
  require_same_shape(logits, mask, "masked_softmax");
  const std::size_t r = logits.rows(), c = logits.cols();
  DenseArray out = DenseArray::matrix(r, c);
  std::vector<double> terms;
  terms.reserve(c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -kInf;
    for (std::size_t j = 0; j < c; ++j) {
      const double m = mask.at(i, j);
      if (m == 0.0) {
        mx = std::max(mx, logits.at(i, j));
      } else if (m != -kInf) {
        throw ValidationError("masked_softmax: mask entries must be 0 or -inf");
      }
    }
    if (mx == -kInf) {
      throw ValidationError("masked_softmax: row " + std::to_string(i) + " is fully masked");
    }
    terms.clear();
    for (std::size_t j = 0; j < c; ++j) {
      if (mask.at(i, j) == 0.0) {
        const double e = std::exp(logits.at(i, j) - mx);
        out.at(i, j) = e;
        terms.push_back(e);
      } else {
        out.at(i, j) = 0.0;
      }
    }
    // value-sorted accumulation: the normalizer depends only on the multiset
    // of terms, so reordering the keys cannot move the result by an ulp
    std::sort(terms.begin(), terms.end());
    double denom = 0.0;
    for (double e : terms) denom += e;
    for (std::size_t j = 0; j < c; ++j) {
      if (mask.at(i, j) == 0.0) out.at(i, j) /= denom;
    }
  }
  return out;
}

DenseArray matmul_sorted(const DenseArray& a, const DenseArray& b) {
  require_matrix(a, "matmul_sorted");
  require_matrix(b, "matmul_sorted");
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul_sorted: inner extents differ, " + a.shape_string() + " * " +
                          b.shape_string());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseArray c = DenseArray::matrix(m, n);
  std::vector<double> terms(k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < k; ++l) terms[l] = a.at(i, l) * b.at(l, j);
      std::sort(terms.begin(), terms.end());
      double acc = 0.0;
      for (double t : terms) acc += t;
      c.at(i, j) = acc;
    }
  }
  return c;
}

DenseArray layer_norm_rows(const DenseArray& x, const DenseArray& gain, const DenseArray& bias,
                           double eps) {
  require_matrix(x, "layer_norm");
  const std::size_t d = x.cols();
  if (!gain.is_vector() || gain.size() != d || !bias.is_vector() || bias.size() != d) {
    throw ValidationError("layer_norm: gain/bias must be vectors of length " + std::to_string(d));
  }
  if (eps < 0.0) throw ValidationError("layer_norm: eps must be non-negative");
  DenseArray out = DenseArray::matrix(x.rows(), d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x.at(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dlt = x.at(i, j) - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      out.at(i, j) = (x.at(i, j) - mean) * inv * gain[j] + bias[j];
    }
  }
  return out;
}

DenseArray gelu(const DenseArray& x) {
  DenseArray out = x;
  double* p = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = p[i];
    p[i] = 0.5 * v * (1.0 + std::erf(v * 0.70710678118654752440));
  }
  return out;
}

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
  const double pdf = 0.39894228040143267794 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

DenseArray mean_rows(const DenseArray& a) {
  require_matrix(a, "mean_rows");
  DenseArray out = DenseArray::matrix(1, a.cols());
  const double inv = 1.0 / static_cast<double>(a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) acc += a.at(i, j);
    out.at(0, j) = acc * inv;
  }
  return out;
}

double sum(const DenseArray& a) {
  double acc = 0.0;
  const double* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += p[i];
  return acc;
}

double max_abs(const DenseArray& a) {
  double m = 0.0;
  const double* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(p[i]));
  return m;
}

double max_abs_diff(const DenseArray& a, const DenseArray& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(pa[i] - pb[i]));
  return m;
}

}  // namespace vcore::ops
