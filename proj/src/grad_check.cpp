#include "grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace vcore {

std::map<std::string, DenseArray> finite_diff_grad(const ScalarFn& f, ParameterStore& store,
                                                   double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ValidationError("finite_diff_grad: eps must lie in [1e-7, 1e-3]");
  }
  std::map<std::string, DenseArray> grads;
  for (auto& [name, entry] : store.entries()) {
    if (!entry.trainable) continue;
    DenseArray g(entry.value.shape());
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value[i];
      entry.value[i] = saved + eps;
      const double up = f(store);
      entry.value[i] = saved - eps;
      const double down = f(store);
      entry.value[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_diff_grad: non-finite evaluation at '" + name + "'[" +
                           std::to_string(i) + "]");
      }
      g[i] = (up - down) / (2.0 * eps);
    }
    grads.emplace(name, std::move(g));
  }
  return grads;
}

double relative_error(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / denom;
}

double max_relative_error(const DenseArray& a, const DenseArray& b) {
  if (!a.same_shape(b)) {
    throw ValidationError("max_relative_error: shape mismatch " + a.shape_string() + " vs " +
                          b.shape_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, relative_error(a[i], b[i]));
  return m;
}

}  // namespace vcore
