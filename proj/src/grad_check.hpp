#pragma once

#include <functional>
#include <map>
#include <string>

#include "dense_array.hpp"
#include "param_store.hpp"

namespace vcore {

using ScalarFn = std::function<double(ParameterStore&)>;

/// Central-difference gradient estimates, (f(p+eps) - f(p-eps)) / (2 eps) per
/// coordinate of every trainable parameter. The store is restored exactly
/// afterwards. This is the independent oracle the reverse-mode path is checked
/// against; it never touches the tape.
std::map<std::string, DenseArray> finite_diff_grad(const ScalarFn& f, ParameterStore& store,
                                                   double eps);

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Largest relative_error over two same-shaped arrays.
double max_relative_error(const DenseArray& a, const DenseArray& b);

}  // namespace vcore
