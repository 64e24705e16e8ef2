#pragma once

#include <functional>
#include <vector>

#include "sgcn/tensor.hpp"

namespace sgcn {

/// Central-difference gradient check. f evaluates the scalar objective at the
/// given parameter values; analytic holds the gradients under test, one tensor
/// per parameter in the same order and shape. Returns the maximum relative
/// error over all coordinates, where the relative error of analytic value a
/// against numeric value b is |a - b| / max(1e-8, |a| + |b|).
///
/// Throws NumericError if f evaluates to a non-finite value.
double finite_diff_max_rel_error(
    const std::function<double(const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& params,
    const std::vector<Tensor>& analytic,
    double eps = 1e-5);

} // namespace sgcn
