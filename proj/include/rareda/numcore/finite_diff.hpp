#pragma once

#include <functional>

#include "rareda/numcore/matrix.hpp"

namespace rareda {

using ScalarFn = std::function<double(const Matrix&)>;

/// Central-difference gradient of `f` at `x`: entry i is
/// (f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h. Throws if h ≤ 0 or f is non-finite.
Matrix finite_diff_grad(const ScalarFn& f, const Matrix& x, double h);

/// max |a−b| / max(|a|, |b|, floor) over entries; the floor keeps the ratio
/// meaningful where both gradients are near zero.
double max_relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-6);

}  // namespace rareda
