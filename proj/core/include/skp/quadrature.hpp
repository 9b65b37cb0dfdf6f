#pragma once

#include <functional>

namespace skp::quadrature {

inline constexpr double kDefaultAbsTol = 1e-10;

/// Adaptive Gauss-Kronrod (15-point) integral of f over [a, b]. Returns 0 when a == b and a
/// negated integral when b < a.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol = kDefaultAbsTol);

/// Same as integrate() but splits [a, b] at `breakpoint` when it lies strictly inside.
double integrate_split(const std::function<double(double)>& f, double a, double b, double breakpoint,
                       double abs_tol = kDefaultAbsTol);

}  // namespace skp::quadrature
