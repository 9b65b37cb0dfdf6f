#include "skp/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace skp::quadrature {

namespace {

constexpr unsigned kMaxDepth = 20;

double integrate_ordered(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  // Boost terminates on a relative criterion; tighten it until the estimated error is below abs_tol.
  double rel_tol = 1e-13;
  double error = 0.0;
  double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, kMaxDepth, rel_tol, &error);
  if (error > abs_tol) {
    value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, kMaxDepth, 1e-14, &error);
  }
  return value;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  if (b < a) return -integrate_ordered(f, b, a, abs_tol);
  return integrate_ordered(f, a, b, abs_tol);
}

double integrate_split(const std::function<double(double)>& f, double a, double b, double breakpoint,
                       double abs_tol) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  double value = 0.0;
  if (breakpoint > lo && breakpoint < hi) {
    value = integrate_ordered(f, lo, breakpoint, abs_tol / 2) + integrate_ordered(f, breakpoint, hi, abs_tol / 2);
  } else {
    value = integrate(f, lo, hi, abs_tol);
  }
  return b < a ? -value : value;
}

}  // namespace skp::quadrature
