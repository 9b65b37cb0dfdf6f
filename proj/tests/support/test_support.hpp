#pragma once

// Shared fixtures for the test binaries: seeded random instances and oracles that do not reuse
// library code paths (tanh-sinh quadrature, finite differences, dense Eigen algebra).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "skp/corrfn.hpp"
#include "skp/obsmodel.hpp"

namespace skp::testing {

struct Instance {
  ObservationSet obs{1};
  CorrelationModel model{BaseKind::matern52, 1.0};
  double mu = 0.0;
  double sigma2 = 1.0;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Uniform locations in [0, side]^dim with a minimum pairwise separation.
inline std::vector<Coord> spaced_locations(std::mt19937_64& rng, int dim, std::size_t m, double side,
                                           double min_sep) {
  std::vector<Coord> out;
  std::size_t attempts = 0;
  while (out.size() < m) {
    if (++attempts > 100000) throw std::runtime_error("could not place spaced locations");
    Coord x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = uniform(rng, 0.0, side);
    const bool ok = std::all_of(out.begin(), out.end(), [&](const Coord& y) { return distance(x, y) >= min_sep; });
    if (ok) out.push_back(x);
  }
  return out;
}

/// Random prediction problem. In 1D with `operators` the set mixes point, derivative (only for
/// untapered models) and interval observations; a share of point observations carries error.
inline Instance random_instance(std::mt19937_64& rng, int dim, std::size_t m, bool operators, bool tapered) {
  Instance inst;
  const bool matern = rng() % 2 == 0;
  const double scale = matern ? uniform(rng, 0.5, 1.5) : uniform(rng, 0.3, 0.6);
  std::optional<double> taper;
  if (tapered) taper = uniform(rng, 1.0, 2.5);
  inst.model = CorrelationModel(matern ? BaseKind::matern52 : BaseKind::gauss2, scale, taper);
  inst.mu = uniform(rng, -5.0, 5.0);
  inst.sigma2 = uniform(rng, 0.5, 3.0);

  const double side = dim == 1 ? 0.6 * static_cast<double>(m) : 0.7 * std::sqrt(static_cast<double>(m)) + 0.5;
  const auto locations = spaced_locations(rng, dim, m, side, 0.25 * scale + 0.05);
  std::normal_distribution<double> noise(0.0, 1.5);
  inst.obs = ObservationSet(dim);
  for (const Coord& x : locations) {
    const double v = inst.mu + noise(rng);
    const double roll = uniform(rng, 0.0, 1.0);
    if (operators && dim == 1 && roll < 0.2 && !tapered) {
      inst.obs.add(Observation::derivative(x, {rng() % 2 ? 1.0 : -1.0, 0.0, 0.0}, noise(rng)));
    } else if (operators && dim == 1 && roll < 0.4) {
      const double w = uniform(rng, 0.2, 1.2);
      inst.obs.add(Observation::interval_average(x[0] - 0.5 * w, x[0] + 0.5 * w, w * v));
    } else if (roll > 0.85) {
      inst.obs.add(Observation::point(x, v, uniform(rng, 0.05, 0.5) * inst.sigma2));
    } else {
      inst.obs.add(Observation::point(x, v));
    }
  }
  return inst;
}

inline Coord random_query(std::mt19937_64& rng, const ObservationSet& obs, double margin = 1.0) {
  Coord lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < obs.dim(); ++a) {
    lo[a] = std::numeric_limits<double>::infinity();
    hi[a] = -lo[a];
  }
  for (const auto& o : obs.observations()) {
    for (int a = 0; a < obs.dim(); ++a) {
      const double l = o.kind == ObsKind::interval_average ? o.interval.lower : o.location[a];
      const double u = o.kind == ObsKind::interval_average ? o.interval.upper : o.location[a];
      lo[a] = std::min(lo[a], l);
      hi[a] = std::max(hi[a], u);
    }
  }
  Coord x{0, 0, 0};
  for (int a = 0; a < obs.dim(); ++a) x[a] = uniform(rng, lo[a] - margin, hi[a] + margin);
  return x;
}

/// Direct tanh-sinh quadrature over [a, b], splitting at the given interior breakpoints.
inline double tanh_sinh(const std::function<double(double)>& f, double a, double b,
                        std::vector<double> breaks = {}) {
  if (a == b) return 0.0;
  const double sign = a < b ? 1.0 : -1.0;
  if (b < a) std::swap(a, b);
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double t) { return !(t > a && t < b); }),
               breaks.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.insert(breaks.begin(), a);
  breaks.push_back(b);
  boost::math::quadrature::tanh_sinh<double> rule;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) total += rule.integrate(f, breaks[i], breaks[i + 1], 1e-14);
  }
  return sign * total;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double second_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// Dense Sigma from pairwise cross_correlation calls (no spatial index, no sparsity).
inline Eigen::MatrixXd dense_sigma(const ObservationSet& obs, const CorrelationModel& model, double sigma2) {
  const auto m = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) s(i, j) = cross_correlation(obs[i], obs[j], model, sigma2, i == j);
  }
  return s;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::MatrixXd b(n, n);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = z(rng);
  return b.transpose() * b + Eigen::MatrixXd::Identity(n, n);
}

}  // namespace skp::testing
