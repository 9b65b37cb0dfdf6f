#include "skp/obsmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <tuple>

#include "skp/error.hpp"
#include "skp/parallel.hpp"
#include "skp/quadrature.hpp"
#include "skp/spatial_index.hpp"

namespace skp {

Observation Observation::point(const Coord& at, double value, double error_var) {
  Observation o;
  o.kind = ObsKind::point;
  o.location = at;
  o.value = value;
  o.error_var = error_var;
  return o;
}

Observation Observation::derivative(const Coord& at, const Coord& direction, double value, double error_var) {
  Observation o;
  o.kind = ObsKind::derivative;
  o.location = at;
  o.direction = direction;
  o.value = value;
  o.error_var = error_var;
  return o;
}

Observation Observation::interval_average(double lower, double upper, double value, double error_var) {
  Observation o;
  o.kind = ObsKind::interval_average;
  o.interval = {lower, upper};
  o.location = {o.interval.midpoint(), 0.0, 0.0};
  o.value = value;
  o.error_var = error_var;
  return o;
}

double Observation::mean_image() const noexcept {
  switch (kind) {
    case ObsKind::point: return 1.0;
    case ObsKind::derivative: return 0.0;
    case ObsKind::interval_average: return interval.length();
  }
  return 1.0;
}

double Observation::half_extent() const noexcept {
  return kind == ObsKind::interval_average ? 0.5 * interval.length() : 0.0;
}

ObservationSet::ObservationSet(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("dimension must be 1, 2 or 3");
}

ObservationSet::ObservationSet(int dim, std::vector<Observation> observations) : ObservationSet(dim) {
  obs_.reserve(observations.size());
  for (const Observation& o : observations) add(o);
}

void ObservationSet::add(const Observation& o) {
  if (!std::isfinite(o.value)) throw InvalidArgument("observation value must be finite");
  if (!std::isfinite(o.error_var) || o.error_var < 0.0) throw InvalidArgument("error variance must be >= 0");
  for (int a = 0; a < kMaxDim; ++a) {
    if (!std::isfinite(o.location[a])) throw InvalidArgument("observation location must be finite");
    if (a >= dim_ && (o.location[a] != 0.0 || o.direction[a] != 0.0)) {
      throw InvalidArgument("observation has coordinates beyond the set dimension");
    }
  }
  if (o.kind == ObsKind::derivative) {
    const double norm = std::sqrt(dot(o.direction, o.direction));
    if (!(std::abs(norm - 1.0) <= 1e-9)) throw InvalidArgument("derivative direction must have unit norm");
  }
  if (o.kind == ObsKind::interval_average) {
    if (dim_ != 1) throw InvalidArgument("interval-average observations require dimension 1");
    if (!std::isfinite(o.interval.lower) || !std::isfinite(o.interval.upper) || !(o.interval.lower < o.interval.upper)) {
      throw InvalidArgument("interval bounds must satisfy lower < upper");
    }
  }
  obs_.push_back(o);
  if (o.kind == ObsKind::interval_average) obs_.back().location = {o.interval.midpoint(), 0.0, 0.0};
}

std::vector<Coord> ObservationSet::anchors() const {
  std::vector<Coord> a;
  a.reserve(obs_.size());
  for (const Observation& o : obs_) a.push_back(o.location);
  return a;
}

Eigen::VectorXd ObservationSet::values() const {
  Eigen::VectorXd v(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) v[i] = obs_[i].value;
  return v;
}

Eigen::VectorXd ObservationSet::mean_images() const {
  Eigen::VectorXd v(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) v[i] = obs_[i].mean_image();
  return v;
}

double ObservationSet::max_half_extent() const noexcept {
  double h = 0.0;
  for (const Observation& o : obs_) h = std::max(h, o.half_extent());
  return h;
}

double ObservationSet::diameter() const {
  if (obs_.empty()) return 0.0;
  // Bounding-box diagonal is an upper bound; exact for the purposes it serves (coverage checks).
  Coord lo = obs_.front().location, hi = lo;
  for (const Observation& o : obs_) {
    for (int a = 0; a < kMaxDim; ++a) {
      lo[a] = std::min(lo[a], o.location[a]);
      hi[a] = std::max(hi[a], o.location[a]);
    }
  }
  return distance(lo, hi);
}

ObservationSet ObservationSet::with_values(std::span<const double> values) const {
  if (values.size() != obs_.size()) throw InvalidArgument("value count does not match observation count");
  ObservationSet out = *this;
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (!std::isfinite(values[i])) throw InvalidArgument("observation value must be finite");
    out.obs_[i].value = values[i];
  }
  return out;
}

namespace {

void require_differentiable(const CorrelationModel& model) {
  if (!model.differentiable()) {
    throw UnsupportedOperator(
        "derivative operators need a correlation function that is twice differentiable at the origin; the "
        "spherical taper is not");
  }
}

// G(t) = int_0^t rho(|s|) ds (odd in t).
double odd_integral(const CorrelationModel& model, double t) {
  const double v = radial_integral(model, std::abs(t));
  return t < 0.0 ? -v : v;
}

// H(t) = int_0^t G(s) ds (even in t).
double even_double_integral(const CorrelationModel& model, double t) {
  return radial_double_integral(model, std::abs(t));
}

// Gradient of rho at lag tau, projected on dir: f'(r) (tau . dir) / r.
double gradient_along(const CorrelationModel& model, const Coord& tau, const Coord& dir) {
  const double r = std::sqrt(dot(tau, tau));
  if (r == 0.0) return 0.0;
  return eval_jet(model, r).first * dot(tau, dir) / r;
}

// z^T Hess(rho)(tau) w.
double hessian_form(const CorrelationModel& model, const Coord& tau, const Coord& z, const Coord& w) {
  const double r = std::sqrt(dot(tau, tau));
  if (r == 0.0) return eval_jet(model, 0.0).second * dot(z, w);
  const RadialJet j = eval_jet(model, r);
  const double uz = dot(tau, z) / r;
  const double uw = dot(tau, w) / r;
  return j.second * uz * uw + j.first / r * (dot(z, w) - uz * uw);
}

double rho_1d(const CorrelationModel& model, double t) { return eval(model, std::abs(t)); }

// int over [lo, hi] of f, split at the sorted interior breakpoints.
double integrate_pieces(const std::function<double(double)>& f, double lo, double hi, std::vector<double> breaks) {
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  double a = lo;
  for (double b : breaks) {
    if (b > a && b < hi) {
      total += quadrature::integrate(f, a, b);
      a = b;
    }
  }
  return total + quadrature::integrate(f, a, hi);
}

int kind_rank(ObsKind k) { return static_cast<int>(k); }

// Gap between the supports of two observations (an interval covers [lower, upper], everything
// else is a single location).
double support_gap(const Observation& a, const Observation& b) {
  if (a.kind != ObsKind::interval_average && b.kind != ObsKind::interval_average) {
    return distance(a.location, b.location);
  }
  const auto lo = [](const Observation& o) { return o.kind == ObsKind::interval_average ? o.interval.lower : o.location[0]; };
  const auto hi = [](const Observation& o) { return o.kind == ObsKind::interval_average ? o.interval.upper : o.location[0]; };
  return std::max(0.0, std::max(lo(a), lo(b)) - std::min(hi(a), hi(b)));
}

// Beyond the taper range every kernel is exactly zero. Differences of antiderivatives would
// otherwise leave rounding residue there.
bool beyond_taper(const CorrelationModel& model, double gap) {
  return model.taper_range() && gap >= *model.taper_range();
}

auto ordering_key(const Observation& o) {
  return std::tie(o.location, o.direction, o.interval.lower, o.interval.upper);
}

}  // namespace

double support_distance(const Observation& obs, const Coord& x) {
  if (obs.kind == ObsKind::interval_average) {
    if (x[0] < obs.interval.lower) return obs.interval.lower - x[0];
    if (x[0] > obs.interval.upper) return x[0] - obs.interval.upper;
    return 0.0;
  }
  return distance(x, obs.location);
}

double kernel_value(const Observation& obs, const Coord& x, const CorrelationModel& model, IntegralMode mode) {
  switch (obs.kind) {
    case ObsKind::point:
      return eval(model, distance(x, obs.location));
    case ObsKind::derivative:
      require_differentiable(model);
      return -gradient_along(model, x - obs.location, obs.direction);
    case ObsKind::interval_average: {
      const double a = obs.interval.lower, b = obs.interval.upper;
      if (beyond_taper(model, support_distance(obs, x))) return 0.0;
      if (mode == IntegralMode::quadrature) {
        return integrate_pieces([&](double u) { return rho_1d(model, x[0] - u); }, a, b, {x[0]});
      }
      return odd_integral(model, x[0] - a) - odd_integral(model, x[0] - b);
    }
  }
  return 0.0;
}

double kernel_gradient(const Observation& obs, const Coord& x, const Coord& dir, const CorrelationModel& model) {
  switch (obs.kind) {
    case ObsKind::point:
      return gradient_along(model, x - obs.location, dir);
    case ObsKind::derivative:
      require_differentiable(model);
      return -hessian_form(model, x - obs.location, dir, obs.direction);
    case ObsKind::interval_average:
      return dir[0] * (rho_1d(model, x[0] - obs.interval.lower) - rho_1d(model, x[0] - obs.interval.upper));
  }
  return 0.0;
}

double kernel_integral(const Observation& obs, const Interval& over, const CorrelationModel& model,
                       IntegralMode mode) {
  const double p = over.lower, q = over.upper;
  {
    const double lo = obs.kind == ObsKind::interval_average ? obs.interval.lower : obs.location[0];
    const double hi = obs.kind == ObsKind::interval_average ? obs.interval.upper : obs.location[0];
    if (beyond_taper(model, std::max(0.0, std::max(lo, p) - std::min(hi, q)))) return 0.0;
  }
  if (mode == IntegralMode::quadrature) {
    std::vector<double> breaks{obs.location[0]};
    if (obs.kind == ObsKind::interval_average) breaks = {obs.interval.lower, obs.interval.upper};
    return integrate_pieces([&](double u) { return kernel_value(obs, {u, 0.0, 0.0}, model, mode); }, p, q,
                            std::move(breaks));
  }
  switch (obs.kind) {
    case ObsKind::point: {
      const double c = obs.location[0];
      return odd_integral(model, q - c) - odd_integral(model, p - c);
    }
    case ObsKind::derivative: {
      require_differentiable(model);
      const double c = obs.location[0];
      return -obs.direction[0] * (rho_1d(model, q - c) - rho_1d(model, p - c));
    }
    case ObsKind::interval_average: {
      const double a = obs.interval.lower, b = obs.interval.upper;
      return even_double_integral(model, q - a) - even_double_integral(model, p - a) -
             even_double_integral(model, q - b) + even_double_integral(model, p - b);
    }
  }
  return 0.0;
}

double cross_correlation(const Observation& a_in, const Observation& b_in, const CorrelationModel& model,
                         double sigma2_r, bool same_observation, IntegralMode mode) {
  if (!std::isfinite(sigma2_r) || sigma2_r <= 0.0) throw InvalidArgument("sigma2_r must be finite and > 0");
  const Observation* a = &a_in;
  const Observation* b = &b_in;
  // Canonical argument order makes the result bit-symmetric in (a, b).
  if (kind_rank(b->kind) < kind_rank(a->kind) ||
      (a->kind == b->kind && ordering_key(*b) < ordering_key(*a))) {
    std::swap(a, b);
  }

  double value = 0.0;
  if (beyond_taper(model, support_gap(*a, *b))) {
    value = 0.0;
  } else if (a->kind == ObsKind::point) {
    value = kernel_value(*b, a->location, model, mode);
  } else if (a->kind == ObsKind::derivative && b->kind == ObsKind::derivative) {
    require_differentiable(model);
    value = -hessian_form(model, a->location - b->location, a->direction, b->direction);
  } else if (a->kind == ObsKind::derivative) {
    // b is an interval: int_b d/dc rho(c - u) du along the derivative direction.
    require_differentiable(model);
    if (mode == IntegralMode::quadrature) {
      value = kernel_integral(*a, b->interval, model, mode);
    } else {
      const double c = a->location[0];
      value = a->direction[0] * (rho_1d(model, c - b->interval.lower) - rho_1d(model, c - b->interval.upper));
    }
  } else {
    value = kernel_integral(*b, a->interval, model, mode);
  }
  if (same_observation) value += a_in.error_var / sigma2_r;
  return value;
}

void check_supported(const ObservationSet& obs, const CorrelationModel& model) {
  for (const Observation& o : obs.observations()) {
    if (o.kind == ObsKind::derivative) require_differentiable(model);
  }
}

InterCorrelationMatrix assemble(const ObservationSet& obs, const CorrelationModel& model, double sigma2_r,
                                const AssembleOptions& options) {
  if (!std::isfinite(sigma2_r) || sigma2_r <= 0.0) throw InvalidArgument("sigma2_r must be finite and > 0");
  check_supported(obs, model);
  const std::size_t m = obs.size();
  const auto anchors = obs.anchors();

  std::optional<SpatialIndex> index;
  double reach = 0.0;
  if (model.taper_range() && m > 0) {
    reach = *model.taper_range() + 2.0 * obs.max_half_extent();
    index.emplace(anchors, reach);
  }

  std::vector<std::vector<Triplet>> rows(m);
  parallel_for(m, options.workers, [&](std::size_t i) {
    std::vector<std::size_t> candidates;
    if (index) {
      index->neighbors_into(anchors[i], reach, candidates);
    } else {
      candidates.resize(i + 1);
      for (std::size_t j = 0; j <= i; ++j) candidates[j] = j;
    }
    auto& row = rows[i];
    for (std::size_t j : candidates) {
      if (j > i) break;
      const Observation& a = obs[i];
      const Observation& b = obs[j];
      if (j != i && a.exact_point() && b.exact_point() && a.location == b.location) {
        throw InvalidArgument("duplicate exact point observations " + std::to_string(j) + " and " +
                              std::to_string(i) + " at the same location");
      }
      const double v = cross_correlation(a, b, model, sigma2_r, i == j, options.mode);
      if (v != 0.0 || i == j) row.push_back({i, j, v});
    }
  });

  std::vector<Triplet> all;
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  return SparseSymmetric::from_triplets(m, all);
}

}  // namespace skp
