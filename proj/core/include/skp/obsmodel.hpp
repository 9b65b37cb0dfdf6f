#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "skp/corrfn.hpp"
#include "skp/geometry.hpp"
#include "skp/linalg.hpp"

namespace skp {

enum class ObsKind { point, derivative, interval_average };

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double length() const noexcept { return upper - lower; }
  double midpoint() const noexcept { return 0.5 * (lower + upper); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// One datum: a linear functional of the field plus independent Gaussian error.
///
/// - point:            d = r(location) + e
/// - derivative:       d = d/dh r(location + h * direction)|_{h=0} + e
/// - interval_average: d = int_{lower}^{upper} r(u) du + e   (1D; the unnormalized integral)
///
/// `location` is the anchor used for neighbor searches; for intervals it is the midpoint.
struct Observation {
  ObsKind kind = ObsKind::point;
  Coord location{};
  double value = 0.0;
  double error_var = 0.0;
  Coord direction{};
  Interval interval{};

  static Observation point(const Coord& at, double value, double error_var = 0.0);
  static Observation derivative(const Coord& at, const Coord& direction, double value, double error_var = 0.0);
  static Observation interval_average(double lower, double upper, double value, double error_var = 0.0);

  /// Expectation of the observation under a constant field level of one.
  double mean_image() const noexcept;
  /// Half-width of the support around `location` (0 except for intervals).
  double half_extent() const noexcept;
  bool exact_point() const noexcept { return kind == ObsKind::point && error_var == 0.0; }

  friend bool operator==(const Observation&, const Observation&) = default;
};

class ObservationSet {
 public:
  explicit ObservationSet(int dim = 1);
  ObservationSet(int dim, std::vector<Observation> observations);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return obs_.size(); }
  bool empty() const noexcept { return obs_.empty(); }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  std::span<const Observation> observations() const noexcept { return obs_; }

  /// Validates the observation against the set dimension.
  void add(const Observation& o);

  std::vector<Coord> anchors() const;
  Eigen::VectorXd values() const;
  Eigen::VectorXd mean_images() const;
  double max_half_extent() const noexcept;
  /// Largest anchor-to-anchor distance.
  double diameter() const;

  ObservationSet with_values(std::span<const double> values) const;

 private:
  int dim_;
  std::vector<Observation> obs_;
};

/// How interval integrals are computed: closed form (radial antiderivatives) or direct adaptive
/// quadrature of the point kernel.
enum class IntegralMode { analytic, quadrature };

/// Correlation between the field value at x and the observation, nu_obs(x).
double kernel_value(const Observation& obs, const Coord& x, const CorrelationModel& model,
                    IntegralMode mode = IntegralMode::analytic);

/// Directional derivative of nu_obs at x along `dir`.
double kernel_gradient(const Observation& obs, const Coord& x, const Coord& dir, const CorrelationModel& model);

/// int_{lower}^{upper} nu_obs(u) du (1D).
double kernel_integral(const Observation& obs, const Interval& over, const CorrelationModel& model,
                       IntegralMode mode = IntegralMode::analytic);

/// Inter-correlation entry between two observations. With `same_observation` the error ratio
/// error_var / sigma2_r is added (diagonal entry).
double cross_correlation(const Observation& a, const Observation& b, const CorrelationModel& model, double sigma2_r,
                         bool same_observation = false, IntegralMode mode = IntegralMode::analytic);

/// Distance from x to the support of the observation (the anchor, or the nearest interval point).
/// Under a finite-range model the kernel vanishes when this is >= the range.
double support_distance(const Observation& obs, const Coord& x);

using InterCorrelationMatrix = SparseSymmetric;

struct AssembleOptions {
  IntegralMode mode = IntegralMode::analytic;
  int workers = 1;
};

/// Builds Sigma^rho_d. With a finite-range model only pairs whose supports are closer than the
/// range are evaluated (spatial index), and zero entries are never stored.
InterCorrelationMatrix assemble(const ObservationSet& obs, const CorrelationModel& model, double sigma2_r,
                                const AssembleOptions& options = {});

/// Throws UnsupportedOperator when the set contains kinds the model cannot serve.
void check_supported(const ObservationSet& obs, const CorrelationModel& model);

}  // namespace skp
