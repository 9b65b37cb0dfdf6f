#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace skp {

enum class BaseKind { matern52, gauss2 };

std::string_view to_string(BaseKind kind);
BaseKind base_kind_from_string(std::string_view name);

/// Stationary isotropic correlation rho(|tau|) = base(|tau|) * spherical(|tau|; taper_range).
/// Without a taper_range the model has infinite range.
///
/// The product of two non-negative definite functions is non-negative definite, so any shipped
/// base combined with the spherical taper (valid in R^3) is a valid finite-range model. Further
/// factors (sums with weights, other compact kernels) would slot in next to `taper_range`.
class CorrelationModel {
 public:
  CorrelationModel(BaseKind kind, double base_scale, std::optional<double> taper_range = std::nullopt);

  BaseKind base_kind() const noexcept { return kind_; }
  double base_scale() const noexcept { return scale_; }
  const std::optional<double>& taper_range() const noexcept { return taper_; }
  bool finite_range() const noexcept { return taper_.has_value(); }

  /// sqrt(5) / tau_M; only meaningful for matern52.
  double kappa0() const noexcept;

  CorrelationModel with_base_scale(double scale) const { return {kind_, scale, taper_}; }

  /// True when rho'' exists at the origin, i.e. the field is mean-square differentiable.
  bool differentiable() const noexcept { return !taper_.has_value(); }

  friend bool operator==(const CorrelationModel&, const CorrelationModel&) = default;

 private:
  BaseKind kind_;
  double scale_;
  std::optional<double> taper_;
};

double eval_matern52(double dist, double tau_m);
double eval_gauss2(double dist, double scale);
double eval_spherical(double dist, double tau0);

/// Exactly 0.0 for dist >= taper_range.
double eval(const CorrelationModel& model, double dist);

/// Radial profile f(d) and its derivatives with respect to d, for d >= 0.
/// At d = 0 the one-sided limits are returned.
struct RadialJet {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

RadialJet eval_jet(const CorrelationModel& model, double dist);

/// F(d) = int_0^d f(s) ds.
double radial_integral(const CorrelationModel& model, double dist);

/// H(d) = int_0^d F(s) ds = int_0^d (d - s) f(s) ds.
double radial_double_integral(const CorrelationModel& model, double dist);

/// Draws `n` uniform locations in the unit box of dimension `dim` per trial and checks that the
/// smallest eigenvalue of the correlation matrix is >= -1e-8.
bool spot_check_nonneg_definite(const CorrelationModel& model, int trials, int n, std::uint64_t rng_seed,
                                int dim = 2);
bool spot_check_nonneg_definite(const std::function<double(double)>& rho, int trials, int n,
                                std::uint64_t rng_seed, int dim = 2);

}  // namespace skp
