#include "skp/corrfn.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "skp/error.hpp"

namespace skp {

namespace {

void require_distance(double dist) {
  if (!std::isfinite(dist) || dist < 0.0) throw InvalidArgument("correlation distance must be finite and >= 0");
}

void require_scale(double scale, const char* what) {
  if (!std::isfinite(scale) || scale <= 0.0) throw InvalidArgument(std::string(what) + " must be finite and > 0");
}

RadialJet matern52_jet(double d, double tau_m) {
  const double k = std::sqrt(5.0) / tau_m;
  const double e = std::exp(-k * d);
  const double k2 = k * k;
  return {(1.0 + k * d + k2 * d * d / 3.0) * e, -(k2 / 3.0) * (d + k * d * d) * e,
          -(k2 / 3.0) * (1.0 + k * d - k2 * d * d) * e};
}

RadialJet gauss2_jet(double d, double a) {
  const double a2 = a * a;
  const double f = std::exp(-d * d / a2);
  return {f, -2.0 * d / a2 * f, (4.0 * d * d / (a2 * a2) - 2.0 / a2) * f};
}

RadialJet spherical_jet(double d, double tau0) {
  if (d >= tau0) return {};
  const double s = d / tau0;
  return {1.0 - 1.5 * s + 0.5 * s * s * s, (-1.5 + 1.5 * s * s) / tau0, 3.0 * s / (tau0 * tau0)};
}

RadialJet base_jet(const CorrelationModel& model, double d) {
  return model.base_kind() == BaseKind::matern52 ? matern52_jet(d, model.base_scale())
                                                 : gauss2_jet(d, model.base_scale());
}

// I_n = int_0^u s^n exp(-k s) ds for n = 0..6 (lower incomplete gamma). The power series is
// used for small k u, where the closed form cancels.
std::array<double, 7> exp_moments(double k, double u) {
  std::array<double, 7> out{};
  const double x = k * u;
  if (x < 2.0) {
    for (int n = 0; n < 7; ++n) {
      double term = 1.0, sum = 0.0;
      for (int j = 0; j < 80; ++j) {
        const double add = term / (n + 1 + j);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= -x / (j + 1);
      }
      out[n] = std::pow(u, n + 1) * sum;
    }
    return out;
  }
  const double e = std::exp(-x);
  double partial = 0.0, power = 1.0, factorial = 1.0;
  for (int n = 0; n < 7; ++n) {
    if (n > 0) {
      power *= x / n;
      factorial *= n;
    }
    partial += power;
    out[n] = factorial / std::pow(k, n + 1) * (1.0 - e * partial);
  }
  return out;
}

// J_n = int_0^u s^n exp(-s^2 / a^2) ds for n = 0..4.
std::array<double, 5> gauss_moments(double a, double u) {
  std::array<double, 5> out{};
  const double r = u / a;
  if (r < 1.0) {
    for (int n = 0; n < 5; ++n) {
      double term = 1.0, sum = 0.0;
      for (int j = 0; j < 80; ++j) {
        const double add = term / (n + 1 + 2 * j);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= -r * r / (j + 1);
      }
      out[n] = std::pow(u, n + 1) * sum;
    }
    return out;
  }
  const double e = std::exp(-r * r);
  out[0] = a * std::sqrt(std::numbers::pi) / 2.0 * std::erf(r);
  out[1] = a * a / 2.0 * (1.0 - e);
  for (int n = 2; n < 5; ++n) out[n] = a * a / 2.0 * ((n - 1) * out[n - 2] - std::pow(u, n - 1) * e);
  return out;
}

// M_n = int_0^u s^n base(s) ds for n = 0..4.
std::array<double, 5> base_moments(const CorrelationModel& model, double u) {
  if (model.base_kind() == BaseKind::gauss2) return gauss_moments(model.base_scale(), u);
  const double k = model.kappa0();
  const auto i = exp_moments(k, u);
  std::array<double, 5> out{};
  for (int n = 0; n < 5; ++n) out[n] = i[n] + k * i[n + 1] + k * k / 3.0 * i[n + 2];
  return out;
}

// The spherical taper is 1 + c1 s + c3 s^3 on [0, tau0], so tapered integrals are combinations
// of base moments up to order 4. Returns {int_0^u rho, int_0^u s rho}.
std::pair<double, double> tapered_moments(const CorrelationModel& model, double u) {
  const double tau0 = *model.taper_range();
  const double c1 = -1.5 / tau0;
  const double c3 = 0.5 / (tau0 * tau0 * tau0);
  const auto m = base_moments(model, u);
  return {m[0] + c1 * m[1] + c3 * m[3], m[1] + c1 * m[2] + c3 * m[4]};
}

}  // namespace

std::string_view to_string(BaseKind kind) { return kind == BaseKind::matern52 ? "matern52" : "gauss2"; }

BaseKind base_kind_from_string(std::string_view name) {
  if (name == "matern52") return BaseKind::matern52;
  if (name == "gauss2") return BaseKind::gauss2;
  throw InvalidArgument("unknown correlation base kind '" + std::string(name) + "'");
}

CorrelationModel::CorrelationModel(BaseKind kind, double base_scale, std::optional<double> taper_range)
    : kind_(kind), scale_(base_scale), taper_(taper_range) {
  require_scale(base_scale, "base scale");
  if (taper_) require_scale(*taper_, "taper range");
}

double CorrelationModel::kappa0() const noexcept { return std::sqrt(5.0) / scale_; }

double eval_matern52(double dist, double tau_m) {
  require_distance(dist);
  require_scale(tau_m, "tau_m");
  if (dist == 0.0) return 1.0;
  return matern52_jet(dist, tau_m).value;
}

double eval_gauss2(double dist, double scale) {
  require_distance(dist);
  require_scale(scale, "scale");
  if (dist == 0.0) return 1.0;
  return gauss2_jet(dist, scale).value;
}

double eval_spherical(double dist, double tau0) {
  require_distance(dist);
  require_scale(tau0, "tau0");
  if (dist == 0.0) return 1.0;
  if (dist >= tau0) return 0.0;
  const double s = dist / tau0;
  return (1.0 + s / 2.0) * (1.0 - s) * (1.0 - s);
}

double eval(const CorrelationModel& model, double dist) {
  require_distance(dist);
  if (dist == 0.0) return 1.0;
  if (model.taper_range() && dist >= *model.taper_range()) return 0.0;
  const double base = base_jet(model, dist).value;
  return model.taper_range() ? base * eval_spherical(dist, *model.taper_range()) : base;
}

RadialJet eval_jet(const CorrelationModel& model, double dist) {
  require_distance(dist);
  const RadialJet b = base_jet(model, dist);
  if (!model.taper_range()) return b;
  const RadialJet t = spherical_jet(dist, *model.taper_range());
  return {b.value * t.value, b.first * t.value + b.value * t.first,
          b.second * t.value + 2.0 * b.first * t.first + b.value * t.second};
}

double radial_integral(const CorrelationModel& model, double dist) {
  require_distance(dist);
  if (dist == 0.0) return 0.0;
  if (!model.taper_range()) {
    if (model.base_kind() == BaseKind::matern52) {
      const double k = model.kappa0();
      const double k2 = k * k;
      return (k / 3.0) * (8.0 / k2 - (8.0 / k2 + 5.0 * dist / k + dist * dist) * std::exp(-k * dist));
    }
    const double a = model.base_scale();
    return a * std::sqrt(std::numbers::pi) / 2.0 * std::erf(dist / a);
  }
  return tapered_moments(model, std::min(dist, *model.taper_range())).first;
}

double radial_double_integral(const CorrelationModel& model, double dist) {
  require_distance(dist);
  if (dist == 0.0) return 0.0;
  if (!model.taper_range()) {
    if (model.base_kind() == BaseKind::matern52) {
      const double k = model.kappa0();
      const double k2 = k * k;
      const double k3 = k2 * k;
      return (k / 3.0) *
             (8.0 * dist / k2 - 15.0 / k3 + std::exp(-k * dist) * (15.0 / k3 + 7.0 * dist / k2 + dist * dist / k));
    }
    const double a = model.base_scale();
    return dist * radial_integral(model, dist) - a * a / 2.0 * (1.0 - std::exp(-dist * dist / (a * a)));
  }
  const auto [zeroth, first] = tapered_moments(model, std::min(dist, *model.taper_range()));
  return dist * zeroth - first;
}

bool spot_check_nonneg_definite(const std::function<double(double)>& rho, int trials, int n, std::uint64_t rng_seed,
                                int dim) {
  if (trials < 1 || n < 1 || dim < 1) throw InvalidArgument("spot check needs trials, n, dim >= 1");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> pts(static_cast<std::size_t>(n) * dim);
  for (int t = 0; t < trials; ++t) {
    for (double& p : pts) p = unit(rng);
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double d2 = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double diff = pts[i * dim + a] - pts[j * dim + a];
          d2 += diff * diff;
        }
        c(i, j) = c(j, i) = rho(std::sqrt(d2));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-8) return false;
  }
  return true;
}

bool spot_check_nonneg_definite(const CorrelationModel& model, int trials, int n, std::uint64_t rng_seed, int dim) {
  return spot_check_nonneg_definite([&](double d) { return eval(model, d); }, trials, n, rng_seed, dim);
}

}  // namespace skp
