#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "skp/corrfn.hpp"
#include "skp/obsmodel.hpp"

namespace skp {

/// v -> Sigma^{-1} v, from a Cholesky factor (global) or an approximate sparse inverse (localized).
using InverseAction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Generalized least-squares level: [a^T S a]^{-1} a^T S d with S the inverse action and `image`
/// the prior-mean image a (all ones for point observations).
double estimate_mu(const InverseAction& inverse, const Eigen::VectorXd& values, const Eigen::VectorXd& image);
double estimate_mu(const InverseAction& inverse, const Eigen::VectorXd& values);

/// m^{-1} (d - mu a)^T S (d - mu a).
double estimate_sigma2(const InverseAction& inverse, const Eigen::VectorXd& values, double mu,
                       const Eigen::VectorXd& image);
double estimate_sigma2(const InverseAction& inverse, const Eigen::VectorXd& values, double mu);

/// Bracket for the scalar range parameter (the base scale of the correlation model).
struct EtaSearch {
  double lower = 0.0;
  double upper = 0.0;
  double rel_tol = 1e-4;
};

/// ln|Sigma(eta)| + (d - mu a)^T [sigma2 Sigma(eta)]^{-1} (d - mu a); +inf when Sigma(eta) is not
/// positive definite.
double eta_objective(const ObservationSet& obs, const CorrelationModel& family, double eta, double mu, double sigma2);

/// Golden-section search of eta_objective in log(eta). The returned value never has a larger
/// objective than either bracket end.
double estimate_eta(const ObservationSet& obs, const CorrelationModel& family, double mu, double sigma2,
                    const EtaSearch& bounds);

struct MleResult {
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  std::optional<double> eta_hat;
  /// Absent for localized estimates (no log-determinant) and degenerate fits.
  std::optional<double> neg_log_likelihood;
  std::size_t iterations = 0;
  bool converged = false;
  /// Residuals vanished so sigma2_hat is 0.
  bool degenerate_sigma2 = false;
};

/// Full negative log marginal likelihood of the observations.
double negative_log_likelihood(const ObservationSet& obs, const CorrelationModel& model, double mu, double sigma2);

/// Maximum marginal likelihood of (mu, sigma2) and optionally eta by cyclic coordinate updates
/// (mu | sigma2, eta) -> (sigma2 | mu, eta) -> (eta | mu, sigma2), stopping when every relative
/// change is below 1e-5 or after 50 sweeps. Without `eta_bounds` the model's scale is kept and a
/// single sweep suffices. Requires exact observations.
MleResult estimate_joint(const ObservationSet& obs, const CorrelationModel& family,
                         const std::optional<EtaSearch>& eta_bounds = std::nullopt, int workers = 1);

/// mu*, sigma2* from the localized approximate inverse with range k * taper_range.
MleResult estimate_localized(const ObservationSet& obs, const CorrelationModel& model, int k, int workers = 1);

}  // namespace skp
