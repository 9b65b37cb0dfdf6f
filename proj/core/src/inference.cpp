#include "skp/inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "skp/error.hpp"
#include "skp/linalg.hpp"
#include "skp/localized.hpp"

namespace skp {

namespace {

void require_exact(const ObservationSet& obs) {
  for (const Observation& o : obs.observations()) {
    if (o.error_var > 0.0) throw InvalidArgument("parameter inference requires exact observations (error_var = 0)");
  }
}

double relative_change(double before, double after, double scale) {
  const double denom = std::max({std::abs(before), std::abs(after), scale, std::numeric_limits<double>::min()});
  return std::abs(after - before) / denom;
}

}  // namespace

double estimate_mu(const InverseAction& inverse, const Eigen::VectorXd& values, const Eigen::VectorXd& image) {
  if (values.size() == 0) throw EstimationError("cannot estimate mu without observations");
  if (image.size() != values.size()) throw InvalidArgument("mean image length does not match values");
  const Eigen::VectorXd s_image = inverse(image);
  const double normalizer = image.dot(s_image);
  if (!(normalizer > 0.0) || !std::isfinite(normalizer)) {
    throw EstimationError("GLS normalizer a^T Sigma^{-1} a is not positive");
  }
  return s_image.dot(values) / normalizer;
}

double estimate_mu(const InverseAction& inverse, const Eigen::VectorXd& values) {
  return estimate_mu(inverse, values, Eigen::VectorXd::Ones(values.size()));
}

double estimate_sigma2(const InverseAction& inverse, const Eigen::VectorXd& values, double mu,
                       const Eigen::VectorXd& image) {
  if (values.size() == 0) throw EstimationError("cannot estimate sigma2 without observations");
  const Eigen::VectorXd r = values - mu * image;
  return r.dot(inverse(r)) / static_cast<double>(values.size());
}

double estimate_sigma2(const InverseAction& inverse, const Eigen::VectorXd& values, double mu) {
  return estimate_sigma2(inverse, values, mu, Eigen::VectorXd::Ones(values.size()));
}

double eta_objective(const ObservationSet& obs, const CorrelationModel& family, double eta, double mu, double sigma2) {
  if (!(eta > 0.0) || !(sigma2 > 0.0)) throw InvalidArgument("eta and sigma2 must be > 0");
  const CorrelationModel model = family.with_base_scale(eta);
  try {
    const SparseCholesky factor(assemble(obs, model, sigma2));
    const Eigen::VectorXd r = obs.values() - mu * obs.mean_images();
    return factor.log_determinant() + factor.half_solve(r).squaredNorm() / sigma2;
  } catch (const FactorizationError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double estimate_eta(const ObservationSet& obs, const CorrelationModel& family, double mu, double sigma2,
                    const EtaSearch& bounds) {
  if (!(bounds.lower > 0.0) || !(bounds.upper > bounds.lower)) throw InvalidArgument("eta bounds need 0 < lower < upper");
  if (!(bounds.rel_tol > 0.0)) throw InvalidArgument("eta tolerance must be > 0");
  auto objective = [&](double log_eta) { return eta_objective(obs, family, std::exp(log_eta), mu, sigma2); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(bounds.lower), b = std::log(bounds.upper);
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  const double stop = std::log1p(bounds.rel_tol);
  while (b - a > stop) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double best = fc <= fd ? c : d;
  double best_f = std::min(fc, fd);
  for (double end : {std::log(bounds.lower), std::log(bounds.upper)}) {
    const double f = objective(end);
    if (f < best_f) {
      best_f = f;
      best = end;
    }
  }
  return std::exp(best);
}

double negative_log_likelihood(const ObservationSet& obs, const CorrelationModel& model, double mu, double sigma2) {
  const auto m = static_cast<double>(obs.size());
  const SparseCholesky factor(assemble(obs, model, sigma2));
  const Eigen::VectorXd r = obs.values() - mu * obs.mean_images();
  return 0.5 * (m * std::log(2.0 * std::numbers::pi * sigma2) + factor.log_determinant() +
                factor.half_solve(r).squaredNorm() / sigma2);
}

MleResult estimate_joint(const ObservationSet& obs, const CorrelationModel& family,
                         const std::optional<EtaSearch>& eta_bounds, int workers) {
  if (obs.empty()) throw EstimationError("cannot estimate parameters without observations");
  require_exact(obs);
  const Eigen::VectorXd values = obs.values();
  const Eigen::VectorXd image = obs.mean_images();

  MleResult result;
  double eta = family.base_scale();
  if (eta_bounds) eta = std::clamp(eta, eta_bounds->lower, eta_bounds->upper);
  double mu = 0.0, sigma2 = 0.0;
  constexpr int kMaxSweeps = 50;
  constexpr double kRelTol = 1e-5;
  EtaSearch search;
  if (eta_bounds) {
    search = *eta_bounds;
    // The sweep test compares successive eta values, so the line search must resolve finer than it.
    search.rel_tol = std::min(search.rel_tol, 1e-7);
  }

  for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
    const CorrelationModel model = family.with_base_scale(eta);
    SparseCholesky factor(assemble(obs, model, 1.0, {IntegralMode::analytic, workers}));
    const InverseAction action = [&](const Eigen::VectorXd& v) { return factor.solve(v); };
    const double new_mu = estimate_mu(action, values, image);
    const double new_sigma2 = estimate_sigma2(action, values, new_mu, image);
    double new_eta = eta;
    if (eta_bounds && new_sigma2 > 0.0) new_eta = estimate_eta(obs, family, new_mu, new_sigma2, search);

    const bool first = sweep == 1;
    const double scale = std::sqrt(std::max(new_sigma2, 0.0));
    const bool settled = !first && relative_change(mu, new_mu, scale) < kRelTol &&
                         relative_change(sigma2, new_sigma2, 0.0) < kRelTol && relative_change(eta, new_eta, 0.0) < kRelTol;
    mu = new_mu;
    sigma2 = new_sigma2;
    eta = new_eta;
    result.iterations = static_cast<std::size_t>(sweep);
    if (!eta_bounds || settled || new_sigma2 <= 0.0) {
      result.converged = eta_bounds ? settled || new_sigma2 <= 0.0 : true;
      break;
    }
  }

  result.mu_hat = mu;
  result.sigma2_hat = sigma2;
  if (eta_bounds) result.eta_hat = eta;
  result.degenerate_sigma2 = !(sigma2 > 0.0);
  if (!result.degenerate_sigma2) {
    result.neg_log_likelihood = negative_log_likelihood(obs, family.with_base_scale(eta), mu, sigma2);
  }
  return result;
}

MleResult estimate_localized(const ObservationSet& obs, const CorrelationModel& model, int k, int workers) {
  if (obs.empty()) throw EstimationError("cannot estimate parameters without observations");
  require_exact(obs);
  LocalizedFit::Options options;
  options.workers = workers;
  const LocalizedFit fit = LocalizedFit::fit(obs, model, k, options);
  MleResult r;
  r.mu_hat = fit.mu();
  r.sigma2_hat = fit.sigma2();
  r.iterations = 1;
  r.converged = true;
  return r;
}

}  // namespace skp
