#include "skp/localized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skp/diagnostics.hpp"
#include "skp/error.hpp"
#include "skp/inference.hpp"
#include "skp/parallel.hpp"
#include "skp/spatial_index.hpp"

namespace skp {

SparseSymmetric approximate_inverse(const InterCorrelationMatrix& sigma, std::span<const Coord> locations,
                                    double delta, int workers, NeighborhoodStats* stats) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("localization range must be finite and > 0");
  const std::size_t m = sigma.order();
  if (locations.size() != m) throw InvalidArgument("location count does not match matrix order");
  if (m == 0) {
    if (stats) *stats = {};
    return SparseSymmetric::from_triplets(0, {});
  }

  const SpatialIndex index(locations, delta);
  const auto rows = sigma.full_rows();

  // psi_cols[i] / psi_vals[i]: row i of the support matrix.
  std::vector<std::vector<std::size_t>> psi_cols(m);
  std::vector<std::vector<double>> psi_vals(m);
  std::vector<char> failed(m, 0);

  parallel_for(m, workers, [&](std::size_t i) {
    std::vector<std::size_t> hood;
    index.neighbors_into(locations[i], delta, hood);
    const auto n = static_cast<Eigen::Index>(hood.size());
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const std::size_t g = hood[a];
      for (std::size_t p = rows.row_ptr[g]; p < rows.row_ptr[g + 1]; ++p) {
        const auto it = std::lower_bound(hood.begin(), hood.end(), rows.cols[p]);
        if (it != hood.end() && *it == rows.cols[p]) local(a, it - hood.begin()) = rows.values[p];
      }
    }
    const auto self = static_cast<Eigen::Index>(std::lower_bound(hood.begin(), hood.end(), i) - hood.begin());
    Eigen::LLT<Eigen::MatrixXd> llt(local);
    if (llt.info() != Eigen::Success) {
      failed[i] = 1;
      return;
    }
    // Row `self` of the local inverse equals its column by symmetry.
    const Eigen::VectorXd row = llt.solve(Eigen::VectorXd::Unit(n, self));
    psi_cols[i] = std::move(hood);
    psi_vals[i].assign(row.data(), row.data() + n);
  });

  const auto first_failure = std::find(failed.begin(), failed.end(), 1);
  if (first_failure != failed.end()) {
    throw FactorizationError("localized sub-matrix is not positive definite at center observation",
                             static_cast<std::size_t>(first_failure - failed.begin()));
  }

  if (stats) {
    stats->min_size = std::numeric_limits<std::size_t>::max();
    stats->max_size = 0;
    double total = 0.0;
    for (const auto& c : psi_cols) {
      stats->min_size = std::min(stats->min_size, c.size());
      stats->max_size = std::max(stats->max_size, c.size());
      total += static_cast<double>(c.size());
    }
    stats->mean_size = total / static_cast<double>(m);
  }

  // Neighborhoods are symmetric (|x_i - x_j| < delta both ways), so Psi(j, i) exists whenever
  // Psi(i, j) does.
  std::vector<Triplet> lower;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < psi_cols[i].size(); ++p) {
      const std::size_t j = psi_cols[i][p];
      if (j > i) break;
      double psi_ji = 0.0;
      const auto& cj = psi_cols[j];
      const auto it = std::lower_bound(cj.begin(), cj.end(), i);
      if (it != cj.end() && *it == i) psi_ji = psi_vals[j][static_cast<std::size_t>(it - cj.begin())];
      const double v = j == i ? psi_vals[i][p] : 0.5 * (psi_vals[i][p] + psi_ji);
      lower.push_back({i, j, v});
    }
  }
  return SparseSymmetric::from_triplets(m, lower);
}

LocalizedFit::LocalizedFit(ObservationSet obs, CorrelationModel model, int k)
    : model_(std::move(model)), obs_(std::move(obs)), k_(k), delta_(0.0) {
  if (!model_.taper_range()) throw InvalidArgument("localized fits need a finite-range model (taper_range)");
  if (k < 1) throw InvalidArgument("localization parameter k must be >= 1");
  delta_ = k * *model_.taper_range();
}

LocalizedFit LocalizedFit::fit(ObservationSet obs, CorrelationModel model, int k, const Options& options) {
  LocalizedFit f(std::move(obs), std::move(model), k);
  const std::size_t m = f.obs_.size();
  f.support_ = KernelSupport(f.obs_, f.model_);

  bool has_error = false;
  for (const Observation& o : f.obs_.observations()) has_error = has_error || o.error_var > 0.0;
  if (has_error && !options.sigma2) {
    throw InvalidArgument("estimating sigma2 requires exact observations; supply sigma2 for observations with error");
  }
  if (options.sigma2 && !(*options.sigma2 > 0.0)) throw InvalidArgument("sigma2 must be > 0");

  if (m == 0) {
    f.mu_ = options.mu.value_or(0.0);
    f.sigma2_ = options.sigma2.value_or(1.0);
    f.approx_inverse_ = SparseSymmetric::from_triplets(0, {});
    f.weights_.resize(0);
    return f;
  }

  const double assembly_sigma2 = options.sigma2.value_or(1.0);
  const InterCorrelationMatrix sigma =
      assemble(f.obs_, f.model_, assembly_sigma2, {IntegralMode::analytic, options.workers});
  f.nnz_sigma_ = sigma.nnz();
  const auto anchors = f.obs_.anchors();
  f.approx_inverse_ = approximate_inverse(sigma, anchors, f.delta_, options.workers, &f.stats_);
  f.inverse_rows_ = f.approx_inverse_.full_rows();

  const InverseAction action = [&](const Eigen::VectorXd& v) { return f.approx_inverse_.multiply(v); };
  const Eigen::VectorXd values = f.obs_.values();
  const Eigen::VectorXd image = f.obs_.mean_images();
  f.mu_ = options.mu ? *options.mu : estimate_mu(action, values, image);
  f.sigma2_ = options.sigma2 ? *options.sigma2 : estimate_sigma2(action, values, f.mu_, image);
  if (!(f.sigma2_ > 0.0)) throw EstimationError("estimated sigma2 is not positive");
  f.weights_ = f.approx_inverse_.multiply(values - f.mu_ * image);
  f.deviation_var_ = deviation_variance(f);
  return f;
}

double LocalizedFit::predict(const Coord& x) const {
  std::vector<std::size_t> near;
  support_.contributors(x, near);
  double s = 0.0;
  for (std::size_t i : near) s += weights_[i] * kernel_value(obs_[i], x, model_);
  return mu_ + s;
}

double LocalizedFit::variance(const Coord& x) const {
  if (obs_.empty()) return sigma2_;
  std::vector<std::size_t> near;
  support_.contributors(x, near);
  std::vector<double> nu(near.size());
  for (std::size_t a = 0; a < near.size(); ++a) nu[a] = kernel_value(obs_[near[a]], x, model_);
  double quad = 0.0;
  for (std::size_t a = 0; a < near.size(); ++a) {
    if (nu[a] == 0.0) continue;
    const std::size_t g = near[a];
    double row_sum = 0.0;
    // Merge-join row g of Psi with the sorted contributor list.
    std::size_t b = 0;
    for (std::size_t p = inverse_rows_.row_ptr[g]; p < inverse_rows_.row_ptr[g + 1] && b < near.size(); ++p) {
      const std::size_t c = inverse_rows_.cols[p];
      while (b < near.size() && near[b] < c) ++b;
      if (b < near.size() && near[b] == c) row_sum += inverse_rows_.values[p] * nu[b];
    }
    quad += nu[a] * row_sum;
  }
  return sigma2_ * (1.0 - quad);
}

double LocalizedFit::adjusted_variance(const Coord& x) const {
  const double v = variance(x) + deviation_var_;
  if (v < 0.0) {
    ++diagnostics::counters().adjusted_variance_floors;
    return 0.0;
  }
  return v;
}

double deviation_variance(const LocalizedFit& fit) {
  double total = 0.0;
  std::size_t count = 0;
  for (const Observation& o : fit.observations().observations()) {
    if (!o.exact_point()) continue;
    const double diff = o.value - fit.predict(o.location);
    total += diff * diff;
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace skp
