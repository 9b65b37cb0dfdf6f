#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "skp/corrfn.hpp"
#include "skp/linalg.hpp"
#include "skp/obsmodel.hpp"
#include "skp/predictor.hpp"

namespace skp {

struct NeighborhoodStats {
  std::size_t min_size = 0;
  std::size_t max_size = 0;
  double mean_size = 0.0;
};

/// Localized approximation of Sigma^{-1}: for every observation i the sub-matrix over its
/// neighborhood {j : |x_i - x_j| < delta} is inverted and row i of that inverse is copied into a
/// support matrix Psi; the result is (Psi + Psi^T) / 2.
///
/// Rows are independent and each is written by exactly one task, so the output does not depend
/// on `workers`. A failing sub-factorization is reported with the lowest failing center index.
SparseSymmetric approximate_inverse(const InterCorrelationMatrix& sigma, std::span<const Coord> locations,
                                    double delta, int workers = 1, NeighborhoodStats* stats = nullptr);

class LocalizedFit {
 public:
  struct Options {
    /// Fixed levels; estimated from the approximate inverse when absent.
    std::optional<double> mu;
    std::optional<double> sigma2;
    int workers = 1;
  };

  /// Requires a finite-range model; the localization range is k * taper_range.
  static LocalizedFit fit(ObservationSet obs, CorrelationModel model, int k, const Options& options);
  static LocalizedFit fit(ObservationSet obs, CorrelationModel model, int k) {
    return fit(std::move(obs), std::move(model), k, Options{});
  }

  double predict(const Coord& x) const;
  /// sigma2* (1 - nu^T Psi nu); not clamped, may be slightly negative.
  double variance(const Coord& x) const;
  /// variance(x) + deviation_var(), floored at 0.
  double adjusted_variance(const Coord& x) const;

  const CorrelationModel& model() const noexcept { return model_; }
  const ObservationSet& observations() const noexcept { return obs_; }
  const SparseSymmetric& approx_inverse() const noexcept { return approx_inverse_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double mu() const noexcept { return mu_; }
  double sigma2() const noexcept { return sigma2_; }
  double deviation_var() const noexcept { return deviation_var_; }
  int k() const noexcept { return k_; }
  double delta() const noexcept { return delta_; }
  const NeighborhoodStats& neighborhood_stats() const noexcept { return stats_; }
  std::size_t nnz_intercorrelation() const noexcept { return nnz_sigma_; }

 private:
  LocalizedFit(ObservationSet obs, CorrelationModel model, int k);

  CorrelationModel model_;
  ObservationSet obs_;
  int k_;
  double delta_;
  SparseSymmetric approx_inverse_;
  SparseSymmetric::FullRows inverse_rows_;
  Eigen::VectorXd weights_;
  double mu_ = 0.0;
  double sigma2_ = 1.0;
  double deviation_var_ = 0.0;
  NeighborhoodStats stats_;
  std::size_t nnz_sigma_ = 0;
  KernelSupport support_;
};

/// Mean squared mismatch between exact point observations and the localized prediction at their
/// locations; 0 when the set holds no exact point observation.
double deviation_variance(const LocalizedFit& fit);

}  // namespace skp
