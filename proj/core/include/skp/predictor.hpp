#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "skp/corrfn.hpp"
#include "skp/linalg.hpp"
#include "skp/obsmodel.hpp"
#include "skp/spatial_index.hpp"

namespace skp {

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;
};

/// Regular lattice. Nodes are enumerated row-major: the first axis varies slowest.
class GridSpec {
 public:
  explicit GridSpec(std::vector<GridAxis> axes);

  /// Parses "min,max,count[;min,max,count...]".
  static GridSpec parse(const std::string& text);

  int dim() const noexcept { return static_cast<int>(axes_.size()); }
  std::size_t node_count() const noexcept;
  Coord node(std::size_t flat) const;
  const std::vector<GridAxis>& axes() const noexcept { return axes_; }

 private:
  std::vector<GridAxis> axes_;
};

/// Support lookup shared by the global and localized predictors: which observations have a
/// kernel that can be nonzero at x.
class KernelSupport {
 public:
  KernelSupport() = default;
  KernelSupport(const ObservationSet& obs, const CorrelationModel& model);

  /// Sorted indices y with nu_y(x) possibly nonzero. All indices for infinite-range models.
  void contributors(const Coord& x, std::vector<std::size_t>& out) const;

 private:
  struct Extent {
    bool interval = false;
    double lower = 0.0;
    double upper = 0.0;
  };
  std::vector<Coord> anchors_;
  std::vector<Extent> extents_;
  std::optional<double> range_;
  double reach_ = 0.0;
  std::optional<SpatialIndex> index_;
};

/// Global Kernel predictor: weights alpha = Sigma^{-1} (d - mu a) with a the prior-mean image of
/// each observation operator, and the Cholesky factor of Sigma kept for variance queries.
class KernelPredictor {
 public:
  struct Options {
    int workers = 1;
  };

  static KernelPredictor fit(ObservationSet obs, CorrelationModel model, double mu, double sigma2,
                             const Options& options);
  static KernelPredictor fit(ObservationSet obs, CorrelationModel model, double mu, double sigma2) {
    return fit(std::move(obs), std::move(model), mu, sigma2, Options{});
  }

  /// Rebuilds a predictor from persisted weights; the factor is recomputed for variances.
  static KernelPredictor from_weights(ObservationSet obs, CorrelationModel model, double mu, double sigma2,
                                      Eigen::VectorXd weights, const Options& options);
  static KernelPredictor from_weights(ObservationSet obs, CorrelationModel model, double mu, double sigma2,
                                      Eigen::VectorXd weights) {
    return from_weights(std::move(obs), std::move(model), mu, sigma2, std::move(weights), Options{});
  }

  double predict(const Coord& x) const;
  double predict_variance(const Coord& x) const;
  double predict_derivative(const Coord& x, const Coord& direction) const;
  double predict_average(const Interval& interval) const;

  const CorrelationModel& model() const noexcept { return model_; }
  const ObservationSet& observations() const noexcept { return obs_; }
  double mu() const noexcept { return mu_; }
  double sigma2() const noexcept { return sigma2_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double deviation_var() const noexcept { return 0.0; }
  /// Empty optional for m = 0.
  const std::optional<SparseCholesky>& factor() const noexcept { return factor_; }
  std::size_t nnz_intercorrelation() const noexcept { return nnz_sigma_; }

 private:
  KernelPredictor(ObservationSet obs, CorrelationModel model, double mu, double sigma2);
  void build(const Options& options, bool solve_weights);

  CorrelationModel model_;
  ObservationSet obs_;
  double mu_;
  double sigma2_;
  Eigen::VectorXd weights_;
  std::optional<SparseCholesky> factor_;
  std::size_t nnz_sigma_ = 0;
  KernelSupport support_;
};

/// Clamps a raw variance into [0, sigma2], counting clamps in skp::diagnostics.
double clamp_variance(double raw, double sigma2);

struct KrigingResult {
  double prediction;
  double variance;
};

/// Traditional simple Kriging with its own per-location weight solve (dense LU). Serves as the
/// independent reference for the Kernel predictor.
class KrigingOracle {
 public:
  KrigingOracle(const ObservationSet& obs, const CorrelationModel& model, double mu, double sigma2);
  KrigingResult at(const Coord& x) const;

 private:
  ObservationSet obs_;
  CorrelationModel model_;
  double mu_;
  double sigma2_;
  Eigen::MatrixXd sigma_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd centered_;
};

KrigingResult kriging_predict(const ObservationSet& obs, const CorrelationModel& model, double mu, double sigma2,
                              const Coord& x);

struct RasterRow {
  Coord node;
  double prediction;
  double variance;
};

std::vector<RasterRow> rasterize(const KernelPredictor& p, const GridSpec& grid, int workers = 1);

}  // namespace skp
