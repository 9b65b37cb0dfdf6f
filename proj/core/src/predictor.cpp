#include "skp/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "skp/diagnostics.hpp"
#include "skp/error.hpp"
#include "skp/parallel.hpp"

namespace skp {

GridSpec::GridSpec(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > static_cast<std::size_t>(kMaxDim)) throw InvalidArgument("grid needs 1 to 3 axes");
  for (const GridAxis& a : axes_) {
    if (!std::isfinite(a.min) || !std::isfinite(a.max) || a.max < a.min) throw InvalidArgument("grid axis needs min <= max");
    if (a.count < 1) throw InvalidArgument("grid axis needs at least one node");
  }
}

GridSpec GridSpec::parse(const std::string& text) {
  std::vector<GridAxis> axes;
  std::stringstream all(text);
  std::string part;
  while (std::getline(all, part, ';')) {
    std::stringstream fields(part);
    std::string f;
    std::vector<std::string> items;
    while (std::getline(fields, f, ',')) items.push_back(f);
    if (items.size() != 3) throw InvalidArgument("grid axis '" + part + "' must be min,max,count");
    const auto whole = [&part](const std::string& item, auto parse) {
      std::size_t used = 0;
      try {
        const auto v = parse(item, &used);
        if (used == item.size()) return v;
      } catch (const std::logic_error&) {
      }
      throw InvalidArgument("grid axis '" + part + "' is not numeric");
    };
    GridAxis axis;
    axis.min = whole(items[0], [](const std::string& t, std::size_t* u) { return std::stod(t, u); });
    axis.max = whole(items[1], [](const std::string& t, std::size_t* u) { return std::stod(t, u); });
    const long long count = whole(items[2], [](const std::string& t, std::size_t* u) { return std::stoll(t, u); });
    if (count < 1) throw InvalidArgument("grid count must be >= 1");
    axis.count = static_cast<std::size_t>(count);
    axes.push_back(axis);
  }
  return GridSpec(std::move(axes));
}

std::size_t GridSpec::node_count() const noexcept {
  std::size_t n = 1;
  for (const GridAxis& a : axes_) n *= a.count;
  return n;
}

Coord GridSpec::node(std::size_t flat) const {
  Coord c{};
  for (std::size_t k = axes_.size(); k-- > 0;) {
    const GridAxis& a = axes_[k];
    const std::size_t i = flat % a.count;
    flat /= a.count;
    c[k] = a.count == 1 ? a.min : a.min + (a.max - a.min) * static_cast<double>(i) / static_cast<double>(a.count - 1);
  }
  return c;
}

KernelSupport::KernelSupport(const ObservationSet& obs, const CorrelationModel& model)
    : anchors_(obs.anchors()), range_(model.taper_range()) {
  extents_.reserve(obs.size());
  for (const Observation& o : obs.observations()) {
    extents_.push_back({o.kind == ObsKind::interval_average, o.interval.lower, o.interval.upper});
  }
  if (range_ && !anchors_.empty()) {
    reach_ = *range_ + obs.max_half_extent();
    index_.emplace(anchors_, reach_);
  }
}

void KernelSupport::contributors(const Coord& x, std::vector<std::size_t>& out) const {
  if (!index_) {
    out.resize(anchors_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return;
  }
  index_->neighbors_into(x, reach_, out);
  std::erase_if(out, [&](std::size_t i) {
    const Extent& e = extents_[i];
    double d = 0.0;
    if (e.interval) {
      d = x[0] < e.lower ? e.lower - x[0] : (x[0] > e.upper ? x[0] - e.upper : 0.0);
    } else {
      d = distance(x, anchors_[i]);
    }
    return d >= *range_;
  });
}

double clamp_variance(double raw, double sigma2) {
  if (raw >= 0.0 && raw <= sigma2) return raw;
  auto& c = diagnostics::counters();
  ++c.variance_clamps;
  if (raw < -1e-12 * sigma2 || raw > sigma2 * (1.0 + 1e-12)) ++c.variance_violations;
  return std::clamp(raw, 0.0, sigma2);
}

KernelPredictor::KernelPredictor(ObservationSet obs, CorrelationModel model, double mu, double sigma2)
    : model_(std::move(model)), obs_(std::move(obs)), mu_(mu), sigma2_(sigma2) {
  if (!std::isfinite(mu)) throw InvalidArgument("mu must be finite");
  if (!std::isfinite(sigma2) || sigma2 <= 0.0) throw InvalidArgument("sigma2 must be finite and > 0");
}

void KernelPredictor::build(const Options& options, bool solve_weights) {
  support_ = KernelSupport(obs_, model_);
  if (obs_.empty()) {
    weights_.resize(0);
    return;
  }
  const InterCorrelationMatrix sigma = assemble(obs_, model_, sigma2_, {IntegralMode::analytic, options.workers});
  nnz_sigma_ = sigma.nnz();
  factor_.emplace(sigma);
  if (solve_weights) weights_ = factor_->solve(obs_.values() - mu_ * obs_.mean_images());
}

KernelPredictor KernelPredictor::fit(ObservationSet obs, CorrelationModel model, double mu, double sigma2,
                                     const Options& options) {
  KernelPredictor p(std::move(obs), std::move(model), mu, sigma2);
  p.build(options, true);
  return p;
}

KernelPredictor KernelPredictor::from_weights(ObservationSet obs, CorrelationModel model, double mu, double sigma2,
                                              Eigen::VectorXd weights, const Options& options) {
  if (static_cast<std::size_t>(weights.size()) != obs.size()) throw InvalidArgument("weight count does not match m");
  KernelPredictor p(std::move(obs), std::move(model), mu, sigma2);
  p.weights_ = std::move(weights);
  p.build(options, false);
  return p;
}

double KernelPredictor::predict(const Coord& x) const {
  std::vector<std::size_t> near;
  support_.contributors(x, near);
  double s = 0.0;
  for (std::size_t i : near) s += weights_[i] * kernel_value(obs_[i], x, model_);
  return mu_ + s;
}

double KernelPredictor::predict_variance(const Coord& x) const {
  if (obs_.empty()) return sigma2_;
  std::vector<std::size_t> near;
  support_.contributors(x, near);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(obs_.size());
  for (std::size_t i : near) nu[i] = kernel_value(obs_[i], x, model_);
  const double quad = factor_->half_solve(nu).squaredNorm();
  return clamp_variance(sigma2_ * (1.0 - quad), sigma2_);
}

double KernelPredictor::predict_derivative(const Coord& x, const Coord& direction) const {
  const double norm = std::sqrt(dot(direction, direction));
  if (!(std::abs(norm - 1.0) <= 1e-9)) throw InvalidArgument("derivative direction must have unit norm");
  std::vector<std::size_t> near;
  support_.contributors(x, near);
  double s = 0.0;
  for (std::size_t i : near) s += weights_[i] * kernel_gradient(obs_[i], x, direction, model_);
  return s;
}

double KernelPredictor::predict_average(const Interval& interval) const {
  if (obs_.dim() != 1) throw InvalidArgument("interval averages need a 1D predictor");
  if (!(interval.lower < interval.upper)) throw InvalidArgument("averaging interval must be non-empty");
  double s = 0.0;
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    if (model_.taper_range()) {
      const Observation& o = obs_[i];
      const double lo = o.kind == ObsKind::interval_average ? o.interval.lower : o.location[0];
      const double hi = o.kind == ObsKind::interval_average ? o.interval.upper : o.location[0];
      const double gap = std::max({0.0, interval.lower - hi, lo - interval.upper});
      if (gap >= *model_.taper_range()) continue;
    }
    s += weights_[i] * kernel_integral(obs_[i], interval, model_);
  }
  return mu_ + s / interval.length();
}

KrigingOracle::KrigingOracle(const ObservationSet& obs, const CorrelationModel& model, double mu, double sigma2)
    : obs_(obs), model_(model), mu_(mu), sigma2_(sigma2) {
  if (obs.empty()) return;
  sigma_ = assemble(obs, model, sigma2).to_dense();
  lu_.compute(sigma_);
  centered_ = obs.values() - mu * obs.mean_images();
}

KrigingResult KrigingOracle::at(const Coord& x) const {
  if (obs_.empty()) return {mu_, sigma2_};
  Eigen::VectorXd rho(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) rho[i] = kernel_value(obs_[i], x, model_);
  const Eigen::VectorXd alpha = lu_.solve(rho);
  return {mu_ + alpha.dot(centered_), sigma2_ * (1.0 - alpha.dot(sigma_ * alpha))};
}

KrigingResult kriging_predict(const ObservationSet& obs, const CorrelationModel& model, double mu, double sigma2,
                              const Coord& x) {
  return KrigingOracle(obs, model, mu, sigma2).at(x);
}

std::vector<RasterRow> rasterize(const KernelPredictor& p, const GridSpec& grid, int workers) {
  if (grid.dim() != p.observations().dim()) throw InvalidArgument("grid dimension does not match the predictor");
  std::vector<RasterRow> rows(grid.node_count());
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    const Coord x = grid.node(i);
    rows[i] = {x, p.predict(x), p.predict_variance(x)};
  });
  return rows;
}

}  // namespace skp
