#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "skp/corrfn.hpp"
#include "skp/localized.hpp"
#include "skp/obsmodel.hpp"
#include "skp/predictor.hpp"

namespace skp::io {

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// {"base": {"kind": "matern52"|"gauss2", "scale": x}, "taper_range": x|null,
///  "mu": x|"estimate", "sigma2": x|"estimate"}. Absent mu / sigma2 mean "estimate".
struct ModelConfig {
  CorrelationModel model{BaseKind::matern52, 1.0};
  std::optional<double> mu;
  std::optional<double> sigma2;
};

ModelConfig parse_model_config(std::string_view json_text);
std::string model_config_to_json(const ModelConfig& config);

/// Observation CSV: header `x1[,x2[,x3]],kind,value,error_var,p1,p2[,p3]`, kind in
/// {point, deriv, avg}. deriv rows carry the direction in p1..pq (1D default +1); avg rows (1D)
/// carry the interval bounds in p1, p2 and x1 is ignored. An empty stream is an empty 1D set.
/// Errors are ParseError with the 1-based line number.
ObservationSet read_observations_csv(std::istream& in);
ObservationSet read_observations_csv_file(const std::string& path);
void write_observations_csv(std::ostream& out, const ObservationSet& obs);

enum class FitMode { global, localized };
std::string_view to_string(FitMode mode);
FitMode fit_mode_from_string(std::string_view text);

/// Persisted fitted predictor: model, echoed observations, levels and weights.
struct SavedPredictor {
  FitMode mode = FitMode::global;
  CorrelationModel model{BaseKind::matern52, 1.0};
  ObservationSet observations{1};
  double mu = 0.0;
  double sigma2 = 1.0;
  Eigen::VectorXd weights;
  int k = 0;
  double deviation_var = 0.0;
};

std::string predictor_to_json(const KernelPredictor& p);
std::string predictor_to_json(const LocalizedFit& f);
SavedPredictor parse_predictor_json(std::string_view json_text);

/// Restores the in-memory predictor; localized fits rerun the (deterministic) approximation
/// with the persisted levels.
KernelPredictor restore_global(const SavedPredictor& saved, int workers = 1);
LocalizedFit restore_localized(const SavedPredictor& saved, int workers = 1);

/// `x1[,x2[,x3]],prediction,variance` rows in grid order.
void write_raster_csv(std::ostream& out, std::span<const RasterRow> rows, int dim);

struct LocalizedRasterRow {
  Coord node;
  double prediction;
  double variance;
  double adjusted_variance;
};
/// `x1[,x2[,x3]],prediction,variance,adjusted_variance`; `variance` is the raw localized value.
void write_raster_csv(std::ostream& out, std::span<const LocalizedRasterRow> rows, int dim);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace skp::io
