#include "skp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "skp/error.hpp"

namespace skp::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json level_to_json(const std::optional<double>& v) { return v ? json(*v) : json("estimate"); }

std::optional<double> level_from_json(const json& j, const char* name) {
  if (!j.contains(name) || j[name].is_null()) return std::nullopt;
  const json& v = j[name];
  if (v.is_string()) {
    if (v.get<std::string>() == "estimate") return std::nullopt;
    throw InvalidArgument(std::string(name) + " must be a number or \"estimate\"");
  }
  if (!v.is_number()) throw InvalidArgument(std::string(name) + " must be a number or \"estimate\"");
  return v.get<double>();
}

CorrelationModel model_from_json(const json& j) {
  if (!j.contains("base") || !j["base"].is_object()) throw InvalidArgument("model config needs a \"base\" object");
  const json& base = j["base"];
  if (!base.contains("kind") || !base["kind"].is_string()) throw InvalidArgument("base.kind must be a string");
  if (!base.contains("scale") || !base["scale"].is_number()) throw InvalidArgument("base.scale must be a number");
  std::optional<double> taper;
  if (j.contains("taper_range") && !j["taper_range"].is_null()) {
    if (!j["taper_range"].is_number()) throw InvalidArgument("taper_range must be a number or null");
    taper = j["taper_range"].get<double>();
  }
  return CorrelationModel(base_kind_from_string(base["kind"].get<std::string>()), base["scale"].get<double>(), taper);
}

json model_to_json(const CorrelationModel& m) {
  json j;
  j["base"] = {{"kind", std::string(to_string(m.base_kind()))}, {"scale", m.base_scale()}};
  j["taper_range"] = m.taper_range() ? json(*m.taper_range()) : json(nullptr);
  return j;
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& field, const char* column, std::size_t line) {
  if (field.empty()) throw ParseError(std::string("missing value in column ") + column, line);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError(std::string("column ") + column + ": '" + field + "' is not a number", line);
  }
  return v;
}

json observation_to_json(const Observation& o, int dim) {
  json j;
  json loc = json::array();
  for (int a = 0; a < dim; ++a) loc.push_back(o.location[a]);
  switch (o.kind) {
    case ObsKind::point:
      j["kind"] = "point";
      j["location"] = loc;
      break;
    case ObsKind::derivative: {
      j["kind"] = "deriv";
      j["location"] = loc;
      json dir = json::array();
      for (int a = 0; a < dim; ++a) dir.push_back(o.direction[a]);
      j["direction"] = dir;
      break;
    }
    case ObsKind::interval_average:
      j["kind"] = "avg";
      j["interval"] = {o.interval.lower, o.interval.upper};
      break;
  }
  j["value"] = o.value;
  j["error_var"] = o.error_var;
  return j;
}

Coord coord_from_json(const json& arr, int dim) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != dim) throw InvalidArgument("coordinate arity mismatch");
  Coord c{};
  for (int a = 0; a < dim; ++a) c[a] = arr[a].get<double>();
  return c;
}

Observation observation_from_json(const json& j, int dim) {
  const std::string kind = j.at("kind").get<std::string>();
  const double value = j.at("value").get<double>();
  const double err = j.value("error_var", 0.0);
  if (kind == "point") return Observation::point(coord_from_json(j.at("location"), dim), value, err);
  if (kind == "deriv") {
    return Observation::derivative(coord_from_json(j.at("location"), dim), coord_from_json(j.at("direction"), dim),
                                   value, err);
  }
  if (kind == "avg") {
    const json& iv = j.at("interval");
    return Observation::interval_average(iv.at(0).get<double>(), iv.at(1).get<double>(), value, err);
  }
  throw InvalidArgument("unknown observation kind '" + kind + "'");
}

json predictor_common(FitMode mode, const CorrelationModel& model, const ObservationSet& obs, double mu,
                      double sigma2, const Eigen::VectorXd& weights) {
  json j;
  j["format"] = "skp-predictor";
  j["version"] = 1;
  j["mode"] = std::string(to_string(mode));
  j["dim"] = obs.dim();
  j["model"] = model_to_json(model);
  json arr = json::array();
  for (const Observation& o : obs.observations()) arr.push_back(observation_to_json(o, obs.dim()));
  j["observations"] = arr;
  j["mu"] = mu;
  j["sigma2"] = sigma2;
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  return j;
}

}  // namespace

ModelConfig parse_model_config(std::string_view json_text) {
  const json j = parse_json(json_text, "model config");
  if (!j.is_object()) throw InvalidArgument("model config must be a JSON object");
  ModelConfig c{model_from_json(j), level_from_json(j, "mu"), level_from_json(j, "sigma2")};
  if (c.sigma2 && !(*c.sigma2 > 0.0)) throw InvalidArgument("sigma2 must be > 0");
  return c;
}

std::string model_config_to_json(const ModelConfig& config) {
  json j = model_to_json(config.model);
  j["mu"] = level_to_json(config.mu);
  j["sigma2"] = level_to_json(config.sigma2);
  return j.dump(2);
}

ObservationSet read_observations_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) return ObservationSet(1);

  int dim = 0;
  while (dim < static_cast<int>(header.size()) && header[dim] == "x" + std::to_string(dim + 1)) ++dim;
  if (dim < 1 || dim > kMaxDim) throw ParseError("header must start with x1[,x2[,x3]]", line_no);
  const std::vector<std::string> tail{"kind", "value", "error_var", "p1", "p2"};
  if (header.size() < dim + tail.size() || header.size() > dim + tail.size() + 1) {
    throw ParseError("header must be x1[,x2[,x3]],kind,value,error_var,p1,p2[,p3]", line_no);
  }
  for (std::size_t t = 0; t < tail.size(); ++t) {
    if (header[dim + t] != tail[t]) throw ParseError("unexpected header column '" + header[dim + t] + "'", line_no);
  }
  if (header.size() == dim + tail.size() + 1 && header.back() != "p3") {
    throw ParseError("unexpected header column '" + header.back() + "'", line_no);
  }
  const std::size_t columns = header.size();

  ObservationSet set(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split_fields(line);
    if (f.size() > columns) throw ParseError("too many fields", line_no);
    f.resize(columns);
    const std::string& kind = f[dim];
    const double value = parse_number(f[dim + 1], "value", line_no);
    const double err = f[dim + 2].empty() ? 0.0 : parse_number(f[dim + 2], "error_var", line_no);
    auto param = [&](int i) -> const std::string& {
      static const std::string empty;
      const std::size_t col = dim + 3 + static_cast<std::size_t>(i);
      return col < f.size() ? f[col] : empty;
    };
    try {
      if (kind == "point") {
        Coord x{};
        for (int a = 0; a < dim; ++a) x[a] = parse_number(f[a], header[a].c_str(), line_no);
        set.add(Observation::point(x, value, err));
      } else if (kind == "deriv") {
        Coord x{}, dir{};
        for (int a = 0; a < dim; ++a) x[a] = parse_number(f[a], header[a].c_str(), line_no);
        bool any = false;
        for (int a = 0; a < dim; ++a) any = any || !param(a).empty();
        if (!any && dim == 1) {
          dir = {1.0, 0.0, 0.0};
        } else {
          if (dim > 2 && columns < static_cast<std::size_t>(dim) + 6) throw ParseError("deriv in 3D needs a p3 column", line_no);
          for (int a = 0; a < dim; ++a) dir[a] = parse_number(param(a), ("p" + std::to_string(a + 1)).c_str(), line_no);
        }
        set.add(Observation::derivative(x, dir, value, err));
      } else if (kind == "avg") {
        if (dim != 1) throw ParseError("avg observations are only supported in 1D", line_no);
        set.add(Observation::interval_average(parse_number(param(0), "p1", line_no), parse_number(param(1), "p2", line_no),
                                              value, err));
      } else {
        throw ParseError("unknown kind '" + kind + "' (expected point, deriv or avg)", line_no);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return set;
}

ObservationSet read_observations_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open observation file '" + path + "'");
  return read_observations_csv(in);
}

void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
  const int dim = obs.dim();
  for (int a = 0; a < dim; ++a) out << 'x' << a + 1 << ',';
  out << "kind,value,error_var,p1,p2";
  if (dim == 3) out << ",p3";
  out << '\n';
  const int params = dim == 3 ? 3 : 2;
  for (const Observation& o : obs.observations()) {
    for (int a = 0; a < dim; ++a) out << (o.kind == ObsKind::interval_average ? "" : format_double(o.location[a])) << ',';
    std::vector<std::string> p(params);
    switch (o.kind) {
      case ObsKind::point: out << "point"; break;
      case ObsKind::derivative:
        out << "deriv";
        for (int a = 0; a < dim; ++a) p[a] = format_double(o.direction[a]);
        break;
      case ObsKind::interval_average:
        out << "avg";
        p[0] = format_double(o.interval.lower);
        p[1] = format_double(o.interval.upper);
        break;
    }
    out << ',' << format_double(o.value) << ',' << format_double(o.error_var);
    for (const auto& s : p) out << ',' << s;
    out << '\n';
  }
}

std::string_view to_string(FitMode mode) { return mode == FitMode::global ? "global" : "localized"; }

FitMode fit_mode_from_string(std::string_view text) {
  if (text == "global") return FitMode::global;
  if (text == "localized") return FitMode::localized;
  throw InvalidArgument("mode must be global or localized");
}

std::string predictor_to_json(const KernelPredictor& p) {
  return predictor_common(FitMode::global, p.model(), p.observations(), p.mu(), p.sigma2(), p.weights()).dump(1);
}

std::string predictor_to_json(const LocalizedFit& f) {
  json j = predictor_common(FitMode::localized, f.model(), f.observations(), f.mu(), f.sigma2(), f.weights());
  j["k"] = f.k();
  j["deviation_var"] = f.deviation_var();
  return j.dump(1);
}

SavedPredictor parse_predictor_json(std::string_view json_text) {
  const json j = parse_json(json_text, "predictor file");
  try {
    if (j.value("format", std::string()) != "skp-predictor") throw InvalidArgument("not a predictor file");
    SavedPredictor s;
    s.mode = fit_mode_from_string(j.at("mode").get<std::string>());
    const int dim = j.at("dim").get<int>();
    s.model = model_from_json(j.at("model"));
    ObservationSet obs(dim);
    for (const json& o : j.at("observations")) obs.add(observation_from_json(o, dim));
    s.observations = std::move(obs);
    s.mu = j.at("mu").get<double>();
    s.sigma2 = j.at("sigma2").get<double>();
    const auto w = j.at("weights").get<std::vector<double>>();
    s.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (s.mode == FitMode::localized) {
      s.k = j.at("k").get<int>();
      s.deviation_var = j.at("deviation_var").get<double>();
    }
    return s;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed predictor file: ") + e.what());
  }
}

KernelPredictor restore_global(const SavedPredictor& saved, int workers) {
  if (saved.mode != FitMode::global) throw InvalidArgument("predictor file holds a localized fit");
  return KernelPredictor::from_weights(saved.observations, saved.model, saved.mu, saved.sigma2, saved.weights,
                                       {workers});
}

LocalizedFit restore_localized(const SavedPredictor& saved, int workers) {
  if (saved.mode != FitMode::localized) throw InvalidArgument("predictor file holds a global fit");
  LocalizedFit::Options options;
  options.mu = saved.mu;
  options.sigma2 = saved.sigma2;
  options.workers = workers;
  return LocalizedFit::fit(saved.observations, saved.model, saved.k, options);
}

void write_raster_csv(std::ostream& out, std::span<const RasterRow> rows, int dim) {
  for (int a = 0; a < dim; ++a) out << 'x' << a + 1 << ',';
  out << "prediction,variance\n";
  for (const RasterRow& r : rows) {
    for (int a = 0; a < dim; ++a) out << format_double(r.node[a]) << ',';
    out << format_double(r.prediction) << ',' << format_double(r.variance) << '\n';
  }
}

void write_raster_csv(std::ostream& out, std::span<const LocalizedRasterRow> rows, int dim) {
  for (int a = 0; a < dim; ++a) out << 'x' << a + 1 << ',';
  out << "prediction,variance,adjusted_variance\n";
  for (const LocalizedRasterRow& r : rows) {
    for (int a = 0; a < dim; ++a) out << format_double(r.node[a]) << ',';
    out << format_double(r.prediction) << ',' << format_double(r.variance) << ',' << format_double(r.adjusted_variance)
        << '\n';
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

}  // namespace skp::io
