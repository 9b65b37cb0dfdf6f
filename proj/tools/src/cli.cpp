#include "skp_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "skp/diagnostics.hpp"
#include "skp/error.hpp"
#include "skp/inference.hpp"
#include "skp/linalg.hpp"
#include "skp/localized.hpp"
#include "skp/parallel.hpp"
#include "skp/predictor.hpp"

namespace skp::cli {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::ordered_json;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> parse_number_list(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: '" + item + "'");
    }
    if (used != item.size()) throw InvalidArgument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::pair<double, double>> parse_bounds(const std::string& text) {
  std::vector<std::pair<double, double>> bounds;
  std::stringstream ss(text);
  std::string axis;
  while (std::getline(ss, axis, ';')) {
    const auto v = parse_number_list(axis, ',');
    if (v.size() != 2 || !(v[0] < v[1])) throw InvalidArgument("bounds axis must be 'lo,hi' with lo < hi: " + axis);
    bounds.emplace_back(v[0], v[1]);
  }
  if (bounds.empty() || bounds.size() > static_cast<std::size_t>(kMaxDim)) {
    throw InvalidArgument("bounds need 1 to 3 axes");
  }
  return bounds;
}

// Levels for the global predictor. Fixed values from the model file win; missing ones come from
// the GLS estimates on the exact inter-correlation matrix.
std::pair<double, double> resolve_global_levels(const ObservationSet& obs, const io::ModelConfig& config,
                                                int workers) {
  if (config.mu && config.sigma2) return {*config.mu, *config.sigma2};
  if (obs.empty()) return {config.mu.value_or(0.0), config.sigma2.value_or(1.0)};
  for (const auto& o : obs.observations()) {
    if (o.error_var > 0.0 && !config.sigma2) {
      throw InvalidArgument("estimating sigma2 requires exact observations; supply sigma2 for observations with error");
    }
  }
  const double assembly_sigma2 = config.sigma2.value_or(1.0);
  const SparseSymmetric sigma = assemble(obs, config.model, assembly_sigma2, {IntegralMode::analytic, workers});
  const SparseCholesky chol(sigma);
  const InverseAction action = [&chol](const Eigen::VectorXd& v) { return chol.solve(v); };
  const Eigen::VectorXd values = obs.values();
  const Eigen::VectorXd image = obs.mean_images();
  const double mu = config.mu ? *config.mu : estimate_mu(action, values, image);
  const double sigma2 = config.sigma2 ? *config.sigma2 : estimate_sigma2(action, values, mu, image);
  if (!(sigma2 > 0.0)) throw EstimationError("estimated sigma2 is not positive");
  return {mu, sigma2};
}

void write_output(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
  } else {
    io::write_text_file(path, text);
  }
}

}  // namespace

void cmd_fit(const FitArgs& args, std::ostream& out) {
  const auto t0 = Clock::now();
  const ObservationSet obs = io::read_observations_csv_file(args.obs_path);
  const io::ModelConfig config = io::parse_model_config(io::read_text_file(args.model_path));
  if (args.k < 1) throw InvalidArgument("--k must be a positive integer");
  diagnostics::reset();

  ordered_json summary;
  summary["command"] = "fit";
  summary["mode"] = std::string(io::to_string(args.mode));
  summary["m"] = obs.size();
  summary["q"] = obs.dim();

  const auto t_fit = Clock::now();
  std::string predictor_json;
  if (args.mode == io::FitMode::global) {
    const auto [mu, sigma2] = resolve_global_levels(obs, config, args.workers);
    const KernelPredictor p = KernelPredictor::fit(obs, config.model, mu, sigma2, {args.workers});
    const double fit_seconds = seconds_since(t_fit);
    predictor_json = io::predictor_to_json(p);
    summary["mu"] = p.mu();
    summary["sigma2"] = p.sigma2();
    summary["deviation_var"] = 0.0;
    summary["sparsity"] = {{"intercorrelation_nnz", p.nnz_intercorrelation()},
                           {"factor_nnz", p.factor() ? p.factor()->nnz_factor() : 0}};
    summary["negative_variance_count"] = 0;
    summary["timing_seconds"] = {{"fit", fit_seconds}};
  } else {
    LocalizedFit::Options options;
    options.mu = config.mu;
    options.sigma2 = config.sigma2;
    options.workers = args.workers;
    const LocalizedFit f = LocalizedFit::fit(obs, config.model, args.k, options);
    const double fit_seconds = seconds_since(t_fit);
    predictor_json = io::predictor_to_json(f);

    // Raw localized variances at the observation anchors reveal the approximation error.
    std::size_t negative = 0;
    double most_negative = 0.0;
    for (const Coord& x : obs.anchors()) {
      const double v = f.variance(x);
      if (v < 0.0) {
        ++negative;
        most_negative = std::min(most_negative, v);
      }
    }
    summary["mu"] = f.mu();
    summary["sigma2"] = f.sigma2();
    summary["deviation_var"] = f.deviation_var();
    summary["k"] = f.k();
    summary["delta"] = f.delta();
    summary["neighborhood"] = {{"min", f.neighborhood_stats().min_size},
                               {"max", f.neighborhood_stats().max_size},
                               {"mean", f.neighborhood_stats().mean_size}};
    summary["sparsity"] = {{"intercorrelation_nnz", f.nnz_intercorrelation()},
                           {"approx_inverse_nnz", f.approx_inverse().nnz()}};
    summary["negative_variance_count"] = negative;
    summary["most_negative_variance"] = most_negative;
    summary["timing_seconds"] = {{"fit", fit_seconds}};
  }

  io::write_text_file(args.out_path, predictor_json);
  summary["variance_clamps"] = diagnostics::counters().variance_clamps.load();
  summary["timing_seconds"]["total"] = seconds_since(t0);
  write_output(args.summary_path, summary.dump(2) + "\n", out);
}

void cmd_grid(const GridArgs& args) {
  const io::SavedPredictor saved = io::parse_predictor_json(io::read_text_file(args.predictor_path));
  const GridSpec grid = GridSpec::parse(args.grid);
  if (grid.dim() != saved.observations.dim()) {
    throw InvalidArgument("grid dimension " + std::to_string(grid.dim()) + " does not match predictor dimension " +
                          std::to_string(saved.observations.dim()));
  }
  std::ostringstream text;
  if (saved.mode == io::FitMode::global) {
    const KernelPredictor p = io::restore_global(saved, args.workers);
    const auto rows = rasterize(p, grid, args.workers);
    io::write_raster_csv(text, rows, grid.dim());
  } else {
    const LocalizedFit f = io::restore_localized(saved, args.workers);
    std::vector<io::LocalizedRasterRow> rows(grid.node_count());
    parallel_for(rows.size(), args.workers, [&](std::size_t i) {
      const Coord x = grid.node(i);
      rows[i] = {x, f.predict(x), f.variance(x), f.adjusted_variance(x)};
    });
    io::write_raster_csv(text, std::span<const io::LocalizedRasterRow>(rows), grid.dim());
  }
  io::write_text_file(args.out_path, text.str());
}

void cmd_infer(const InferArgs& args, std::ostream& out) {
  const ObservationSet obs = io::read_observations_csv_file(args.obs_path);
  const io::ModelConfig config = io::parse_model_config(io::read_text_file(args.model_path));
  MleResult r;
  if (args.mode == io::FitMode::global) {
    std::optional<EtaSearch> search;
    if (args.eta_bounds) search = EtaSearch{args.eta_bounds->first, args.eta_bounds->second};
    r = estimate_joint(obs, config.model, search, args.workers);
  } else {
    if (args.eta_bounds) throw InvalidArgument("--eta-bounds is only available in global mode");
    if (args.k < 1) throw InvalidArgument("--k must be a positive integer");
    r = estimate_localized(obs, config.model, args.k, args.workers);
  }
  ordered_json j;
  j["mu"] = r.mu_hat;
  j["sigma2"] = r.sigma2_hat;
  j["eta"] = r.eta_hat ? ordered_json(*r.eta_hat) : ordered_json(nullptr);
  j["nll"] = r.neg_log_likelihood ? ordered_json(*r.neg_log_likelihood) : ordered_json(nullptr);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  write_output(args.out_path, j.dump(2) + "\n", out);
}

ObservationSet example_a_observations(double d1, double d2, double d3) {
  ObservationSet obs(1);
  obs.add(Observation::point({0.0, 0.0, 0.0}, d1));
  obs.add(Observation::derivative({-5.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, d2));
  obs.add(Observation::interval_average(5.0, 6.0, d3));
  return obs;
}

void cmd_example_a(const ExampleAArgs& args, std::ostream& out) {
  if (!(args.range > 0.0)) throw InvalidArgument("--range must be > 0");
  if (args.values.size() != 3) throw InvalidArgument("--values needs exactly three numbers");
  if (args.nodes < 1) throw InvalidArgument("--nodes must be >= 1");
  const CorrelationModel model(BaseKind::matern52, args.range);
  const KernelPredictor p =
      KernelPredictor::fit(example_a_observations(args.values[0], args.values[1], args.values[2]), model, 0.0, 1.0);
  const auto& a = p.weights();
  out << "alpha = (" << io::format_double(a[0]) << ", " << io::format_double(a[1]) << ", "
      << io::format_double(a[2]) << ")\n";

  const GridSpec grid({GridAxis{-10.0, 10.0, args.nodes}});
  if (!args.out_path.empty()) {
    std::ostringstream text;
    io::write_raster_csv(text, rasterize(p, grid), 1);
    io::write_text_file(args.out_path, text.str());
  }
  if (!args.kernels_path.empty()) {
    // Individual observation kernels nu_y(x) for plotting next to the prediction.
    std::ostringstream text;
    text << "x1,nu_point,nu_deriv,nu_avg\n";
    const auto& items = p.observations().observations();
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
      const Coord x = grid.node(i);
      text << io::format_double(x[0]);
      for (const auto& o : items) text << ',' << io::format_double(kernel_value(o, x, model));
      text << '\n';
    }
    io::write_text_file(args.kernels_path, text.str());
  }
}

ObservationSet synthesize(std::size_t m, const std::vector<std::pair<double, double>>& bounds, std::uint64_t seed) {
  if (m < 1) throw InvalidArgument("--m must be >= 1");
  const int dim = static_cast<int>(bounds.size());
  // Draws use the raw mt19937_64 stream (not std distributions) so files match across standard
  // libraries.
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  // Value process: a level plus a handful of random plane waves with wavelengths well above the
  // correlation scale. Drawn before the locations so the field does not depend on m.
  constexpr int kWaves = 8;
  struct Wave {
    Coord k;
    double phase;
    double amplitude;
  };
  std::vector<Wave> waves(kWaves);
  for (auto& w : waves) {
    const double wavelength = 3.0 + 9.0 * uniform();
    const double angle = 2.0 * std::numbers::pi * uniform();
    const double kn = 2.0 * std::numbers::pi / wavelength;
    w.k = {kn * std::cos(angle), dim > 1 ? kn * std::sin(angle) : 0.0, 0.0};
    if (dim == 1) w.k[0] = kn;
    if (dim == 3) w.k[2] = kn * (uniform() - 0.5);
    w.phase = 2.0 * std::numbers::pi * uniform();
    w.amplitude = 50.0 + 250.0 * uniform();
  }

  ObservationSet obs(dim);
  for (std::size_t i = 0; i < m; ++i) {
    Coord x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = bounds[a].first + (bounds[a].second - bounds[a].first) * uniform();
    double v = 1000.0;
    for (const auto& w : waves) v += w.amplitude * std::cos(dot(w.k, x) + w.phase);
    obs.add(Observation::point(x, v));
  }
  return obs;
}

void cmd_synth(const SynthArgs& args) {
  const ObservationSet obs = synthesize(args.m, parse_bounds(args.bounds), args.seed);
  std::ostringstream text;
  io::write_observations_csv(text, obs);
  io::write_text_file(args.out_path, text.str());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial Kernel prediction with finite-range correlation models"};
  app.require_subcommand(1);

  const auto mode_option = [](CLI::App* sub, io::FitMode& mode) {
    sub->add_option_function<std::string>(
           "--mode", [&mode](const std::string& s) { mode = io::fit_mode_from_string(s); }, "global or localized")
        ->check(CLI::IsMember({"global", "localized"}));
  };

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a predictor and write it as JSON");
  fit_cmd->add_option("--obs", fit.obs_path, "Observation CSV")->required();
  fit_cmd->add_option("--model", fit.model_path, "Model JSON")->required();
  mode_option(fit_cmd, fit.mode);
  fit_cmd->add_option("--k", fit.k, "Localization multiple of the taper range")->capture_default_str();
  fit_cmd->add_option("--out", fit.out_path, "Predictor JSON to write")->required();
  fit_cmd->add_option("--summary", fit.summary_path, "Run summary JSON (stdout when omitted)");
  fit_cmd->add_option("--workers", fit.workers, "Worker threads (0 = all cores)")->capture_default_str();

  GridArgs grid;
  auto* grid_cmd = app.add_subcommand("grid", "Rasterize a saved predictor");
  grid_cmd->add_option("--predictor", grid.predictor_path, "Predictor JSON")->required();
  grid_cmd->add_option("--grid", grid.grid, "min,max,count[;min,max,count...]")->required();
  grid_cmd->add_option("--out", grid.out_path, "Raster CSV to write")->required();
  grid_cmd->add_option("--workers", grid.workers, "Worker threads (0 = all cores)")->capture_default_str();

  InferArgs infer;
  std::string eta_bounds;
  auto* infer_cmd = app.add_subcommand("infer", "Maximum marginal likelihood estimates");
  infer_cmd->add_option("--obs", infer.obs_path, "Observation CSV")->required();
  infer_cmd->add_option("--model", infer.model_path, "Model JSON (family and starting scale)")->required();
  mode_option(infer_cmd, infer.mode);
  infer_cmd->add_option("--k", infer.k, "Localization multiple of the taper range")->capture_default_str();
  infer_cmd->add_option("--eta-bounds", eta_bounds, "lo,hi bracket for the base scale search");
  infer_cmd->add_option("--out", infer.out_path, "Result JSON (stdout when omitted)");
  infer_cmd->add_option("--workers", infer.workers, "Worker threads (0 = all cores)")->capture_default_str();

  ExampleAArgs example;
  std::string example_values = "1,0,2";
  auto* example_cmd = app.add_subcommand("example-a", "Point, derivative and interval demonstration in 1D");
  example_cmd->add_option("--range", example.range, "Matern-5/2 scale")->capture_default_str();
  example_cmd->add_option("--values", example_values, "d1,d2,d3")->capture_default_str();
  example_cmd->add_option("--out", example.out_path, "Prediction and variance raster CSV");
  example_cmd->add_option("--kernels", example.kernels_path, "Observation kernel CSV");
  example_cmd->add_option("--nodes", example.nodes, "Raster nodes over [-10, 10]")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic observation CSV");
  synth_cmd->add_option("--m", synth.m, "Number of observations")->required();
  synth_cmd->add_option("--bounds", synth.bounds, "lo,hi[;lo,hi...]")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out_path, "Observation CSV to write")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (fit_cmd->parsed()) {
      cmd_fit(fit, out);
    } else if (grid_cmd->parsed()) {
      cmd_grid(grid);
    } else if (infer_cmd->parsed()) {
      if (!eta_bounds.empty()) {
        const auto v = parse_number_list(eta_bounds, ',');
        if (v.size() != 2) throw InvalidArgument("--eta-bounds must be 'lo,hi'");
        infer.eta_bounds = std::make_pair(v[0], v[1]);
      }
      cmd_infer(infer, out);
    } else if (example_cmd->parsed()) {
      example.values = parse_number_list(example_values, ',');
      cmd_example_a(example, out);
    } else if (synth_cmd->parsed()) {
      cmd_synth(synth);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const UnsupportedOperator& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalError;
  }
  return kSuccess;
}

}  // namespace skp::cli
