#pragma once

// Command-line front end. run() is the whole program; main() only forwards to it.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chgp/design.hpp"
#include "chgp/errors.hpp"
#include "chgp/estimate.hpp"
#include "chgp/experiments.hpp"
#include "chgp/gp.hpp"
#include "chgp/io.hpp"
#include "chgp/kernels.hpp"
#include "chgp/rng.hpp"
#include "chgp/simulate.hpp"

namespace chgp::cli {

using io::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

struct Common {
  std::uint64_t seed = 1;
  int threads = 0;  // 0: CHGP_THREADS, then hardware concurrency
};

inline std::string read_text(const std::string& path) {
  auto in = io::open_in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline json manifest(const std::string& command, const Common& c, const std::string& config_text,
                     const std::vector<std::string>& outputs, double wall_s) {
  json j;
  j["command"] = command;
  j["version"] = io::kVersion;
  j["seed"] = c.seed;
  j["threads"] = thread_count(c.threads);
  j["config"] = config_text;
  j["outputs"] = outputs;
  j["wall_time_s"] = wall_s;
  return j;
}

/// Flat "lo, hi, lo, hi, ..." list to per-coordinate bounds.
inline Bounds bounds_from_list(const std::vector<double>& v, const std::string& what) {
  if (v.empty() || v.size() % 2 != 0) throw InputError(what + ": expected pairs 'lo, hi' per coordinate");
  Bounds b;
  for (std::size_t i = 0; i < v.size(); i += 2) b.emplace_back(v[i], v[i + 1]);
  validate(b);
  return b;
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// `[design]` type = grid | lhs | maximin_lhs | file.
inline Locations design_from_config(io::Config& c, std::uint64_t seed, Metric metric, double radius) {
  const std::string type = c.get_string("design", "type");
  if (type == "file") {
    const std::string path = c.get_string("design", "path");
    const auto t = io::read_csv_file(path);
    const Eigen::Index d = metric == Metric::euclidean ? t.n_cols() - (t.header.back() == "z" ? 1 : 0) : 2;
    return io::locations_from_csv(t, path, d, metric, radius);
  }
  const Bounds b = bounds_from_list(c.get_doubles("design", "bounds"), c.name() + ": [design] bounds");
  Locations l;
  if (type == "grid") {
    l = regular_grid(b, c.get_ints("design", "counts", {}));
  } else if (type == "lhs") {
    l = latin_hypercube(static_cast<int>(c.get_int("design", "n")), b, derive_seed(seed, 1));
  } else if (type == "maximin_lhs") {
    l = maximin_lhs(static_cast<int>(c.get_int("design", "n")), b, derive_seed(seed, 1),
                    static_cast<int>(c.get_int("design", "candidates", 100)));
  } else {
    throw InputError(c.name() + ": [design] type must be grid, lhs, maximin_lhs or file");
  }
  l.metric = metric;
  l.radius = radius;
  validate(l);
  return l;
}

inline int cmd_simulate(const std::string& config_path, const std::string& out_path, std::string manifest_path,
                        Metric metric, double radius, const Common& common, std::ostream& out) {
  const auto t0 = Clock::now();
  auto cfg = io::Config::load(config_path);
  const GPModel model = io::model_from_config(cfg);
  const Locations locs = design_from_config(cfg, common.seed, metric, radius);
  const int n_reps = static_cast<int>(cfg.get_int("simulate", "n_reps", 1));
  cfg.finish();
  const Eigen::MatrixXd z = sample_gp(model, locs, n_reps, derive_seed(common.seed, 2), 0, common.threads);
  auto header = io::coordinate_names(locs.dim(), locs.metric);
  Eigen::MatrixXd table(locs.size(), locs.dim() + n_reps);
  table << locs.coords, z.transpose();
  if (n_reps == 1) {
    header.push_back("z");
  } else {
    for (int r = 0; r < n_reps; ++r) header.push_back("z" + std::to_string(r + 1));
  }
  {
    auto f = io::open_out(out_path);
    io::write_matrix(f, header, table);
  }
  if (manifest_path.empty()) manifest_path = out_path + ".manifest.json";
  io::write_json_file(manifest_path,
                      manifest("simulate", common, read_text(config_path), {out_path}, seconds_since(t0)));
  out << "simulated " << n_reps << " replicate(s) at " << locs.size() << " locations -> " << out_path << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// fit / predict
// ---------------------------------------------------------------------------

inline int cmd_fit(const std::string& data_path, const std::string& config_path, const std::string& out_path,
                   Metric metric, double radius, const Common& common, std::ostream& out, std::ostream& err) {
  const Dataset data = io::dataset_from_csv(io::read_csv_file(data_path), data_path, metric, radius);
  auto cfg = io::Config::load(config_path);
  const GPModel tmpl = io::model_from_config(cfg);
  FitConfig fc = io::fit_config_from(cfg);
  cfg.finish();
  fc.seed = common.seed;
  for (const auto& w : kernel_warnings(tmpl.kernel, static_cast<int>(data.locs.dim()))) err << "warning: " << w << '\n';
  const FitResult r = fit(tmpl, data, fc);
  io::write_json_file(out_path, io::fit_to_json(r, data, common.seed));
  out << "fitted " << io::describe(r.model.kernel) << " loglik=" << io::fmt(r.loglik) << " -> " << out_path << '\n';
  return kOk;
}

inline int cmd_predict(const std::string& fit_path, const std::string& targets_path, const std::string& out_path,
                       const std::string& mean_mode, std::ostream& out) {
  const auto bundle = io::fit_from_json(io::parse_json_file(fit_path));
  const auto& locs = bundle.data.locs;
  const auto t = io::read_csv_file(targets_path);
  const Locations targets = io::locations_from_csv(t, targets_path, locs.dim(), locs.metric, locs.radius);
  KrigeOptions opt;
  opt.mean = io::mean_mode_from_string(mean_mode);
  const auto p = krige(bundle.fit.model, bundle.data, targets, opt);
  auto header = io::coordinate_names(targets.dim(), targets.metric);
  for (const char* h : {"mean", "sd", "lo95", "hi95"}) header.emplace_back(h);
  Eigen::MatrixXd table(targets.size(), targets.dim() + 4);
  table << targets.coords, p.mean, p.sd, p.lower95, p.upper95;
  auto f = io::open_out(out_path);
  io::write_matrix(f, header, table);
  out << "predicted " << targets.size() << " targets -> " << out_path << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// spectral
// ---------------------------------------------------------------------------

inline std::vector<double> omega_grid(const std::vector<double>& omegas, const std::vector<double>& grid) {
  if (!omegas.empty() && !grid.empty()) throw InputError("spectral: give either --omega or --grid, not both");
  if (!omegas.empty()) {
    for (double w : omegas) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("spectral: frequencies must be finite and >= 0");
    }
    return omegas;
  }
  if (grid.size() != 3) throw InputError("spectral: --grid takes lo,hi,n (log-spaced)");
  const double lo = grid[0];
  const double hi = grid[1];
  const int n = static_cast<int>(grid[2]);
  if (!(lo > 0.0 && hi > lo && n >= 2 && grid[2] == n)) {
    throw InputError("spectral: --grid needs 0 < lo < hi and an integer n >= 2");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return out;
}

inline int cmd_spectral(const std::string& config_path, const std::vector<double>& omegas,
                        const std::vector<double>& grid, int dim, const std::string& out_path, std::ostream& out) {
  auto cfg = io::Config::load(config_path);
  const KernelSpec k = io::kernel_from_config(cfg);
  cfg.finish();
  const auto w = omega_grid(omegas, grid);
  std::ostringstream buf;
  if (const auto* m = std::get_if<MaternParams>(&k)) {
    Eigen::MatrixXd table(static_cast<Eigen::Index>(w.size()), 2);
    for (std::size_t i = 0; i < w.size(); ++i) {
      table(static_cast<Eigen::Index>(i), 0) = w[i];
      table(static_cast<Eigen::Index>(i), 1) = matern_spectral(w[i], *m, dim);
    }
    io::write_matrix(buf, {"omega", "density"}, table);
  } else if (const auto* c = std::get_if<CHParams>(&k)) {
    Eigen::MatrixXd table(static_cast<Eigen::Index>(w.size()), 3);
    for (std::size_t i = 0; i < w.size(); ++i) {
      table(static_cast<Eigen::Index>(i), 0) = w[i];
      table(static_cast<Eigen::Index>(i), 1) = ch_spectral(w[i], *c, dim);
      table(static_cast<Eigen::Index>(i), 2) =
          w[i] > 0.0 ? ch_spectral_tail_value(w[i], *c, dim) : std::numeric_limits<double>::quiet_NaN();
    }
    io::write_matrix(buf, {"omega", "density", "tail"}, table);
  } else {
    throw InputError("spectral: only matern and ch kernels have a spectral density here");
  }
  if (out_path.empty()) {
    out << buf.str();
  } else {
    auto f = io::open_out(out_path);
    f << buf.str();
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

inline KrigeOptions krige_options_from(io::Config& c) {
  KrigeOptions k;
  k.mean = io::mean_mode_from_string(c.get_string("krige", "mean", "known"));
  k.gls_variance_term = c.get_bool("krige", "gls_variance_term", true);
  return k;
}

inline void write_prediction_outputs(const PredictionStudyResult& r, const std::filesystem::path& dir,
                                     std::vector<std::string>& outputs) {
  {
    const auto p = (dir / "metrics.csv").string();
    auto f = io::open_out(p);
    io::write_row(f, {"rep", "candidate", "ok", "rmspe", "cvg95", "alci95", "loglik", "fitted", "error"});
    for (const auto& row : r.rows) {
      io::write_row(f, {std::to_string(row.rep), row.candidate, row.ok ? "1" : "0", io::fmt(row.rmspe),
                        io::fmt(row.cvg95), io::fmt(row.alci95), io::fmt(row.loglik),
                        row.ok ? io::cell(io::describe(row.fitted)) : "", io::cell(row.error)});
    }
    outputs.push_back(p);
  }
  {
    const auto p = (dir / "curves.csv").string();
    auto f = io::open_out(p);
    io::write_row(f, {"rep", "candidate", "lag", "correlation"});
    for (const auto& c : r.curves) {
      io::write_row(f, {std::to_string(c.rep), c.candidate, io::fmt(c.lag), io::fmt(c.correlation)});
    }
    outputs.push_back(p);
  }
  {
    const auto p = (dir / "summary.csv").string();
    auto f = io::open_out(p);
    io::write_row(f, {"candidate", "n_ok", "n_failed", "median_rmspe", "mean_rmspe", "median_cvg95", "mean_cvg95",
                      "median_alci95", "mean_alci95"});
    for (const auto& s : r.summary) {
      io::write_row(f, {s.candidate, std::to_string(s.n_ok), std::to_string(s.n_failed), io::fmt(s.median_rmspe),
                        io::fmt(s.mean_rmspe), io::fmt(s.median_cvg95), io::fmt(s.mean_cvg95),
                        io::fmt(s.median_alci95), io::fmt(s.mean_alci95)});
    }
    outputs.push_back(p);
  }
}

inline void write_asymptotic_outputs(const AsymptoticResult& r, const std::filesystem::path& dir,
                                     std::vector<std::string>& outputs) {
  {
    const auto p = (dir / "estimates.csv").string();
    auto f = io::open_out(p);
    io::write_row(f, {"n", "rep", "mode", "ok", "c_hat", "xi", "covered"});
    for (const auto& row : r.rows) {
      io::write_row(f, {std::to_string(row.n), std::to_string(row.rep), row.mode, row.ok ? "1" : "0",
                        io::fmt(row.c_hat), io::fmt(row.xi), row.covered ? "1" : "0"});
    }
    outputs.push_back(p);
  }
  {
    const auto p = (dir / "summary.csv").string();
    auto f = io::open_out(p);
    io::write_row(f, {"n", "mode", "n_ok", "n_failed", "xi_p05", "xi_p25", "xi_p50", "xi_p75", "xi_p95", "cvg",
                      "bias", "rmse", "c0"});
    for (const auto& s : r.summary) {
      io::write_row(f, {std::to_string(s.n), s.mode, std::to_string(s.n_ok), std::to_string(s.n_failed),
                        io::fmt(s.xi_percentiles[0]), io::fmt(s.xi_percentiles[1]), io::fmt(s.xi_percentiles[2]),
                        io::fmt(s.xi_percentiles[3]), io::fmt(s.xi_percentiles[4]), io::fmt(s.cvg), io::fmt(s.bias),
                        io::fmt(s.rmse), io::fmt(r.c0)});
    }
    outputs.push_back(p);
  }
}

inline void run_prediction_experiment(io::Config& c, const Common& common, const std::filesystem::path& dir,
                                      std::vector<std::string>& outputs, std::ostream& out) {
  StudySpec s;
  s.case_id = c.get_string("study", "case_id", s.case_id);
  s.truth = io::iso_from_config(c, "truth", 1.0);
  s.candidates.clear();
  for (const auto& name : c.get_strings("study", "candidates", {"matern", "ch", "gc"})) {
    s.candidates.push_back(candidate_from_string(name));
  }
  s.n_train = static_cast<int>(c.get_int("study", "n_train", s.n_train));
  const std::string design = c.get_string("study", "design", "maximin_lhs");
  if (design == "maximin_lhs") {
    s.design = DesignKind::maximin_lhs;
  } else if (design == "grid") {
    s.design = DesignKind::grid;
  } else {
    throw InputError(c.name() + ": [study] design must be maximin_lhs or grid");
  }
  s.lhs_candidates = static_cast<int>(c.get_int("study", "lhs_candidates", s.lhs_candidates));
  s.n_reps = static_cast<int>(c.get_int("study", "n_reps", s.n_reps));
  if (c.has("study", "domain")) s.domain = bounds_from_list(c.get_doubles("study", "domain"), "[study] domain");
  s.target_counts = c.get_ints("study", "target_counts", s.target_counts);
  s.curve_lags = c.get_doubles("study", "curve_lags", {});
  s.fit = io::fit_config_from(c);
  s.krige = krige_options_from(c);
  c.finish();
  s.seed = common.seed;
  s.threads = common.threads;
  const auto r = run_prediction_study(s);
  write_prediction_outputs(r, dir, outputs);
  for (const auto& m : r.summary) {
    out << s.case_id << ' ' << m.candidate << ": median rmspe " << io::fmt(m.median_rmspe) << ", median cvg95 "
        << io::fmt(m.median_cvg95) << ", failed " << m.n_failed << '\n';
  }
}

inline void run_asymptotic_experiment(io::Config& c, const Common& common, const std::filesystem::path& dir,
                                      std::vector<std::string>& outputs, std::ostream& out) {
  AsymptoticSpec s;
  const IsoSpec truth = io::iso_from_config(c, "truth", 1.0);
  if (!std::holds_alternative<CHParams>(truth)) throw InputError(c.name() + ": [truth] must be a ch kernel");
  s.truth = std::get<CHParams>(truth);
  s.modes.clear();
  for (const auto& m : c.get_strings("study", "modes", {"theta0"})) s.modes.push_back(theta_mode_from_string(m));
  s.n_list = c.get_ints("study", "n_list", s.n_list);
  s.n_reps = static_cast<int>(c.get_int("study", "n_reps", s.n_reps));
  s.grid_counts = c.get_ints("study", "grid_counts", s.grid_counts);
  if (c.has("study", "domain")) s.domain = bounds_from_list(c.get_doubles("study", "domain"), "[study] domain");
  s.fit = io::fit_config_from(c);
  c.finish();
  s.seed = common.seed;
  s.threads = common.threads;
  const auto r = run_asymptotic_study(s);
  write_asymptotic_outputs(r, dir, outputs);
  for (const auto& m : r.summary) {
    out << "n=" << m.n << ' ' << m.mode << ": median xi " << io::fmt(m.xi_percentiles[2]) << ", cvg "
        << io::fmt(m.cvg) << '\n';
  }
}

inline void run_efficiency_experiment(io::Config& c, const Common& common, const std::filesystem::path& dir,
                                      std::vector<std::string>& outputs, std::ostream& out) {
  EfficiencySpec s;
  const IsoSpec truth = io::iso_from_config(c, "truth", 1.0);
  if (!std::holds_alternative<MaternParams>(truth)) throw InputError(c.name() + ": [truth] must be a matern kernel");
  s.truth = std::get<MaternParams>(truth);
  const bool matched = !c.has("predictor", "sigma2");
  const IsoSpec pred = io::iso_from_config(c, "predictor", 1.0);
  if (!std::holds_alternative<CHParams>(pred)) throw InputError(c.name() + ": [predictor] must be a ch kernel");
  s.predictor = std::get<CHParams>(pred);
  if (matched) s.predictor.sigma2 = matched_ch_variance(s.truth, s.predictor.alpha, s.predictor.beta);
  s.n_list = c.get_ints("study", "n_list", s.n_list);
  s.n_reps = static_cast<int>(c.get_int("study", "n_reps", s.n_reps));
  if (c.has("study", "domain")) s.domain = bounds_from_list(c.get_doubles("study", "domain"), "[study] domain");
  if (c.has("study", "target_box")) {
    s.target_box = bounds_from_list(c.get_doubles("study", "target_box"), "[study] target_box");
  }
  c.finish();
  s.seed = common.seed;
  s.threads = common.threads;
  const auto rows = run_efficiency_study(s);
  const auto p = (dir / "efficiency.csv").string();
  auto f = io::open_out(p);
  io::write_row(f, {"n", "mean_ratio", "se_ratio"});
  for (const auto& r : rows) {
    io::write_row(f, {std::to_string(r.n), io::fmt(r.mean_ratio), io::fmt(r.se_ratio)});
    out << "n=" << r.n << ": mean MSPE ratio " << io::fmt(r.mean_ratio) << '\n';
  }
  outputs.push_back(p);
}

inline void run_realization_experiment(io::Config& c, const Common& common, const std::filesystem::path& dir,
                                       std::vector<std::string>& outputs, std::ostream& out) {
  const long long k = c.get_int("study", "kernels");
  if (k < 1) throw InputError(c.name() + ": [study] kernels must be positive");
  std::vector<IsoSpec> kernels;
  for (long long i = 0; i < k; ++i) kernels.push_back(io::iso_from_config(c, "kernel." + std::to_string(i), 1.0));
  const int n_points = static_cast<int>(c.get_int("study", "n_points", 2000));
  const double lo = c.get_double("study", "lo", 0.0);
  const double hi = c.get_double("study", "hi", 2000.0);
  c.finish();
  const Eigen::MatrixXd r = export_realizations_1d(kernels, n_points, common.seed, lo, hi);
  Eigen::MatrixXd table(n_points, k + 1);
  table << realization_grid(n_points, lo, hi), r;
  std::vector<std::string> header = {"x"};
  for (long long i = 0; i < k; ++i) header.push_back("k" + std::to_string(i));
  const auto p = (dir / "realizations.csv").string();
  auto f = io::open_out(p);
  io::write_matrix(f, header, table);
  outputs.push_back(p);
  out << "wrote " << k << " realization(s) on " << n_points << " points\n";
}

inline int cmd_experiment(const std::string& config_path, const std::string& out_dir, const Common& common,
                          std::ostream& out) {
  const auto t0 = Clock::now();
  auto cfg = io::Config::load(config_path);
  const std::string type = cfg.get_string("study", "type");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  std::vector<std::string> outputs;
  if (type == "prediction") {
    run_prediction_experiment(cfg, common, dir, outputs, out);
  } else if (type == "asymptotic") {
    run_asymptotic_experiment(cfg, common, dir, outputs, out);
  } else if (type == "efficiency") {
    run_efficiency_experiment(cfg, common, dir, outputs, out);
  } else if (type == "realizations") {
    run_realization_experiment(cfg, common, dir, outputs, out);
  } else {
    throw InputError(cfg.name() + ": [study] type must be prediction, asymptotic, efficiency or realizations");
  }
  io::write_json_file((dir / "manifest.json").string(),
                      manifest("experiment", common, read_text(config_path), outputs, seconds_since(t0)));
  return kOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

inline int cmd_bench(std::size_t n_evals, int repeats, const std::string& out_path, const Common& common,
                     std::ostream& out) {
  if (repeats < 1) throw InputError("bench: --repeats must be positive");
  json runs = json::array();
  for (int r = 0; r < repeats; ++r) {
    const auto t = run_timing_bench(n_evals, derive_seed(common.seed, static_cast<std::uint64_t>(r)));
    out << "run " << r + 1 << ": bessel_k " << io::fmt(t.bessel_ns) << " ns, hyperg_u " << io::fmt(t.hyperg_ns)
        << " ns, ratio " << io::fmt(t.ratio) << '\n';
    runs.push_back({{"bessel_ns", t.bessel_ns}, {"hyperg_ns", t.hyperg_ns}, {"ratio", t.ratio}});
  }
  if (!out_path.empty()) {
    json j;
    j["n_evals"] = n_evals;
    j["seed"] = common.seed;
    j["runs"] = runs;
    io::write_json_file(out_path, j);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point.
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Gaussian-process toolkit for Matern, confluent hypergeometric and generalized Cauchy kernels"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "seed for every random draw")->capture_default_str();
  app.add_option("--threads", common.threads, "worker cap (0: CHGP_THREADS or hardware)")->capture_default_str();

  std::string metric_name = "euclidean";
  double radius = kEarthRadiusKm;
  auto add_metric = [&](CLI::App* sub) {
    sub->add_option("--metric", metric_name, "euclidean | chordal | great_circle")->capture_default_str();
    sub->add_option("--radius", radius, "sphere radius for spherical metrics")->capture_default_str();
  };

  std::string config, out_path, manifest_path, data, fit_path, targets, mean_mode = "known", out_dir;
  std::vector<double> omegas, grid;
  int dim = 1;
  std::size_t n_evals = 200000;
  int repeats = 3;

  auto* sim = app.add_subcommand("simulate", "draw realizations from a configured model");
  sim->add_option("--config", config, "model and design config")->required();
  sim->add_option("--out", out_path, "realizations CSV")->required();
  sim->add_option("--manifest", manifest_path, "manifest JSON (default: <out>.manifest.json)");
  add_metric(sim);

  auto* fit_cmd = app.add_subcommand("fit", "estimate kernel parameters");
  fit_cmd->add_option("--data", data, "data CSV")->required();
  fit_cmd->add_option("--config", config, "kernel template and fit options")->required();
  fit_cmd->add_option("--out", out_path, "fit-result JSON")->required();
  add_metric(fit_cmd);

  auto* pred = app.add_subcommand("predict", "krige at target locations");
  pred->add_option("--fit", fit_path, "fit-result JSON")->required();
  pred->add_option("--targets", targets, "targets CSV")->required();
  pred->add_option("--out", out_path, "predictions CSV")->required();
  pred->add_option("--mean", mean_mode, "known | gls")->capture_default_str();

  auto* spec = app.add_subcommand("spectral", "spectral density on a frequency grid");
  spec->add_option("--config", config, "kernel config")->required();
  spec->add_option("--omega", omegas, "frequencies")->delimiter(',');
  spec->add_option("--grid", grid, "lo,hi,n log-spaced frequencies")->delimiter(',');
  spec->add_option("--dim", dim, "dimension d")->capture_default_str();
  spec->add_option("--out", out_path, "density CSV (default: stdout)");

  auto* exp = app.add_subcommand("experiment", "run a study");
  exp->add_option("--config", config, "study config")->required();
  exp->add_option("--out-dir", out_dir, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "time bessel_k against hyperg_u");
  bench->add_option("--n-evals", n_evals, "calls per function")->capture_default_str();
  bench->add_option("--repeats", repeats, "independent runs")->capture_default_str();
  bench->add_option("--out", out_path, "timing JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    const Metric metric = metric_from_string(metric_name);
    if (*sim) return cmd_simulate(config, out_path, manifest_path, metric, radius, common, out);
    if (*fit_cmd) return cmd_fit(data, config, out_path, metric, radius, common, out, err);
    if (*pred) return cmd_predict(fit_path, targets, out_path, mean_mode, out);
    if (*spec) return cmd_spectral(config, omegas, grid, dim, out_path, out);
    if (*exp) return cmd_experiment(config, out_dir, common, out);
    if (*bench) return cmd_bench(n_evals, repeats, out_path, common, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace chgp::cli
