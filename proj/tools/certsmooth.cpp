// certsmooth: Monte Carlo certification of smoothed classifiers with
// optional per-point noise-scale optimization.
//
// Subcommands:
//   certify   fixed-sigma certification over a dataset
//   optimize  bisection search for the best sigma per point, then certify
//   grid      exhaustive sigma grid search per point, then certify
//   curve     sigma-radius curves per point (CSV)
//   diagnose  quasiconcavity screen of the sigma-radius curve per point
//   report    recompute aggregate tables from an existing records file
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "certsmooth/certsmooth.hpp"

namespace {

using namespace certsmooth;

std::uint64_t seed_from_env() {
  const char* env = std::getenv("CERTSMOOTH_SEED");
  if (!env) return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw ConfigError("CERTSMOOTH_SEED must be an unsigned integer");
  }
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2 || !(hi > lo)) throw ConfigError("grid needs at least 2 points and sigma-max > sigma-min");
  std::vector<double> v(static_cast<std::size_t>(n));
  double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + step * i;
  v.back() = hi;
  return v;
}

struct CommonOpts {
  std::string model_path;
  std::string dataset_path;
  std::string out_dir = "certsmooth-out";
  double alpha = 0.001;
  std::uint64_t n0 = 100;
  std::uint64_t n = 100000;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_model = true) {
  if (needs_model) {
    cmd->add_option("--model", o.model_path, "model config JSON")->required();
    cmd->add_option("--dataset", o.dataset_path, "dataset JSONL")->required();
  }
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--alpha", o.alpha, "certification failure probability");
  cmd->add_option("--n0", o.n0, "class-selection sample count");
  cmd->add_option("--n", o.n, "estimation sample count");
  cmd->add_option("--seed", o.seed, "run seed (default: CERTSMOOTH_SEED or 0)")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--workers", o.workers, "worker threads");
}

RunConfig base_config(const CommonOpts& o) {
  RunConfig cfg;
  cfg.model_path = o.model_path;
  cfg.dataset_path = o.dataset_path;
  cfg.out_dir = o.out_dir;
  cfg.cert.alpha = o.alpha;
  cfg.cert.n0 = o.n0;
  cfg.cert.n = o.n;
  cfg.cert.seed = o.seed_set ? o.seed : seed_from_env();
  cfg.workers = o.workers;
  return cfg;
}

void print_report(const AcrReport& r) {
  std::cout << "mode=" << r.mode << " points=" << r.points << " acr=" << format_double(r.acr)
            << " forward_passes=" << r.total_forward_passes << "\n";
  for (const auto& [threshold, fraction] : r.certified_accuracy) {
    std::cout << "  accuracy@" << format_double(threshold) << " = " << format_double(fraction)
              << "\n";
  }
  std::cout << "records: " << r.records_path << "\n";
}

int run_certify(const CommonOpts& o, double sigma) {
  RunConfig cfg = base_config(o);
  cfg.mode = RunMode::fixed;
  cfg.sigma = sigma;
  print_report(run(cfg));
  return 0;
}

int run_optimize(const CommonOpts& o, double sigma0, double sigma_min, double sigma_max,
                 double epsilon, double tau, std::uint64_t grad_samples, bool traces) {
  RunConfig cfg = base_config(o);
  cfg.mode = RunMode::qcrs;
  cfg.sigma = sigma0;
  auto region = default_search_region(sigma0);
  cfg.qcrs.sigma_min = sigma_min > 0.0 ? sigma_min : region.first;
  cfg.qcrs.sigma_max = sigma_max > 0.0 ? sigma_max : region.second;
  cfg.qcrs.epsilon = epsilon;
  cfg.qcrs.tau = tau;
  cfg.qcrs.grad_samples = grad_samples;
  cfg.write_traces = traces;
  print_report(run(cfg));
  return 0;
}

int run_grid(const CommonOpts& o, double sigma0, double sigma_min, double sigma_max,
             int grid_points, std::uint64_t grad_samples) {
  RunConfig cfg = base_config(o);
  cfg.mode = RunMode::grid;
  cfg.sigma = sigma0;
  auto region = default_search_region(sigma0);
  if (!(sigma_min > 0.0)) sigma_min = region.first;
  if (!(sigma_max > 0.0)) sigma_max = region.second;
  cfg.grid_sigmas = linspace(sigma_min, sigma_max, grid_points);
  cfg.qcrs.grad_samples = grad_samples;
  print_report(run(cfg));
  return 0;
}

int run_curve(const CommonOpts& o, double sigma_min, double sigma_max, int grid_points,
              bool exact) {
  auto model = load_model_json(o.model_path);
  auto data = load_dataset_jsonl(o.dataset_path);
  auto sigmas = linspace(sigma_min, sigma_max, grid_points);
  std::filesystem::create_directories(o.out_dir);
  std::uint64_t seed = o.seed_set ? o.seed : seed_from_env();
  for (std::size_t i = 0; i < data.size(); ++i) {
    SigmaRadiusCurve curve =
        exact ? exact_curve(*model, data[i].x, data[i].label, sigmas)
              : sample_curve(*model, data[i].x, sigmas, o.n, o.alpha,
                             derive_seed(seed, seeds::kDatasetPoint, i));
    auto path = std::filesystem::path(o.out_dir) / ("curve_" + data[i].id + ".csv");
    write_curve_csv(path.string(), curve);
    std::cout << path.string() << "\n";
  }
  return 0;
}

int run_diagnose(const CommonOpts& o, double sigma_min, double sigma_max, int grid_points,
                 double tau, std::uint64_t grad_samples, bool exact) {
  auto model = load_model_json(o.model_path);
  auto data = load_dataset_jsonl(o.dataset_path);
  auto sigmas = linspace(sigma_min, sigma_max, grid_points);
  std::filesystem::create_directories(o.out_dir);
  auto path = std::filesystem::path(o.out_dir) / "sqc.jsonl";
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::uint64_t seed = o.seed_set ? o.seed : seed_from_env();
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint64_t point_seed = derive_seed(seed, seeds::kDatasetPoint, i);
    SigmaRadiusCurve curve =
        exact ? exact_curve(*model, data[i].x, data[i].label, sigmas)
              : sample_curve(*model, data[i].x, sigmas, o.n, o.alpha, point_seed);
    double star = curve.samples[detail::curve_argmax(curve)].sigma;
    SqcReport report =
        exact ? sqc_estimate(curve, star)
              : sqc_estimate_mc(*model, data[i].x, curve, star, tau, grad_samples, o.alpha,
                                point_seed);
    if (!report.quasiconcave) ++flagged;
    json j = sqc_to_json(report);
    j["id"] = data[i].id;
    out << j.dump() << "\n";
  }
  std::cout << "checked " << data.size() << " points, " << flagged
            << " flagged non-quasiconcave; " << path.string() << "\n";
  return 0;
}

int run_report(const std::string& records_path, const std::string& out_dir,
               std::vector<double> thresholds) {
  auto records = load_records_jsonl(records_path);
  if (thresholds.empty()) {
    thresholds = {0.25, 0.50, 0.75, 1.00, 1.25, 1.50, 1.75, 2.00, 2.25};
  }
  AcrReport report;
  report.acr = acr_from_records(records);
  auto fractions = radius_accuracy_table(records, thresholds);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    report.certified_accuracy.emplace_back(thresholds[i], fractions[i]);
  }
  for (const auto& r : records) report.total_forward_passes += r.forward_passes;
  report.points = records.size();
  report.mode = "report";
  report.records_path = records_path;

  std::filesystem::create_directories(out_dir);
  write_accuracy_csv((std::filesystem::path(out_dir) / "accuracy.csv").string(), thresholds,
                     fractions);
  write_classwise_csv((std::filesystem::path(out_dir) / "classwise.csv").string(),
                      classwise_sigma_summary(records));
  std::ofstream rep(std::filesystem::path(out_dir) / "report.json");
  if (!rep) throw DataError("cannot write report.json under " + out_dir);
  rep << report_to_json(report).dump(2) << "\n";
  print_report(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo certification of Gaussian-smoothed classifiers"};
  app.require_subcommand(1);

  CommonOpts common;
  double sigma = 0.25;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double epsilon = 0.01;
  double tau = 0.05;
  std::uint64_t grad_samples = 500;
  int grid_points = 24;
  bool traces = false;
  bool exact = false;
  std::string records_path;
  std::vector<double> thresholds;

  auto* certify_cmd = app.add_subcommand("certify", "certify at a fixed sigma");
  add_common(certify_cmd, common);
  certify_cmd->add_option("--sigma", sigma, "noise scale")->required();

  auto* optimize_cmd = app.add_subcommand("optimize", "per-point sigma search, then certify");
  add_common(optimize_cmd, common);
  optimize_cmd->add_option("--sigma", sigma, "default sigma0 (fallback choice)")->required();
  optimize_cmd->add_option("--sigma-min", sigma_min, "search region lower edge");
  optimize_cmd->add_option("--sigma-max", sigma_max, "search region upper edge");
  optimize_cmd->add_option("--epsilon", epsilon, "bisection stopping width");
  optimize_cmd->add_option("--tau", tau, "finite-difference offset");
  optimize_cmd->add_option("--grad-samples", grad_samples, "draws per gradient probe");
  optimize_cmd->add_flag("--traces", traces, "also write traces.jsonl");

  auto* grid_cmd = app.add_subcommand("grid", "per-point sigma grid search, then certify");
  add_common(grid_cmd, common);
  grid_cmd->add_option("--sigma", sigma, "default sigma0 (names the search region)")->required();
  grid_cmd->add_option("--sigma-min", sigma_min, "grid lower edge");
  grid_cmd->add_option("--sigma-max", sigma_max, "grid upper edge");
  grid_cmd->add_option("--grid-points", grid_points, "number of grid sigmas");
  grid_cmd->add_option("--grad-samples", grad_samples, "draws per grid evaluation");

  auto* curve_cmd = app.add_subcommand("curve", "write sigma-radius curves");
  add_common(curve_cmd, common);
  curve_cmd->add_option("--sigma-min", sigma_min, "grid lower edge")->required();
  curve_cmd->add_option("--sigma-max", sigma_max, "grid upper edge")->required();
  curve_cmd->add_option("--grid-points", grid_points, "number of grid sigmas");
  curve_cmd->add_flag("--exact", exact, "use closed-form probabilities where available");

  auto* diagnose_cmd = app.add_subcommand("diagnose", "quasiconcavity screen per point");
  add_common(diagnose_cmd, common);
  diagnose_cmd->add_option("--sigma-min", sigma_min, "grid lower edge")->required();
  diagnose_cmd->add_option("--sigma-max", sigma_max, "grid upper edge")->required();
  diagnose_cmd->add_option("--grid-points", grid_points, "number of grid sigmas");
  diagnose_cmd->add_option("--tau", tau, "finite-difference offset");
  diagnose_cmd->add_option("--grad-samples", grad_samples, "draws per gradient probe");
  diagnose_cmd->add_flag("--exact", exact, "use closed-form probabilities where available");

  auto* report_cmd = app.add_subcommand("report", "aggregate an existing records file");
  report_cmd->add_option("--records", records_path, "records.jsonl from a previous run")
      ->required();
  report_cmd->add_option("--out", common.out_dir, "output directory");
  report_cmd->add_option("--thresholds", thresholds, "accuracy thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*certify_cmd) return run_certify(common, sigma);
    if (*optimize_cmd) {
      return run_optimize(common, sigma, sigma_min, sigma_max, epsilon, tau, grad_samples,
                          traces);
    }
    if (*grid_cmd) return run_grid(common, sigma, sigma_min, sigma_max, grid_points, grad_samples);
    if (*curve_cmd) return run_curve(common, sigma_min, sigma_max, grid_points, exact);
    if (*diagnose_cmd) {
      return run_diagnose(common, sigma_min, sigma_max, grid_points, tau, grad_samples, exact);
    }
    if (*report_cmd) return run_report(records_path, common.out_dir, thresholds);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
