#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "certsmooth/certify.hpp"
#include "certsmooth/io.hpp"
#include "certsmooth/qcrs.hpp"

namespace certsmooth {

enum class RunMode { fixed, qcrs, grid };

inline std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::fixed: return "fixed";
    case RunMode::qcrs: return "qcrs";
    case RunMode::grid: return "grid";
  }
  return "fixed";
}

/// Preset search regions for the standard training noise levels; other
/// sigma0 values fall back to [max(0.01, sigma0 / 2), 2 * sigma0].
inline std::pair<double, double> default_search_region(double sigma0) {
  if (sigma0 == 0.12) return {0.08, 0.50};
  if (sigma0 == 0.25) return {0.15, 0.70};
  if (sigma0 == 0.50) return {0.25, 1.00};
  return {std::max(0.01, 0.5 * sigma0), 2.0 * sigma0};
}

struct RunConfig {
  std::string model_path;
  std::string dataset_path;
  std::string out_dir;
  RunMode mode = RunMode::fixed;
  double sigma = 0.25;  // certification sigma in fixed mode, sigma0 otherwise
  CertParams cert;
  QcrsParams qcrs;                  // region, epsilon, tau, grad_samples
  std::vector<double> grid_sigmas;  // grid mode evaluation points
  int workers = 1;
  bool write_traces = false;
  std::vector<double> thresholds = {0.25, 0.50, 0.75, 1.00, 1.25, 1.50, 1.75, 2.00, 2.25};

  void validate() const {
    if (model_path.empty()) throw ConfigError("model path is required");
    if (dataset_path.empty()) throw ConfigError("dataset path is required");
    if (out_dir.empty()) throw ConfigError("output directory is required");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
    cert.validate();
    if (mode == RunMode::grid && grid_sigmas.empty()) {
      throw ConfigError("grid mode needs at least one grid sigma");
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (!(thresholds[i] > 0.0) || (i > 0 && !(thresholds[i] > thresholds[i - 1]))) {
        throw ConfigError("thresholds must be positive and strictly increasing");
      }
    }
  }
};

struct AcrReport {
  double acr = 0.0;
  std::vector<std::pair<double, double>> certified_accuracy;  // (threshold, fraction)
  std::uint64_t total_forward_passes = 0;
  double wall_time_seconds = 0.0;
  std::size_t points = 0;
  std::string mode;
  std::string records_path;
};

/// Radius that counts toward accuracy aggregates: zero unless the point was
/// certified with the correct label.
inline double qualifying_radius(const PointRecord& r) {
  return r.qualified ? r.radius : 0.0;
}

inline double acr_from_records(const std::vector<PointRecord>& records) {
  if (records.empty()) throw std::invalid_argument("acr_from_records: no records");
  double sum = 0.0;
  for (const auto& r : records) sum += qualifying_radius(r);
  return sum / static_cast<double>(records.size());
}

/// Fraction of points certified correctly at radius >= each threshold.
/// Computed as one survival function over the qualifying radii, so the
/// fractions are nonincreasing in the threshold by construction.
inline std::vector<double> radius_accuracy_table(const std::vector<PointRecord>& records,
                                                 std::span<const double> thresholds) {
  if (records.empty()) throw std::invalid_argument("radius_accuracy_table: no records");
  if (thresholds.empty()) throw std::invalid_argument("radius_accuracy_table: no thresholds");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) {
      throw std::invalid_argument("radius_accuracy_table: thresholds must be increasing");
    }
  }
  std::vector<double> radii;
  radii.reserve(records.size());
  for (const auto& r : records) radii.push_back(qualifying_radius(r));
  std::sort(radii.begin(), radii.end());
  std::vector<double> fractions;
  fractions.reserve(thresholds.size());
  for (double t : thresholds) {
    auto it = std::lower_bound(radii.begin(), radii.end(), t);
    fractions.push_back(static_cast<double>(radii.end() - it) /
                        static_cast<double>(radii.size()));
  }
  return fractions;
}

struct ClasswiseSigma {
  int label = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

/// Mean and spread of the certification sigma per reference class, using
/// the optimizer's choice where one was made. Classes absent from the
/// records are simply not listed.
inline std::vector<ClasswiseSigma> classwise_sigma_summary(
    const std::vector<PointRecord>& records) {
  std::map<int, std::vector<double>> groups;
  for (const auto& r : records) {
    groups[r.true_label].push_back(r.chosen_sigma.value_or(r.sigma));
  }
  std::vector<ClasswiseSigma> out;
  for (const auto& [label, sigmas] : groups) {
    double mean = 0.0;
    for (double s : sigmas) mean += s;
    mean /= static_cast<double>(sigmas.size());
    double var = 0.0;
    for (double s : sigmas) var += (s - mean) * (s - mean);
    var /= static_cast<double>(sigmas.size());
    out.push_back({label, sigmas.size(), mean, std::sqrt(var)});
  }
  return out;
}

inline void write_accuracy_csv(const std::string& path, std::span<const double> thresholds,
                               std::span<const double> fractions) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write accuracy table: " + path);
  out << "# schema=certsmooth.accuracy.v1\n";
  out << "radius,accuracy\n";
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    out << format_double(thresholds[i]) << "," << format_double(fractions[i]) << "\n";
  }
}

inline void write_classwise_csv(const std::string& path,
                                const std::vector<ClasswiseSigma>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write classwise table: " + path);
  out << "# schema=certsmooth.classwise.v1\n";
  out << "label,count,mean_sigma,std_sigma\n";
  for (const auto& r : rows) {
    out << r.label << "," << r.count << "," << format_double(r.mean) << ","
        << format_double(r.stddev) << "\n";
  }
}

inline json report_to_json(const AcrReport& r) {
  json acc = json::array();
  for (const auto& [threshold, fraction] : r.certified_accuracy) {
    acc.push_back({{"radius", threshold}, {"accuracy", fraction}});
  }
  return {{"schema", "certsmooth.report.v1"},
          {"acr", r.acr},
          {"certified_accuracy", acc},
          {"total_forward_passes", r.total_forward_passes},
          {"wall_time_seconds", r.wall_time_seconds},
          {"points", r.points},
          {"mode", r.mode},
          {"records", r.records_path}};
}

namespace detail {

inline PointRecord process_point(const BaseModel& model, const DataPoint& point,
                                 const RunConfig& cfg, std::uint64_t point_seed,
                                 OptTrace* trace_out = nullptr) {
  PointRecord rec;
  rec.id = point.id;
  rec.true_label = point.label;
  rec.seed = point_seed;

  double cert_sigma = cfg.sigma;
  std::uint64_t extra_passes = 0;
  if (cfg.mode == RunMode::qcrs) {
    QcrsParams qp = cfg.qcrs;
    qp.sigma0 = cfg.sigma;
    qp.alpha = cfg.cert.alpha;
    qp.seed = point_seed;
    OptTrace trace = qcrs_optimize(model, point.x, qp);
    cert_sigma = trace.chosen_sigma;
    extra_passes = trace.forward_passes;
    rec.chosen_sigma = cert_sigma;
    if (trace_out) *trace_out = std::move(trace);
  } else if (cfg.mode == RunMode::grid) {
    GridResult gr = grid_search(model, point.x, cfg.grid_sigmas, cfg.qcrs.grad_samples,
                                cfg.cert.alpha, point_seed);
    cert_sigma = gr.best_sigma;
    extra_passes = cfg.grid_sigmas.size() * cfg.qcrs.grad_samples;
    rec.chosen_sigma = cert_sigma;
  }

  CertParams cp = cfg.cert;
  cp.seed = derive_seed(point_seed, seeds::kFinalCertify);
  CertOutcome outcome = certify(model, point.x, Sigma(cert_sigma), cp);

  rec.sigma = cert_sigma;
  rec.status = outcome.certified ? "certified" : "abstain";
  rec.label = outcome.label;
  rec.pa_lower = outcome.pa_lower;
  rec.radius = outcome.radius;
  rec.forward_passes = outcome.forward_passes + extra_passes;
  rec.qualified = outcome.certified && outcome.label == point.label;
  return rec;
}

}  // namespace detail

/// Certifies a whole dataset and writes records.jsonl, report.json,
/// accuracy.csv and classwise.csv (plus traces.jsonl in qcrs mode when
/// requested) under out_dir. Point i always receives the seed derived from
/// (cert.seed, i), so outputs are byte-identical for any worker count.
inline AcrReport run(const RunConfig& cfg) {
  cfg.validate();
  auto started = std::chrono::steady_clock::now();

  auto model = load_model_json(cfg.model_path);
  auto data = load_dataset_jsonl(cfg.dataset_path);
  for (const auto& p : data) {
    if (p.x.size() != static_cast<std::size_t>(model->dimension())) {
      throw DataError("dataset dimension " + std::to_string(p.x.size()) +
                      " does not match model dimension " + std::to_string(model->dimension()));
    }
    if (p.label >= model->num_classes()) {
      throw DataError("point '" + p.id + "' has label " + std::to_string(p.label) +
                      " but the model has " + std::to_string(model->num_classes()) + " classes");
    }
  }

  std::vector<PointRecord> records(data.size());
  std::vector<OptTrace> traces;
  bool keep_traces = cfg.mode == RunMode::qcrs && cfg.write_traces;
  if (keep_traces) traces.resize(data.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < data.size(); i = next.fetch_add(1)) {
      std::uint64_t point_seed = derive_seed(cfg.cert.seed, seeds::kDatasetPoint, i);
      try {
        records[i] = detail::process_point(*model, data[i], cfg, point_seed,
                                           keep_traces ? &traces[i] : nullptr);
      } catch (const std::exception& e) {
        records[i] = PointRecord{};
        records[i].id = data[i].id;
        records[i].true_label = data[i].label;
        records[i].seed = point_seed;
        records[i].status = "error";
        records[i].error = e.what();
      }
    }
  };
  if (cfg.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(cfg.workers));
    for (int i = 0; i < cfg.workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].id < records[b].id;
  });
  std::vector<PointRecord> sorted;
  sorted.reserve(records.size());
  for (std::size_t i : order) sorted.push_back(std::move(records[i]));

  std::filesystem::create_directories(cfg.out_dir);
  std::string records_path = (std::filesystem::path(cfg.out_dir) / "records.jsonl").string();
  write_records_jsonl(records_path, sorted);
  if (keep_traces) {
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "traces.jsonl");
    if (!out) throw DataError("cannot write traces.jsonl under " + cfg.out_dir);
    for (std::size_t i : order) {
      json j = trace_to_json(traces[i]);
      j["id"] = data[i].id;
      out << j.dump() << "\n";
    }
  }

  AcrReport report;
  report.acr = acr_from_records(sorted);
  auto fractions = radius_accuracy_table(sorted, cfg.thresholds);
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
    report.certified_accuracy.emplace_back(cfg.thresholds[i], fractions[i]);
  }
  for (const auto& r : sorted) report.total_forward_passes += r.forward_passes;
  report.points = sorted.size();
  report.mode = to_string(cfg.mode);
  report.records_path = records_path;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  write_accuracy_csv((std::filesystem::path(cfg.out_dir) / "accuracy.csv").string(),
                     cfg.thresholds, fractions);
  write_classwise_csv((std::filesystem::path(cfg.out_dir) / "classwise.csv").string(),
                      classwise_sigma_summary(sorted));
  std::ofstream rep(std::filesystem::path(cfg.out_dir) / "report.json");
  if (!rep) throw DataError("cannot write report.json under " + cfg.out_dir);
  rep << report_to_json(report).dump(2) << "\n";
  return report;
}

}  // namespace certsmooth
