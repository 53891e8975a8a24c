#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "certsmooth/diagnostics.hpp"
#include "certsmooth/model.hpp"
#include "certsmooth/qcrs.hpp"
#include "certsmooth/types.hpp"

namespace certsmooth {

using nlohmann::json;

/// Shortest round-trip decimal form; "nan" for missing values in CSV output.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

/// Per-point result as written to records.jsonl. For abstentions the label
/// and pa_lower are null and the radius is zero; aggregates treat an
/// abstention as radius zero.
struct PointRecord {
  std::string id;
  std::string status;  // "certified" | "abstain" | "error"
  double sigma = 0.0;
  int label = -1;
  double pa_lower = 0.0;
  double radius = 0.0;
  std::uint64_t forward_passes = 0;
  std::uint64_t seed = 0;
  int true_label = -1;
  bool qualified = false;  // certified and label == true_label
  std::optional<double> chosen_sigma;
  std::string error;
};

inline json to_json(const PointRecord& r) {
  json j;
  j["schema"] = "certsmooth.record.v1";
  j["id"] = r.id;
  j["status"] = r.status;
  j["sigma"] = r.sigma;
  if (r.status == "certified") {
    j["label"] = r.label;
    j["pa_lower"] = r.pa_lower;
    j["radius"] = r.radius;
  } else {
    j["label"] = nullptr;
    j["pa_lower"] = nullptr;
    j["radius"] = 0.0;
  }
  j["forward_passes"] = r.forward_passes;
  j["seed"] = r.seed;
  j["true_label"] = r.true_label;
  j["qualified"] = r.qualified;
  if (r.chosen_sigma) j["chosen_sigma"] = *r.chosen_sigma;
  if (r.status == "error") j["error"] = r.error;
  return j;
}

inline PointRecord record_from_json(const json& j) {
  PointRecord r;
  r.id = j.at("id").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.sigma = j.at("sigma").get<double>();
  if (!j.at("label").is_null()) r.label = j.at("label").get<int>();
  if (!j.at("pa_lower").is_null()) r.pa_lower = j.at("pa_lower").get<double>();
  r.radius = j.at("radius").get<double>();
  r.forward_passes = j.at("forward_passes").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.true_label = j.at("true_label").get<int>();
  r.qualified = j.at("qualified").get<bool>();
  if (j.contains("chosen_sigma") && !j.at("chosen_sigma").is_null()) {
    r.chosen_sigma = j.at("chosen_sigma").get<double>();
  }
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  return r;
}

namespace detail {

inline std::vector<double> double_vector(const json& j, const std::string& field) {
  if (!j.contains(field) || !j.at(field).is_array() || j.at(field).empty()) {
    throw ConfigError("model config: '" + field + "' must be a non-empty array of numbers");
  }
  std::vector<double> v;
  for (const auto& e : j.at(field)) {
    if (!e.is_number()) {
      throw ConfigError("model config: '" + field + "' must contain only numbers");
    }
    v.push_back(e.get<double>());
  }
  return v;
}

}  // namespace detail

/// Builds a model from its JSON description. Supported types: "linear"
/// (w, b, positive_label, negative_label), "ball" (center, rho,
/// inside_label, outside_label) and "composite" (dimension, default_label,
/// regions[] of kind "ball" or "halfspace").
inline std::unique_ptr<BaseModel> model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ConfigError("model config: missing string field 'type'");
  }
  std::string type = j.at("type").get<std::string>();
  try {
    if (type == "linear") {
      return std::make_unique<LinearModel>(detail::double_vector(j, "w"),
                                           j.at("b").get<double>(),
                                           j.at("positive_label").get<int>(),
                                           j.at("negative_label").get<int>());
    }
    if (type == "ball") {
      return std::make_unique<BallModel>(detail::double_vector(j, "center"),
                                         j.at("rho").get<double>(),
                                         j.at("inside_label").get<int>(),
                                         j.at("outside_label").get<int>());
    }
    if (type == "composite") {
      std::vector<Region> regions;
      for (const auto& e : j.value("regions", json::array())) {
        Region r;
        std::string kind = e.at("kind").get<std::string>();
        if (kind == "ball") {
          r.kind = Region::Kind::ball;
          r.center = detail::double_vector(e, "center");
          r.rho = e.at("rho").get<double>();
        } else if (kind == "halfspace") {
          r.kind = Region::Kind::halfspace;
          r.w = detail::double_vector(e, "w");
          r.b = e.at("b").get<double>();
        } else {
          throw ConfigError("model config: unknown region kind '" + kind + "'");
        }
        r.label = e.at("label").get<int>();
        regions.push_back(std::move(r));
      }
      return std::make_unique<CompositeModel>(j.at("dimension").get<int>(),
                                              j.at("default_label").get<int>(),
                                              std::move(regions));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  throw ConfigError("model config: unknown model type '" + type + "'");
}

inline std::unique_ptr<BaseModel> load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

/// Loads a JSONL dataset of {"id", "x", "label"} records. Dimensions must
/// agree across the file, ids must be unique, labels must be >= 0. Errors
/// carry the offending line number.
inline std::vector<DataPoint> load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::vector<DataPoint> points;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(e.what());
    }
    DataPoint p;
    try {
      p.id = j.at("id").get<std::string>();
      p.label = j.at("label").get<int>();
      for (const auto& e : j.at("x")) p.x.push_back(e.get<double>());
    } catch (const json::exception& e) {
      fail(e.what());
    }
    if (p.id.empty()) fail("empty id");
    if (p.x.empty()) fail("x must be a non-empty numeric array");
    if (p.label < 0) fail("label must be >= 0");
    if (!points.empty() && p.x.size() != points.front().x.size()) {
      fail("dimension " + std::to_string(p.x.size()) + " differs from first point's " +
           std::to_string(points.front().x.size()));
    }
    for (const auto& q : points) {
      if (q.id == p.id) fail("duplicate id '" + p.id + "'");
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) throw DataError(path + ": dataset is empty");
  return points;
}

inline void write_records_jsonl(const std::string& path, const std::vector<PointRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write records file: " + path);
  for (const auto& r : records) out << to_json(r).dump() << "\n";
}

inline std::vector<PointRecord> load_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open records file: " + path);
  std::vector<PointRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (records.empty()) throw DataError(path + ": no records");
  return records;
}

inline void write_curve_csv(const std::string& path, const SigmaRadiusCurve& curve) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write curve file: " + path);
  out << "# schema=certsmooth.curve.v1\n";
  out << "sigma,radius,pa_lower\n";
  for (const auto& p : curve.samples) {
    out << format_double(p.sigma) << "," << format_double(p.radius) << ","
        << format_double(p.pa_lower) << "\n";
  }
}

inline json trace_to_json(const OptTrace& t) {
  json iters = json::array();
  for (const auto& it : t.iterations) {
    iters.push_back({{"t", it.t},
                     {"sigma", it.sigma},
                     {"grad_sign", it.grad_sign},
                     {"momentum", it.momentum},
                     {"lo", it.lo},
                     {"hi", it.hi},
                     {"width", it.width}});
  }
  return {{"schema", "certsmooth.trace.v1"},
          {"sigma_min", t.sigma_min},
          {"sigma_max", t.sigma_max},
          {"sigma0", t.sigma0},
          {"iterations", iters},
          {"sigma_hat", t.sigma_hat},
          {"radius_hat", t.radius_hat},
          {"radius_sigma0", t.radius_sigma0},
          {"chosen_sigma", t.chosen_sigma},
          {"rejected", t.rejected},
          {"forward_passes", t.forward_passes}};
}

inline json sqc_to_json(const SqcReport& r) {
  return {{"schema", "certsmooth.sqc.v1"},
          {"sigma_star", r.sigma_star},
          {"upsilon_minus", r.upsilon_minus},
          {"upsilon_plus", r.upsilon_plus},
          {"n_left", r.n_left},
          {"n_right", r.n_right},
          {"quasiconcave", r.quasiconcave},
          {"concave", r.concave},
          {"degenerate", r.degenerate}};
}

}  // namespace certsmooth
