#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "certsmooth/io.hpp"
#include "certsmooth/model.hpp"
#include "certsmooth/sampling.hpp"
#include "oracles.hpp"

using namespace certsmooth;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("linear model classifies by signed margin") {
  LinearModel m({1.0, -2.0}, 0.5, 1, 0);
  REQUIRE(m.classify(std::vector<double>{1.0, 0.0}) == 1);
  REQUIRE(m.classify(std::vector<double>{0.0, 1.0}) == 0);
  REQUIRE(m.classify(std::vector<double>{-0.5, 0.0}) == 1);  // boundary is positive
  REQUIRE(m.num_classes() == 2);
  REQUIRE(m.dimension() == 2);
  REQUIRE(m.margin(std::vector<double>{1.0, 0.0}) ==
          Catch::Approx(1.5 / std::sqrt(5.0)).margin(1e-15));
}

TEST_CASE("linear model exact probability is the frozen gaussian integral") {
  LinearModel m({1.0, 0.0}, 0.0, 1, 0);
  std::vector<double> x{0.8, 0.0};
  double p = exact_pa(m, x, Sigma(0.4), 1).value();
  REQUIRE(p == Catch::Approx(0.9772498680518208).margin(1e-12));
  REQUIRE(exact_pa(m, x, Sigma(0.4), 0).value() == Catch::Approx(1.0 - p).margin(1e-15));

  std::vector<double> boundary{0.0, 3.7};
  REQUIRE(exact_pa(m, boundary, Sigma(0.9), 1).value() == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("linear model exact probability matches the oracle cdf") {
  LinearModel m({0.6, -0.8, 0.3}, -0.2, 2, 0);
  std::vector<double> x{1.1, -0.4, 0.9};
  for (double s : {0.1, 0.25, 0.8, 2.0}) {
    double z = m.margin(x) / s;
    REQUIRE(exact_pa(m, x, Sigma(s), 2).value() ==
            Catch::Approx(static_cast<double>(oracle::phi(z))).margin(1e-13));
  }
}

TEST_CASE("ball model classification and 1-d exact probability") {
  BallModel m({0.0}, 1.0, 1, 0);
  REQUIRE(m.classify(std::vector<double>{0.99}) == 1);
  REQUIRE(m.classify(std::vector<double>{1.0}) == 1);
  REQUIRE(m.classify(std::vector<double>{-1.01}) == 0);

  std::vector<double> x{0.2};
  double p = exact_pa(m, x, Sigma(0.5), 1).value();
  REQUIRE(p == Catch::Approx(0.9370031723758459).margin(1e-12));
  REQUIRE(exact_pa(m, x, Sigma(0.5), 0).value() == Catch::Approx(1.0 - p).margin(1e-15));
  REQUIRE(exact_pa(m, x, Sigma(0.01), 1).value() >= 1.0 - 1e-12);
}

TEST_CASE("ball model beyond dimension 1 has no closed form") {
  BallModel m({0.0, 0.0}, 1.0, 1, 0);
  std::vector<double> x{0.1, 0.1};
  REQUIRE_THROWS_AS(exact_pa(m, x, Sigma(0.5), 1), std::invalid_argument);
  REQUIRE_THROWS_WITH(exact_pa(m, x, Sigma(0.5), 1),
                      Catch::Matchers::ContainsSubstring("brute_force_pa"));
}

TEST_CASE("composite model applies first matching region, then the default") {
  std::vector<Region> regions;
  regions.push_back({Region::Kind::ball, {0.0}, 0.5, {}, 0.0, 2});
  regions.push_back({Region::Kind::ball, {0.0}, 2.0, {}, 0.0, 1});
  regions.push_back({Region::Kind::halfspace, {}, 0.0, {1.0}, -3.0, 0});
  CompositeModel m(1, 0, regions);
  REQUIRE(m.num_classes() == 3);
  REQUIRE(m.classify(std::vector<double>{0.2}) == 2);   // inner ball shadows outer
  REQUIRE(m.classify(std::vector<double>{1.0}) == 1);
  REQUIRE(m.classify(std::vector<double>{5.0}) == 0);
  REQUIRE(m.classify(std::vector<double>{-9.0}) == 0);  // default

  CompositeModel constant(3, 4, {});
  REQUIRE(constant.classify(std::vector<double>{1.0, 2.0, 3.0}) == 4);
  REQUIRE(constant.num_classes() == 5);
  REQUIRE_THROWS_AS(exact_pa(constant, std::vector<double>{0.0, 0.0, 0.0}, Sigma(1.0), 4),
                    std::invalid_argument);
}

TEST_CASE("exact_pa rejects out-of-range labels and gives unused labels mass zero") {
  LinearModel m({1.0}, 0.0, 3, 0);
  std::vector<double> x{0.5};
  REQUIRE_THROWS_AS(exact_pa(m, x, Sigma(0.5), 4), std::invalid_argument);
  REQUIRE_THROWS_AS(exact_pa(m, x, Sigma(0.5), -1), std::invalid_argument);
  REQUIRE(exact_pa(m, x, Sigma(0.5), 2).value() == 0.0);
}

TEST_CASE("sample_class_counts is deterministic and sums to n") {
  LinearModel m({1.0, 0.0}, 0.0, 1, 0);
  std::vector<double> x{0.8, 0.0};
  auto a = sample_class_counts(m, x, Sigma(0.4), 20000, 7);
  auto b = sample_class_counts(m, x, Sigma(0.4), 20000, 7);
  REQUIRE(a == b);
  REQUIRE(a[0] + a[1] == 20000);
  auto c = sample_class_counts(m, x, Sigma(0.4), 20000, 8);
  REQUIRE(a != c);
}

TEST_CASE("sampled frequencies track the closed-form probabilities") {
  LinearModel linear({1.0, 0.0}, 0.0, 1, 0);
  std::vector<double> x{0.8, 0.0};
  auto counts = sample_class_counts(linear, x, Sigma(0.4), 100000, 424242);
  double freq = static_cast<double>(counts[1]) / 100000.0;
  REQUIRE(freq == Catch::Approx(0.9772498680518208).margin(0.005));

  BallModel ball({0.0}, 1.0, 1, 0);
  std::vector<double> bx{0.2};
  auto bcounts = sample_class_counts(ball, bx, Sigma(0.5), 100000, 31415);
  double bfreq = static_cast<double>(bcounts[1]) / 100000.0;
  REQUIRE(bfreq == Catch::Approx(0.9370031723758459).margin(0.005));
}

TEST_CASE("brute_force_pa agrees with exact_pa on closed-form models") {
  LinearModel linear({2.0, 1.0}, -0.3, 1, 0);
  std::vector<double> x{0.4, 0.1};
  double exact = exact_pa(linear, x, Sigma(0.3), 1).value();
  double mc = brute_force_pa(linear, x, Sigma(0.3), 1, 1000000, 5).value();
  REQUIRE(mc == Catch::Approx(exact).margin(0.002));

  BallModel ball({-0.1}, 0.8, 2, 0);
  std::vector<double> bx{0.25};
  double bexact = exact_pa(ball, bx, Sigma(0.4), 2).value();
  double bmc = brute_force_pa(ball, bx, Sigma(0.4), 2, 1000000, 6).value();
  REQUIRE(bmc == Catch::Approx(bexact).margin(0.002));
}

TEST_CASE("forward pass counter accumulates exactly n per sampling call") {
  LinearModel m({1.0}, 0.0, 1, 0);
  std::vector<double> x{0.0};
  reset_forward_passes();
  sample_class_counts(m, x, Sigma(1.0), 1234, 1);
  REQUIRE(forward_passes() == 1234);
  brute_force_pa(m, x, Sigma(1.0), 1, 1000, 1);
  REQUIRE(forward_passes() == 2234);
  exact_pa(m, x, Sigma(1.0), 1);
  REQUIRE(forward_passes() == 2234);
}

TEST_CASE("dimension mismatches are rejected") {
  LinearModel m({1.0, 2.0}, 0.0, 1, 0);
  std::vector<double> wrong{1.0};
  REQUIRE_THROWS_AS(m.classify(wrong), std::invalid_argument);
  REQUIRE_THROWS_AS(sample_class_counts(m, wrong, Sigma(1.0), 10, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(exact_pa(m, wrong, Sigma(1.0), 1), std::invalid_argument);
}

TEST_CASE("model constructors validate their inputs") {
  REQUIRE_THROWS_AS(LinearModel({}, 0.0, 1, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(LinearModel({0.0, 0.0}, 0.0, 1, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(LinearModel({1.0}, 0.0, 1, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(BallModel({0.0}, 0.0, 1, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(BallModel({0.0}, -1.0, 1, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(CompositeModel(0, 0, {}), std::invalid_argument);
  std::vector<Region> bad;
  bad.push_back({Region::Kind::ball, {0.0, 0.0}, 1.0, {}, 0.0, 1});
  REQUIRE_THROWS_AS(CompositeModel(1, 0, bad), std::invalid_argument);
}

TEST_CASE("models round-trip through their JSON configs") {
  auto linear = model_from_json(json::parse(
      R"({"type":"linear","w":[1.0,-2.0],"b":0.5,"positive_label":1,"negative_label":0})"));
  REQUIRE(linear->classify(std::vector<double>{1.0, 0.0}) == 1);
  REQUIRE(linear->classify(std::vector<double>{0.0, 1.0}) == 0);

  auto ball = model_from_json(json::parse(
      R"({"type":"ball","center":[0.0],"rho":1.0,"inside_label":1,"outside_label":0})"));
  REQUIRE(ball->classify(std::vector<double>{0.5}) == 1);
  REQUIRE(ball->classify(std::vector<double>{1.5}) == 0);

  auto composite = model_from_json(json::parse(R"({
    "type": "composite", "dimension": 1, "default_label": 0,
    "regions": [
      {"kind": "ball", "center": [0.0], "rho": 0.5, "label": 2},
      {"kind": "halfspace", "w": [1.0], "b": -2.0, "label": 1}
    ]})"));
  REQUIRE(composite->classify(std::vector<double>{0.1}) == 2);
  REQUIRE(composite->classify(std::vector<double>{3.0}) == 1);
  REQUIRE(composite->classify(std::vector<double>{-1.0}) == 0);
  REQUIRE(composite->num_classes() == 3);
}

TEST_CASE("model config errors are reported as ConfigError") {
  REQUIRE_THROWS_AS(model_from_json(json::parse(R"({"type":"mystery"})")), ConfigError);
  REQUIRE_THROWS_AS(model_from_json(json::parse(R"({"w":[1.0]})")), ConfigError);
  REQUIRE_THROWS_AS(
      model_from_json(json::parse(R"({"type":"linear","w":[],"b":0,"positive_label":1,"negative_label":0})")),
      ConfigError);
  REQUIRE_THROWS_AS(
      model_from_json(json::parse(R"({"type":"linear","w":[1.0],"b":"x","positive_label":1,"negative_label":0})")),
      ConfigError);
  REQUIRE_THROWS_AS(load_model_json("/nonexistent/model.json"), ConfigError);
}

TEST_CASE("dataset loader enforces the record contract") {
  auto good = write_temp("certsmooth_ds_good.jsonl",
                         R"({"id":"a","x":[0.1,0.2],"label":1})"
                         "\n"
                         R"({"id":"b","x":[0.3,0.4],"label":0})"
                         "\n");
  auto points = load_dataset_jsonl(good);
  REQUIRE(points.size() == 2);
  REQUIRE(points[0].id == "a");
  REQUIRE(points[1].x == std::vector<double>{0.3, 0.4});

  auto bad_json = write_temp("certsmooth_ds_bad.jsonl",
                             R"({"id":"a","x":[0.1],"label":1})"
                             "\n"
                             "{not json}\n");
  REQUIRE_THROWS_WITH(load_dataset_jsonl(bad_json), Catch::Matchers::ContainsSubstring(":2:"));

  auto mixed_dim = write_temp("certsmooth_ds_dim.jsonl",
                              R"({"id":"a","x":[0.1],"label":1})"
                              "\n"
                              R"({"id":"b","x":[0.1,0.2],"label":1})"
                              "\n");
  REQUIRE_THROWS_AS(load_dataset_jsonl(mixed_dim), DataError);

  auto dup = write_temp("certsmooth_ds_dup.jsonl",
                        R"({"id":"a","x":[0.1],"label":1})"
                        "\n"
                        R"({"id":"a","x":[0.2],"label":1})"
                        "\n");
  REQUIRE_THROWS_WITH(load_dataset_jsonl(dup), Catch::Matchers::ContainsSubstring("duplicate"));

  auto neg = write_temp("certsmooth_ds_neg.jsonl",
                        R"({"id":"a","x":[0.1],"label":-1})"
                        "\n");
  REQUIRE_THROWS_AS(load_dataset_jsonl(neg), DataError);

  auto empty = write_temp("certsmooth_ds_empty.jsonl", "");
  REQUIRE_THROWS_AS(load_dataset_jsonl(empty), DataError);
  REQUIRE_THROWS_AS(load_dataset_jsonl("/nonexistent/data.jsonl"), DataError);
}
