#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cadmetrics/eval.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cadmetrics;
using namespace testsupport;

namespace {

SampleReport synthetic(const std::string& id, bool valid, bool watertight, double value) {
  SampleReport s;
  s.id = id;
  s.parse_ok_pred = s.parse_ok_gt = true;
  s.mesh_ok_pred = valid;
  s.mesh_ok_gt = true;
  s.watertight_pred = valid && watertight;
  s.watertight_gt = true;
  if (valid) {
    s.f1[PrimitiveKind::Line] = value;
    s.cd = value;
    s.sir = s.dangel = s.sege = s.fluxee = value;
    if (watertight) s.eecm = s.dmcd = s.sd = value;
  }
  return s;
}

}  // namespace

TEST_CASE("identical cubes score perfectly") {
  const auto s = evaluate_pair(cube_json(), cube_json());
  CHECK(s.valid());
  CHECK(s.watertight_valid());
  CHECK(s.errors.empty());
  CHECK(s.f1.at(PrimitiveKind::Line) == 1.0);
  CHECK(s.f1.at(PrimitiveKind::Extrusion) == 1.0);
  CHECK(s.f1.count(PrimitiveKind::Circle) == 0);
  CHECK(*s.cd == 0.0);
  CHECK(*s.eecm == 1.0);
  CHECK(*s.sir == 0.0);
  CHECK(*s.dangel == 0.0);
  CHECK(*s.fluxee == 0.0);
  CHECK(*s.sege == 0.0);
  CHECK(*s.dmcd == 0.0);
  CHECK(*s.sd == 0.0);
}

TEST_CASE("malformed or missing prediction gives no metrics") {
  for (const auto& pred : {std::optional<std::string>(R"({"parts":[)"), std::optional<std::string>()}) {
    const auto s = evaluate_pair(pred, cube_json());
    CHECK_FALSE(s.parse_ok_pred);
    CHECK_FALSE(s.valid());
    CHECK(s.f1.empty());
    CHECK_FALSE(s.cd);
    CHECK_FALSE(s.sir);
    CHECK_FALSE(s.eecm);
    CHECK_FALSE(s.errors.empty());
  }
  // Missing ground truth still allows the prediction-only metrics.
  const auto s = evaluate_pair(cube_json(), std::nullopt);
  CHECK(s.valid());
  CHECK(s.sir);
  CHECK(s.dangel);
  CHECK(s.fluxee);
  CHECK_FALSE(s.cd);
  CHECK_FALSE(s.eecm);
  CHECK(s.f1.empty());
}

TEST_CASE("Euler characteristic match detects a hole") {
  const auto s = evaluate_pair(cube_json(), one_hole_block_json());
  REQUIRE(s.eecm);
  CHECK(*s.eecm == 0.0);
}

TEST_CASE("dataset with two unusable predictions") {
  const auto r = evaluate_dataset(parse_manifest(join_lines(ten_entry_manifest()), "."));
  CHECK(r.total == 10);
  CHECK(r.num_valid == 8);
  CHECK(r.ir_percent == 20.0);
  CHECK(r.num_watertight == 8);
  CHECK(r.watertight_percent == 100.0);
  CHECK(r.metrics.at("cd").count == 8);
  CHECK(r.metrics.at("circle_f1").count <= 8);
  REQUIRE(r.samples.size() == 10);
  CHECK(std::is_sorted(r.samples.begin(), r.samples.end(), [](auto& a, auto& b) { return a.id < b.id; }));

  const auto csv = report_csv(r);
  CHECK(csv.rfind("metric,value,std,count\nIR (%),20,,10\nNum Valid,8,,\nLine F1,", 0) == 0);
}

TEST_CASE("aggregates match a direct recomputation") {
  const auto r = evaluate_dataset(parse_manifest(join_lines(ten_entry_manifest()), "."));
  for (const auto name : kMetricNames) {
    std::vector<double> v;
    for (const auto& s : r.samples) {
      if (const auto x = metric_value(s, name)) v.push_back(*x);
    }
    const auto& a = r.metrics.at(std::string(name));
    REQUIRE(a.count == static_cast<std::int64_t>(v.size()));
    if (v.empty()) {
      CHECK_FALSE(a.mean);
      continue;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    CHECK(*a.mean == doctest::Approx(mean).epsilon(1e-12));
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    CHECK(*a.median == (n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2));
    if (n < 2) {
      CHECK_FALSE(a.std);
    } else {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      CHECK(*a.std == doctest::Approx(std::sqrt(ss / static_cast<double>(n - 1))).epsilon(1e-9).scale(1e-12));
    }
  }
}

TEST_CASE("dataset report ignores manifest order and job count") {
  auto lines = ten_entry_manifest();
  const auto base = evaluate_dataset(parse_manifest(join_lines(lines), "."));
  const EvalConfig config;
  std::mt19937_64 rng(9);
  std::shuffle(lines.begin(), lines.end(), rng);
  const auto shuffled = evaluate_dataset(parse_manifest(join_lines(lines), "."));
  const auto parallel = evaluate_dataset(parse_manifest(join_lines(lines), "."), config, 8);
  CHECK(report_json(base, config) == report_json(shuffled, config));
  CHECK(report_json(base, config) == report_json(parallel, config));
  CHECK(samples_to_jsonl(base.samples) == samples_to_jsonl(parallel.samples));
  CHECK(report_csv(base) == report_csv(parallel));
}

TEST_CASE("sample JSONL round trip reproduces the report") {
  const auto r = evaluate_dataset(parse_manifest(join_lines(ten_entry_manifest()), "."));
  const auto text = samples_to_jsonl(r.samples);
  const auto back = samples_from_jsonl(text);
  CHECK(samples_to_jsonl(back) == text);
  const EvalConfig config;
  CHECK(report_json(aggregate(back), config) == report_json(r, config));
}

TEST_CASE("manifest parsing") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cadmetrics_manifest_test";
  fs::create_directories(dir);
  std::ofstream(dir / "pred.json") << cube_json();
  const auto m = parse_manifest(R"({"id":"a","prediction":"pred.json","ground_truth":)" + cube_json() +
                                    R"(,"description":"a cube"})",
                                dir.string());
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].prediction == cube_json());
  CHECK(m.entries[0].prediction_origin == (dir / "pred.json").string());
  CHECK(m.entries[0].ground_truth_origin == "inline");
  CHECK(m.entries[0].description == "a cube");

  CHECK_THROWS_AS(parse_manifest("", "."), ManifestError);
  CHECK_THROWS_AS(parse_manifest("not json\n", "."), ManifestError);
  CHECK_THROWS_AS(parse_manifest(manifest_entry("x", "{}", "{}") + "\n" + manifest_entry("x", "{}", "{}"), "."), ManifestError);
  try {
    load_manifest((dir / "absent.jsonl").string());
    FAIL("no error");
  } catch (const ManifestError& e) {
    CHECK(e.io());
  }
}

TEST_CASE("common subset") {
  auto run = [](std::vector<int> valid) {
    std::vector<SampleReport> s;
    for (int id = 1; id <= 4; ++id) {
      const bool ok = std::find(valid.begin(), valid.end(), id) != valid.end();
      s.push_back(synthetic("id" + std::to_string(id), ok, true, id));
    }
    return aggregate(s);
  };
  const auto a = run({1, 2, 3});
  const auto b = run({2, 3, 4});
  const auto out = common_subset({a, b});
  REQUIRE(out.size() == 2);
  for (const auto& r : out) {
    CHECK(r.num_valid == 2);
    CHECK(r.num_watertight == 2);
    CHECK(r.ir_percent == 25.0);
    CHECK(r.metrics.at("cd").count == 2);
    CHECK(*r.metrics.at("cd").mean == 2.5);
    CHECK(*r.metrics.at("eecm").mean == 2.5);
  }

  const EvalConfig config;
  CHECK(report_json(common_subset({a})[0], config) == report_json(a, config));

  const auto none = common_subset({run({1}), run({2})});
  CHECK(none[0].num_valid == 0);
  CHECK(none[0].metrics.at("cd").count == 0);
  CHECK_FALSE(none[0].metrics.at("cd").mean);

  auto other = a;
  other.samples.pop_back();
  CHECK_THROWS_AS(common_subset({a, aggregate(other.samples)}), IdUniverseMismatch);
}

TEST_CASE("watertight gating in common subset") {
  std::vector<SampleReport> x{synthetic("p", true, true, 1), synthetic("q", true, true, 3)};
  std::vector<SampleReport> y{synthetic("p", true, false, 5), synthetic("q", true, true, 7)};
  const auto out = common_subset({aggregate(x), aggregate(y)});
  CHECK(out[0].num_valid == 2);
  CHECK(out[0].num_watertight == 1);
  CHECK(*out[0].metrics.at("cd").mean == 2.0);
  CHECK(*out[0].metrics.at("sd").mean == 3.0);
  CHECK(*out[1].metrics.at("sd").mean == 7.0);
  CHECK(out[1].watertight_percent == 50.0);
}

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\ntau = 0.1\ncd_samples=100  # inline\njudge_model = m\napi_key_env = MY_KEY\n");
  CHECK(c.eval.tau == 0.1);
  CHECK(c.eval.chamfer.samples == 100);
  CHECK(c.harness.judge_model == "m");
  CHECK(c.endpoint.api_key_env == "MY_KEY");
  CHECK_THROWS_AS(parse_config("api_key = secret\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("tau = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("tau = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("jobs = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("tau\n"), ConfigError);
  for (const auto& [key, help] : config_keys()) CHECK((key.find("api_key") != 0 || key == "api_key_env"));
}
