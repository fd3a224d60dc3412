#pragma once

// Dataset evaluation: manifests, per-sample scoring, validity accounting,
// aggregate and common-subset reports.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cadmetrics/harness.hpp"
#include "cadmetrics/kernel.hpp"
#include "cadmetrics/similarity.hpp"

namespace cadmetrics {

struct EvalConfig {
  KernelConfig kernel;
  double tau = 0.05;
  ChamferConfig chamfer;
  double dmcd_radius = 0.01;
};

/// Everything the command-line tool can read from a config file.
struct ToolConfig {
  EvalConfig eval;
  HarnessConfig harness;
  Endpoint endpoint;
  int in_flight = 4;
  std::uint64_t label_seed = 0;
  std::uint64_t corpus_seed = 0;
  std::int64_t corpus_checkpoint = 10000;
  int jobs = 1;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` lines; '#' starts a comment; unknown keys are rejected.
ToolConfig parse_config(std::string_view text);
ToolConfig load_config(const std::string& path);

/// Keys accepted by parse_config with a one-line description each.
const std::vector<std::pair<std::string, std::string>>& config_keys();

// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::optional<std::string> prediction;  ///< nullopt when the referenced file is unreadable
  std::optional<std::string> ground_truth;
  std::string prediction_origin;  ///< "inline" or the resolved path
  std::string ground_truth_origin;
  std::optional<std::string> description;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

class ManifestError : public std::runtime_error {
 public:
  ManifestError(bool io, const std::string& message) : std::runtime_error(message), io_(io) {}
  /// True when the manifest itself could not be read.
  bool io() const { return io_; }

 private:
  bool io_;
};

/// JSON-lines of {id, prediction, ground_truth, description?}. A sequence is
/// given inline as an object or as JSON text, otherwise as a path relative to
/// the manifest's directory.
Manifest parse_manifest(std::string_view text, const std::string& base_dir = ".");
Manifest load_manifest(const std::string& path);

// ---------------------------------------------------------------------------

struct SampleReport {
  std::string id;
  bool parse_ok_pred = false;
  bool parse_ok_gt = false;
  bool mesh_ok_pred = false;
  bool mesh_ok_gt = false;
  bool watertight_pred = false;
  bool watertight_gt = false;

  std::map<PrimitiveKind, double> f1;  ///< kinds present in either sequence
  std::optional<double> cd;
  std::optional<double> sege;
  std::optional<double> dangel;
  std::optional<double> sir;
  std::optional<double> fluxee;
  std::optional<double> eecm;
  std::optional<double> dmcd;
  std::optional<double> sd;
  std::vector<std::string> errors;

  /// The prediction parsed and built into a mesh.
  bool valid() const { return parse_ok_pred && mesh_ok_pred; }
  bool watertight_valid() const { return valid() && watertight_pred; }
};

/// Never throws: parse, build and metric failures are recorded in the report.
SampleReport evaluate_pair(const std::optional<std::string>& pred_text, const std::optional<std::string>& gt_text,
                           const EvalConfig& config = {}, std::string id = {});

struct MetricAggregate {
  std::int64_t count = 0;
  std::optional<double> mean;
  std::optional<double> std;  ///< sample standard deviation, needs count >= 2
  std::optional<double> median;
};

/// Metric names in report order.
inline constexpr std::string_view kMetricNames[] = {"line_f1", "arc_f1", "circle_f1", "extrusion_f1",
                                                    "cd",      "sir",    "dangel",    "sege",
                                                    "fluxee",  "eecm",   "dmcd",      "sd"};

/// EECM, DMCD and SD need both meshes watertight.
bool is_watertight_gated(std::string_view metric);

std::optional<double> metric_value(const SampleReport& s, std::string_view metric);

struct DatasetReport {
  std::int64_t total = 0;
  std::int64_t num_valid = 0;
  double ir_percent = 0.0;
  std::int64_t num_watertight = 0;
  double watertight_percent = 0.0;
  std::map<std::string, MetricAggregate> metrics;
  std::vector<SampleReport> samples;  ///< sorted by id
};

/// Deterministic reduce over samples sorted by id.
DatasetReport aggregate(std::vector<SampleReport> samples);

/// Throws ManifestError on duplicate ids (the manifest is otherwise trusted).
DatasetReport evaluate_dataset(const Manifest& manifest, const EvalConfig& config = {}, int jobs = 1);

class IdUniverseMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recomputes every run's aggregates over ids valid in all runs; watertight
/// gated metrics use ids watertight in all runs. IR and watertight percentage
/// keep the full-run values.
std::vector<DatasetReport> common_subset(const std::vector<DatasetReport>& runs);

// ---------------------------------------------------------------------------
// Serialization

std::string sample_to_jsonl(const SampleReport& s);
SampleReport sample_from_json(std::string_view line);
std::string samples_to_jsonl(const std::vector<SampleReport>& samples);
std::vector<SampleReport> samples_from_jsonl(std::string_view text);

/// Pretty JSON with a metadata block listing every configurable constant.
std::string report_json(const DatasetReport& report, const EvalConfig& config);

/// metric,value,std,count in table row order.
std::string report_csv(const DatasetReport& report);

}  // namespace cadmetrics
