#include "cadmetrics/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "cadmetrics/metrics.hpp"
#include "json.hpp"

namespace cadmetrics {

using nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<std::string> read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Shortest text that parses back to the same double.
std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return value;
}

double parse_positive(std::string_view key, std::string_view text) {
  const double v = parse_number<double>(key, text);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be a positive number");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"relative_chord_tolerance", "arc sagitta bound as a fraction of each profile's bbox diagonal (0.002)"},
      {"absolute_chord_tolerance", "arc sagitta bound in sketch units; overrides the relative bound"},
      {"min_segments_per_circle", "lower bound on segments of a full circle (32)"},
      {"tau", "primitive match threshold for F1 (0.05)"},
      {"cd_samples", "surface samples per mesh for Chamfer distance (8192)"},
      {"cd_seed", "sampling seed for Chamfer distance (0)"},
      {"cd_scale", "factor applied to the reported Chamfer distance (1000)"},
      {"dmcd_radius", "ball radius for mean curvature after unit-diagonal scaling (0.01)"},
      {"jobs", "worker threads for eval-dataset (1)"},
      {"annotation_model", "model id for annotation requests"},
      {"generation_model", "model id for generation requests"},
      {"judge_model", "model id for judge requests"},
      {"temperature", "decoding temperature (0)"},
      {"max_tokens", "decoding token limit (1024)"},
      {"endpoint_url", "scheme://host[:port] of the chat-completions service"},
      {"endpoint_path", "request path (/v1/chat/completions)"},
      {"api_key_env", "name of the environment variable holding the API key"},
      {"timeout_seconds", "per-request timeout (120)"},
      {"in_flight", "concurrent judge requests (4)"},
      {"label_seed", "seed of the judge label assignment (0)"},
      {"corpus_seed", "shuffle seed of the vocabulary growth curve (0)"},
      {"corpus_checkpoint", "tokens between vocabulary growth checkpoints (10000)"},
  };
  return keys;
}

ToolConfig parse_config(std::string_view text) {
  ToolConfig c;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value for " + key);

    if (key == "relative_chord_tolerance") {
      c.eval.kernel.relative_chord_tolerance = parse_positive(key, value);
    } else if (key == "absolute_chord_tolerance") {
      c.eval.kernel.absolute_chord_tolerance = parse_positive(key, value);
    } else if (key == "min_segments_per_circle") {
      c.eval.kernel.min_segments_per_circle = parse_number<int>(key, value);
      if (c.eval.kernel.min_segments_per_circle < 3) throw ConfigError("min_segments_per_circle must be at least 3");
    } else if (key == "tau") {
      c.eval.tau = parse_positive(key, value);
    } else if (key == "cd_samples") {
      c.eval.chamfer.samples = parse_number<std::size_t>(key, value);
      if (c.eval.chamfer.samples == 0) throw ConfigError("cd_samples must be positive");
    } else if (key == "cd_seed") {
      c.eval.chamfer.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "cd_scale") {
      c.eval.chamfer.report_scale = parse_positive(key, value);
    } else if (key == "dmcd_radius") {
      c.eval.dmcd_radius = parse_positive(key, value);
    } else if (key == "jobs") {
      c.jobs = parse_number<int>(key, value);
      if (c.jobs < 1) throw ConfigError("jobs must be at least 1");
    } else if (key == "annotation_model") {
      c.harness.annotation_model = value;
    } else if (key == "generation_model") {
      c.harness.generation_model = value;
    } else if (key == "judge_model") {
      c.harness.judge_model = value;
    } else if (key == "temperature") {
      c.harness.decoding.temperature = parse_number<double>(key, value);
      if (!(c.harness.decoding.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    } else if (key == "max_tokens") {
      c.harness.decoding.max_tokens = parse_number<int>(key, value);
      if (c.harness.decoding.max_tokens < 1) throw ConfigError("max_tokens must be positive");
    } else if (key == "endpoint_url") {
      c.endpoint.base_url = value;
    } else if (key == "endpoint_path") {
      c.endpoint.path = value;
    } else if (key == "api_key_env") {
      c.endpoint.api_key_env = value;
    } else if (key == "timeout_seconds") {
      c.endpoint.timeout_seconds = parse_positive(key, value);
    } else if (key == "in_flight") {
      c.in_flight = parse_number<int>(key, value);
      if (c.in_flight < 1) throw ConfigError("in_flight must be at least 1");
    } else if (key == "label_seed") {
      c.label_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "corpus_seed") {
      c.corpus_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "corpus_checkpoint") {
      c.corpus_checkpoint = parse_number<std::int64_t>(key, value);
      if (c.corpus_checkpoint < 1) throw ConfigError("corpus_checkpoint must be positive");
    } else {
      // Secrets in particular are never read from files.
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

ToolConfig load_config(const std::string& path) {
  const auto text = read_text(path);
  if (!text) throw ManifestError(true, "cannot read config " + path);
  return parse_config(*text);
}

// ---------------------------------------------------------------------------
// Manifest

Manifest parse_manifest(std::string_view text, const std::string& base_dir) {
  Manifest m;
  std::set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ManifestError(false, where + ": " + e.what());
    }
    if (!j.is_object()) throw ManifestError(false, where + ": expected an object");
    for (const char* key : {"id", "prediction", "ground_truth"}) {
      if (!j.contains(key)) throw ManifestError(false, where + ": missing \"" + key + "\"");
    }
    ManifestEntry e;
    e.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    if (!ids.insert(e.id).second) throw ManifestError(false, where + ": duplicate id " + e.id);

    auto resolve = [&](const nlohmann::json& v, std::optional<std::string>& out, std::string& origin) {
      if (v.is_object() || v.is_array()) {
        out = v.dump();
        origin = "inline";
        return;
      }
      if (!v.is_string()) throw ManifestError(false, where + ": sequence must be an object, JSON text or a path");
      const auto s = v.get<std::string>();
      const auto t = trim(s);
      if (!t.empty() && (t.front() == '{' || t.front() == '[')) {
        out = s;
        origin = "inline";
        return;
      }
      std::filesystem::path p(s);
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      origin = p.lexically_normal().string();
      out = read_text(origin);
    };
    resolve(j["prediction"], e.prediction, e.prediction_origin);
    resolve(j["ground_truth"], e.ground_truth, e.ground_truth_origin);
    if (j.contains("description") && j["description"].is_string()) e.description = j["description"].get<std::string>();
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw ManifestError(false, "manifest has no entries");
  return m;
}

Manifest load_manifest(const std::string& path) {
  const auto text = read_text(path);
  if (!text) throw ManifestError(true, "cannot read manifest " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_manifest(*text, dir.empty() ? "." : dir.string());
}

// ---------------------------------------------------------------------------
// Per-sample evaluation

namespace {

template <class F>
void try_metric(SampleReport& s, const char* name, std::optional<double>& slot, F&& f) {
  try {
    const double v = f();
    if (std::isfinite(v)) {
      slot = v;
    } else {
      s.errors.push_back(std::string(name) + ": non-finite value");
    }
  } catch (const std::exception& e) {
    s.errors.push_back(std::string(name) + ": " + e.what());
  }
}

std::optional<CadSequence> parse_side(const std::optional<std::string>& text, const char* side, SampleReport& s) {
  if (!text) {
    s.errors.push_back(std::string(side) + " parse: source unreadable");
    return std::nullopt;
  }
  try {
    return parse_sequence(*text);
  } catch (const std::exception& e) {
    s.errors.push_back(std::string(side) + " parse: " + e.what());
    return std::nullopt;
  }
}

std::optional<TriangleMesh> build_side(const CadSequence& seq, const EvalConfig& config, const char* side,
                                       SampleReport& s) {
  try {
    return build_model(seq, config.kernel);
  } catch (const std::exception& e) {
    s.errors.push_back(std::string(side) + " build: " + e.what());
    return std::nullopt;
  }
}

}  // namespace

SampleReport evaluate_pair(const std::optional<std::string>& pred_text, const std::optional<std::string>& gt_text,
                           const EvalConfig& config, std::string id) {
  SampleReport s;
  s.id = std::move(id);
  const auto pred = parse_side(pred_text, "pred", s);
  const auto gt = parse_side(gt_text, "gt", s);
  s.parse_ok_pred = pred.has_value();
  s.parse_ok_gt = gt.has_value();

  std::optional<TriangleMesh> pm, gm;
  if (pred) pm = build_side(*pred, config, "pred", s);
  if (gt) gm = build_side(*gt, config, "gt", s);
  s.mesh_ok_pred = pm.has_value();
  s.mesh_ok_gt = gm.has_value();
  if (pm) s.watertight_pred = is_watertight(*pm);
  if (gm) s.watertight_gt = is_watertight(*gm);
  if (!s.valid()) return s;

  if (gt) {
    try {
      for (const auto& [kind, r] : f1_per_type(*pred, *gt, config.tau)) s.f1[kind] = r.f1;
    } catch (const std::exception& e) {
      s.errors.push_back(std::string("f1: ") + e.what());
    }
  }
  try_metric(s, "dangel", s.dangel, [&] { return dangling_edge_length(*pm); });
  try_metric(s, "sir", s.sir, [&] { return self_intersection_ratio(*pm); });
  try_metric(s, "fluxee", s.fluxee, [&] { return flux_enclosure_error(*pm); });
  if (!gm) return s;
  try_metric(s, "cd", s.cd, [&] { return normalized_chamfer(*pm, *gm, config.chamfer); });
  try_metric(s, "sege", s.sege, [&] { return segment_error(*pm, *gm); });
  if (!s.watertight_pred || !s.watertight_gt) return s;
  try_metric(s, "eecm", s.eecm, [&] { return static_cast<double>(eecm(*pm, *gm)); });
  try_metric(s, "dmcd", s.dmcd, [&] { return dmcd(*pm, *gm, config.dmcd_radius); });
  try_metric(s, "sd", s.sd, [&] { return sphericity_discrepancy(*pm, *gm); });
  return s;
}

// ---------------------------------------------------------------------------
// Aggregation

bool is_watertight_gated(std::string_view metric) { return metric == "eecm" || metric == "dmcd" || metric == "sd"; }

std::optional<double> metric_value(const SampleReport& s, std::string_view metric) {
  for (PrimitiveKind k : kAllPrimitiveKinds) {
    if (metric == std::string(to_string(k)) + "_f1") {
      const auto it = s.f1.find(k);
      return it == s.f1.end() ? std::nullopt : std::optional<double>(it->second);
    }
  }
  if (metric == "cd") return s.cd;
  if (metric == "sir") return s.sir;
  if (metric == "dangel") return s.dangel;
  if (metric == "sege") return s.sege;
  if (metric == "fluxee") return s.fluxee;
  if (metric == "eecm") return s.eecm;
  if (metric == "dmcd") return s.dmcd;
  if (metric == "sd") return s.sd;
  throw std::invalid_argument("unknown metric " + std::string(metric));
}

namespace {

MetricAggregate summarize(std::vector<double> values) {
  MetricAggregate a;
  a.count = static_cast<std::int64_t>(values.size());
  if (values.empty()) return a;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  a.mean = mean;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    a.std = std::sqrt(ss / (n - 1.0));
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  a.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return a;
}

bool by_id(const SampleReport& a, const SampleReport& b) { return a.id < b.id; }

// `include` decides, per metric, which samples contribute.
template <class Include>
std::map<std::string, MetricAggregate> metric_table(const std::vector<SampleReport>& samples, Include include) {
  std::map<std::string, MetricAggregate> out;
  for (std::string_view name : kMetricNames) {
    std::vector<double> values;
    for (const auto& s : samples) {
      if (!include(s, name)) continue;
      if (const auto v = metric_value(s, name)) values.push_back(*v);
    }
    out[std::string(name)] = summarize(std::move(values));
  }
  return out;
}

}  // namespace

DatasetReport aggregate(std::vector<SampleReport> samples) {
  std::stable_sort(samples.begin(), samples.end(), by_id);
  DatasetReport r;
  r.total = static_cast<std::int64_t>(samples.size());
  for (const auto& s : samples) {
    if (s.valid()) ++r.num_valid;
    if (s.watertight_valid()) ++r.num_watertight;
  }
  if (r.total > 0) r.ir_percent = 100.0 * static_cast<double>(r.total - r.num_valid) / static_cast<double>(r.total);
  if (r.num_valid > 0) {
    r.watertight_percent = 100.0 * static_cast<double>(r.num_watertight) / static_cast<double>(r.num_valid);
  }
  r.metrics = metric_table(samples, [](const SampleReport&, std::string_view) { return true; });
  r.samples = std::move(samples);
  return r;
}

DatasetReport evaluate_dataset(const Manifest& manifest, const EvalConfig& config, int jobs) {
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    if (!ids.insert(e.id).second) throw ManifestError(false, "duplicate id " + e.id);
  }
  const auto& entries = manifest.entries;
  std::vector<SampleReport> samples(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      samples[i] = evaluate_pair(entries[i].prediction, entries[i].ground_truth, config, entries[i].id);
    }
  };
  const auto threads = std::min(static_cast<std::size_t>(std::max(1, jobs)), entries.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return aggregate(std::move(samples));
}

std::vector<DatasetReport> common_subset(const std::vector<DatasetReport>& runs) {
  if (runs.empty()) return {};
  auto id_set = [](const DatasetReport& r) {
    std::set<std::string> s;
    for (const auto& x : r.samples) {
      if (!s.insert(x.id).second) throw IdUniverseMismatch("duplicate id " + x.id + " within one run");
    }
    return s;
  };
  const auto universe = id_set(runs.front());
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (id_set(runs[i]) != universe) {
      throw IdUniverseMismatch("run " + std::to_string(i) + " covers a different set of ids than run 0");
    }
  }

  std::vector<std::unordered_map<std::string, const SampleReport*>> index(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& s : runs[i].samples) index[i][s.id] = &s;
  }
  auto in_all = [&](const std::string& id, auto pred) {
    for (const auto& idx : index) {
      if (!pred(*idx.at(id))) return false;
    }
    return true;
  };

  std::set<std::string> valid_ids, watertight_ids;
  for (const auto& id : universe) {
    if (in_all(id, [](const SampleReport& s) { return s.valid(); })) valid_ids.insert(id);
    if (in_all(id, [](const SampleReport& s) { return s.watertight_valid(); })) watertight_ids.insert(id);
  }
  // Per metric, ids whose value exists in every run.
  std::map<std::string, std::set<std::string>, std::less<>> metric_ids;
  for (std::string_view name : kMetricNames) {
    auto& ids = metric_ids[std::string(name)];
    for (const auto& id : valid_ids) {
      if (in_all(id, [&](const SampleReport& s) { return metric_value(s, name).has_value(); })) ids.insert(id);
    }
  }

  std::vector<DatasetReport> out;
  for (const auto& run : runs) {
    DatasetReport r;
    r.total = run.total;
    r.ir_percent = run.ir_percent;
    r.watertight_percent = run.watertight_percent;
    r.num_valid = static_cast<std::int64_t>(valid_ids.size());
    r.num_watertight = static_cast<std::int64_t>(watertight_ids.size());
    r.samples = run.samples;
    r.metrics = metric_table(r.samples, [&](const SampleReport& s, std::string_view name) {
      return metric_ids.find(name)->second.count(s.id) > 0;
    });
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

ordered_json aggregate_json(const MetricAggregate& a) {
  return {{"count", a.count}, {"mean", optional_json(a.mean)}, {"std", optional_json(a.std)},
          {"median", optional_json(a.median)}};
}

}  // namespace

std::string sample_to_jsonl(const SampleReport& s) {
  ordered_json j;
  j["id"] = s.id;
  j["parse_ok_pred"] = s.parse_ok_pred;
  j["parse_ok_gt"] = s.parse_ok_gt;
  j["mesh_ok_pred"] = s.mesh_ok_pred;
  j["mesh_ok_gt"] = s.mesh_ok_gt;
  j["watertight_pred"] = s.watertight_pred;
  j["watertight_gt"] = s.watertight_gt;
  ordered_json f1 = ordered_json::object();
  for (const auto& [k, v] : s.f1) f1[std::string(to_string(k))] = v;
  j["f1"] = f1;
  j["cd"] = optional_json(s.cd);
  j["sege"] = optional_json(s.sege);
  j["dangel"] = optional_json(s.dangel);
  j["sir"] = optional_json(s.sir);
  j["fluxee"] = optional_json(s.fluxee);
  j["eecm"] = optional_json(s.eecm);
  j["dmcd"] = optional_json(s.dmcd);
  j["sd"] = optional_json(s.sd);
  j["errors"] = s.errors;
  return j.dump() + "\n";
}

SampleReport sample_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  SampleReport s;
  s.id = j.at("id").get<std::string>();
  s.parse_ok_pred = j.at("parse_ok_pred").get<bool>();
  s.parse_ok_gt = j.at("parse_ok_gt").get<bool>();
  s.mesh_ok_pred = j.at("mesh_ok_pred").get<bool>();
  s.mesh_ok_gt = j.at("mesh_ok_gt").get<bool>();
  s.watertight_pred = j.at("watertight_pred").get<bool>();
  s.watertight_gt = j.at("watertight_gt").get<bool>();
  for (const auto& [key, value] : j.at("f1").items()) {
    bool known = false;
    for (PrimitiveKind k : kAllPrimitiveKinds) {
      if (key == to_string(k)) {
        s.f1[k] = value.get<double>();
        known = true;
      }
    }
    if (!known) throw std::invalid_argument("unknown primitive kind " + key);
  }
  s.cd = optional_from(j, "cd");
  s.sege = optional_from(j, "sege");
  s.dangel = optional_from(j, "dangel");
  s.sir = optional_from(j, "sir");
  s.fluxee = optional_from(j, "fluxee");
  s.eecm = optional_from(j, "eecm");
  s.dmcd = optional_from(j, "dmcd");
  s.sd = optional_from(j, "sd");
  if (j.contains("errors")) s.errors = j["errors"].get<std::vector<std::string>>();
  return s;
}

std::string samples_to_jsonl(const std::vector<SampleReport>& samples) {
  std::string out;
  for (const auto& s : samples) out += sample_to_jsonl(s);
  return out;
}

std::vector<SampleReport> samples_from_jsonl(std::string_view text) {
  std::vector<SampleReport> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(sample_from_json(line));
  }
  return out;
}

std::string report_json(const DatasetReport& report, const EvalConfig& config) {
  ordered_json j;
  const auto& k = config.kernel;
  j["metadata"] = {
      {"relative_chord_tolerance", k.relative_chord_tolerance},
      {"absolute_chord_tolerance", k.absolute_chord_tolerance ? ordered_json(*k.absolute_chord_tolerance) : nullptr},
      {"min_segments_per_circle", k.min_segments_per_circle},
      {"tau", config.tau},
      {"cd_samples", config.chamfer.samples},
      {"cd_seed", config.chamfer.seed},
      {"cd_scale", config.chamfer.report_scale},
      {"cd_normalization", "both meshes mapped by the transform taking the ground-truth bbox to [-1,1]^3"},
      {"dmcd_radius", config.dmcd_radius},
      {"dmcd_normalization", "each mesh scaled to unit bbox diagonal"},
      {"sphericity_exponent", "2/3"},
      {"sege_scale", 1.0},
      {"std", "sample (n-1)"},
      {"watertight_gated", {"eecm", "dmcd", "sd"}},
  };
  j["summary"] = {{"total", report.total},
                  {"num_valid", report.num_valid},
                  {"ir_percent", report.ir_percent},
                  {"num_watertight", report.num_watertight},
                  {"watertight_percent", report.watertight_percent}};
  ordered_json metrics = ordered_json::object();
  for (std::string_view name : kMetricNames) {
    metrics[std::string(name)] = aggregate_json(report.metrics.at(std::string(name)));
  }
  j["metrics"] = metrics;
  return j.dump(2) + "\n";
}

std::string report_csv(const DatasetReport& report) {
  std::ostringstream out;
  out << "metric,value,std,count\n";
  auto num = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  auto row = [&](const char* label, const std::string& value, const std::string& std, const std::string& count) {
    out << label << ',' << value << ',' << std << ',' << count << '\n';
  };
  auto mean_row = [&](const char* label, const char* metric) {
    const auto& a = report.metrics.at(metric);
    row(label, num(a.mean), num(a.std), std::to_string(a.count));
  };
  auto median_row = [&](const char* label, const char* metric) {
    const auto& a = report.metrics.at(metric);
    row(label, num(a.median), "", std::to_string(a.count));
  };
  row("IR (%)", format_number(report.ir_percent), "", std::to_string(report.total));
  row("Num Valid", std::to_string(report.num_valid), "", "");
  mean_row("Line F1", "line_f1");
  mean_row("Arc F1", "arc_f1");
  mean_row("Circle F1", "circle_f1");
  mean_row("Extrusion F1", "extrusion_f1");
  median_row("CD median", "cd");
  mean_row("SIR", "sir");
  mean_row("DangEL", "dangel");
  mean_row("SegE", "sege");
  mean_row("FluxEE", "fluxee");
  row("Watertightness (%)", format_number(report.watertight_percent), "", std::to_string(report.num_valid));
  row("Num Watertight", std::to_string(report.num_watertight), "", "");
  mean_row("EECM", "eecm");
  mean_row("DMCD", "dmcd");
  mean_row("SD mean", "sd");
  median_row("SD median", "sd");
  return out.str();
}

}  // namespace cadmetrics
