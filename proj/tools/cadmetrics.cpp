// cadmetrics command-line tool.
//
// Exit codes: 0 success, 1 usage error (bad arguments, config or input that
// cannot be used), 2 I/O error (unreadable input, unwritable output, network).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "cadmetrics/corpus.hpp"
#include "cadmetrics/eval.hpp"
#include "cadmetrics/harness.hpp"
#include "cadmetrics/kernel.hpp"
#include "cadmetrics/mesh_io.hpp"
#include "cadmetrics/metrics.hpp"
#include "cadmetrics/schema.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cadmetrics;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kIo = 2;

struct ExitError : std::runtime_error {
  ExitError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExitError(kIo, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw ExitError(kIo, "cannot write " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ExitError(kIo, "cannot create " + dir.string() + ": " + ec.message());
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? (base / path).lexically_normal() : path;
}

fs::path parent_or_dot(const std::string& path) {
  const auto dir = fs::path(path).parent_path();
  return dir.empty() ? fs::path(".") : dir;
}

// Sequence argument: a file path, or inline JSON when it starts with '{'.
std::string sequence_text(const std::string& arg) { return !arg.empty() && arg.front() == '{' ? arg : read_file(arg); }

struct Options {
  std::string config_path;
  int jobs = 0;
  ToolConfig config;

  void load() {
    if (config_path.empty()) return;
    try {
      config = parse_config(read_file(config_path));
    } catch (const ConfigError& e) {
      throw ExitError(kUsage, config_path + ": " + e.what());
    }
  }
  int effective_jobs() const { return jobs > 0 ? jobs : config.jobs; }
};

template <class F>
std::vector<nlohmann::json> read_jsonl(const std::string& path, F&& each) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      each(j, line_no);
      out.push_back(std::move(j));
    } catch (const nlohmann::json::exception& e) {
      throw ExitError(kUsage, path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  const std::string text = sequence_text(path);
  ordered_json out;
  out["file"] = path;
  ordered_json violations = ordered_json::array();
  try {
    for (const auto& v : validate(parse_sequence_unchecked(text))) {
      violations.push_back({{"path", v.path}, {"code", std::string(to_string(v.code))}});
    }
  } catch (const ParseError& e) {
    violations.push_back({{"path", e.path()}, {"code", std::string(to_string(e.kind()))}, {"message", e.what()}});
  }
  out["valid"] = violations.empty();
  out["violations"] = violations;
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_build_mesh(const Options& opt, const std::string& path, const std::string& output) {
  CadSequence seq;
  TriangleMesh mesh;
  try {
    seq = parse_sequence(sequence_text(path));
    mesh = build_model(seq, opt.config.eval.kernel);
  } catch (const ParseError& e) {
    throw ExitError(kUsage, path + ": " + e.what());
  } catch (const KernelError& e) {
    throw ExitError(kUsage, path + ": " + e.what());
  }
  try {
    save_mesh(output, mesh);
  } catch (const MeshIoError& e) {
    throw ExitError(kIo, e.what());
  }
  const auto topo = topology(mesh);
  ordered_json out{{"output", output},
                   {"vertices", topo.vertex_count},
                   {"triangles", topo.face_count},
                   {"watertight", topo.is_watertight},
                   {"euler_characteristic", topo.euler_characteristic},
                   {"components", topo.component_count},
                   {"volume", signed_volume(mesh)}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_eval_pair(const Options& opt, const std::string& pred, const std::string& gt) {
  const auto report = evaluate_pair(sequence_text(pred), sequence_text(gt), opt.config.eval, "pair");
  std::cout << sample_to_jsonl(report);
  return kOk;
}

void write_report(const fs::path& dir, const std::string& stem, const DatasetReport& report, const EvalConfig& config) {
  write_file(dir / (stem + ".json"), report_json(report, config));
  write_file(dir / (stem + ".csv"), report_csv(report));
}

int cmd_eval_dataset(const Options& opt, const std::string& manifest_path, const std::string& out_dir) {
  Manifest manifest;
  try {
    manifest = load_manifest(manifest_path);
  } catch (const ManifestError& e) {
    throw ExitError(e.io() ? kIo : kUsage, e.what());
  }
  const auto report = evaluate_dataset(manifest, opt.config.eval, opt.effective_jobs());
  ensure_dir(out_dir);
  write_file(fs::path(out_dir) / "samples.jsonl", samples_to_jsonl(report.samples));
  write_report(out_dir, "report", report, opt.config.eval);
  std::cout << report_csv(report);
  return kOk;
}

int cmd_common_subset(const Options& opt, const std::vector<std::string>& runs, const std::string& out_dir) {
  std::vector<DatasetReport> reports;
  for (const auto& run : runs) {
    const fs::path p = fs::is_directory(run) ? fs::path(run) / "samples.jsonl" : fs::path(run);
    try {
      reports.push_back(aggregate(samples_from_jsonl(read_file(p.string()))));
    } catch (const nlohmann::json::exception& e) {
      throw ExitError(kUsage, p.string() + ": " + e.what());
    }
  }
  std::vector<DatasetReport> subset;
  try {
    subset = common_subset(reports);
  } catch (const IdUniverseMismatch& e) {
    throw ExitError(kUsage, e.what());
  }
  if (!out_dir.empty()) ensure_dir(out_dir);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (!out_dir.empty()) write_report(out_dir, "run" + std::to_string(i), subset[i], opt.config.eval);
    std::cout << "# " << runs[i] << "\n" << report_csv(subset[i]);
  }
  return kOk;
}

int cmd_corpus_stats(const Options& opt, const std::string& path, const std::string& out_dir,
                     std::optional<std::uint64_t> seed, std::optional<std::int64_t> checkpoint) {
  std::istringstream in(read_file(path));
  CorpusStats stats;
  try {
    const auto docs = read_corpus_jsonl(in);
    stats = corpus_summary(docs, seed.value_or(opt.config.corpus_seed),
                           checkpoint.value_or(opt.config.corpus_checkpoint));
  } catch (const CorpusError& e) {
    throw ExitError(kUsage, path + ": " + e.what());
  }
  if (out_dir.empty()) {
    std::cout << corpus_report_json(stats);
    return kOk;
  }
  ensure_dir(out_dir);
  write_file(fs::path(out_dir) / "corpus_stats.json", corpus_report_json(stats));
  write_file(fs::path(out_dir) / "corpus_histograms.csv", corpus_histogram_csv(stats));
  return kOk;
}

ordered_json template_block() {
  ordered_json t = ordered_json::array();
  for (const auto& info : template_manifest()) {
    t.push_back({{"name", info.name}, {"version", info.version}, {"sha256", info.sha256}});
  }
  return t;
}

struct AuditSink {
  std::unique_ptr<std::ofstream> file;
  std::unique_ptr<AuditLog> log;
  explicit AuditSink(const std::string& path) {
    if (path.empty()) return;
    file = std::make_unique<std::ofstream>(path, std::ios::app);
    if (!*file) throw ExitError(kIo, "cannot open audit log " + path);
    log = std::make_unique<AuditLog>(*file);
  }
};

int harness_exit(const HarnessError& e) {
  const auto k = e.kind();
  return k == HarnessErrorKind::TransportError || k == HarnessErrorKind::Io ? kIo : kUsage;
}

// Input lines: {"id", "json": object | inline text | path, "images": [paths]}.
int cmd_annotate(const Options& opt, const std::string& path, const std::string& output, const std::string& audit_path,
                 bool dry_run) {
  const fs::path base = parent_or_dot(path);
  std::vector<std::pair<std::string, ChatRequest>> requests;
  read_jsonl(path, [&](const nlohmann::json& j, int) {
    const auto id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    const auto& js = j.at("json");
    std::string minimal;
    if (js.is_object()) {
      minimal = js.dump();
    } else {
      const auto s = js.get<std::string>();
      minimal = !s.empty() && s.front() == '{' ? s : read_file(resolve(base, s).string());
    }
    std::vector<std::string> images;
    for (const auto& img : j.value("images", nlohmann::json::array())) {
      images.push_back(resolve(base, img.get<std::string>()).string());
    }
    requests.emplace_back(id, build_annotation_request(minimal, images, opt.config.harness));
  });

  std::ostringstream out;
  if (dry_run) {
    for (const auto& [id, req] : requests) out << to_wire_json(req) << "\n";
  } else {
    AuditSink audit(audit_path);
    ChatClient client(opt.config.endpoint, RetryPolicy{}, audit.log.get());
    for (const auto& [id, req] : requests) {
      ordered_json rec{{"id", id}, {"model", req.model_id}, {"template_version", std::string(kTemplateVersion)}};
      rec["description"] = client.complete(req);
      out << rec.dump() << "\n";
    }
  }
  if (output.empty()) {
    std::cout << out.str();
  } else {
    write_file(output, out.str());
  }
  return kOk;
}

// Input lines: {"id", "criterion", "desc_a", "desc_b", "source_a"?, "source_b"?,
// "images"?, "json"?}.
int cmd_judge(const Options& opt, const std::string& path, const std::string& out_dir, const std::string& audit_path,
              bool dry_run) {
  const fs::path base = parent_or_dot(path);
  std::vector<JudgeTask> tasks;
  read_jsonl(path, [&](const nlohmann::json& j, int line_no) {
    JudgeTask t;
    t.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    const auto c = criterion_from_string(j.at("criterion").get<std::string>());
    if (!c) throw ExitError(kUsage, path + " line " + std::to_string(line_no) + ": unknown criterion");
    t.criterion = *c;
    t.desc_a = j.at("desc_a").get<std::string>();
    t.desc_b = j.at("desc_b").get<std::string>();
    t.source_a = j.value("source_a", "a");
    t.source_b = j.value("source_b", "b");
    for (const auto& img : j.value("images", nlohmann::json::array())) {
      t.images.push_back(resolve(base, img.get<std::string>()).string());
    }
    if (j.contains("json")) t.minimal_json = j["json"].is_object() ? j["json"].dump() : j["json"].get<std::string>();
    tasks.push_back(std::move(t));
  });
  assign_labels(tasks, opt.config.label_seed);

  if (dry_run) {
    for (const auto& t : tasks) std::cout << to_wire_json(build_judge_request(t, opt.config.harness)) << "\n";
    return kOk;
  }
  AuditSink audit(audit_path);
  const auto run = run_judging(tasks, opt.config.endpoint, RetryPolicy{}, opt.config.harness, opt.config.in_flight,
                               audit.log.get());

  std::ostringstream verdicts;
  std::map<Criterion, std::vector<JudgeVerdict>> by_criterion;
  std::map<std::string, bool> a_first;
  for (const auto& t : tasks) a_first[t.id] = t.a_first;
  for (const auto& v : run.verdicts) {
    ordered_json rec{{"id", v.task_id},
                     {"criterion", std::string(to_string(v.criterion))},
                     {"a_first", a_first[v.task_id]},
                     {"raw_response", v.raw_response},
                     {"parsed", static_cast<int>(v.parsed)},
                     {"winner_source", v.winner_source}};
    verdicts << rec.dump() << "\n";
    by_criterion[v.criterion].push_back(v);
  }
  ordered_json summary;
  summary["metadata"] = {{"judge_model", opt.config.harness.judge_model},
                         {"label_seed", opt.config.label_seed},
                         {"verdict_digits", "1 first, 2 second, 0 tie"},
                         {"templates", template_block()}};
  ordered_json crit = ordered_json::object();
  for (const auto& [c, vs] : by_criterion) {
    const auto s = aggregate_verdicts(vs);
    crit[std::string(to_string(c))] = {{"total", s.total},         {"wins_a", s.wins_a},
                                       {"wins_b", s.wins_b},       {"ties", s.ties},
                                       {"win_rate_a", s.win_rate_a}, {"win_rate_b", s.win_rate_b},
                                       {"tie_rate", s.tie_rate}};
  }
  summary["criteria"] = crit;
  summary["dropped"] = run.dropped;

  if (out_dir.empty()) {
    std::cout << summary.dump(2) << "\n";
  } else {
    ensure_dir(out_dir);
    write_file(fs::path(out_dir) / "verdicts.jsonl", verdicts.str());
    write_file(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
  }
  return kOk;
}

std::string config_help() {
  std::ostringstream out;
  out << "Config file: one 'key = value' per line, '#' starts a comment. Keys:\n";
  for (const auto& [k, d] : config_keys()) out << "  " << k << ": " << d << "\n";
  out << "The API key is read only from the environment variable named by api_key_env (default "
      << kApiKeyEnv << ").\n";
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scoring and corpus tools for text-to-CAD sequences"};
  app.footer(config_help());
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "key = value config file");

  std::string a, b, output, audit;
  std::vector<std::string> runs;
  bool dry_run = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> checkpoint;

  auto* validate_cmd = app.add_subcommand("validate", "Report schema violations of a sequence file");
  validate_cmd->add_option("json", a, "sequence JSON")->required();

  auto* build_cmd = app.add_subcommand("build-mesh", "Build a sequence into an STL or OBJ mesh");
  build_cmd->add_option("json", a, "sequence JSON")->required();
  build_cmd->add_option("-o,--output", output, "output .stl or .obj")->required();

  auto* pair_cmd = app.add_subcommand("eval-pair", "Score one prediction against its ground truth");
  pair_cmd->add_option("pred", a, "predicted sequence")->required();
  pair_cmd->add_option("gt", b, "ground-truth sequence")->required();

  auto* dataset_cmd = app.add_subcommand("eval-dataset", "Score every entry of a JSON-lines manifest");
  dataset_cmd->add_option("manifest", a, "manifest JSON-lines")->required();
  dataset_cmd->add_option("-o,--output", output, "report directory")->required();
  dataset_cmd->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* subset_cmd = app.add_subcommand("common-subset", "Recompute runs on their common valid samples");
  subset_cmd->add_option("runs", runs, "report directories or samples.jsonl files")->required();
  subset_cmd->add_option("-o,--output", output, "directory for per-run reports");

  auto* corpus_cmd = app.add_subcommand("corpus-stats", "Word, vocabulary and number statistics of annotations");
  corpus_cmd->add_option("jsonl", a, "one {\"id\", \"text\"} object per line")->required();
  corpus_cmd->add_option("-o,--output", output, "report directory (stdout when omitted)");
  corpus_cmd->add_option("--seed", seed, "shuffle seed");
  corpus_cmd->add_option("--checkpoint", checkpoint, "tokens between curve points")->check(CLI::PositiveNumber);

  auto* annotate_cmd = app.add_subcommand("annotate", "Request descriptions for sequences and renders");
  annotate_cmd->add_option("manifest", a, "JSON-lines of {id, json, images}")->required();
  annotate_cmd->add_option("-o,--output", output, "output JSON-lines (stdout when omitted)");
  annotate_cmd->add_option("--audit", audit, "append request audit records here");
  annotate_cmd->add_flag("--dry-run", dry_run, "print request bodies without sending");

  auto* judge_cmd = app.add_subcommand("judge", "Pairwise judge tournament over description pairs");
  judge_cmd->add_option("pairs", a, "JSON-lines of judge tasks")->required();
  judge_cmd->add_option("-o,--output", output, "output directory (stdout summary when omitted)");
  judge_cmd->add_option("--audit", audit, "append request audit records here");
  judge_cmd->add_flag("--dry-run", dry_run, "print request bodies without sending");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    opt.load();
    if (validate_cmd->parsed()) return cmd_validate(a);
    if (build_cmd->parsed()) return cmd_build_mesh(opt, a, output);
    if (pair_cmd->parsed()) return cmd_eval_pair(opt, a, b);
    if (dataset_cmd->parsed()) return cmd_eval_dataset(opt, a, output);
    if (subset_cmd->parsed()) return cmd_common_subset(opt, runs, output);
    if (corpus_cmd->parsed()) return cmd_corpus_stats(opt, a, output, seed, checkpoint);
    if (annotate_cmd->parsed()) return cmd_annotate(opt, a, output, audit, dry_run);
    if (judge_cmd->parsed()) return cmd_judge(opt, a, output, audit, dry_run);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const HarnessError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return harness_exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
