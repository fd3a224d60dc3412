#pragma once

// Client side of the annotation, generation and pairwise-judge prompt
// protocols against an OpenAI-compatible chat-completions endpoint.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cadmetrics {

enum class HarnessErrorKind {
  TooManyImages,
  InvalidRequest,
  UnparseableVerdict,
  AuthError,
  RateLimited,
  TransportError,
  ProviderError,
  EmptyInput,
  MixedCriteria,
  Io,
};

std::string_view to_string(HarnessErrorKind kind);

class HarnessError : public std::runtime_error {
 public:
  HarnessError(HarnessErrorKind kind, const std::string& message);
  HarnessErrorKind kind() const { return kind_; }

 private:
  HarnessErrorKind kind_;
};

// ---------------------------------------------------------------------------
// Prompt templates shipped with the library

inline constexpr std::string_view kTemplateVersion = "1";

struct TemplateInfo {
  std::string name;
  std::string version;
  std::string sha256;
};

/// Text of a bundled template ("judge_clarity", "cad_schema", ...).
std::string_view prompt_template(std::string_view name);
std::vector<TemplateInfo> template_manifest();

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);

// ---------------------------------------------------------------------------
// Requests

inline constexpr std::size_t kMaxImages = 10;

struct ContentPart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;
  std::string image_path;    ///< read and encoded at serialization time
  std::string image_base64;  ///< used when image_path is empty
  std::string mime_type = "image/png";

  static ContentPart from_text(std::string text);
  static ContentPart from_image_path(std::string path);
  friend bool operator==(const ContentPart&, const ContentPart&) = default;
};

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 1024;
  friend bool operator==(const Decoding&, const Decoding&) = default;
};

struct ChatRequest {
  std::string system;
  std::vector<ContentPart> user_parts;
  std::string model_id;
  Decoding decoding;
  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct HarnessConfig {
  std::string annotation_model = "gpt-4.1";
  std::string generation_model = "qwen2.5-coder-14b-instruct";
  std::string judge_model = "gemma-3-12b-it";
  Decoding decoding;
};

/// Chat-completions JSON body; images become base64 data URLs.
std::string to_wire_json(const ChatRequest& req);

/// JSON block, 1 to 10 image parts, then the instruction text.
ChatRequest build_annotation_request(const std::string& minimal_json, const std::vector<std::string>& images,
                                     const HarnessConfig& config = {});

/// System message carries the sequence schema; the user message is the description.
ChatRequest build_generation_request(const std::string& description, const HarnessConfig& config = {});

// ---------------------------------------------------------------------------
// Pairwise judging

enum class Criterion { HumanLikeness, Clarity, VisualFaithfulness, Completeness };

std::string_view to_string(Criterion c);
std::optional<Criterion> criterion_from_string(std::string_view s);

struct JudgeTask {
  std::string id;
  Criterion criterion = Criterion::HumanLikeness;
  std::string desc_a;
  std::string desc_b;
  std::string source_a = "a";
  std::string source_b = "b";
  std::vector<std::string> images;  ///< evidence for visual faithfulness
  std::string minimal_json;         ///< evidence for completeness
  bool a_first = true;              ///< label assignment: a is shown as "1"
};

/// Draws every task's label assignment from one generator seeded with `seed`.
void assign_labels(std::vector<JudgeTask>& tasks, std::uint64_t seed);

enum class Verdict { Tie = 0, First = 1, Second = 2 };
enum class Side { A, B, Tie };

struct JudgeVerdict {
  std::string task_id;
  Criterion criterion = Criterion::HumanLikeness;
  std::string raw_response;
  Verdict parsed = Verdict::Tie;
  Side winner = Side::Tie;
  std::string winner_source;  ///< source label of the winner, or "tie"
};

ChatRequest build_judge_request(const JudgeTask& task, const HarnessConfig& config = {});

/// Accepts exactly "0", "1" or "2" after trimming whitespace; "0" is a tie.
JudgeVerdict parse_judge_response(std::string_view text, const JudgeTask& task);

struct VerdictSummary {
  Criterion criterion = Criterion::HumanLikeness;
  std::int64_t total = 0;
  std::int64_t wins_a = 0;
  std::int64_t wins_b = 0;
  std::int64_t ties = 0;
  double win_rate_a = 0.0;
  double win_rate_b = 0.0;
  double tie_rate = 0.0;
};

VerdictSummary aggregate_verdicts(const std::vector<JudgeVerdict>& verdicts);

// ---------------------------------------------------------------------------
// Transport

inline constexpr std::string_view kApiKeyEnv = "CADMETRICS_API_KEY";

struct Endpoint {
  std::string base_url = "http://127.0.0.1:8000";  ///< scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key_env = std::string(kApiKeyEnv);
  double timeout_seconds = 120.0;
};

struct RetryPolicy {
  double base_delay_seconds = 1.0;
  double max_delay_seconds = 60.0;
  int max_attempts = 6;
  /// Waits between attempts; defaults to a real sleep.
  std::function<void(double)> sleep;

  /// Delay before retry number `retry` (0-based): min(cap, base * 2^retry).
  double delay(int retry) const;
};

/// JSON-lines audit trail, one record per HTTP attempt. Thread-safe.
class AuditLog {
 public:
  explicit AuditLog(std::ostream& out) : out_(out) {}
  void record(const std::string& request_hash, const std::string& response_hash, double latency_ms, int status,
              int attempt);

 private:
  std::ostream& out_;
  std::mutex mutex_;
};

/// One connection per instance; not shareable across threads.
class ChatClient {
 public:
  ChatClient(Endpoint endpoint, RetryPolicy policy = {}, AuditLog* audit = nullptr);
  ~ChatClient();
  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  /// Assistant message text of the first choice.
  std::string complete(const ChatRequest& req);

 private:
  struct Impl;
  Endpoint endpoint_;
  RetryPolicy policy_;
  AuditLog* audit_;
  Impl* impl_ = nullptr;
};

std::string call_endpoint(const ChatRequest& req, const Endpoint& endpoint, const RetryPolicy& policy = {},
                          AuditLog* audit = nullptr);

struct JudgeRun {
  std::vector<JudgeVerdict> verdicts;  ///< in task order, dropped tasks omitted
  std::vector<std::string> dropped;    ///< "task_id: reason"
};

/// Judges every task with up to `in_flight` concurrent requests. Unparseable
/// answers and failed calls drop the task and are listed in `dropped`.
JudgeRun run_judging(const std::vector<JudgeTask>& tasks, const Endpoint& endpoint, const RetryPolicy& policy,
                     const HarnessConfig& config, int in_flight, AuditLog* audit = nullptr);

}  // namespace cadmetrics
