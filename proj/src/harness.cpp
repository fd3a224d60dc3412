#include "cadmetrics/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "prompts_data.hpp"

namespace cadmetrics {

using nlohmann::ordered_json;

std::string_view to_string(HarnessErrorKind kind) {
  switch (kind) {
    case HarnessErrorKind::TooManyImages: return "TooManyImages";
    case HarnessErrorKind::InvalidRequest: return "InvalidRequest";
    case HarnessErrorKind::UnparseableVerdict: return "UnparseableVerdict";
    case HarnessErrorKind::AuthError: return "AuthError";
    case HarnessErrorKind::RateLimited: return "RateLimited";
    case HarnessErrorKind::TransportError: return "TransportError";
    case HarnessErrorKind::ProviderError: return "ProviderError";
    case HarnessErrorKind::EmptyInput: return "EmptyInput";
    case HarnessErrorKind::MixedCriteria: return "MixedCriteria";
    case HarnessErrorKind::Io: return "Io";
  }
  return "Unknown";
}

HarnessError::HarnessError(HarnessErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

// ---------------------------------------------------------------------------
// Templates and encodings

std::string_view prompt_template(std::string_view name) {
  for (std::size_t i = 0; i < detail::kEmbeddedTemplateCount; ++i) {
    if (detail::kEmbeddedTemplates[i].name == name) return detail::kEmbeddedTemplates[i].text;
  }
  throw HarnessError(HarnessErrorKind::InvalidRequest, "no template named " + std::string(name));
}

std::vector<TemplateInfo> template_manifest() {
  std::vector<TemplateInfo> out;
  for (std::size_t i = 0; i < detail::kEmbeddedTemplateCount; ++i) {
    const auto& t = detail::kEmbeddedTemplates[i];
    out.push_back({std::string(t.name), std::string(kTemplateVersion), sha256_hex(t.text)});
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string base64_encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

namespace {

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HarnessError(HarnessErrorKind::Io, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string mime_for(const std::string& path) {
  const auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "webp") return "image/webp";
  if (ext == "gif") return "image/gif";
  return "image/png";
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

ContentPart ContentPart::from_text(std::string text) {
  ContentPart p;
  p.kind = Kind::Text;
  p.text = std::move(text);
  return p;
}

ContentPart ContentPart::from_image_path(std::string path) {
  ContentPart p;
  p.kind = Kind::Image;
  p.mime_type = mime_for(path);
  p.image_path = std::move(path);
  return p;
}

std::string to_wire_json(const ChatRequest& req) {
  ordered_json content = ordered_json::array();
  for (const auto& part : req.user_parts) {
    if (part.kind == ContentPart::Kind::Text) {
      content.push_back({{"type", "text"}, {"text", part.text}});
    } else {
      const std::string payload = part.image_path.empty() ? part.image_base64 : base64_encode(read_file(part.image_path));
      content.push_back(
          {{"type", "image_url"}, {"image_url", {{"url", "data:" + part.mime_type + ";base64," + payload}}}});
    }
  }
  ordered_json body;
  body["model"] = req.model_id;
  body["messages"] = ordered_json::array();
  if (!req.system.empty()) body["messages"].push_back({{"role", "system"}, {"content", req.system}});
  body["messages"].push_back({{"role", "user"}, {"content", std::move(content)}});
  body["temperature"] = req.decoding.temperature;
  body["max_tokens"] = req.decoding.max_tokens;
  return body.dump();
}

ChatRequest build_annotation_request(const std::string& minimal_json, const std::vector<std::string>& images,
                                     const HarnessConfig& config) {
  if (images.empty() || images.size() > kMaxImages) {
    throw HarnessError(HarnessErrorKind::TooManyImages,
                       "annotation needs 1 to 10 images, got " + std::to_string(images.size()));
  }
  ChatRequest req;
  req.system = std::string(prompt_template("annotation_system"));
  req.model_id = config.annotation_model;
  req.decoding = config.decoding;
  req.user_parts.push_back(ContentPart::from_text("```json\n" + minimal_json + "\n```"));
  for (const auto& path : images) req.user_parts.push_back(ContentPart::from_image_path(path));
  req.user_parts.push_back(ContentPart::from_text(std::string(prompt_template("annotation_instruction"))));
  return req;
}

ChatRequest build_generation_request(const std::string& description, const HarnessConfig& config) {
  if (trim(description).empty()) throw HarnessError(HarnessErrorKind::InvalidRequest, "empty description");
  ChatRequest req;
  req.system = replace_all(std::string(prompt_template("generation_system")), "{{SCHEMA}}",
                           trim(prompt_template("cad_schema")));
  req.model_id = config.generation_model;
  req.decoding = config.decoding;
  req.user_parts.push_back(ContentPart::from_text(description));
  return req;
}

// ---------------------------------------------------------------------------
// Judging

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::HumanLikeness: return "human_likeness";
    case Criterion::Clarity: return "clarity";
    case Criterion::VisualFaithfulness: return "visual_faithfulness";
    case Criterion::Completeness: return "completeness";
  }
  return "unknown";
}

std::optional<Criterion> criterion_from_string(std::string_view s) {
  for (Criterion c : {Criterion::HumanLikeness, Criterion::Clarity, Criterion::VisualFaithfulness,
                      Criterion::Completeness}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

void assign_labels(std::vector<JudgeTask>& tasks, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& task : tasks) task.a_first = (rng() >> 63) == 0;
}

ChatRequest build_judge_request(const JudgeTask& task, const HarnessConfig& config) {
  if (task.desc_a.empty() || task.desc_b.empty()) {
    throw HarnessError(HarnessErrorKind::InvalidRequest, "judge task " + task.id + " has an empty description");
  }
  const std::string& first = task.a_first ? task.desc_a : task.desc_b;
  const std::string& second = task.a_first ? task.desc_b : task.desc_a;
  std::string prompt = std::string(prompt_template("judge_" + std::string(to_string(task.criterion))));
  if (task.criterion == Criterion::Completeness) {
    if (task.minimal_json.empty()) {
      throw HarnessError(HarnessErrorKind::InvalidRequest, "completeness task " + task.id + " lacks the JSON");
    }
    prompt = replace_all(std::move(prompt), "{{JSON}}", task.minimal_json);
  }
  prompt = replace_all(std::move(prompt), "{{DESCRIPTION_1}}", first);
  prompt = replace_all(std::move(prompt), "{{DESCRIPTION_2}}", second);

  ChatRequest req;
  req.model_id = config.judge_model;
  req.decoding = config.decoding;
  req.user_parts.push_back(ContentPart::from_text(std::move(prompt)));
  if (task.criterion == Criterion::VisualFaithfulness) {
    if (task.images.empty() || task.images.size() > kMaxImages) {
      throw HarnessError(HarnessErrorKind::TooManyImages, "visual faithfulness needs 1 to 10 images");
    }
    for (const auto& path : task.images) req.user_parts.push_back(ContentPart::from_image_path(path));
  }
  return req;
}

JudgeVerdict parse_judge_response(std::string_view text, const JudgeTask& task) {
  const std::string_view t = trim(text);
  if (t.size() != 1 || t[0] < '0' || t[0] > '2') {
    throw HarnessError(HarnessErrorKind::UnparseableVerdict, "expected 0, 1 or 2, got \"" + std::string(text) + "\"");
  }
  JudgeVerdict v;
  v.task_id = task.id;
  v.criterion = task.criterion;
  v.raw_response = std::string(text);
  v.parsed = static_cast<Verdict>(t[0] - '0');
  if (v.parsed == Verdict::Tie) {
    v.winner = Side::Tie;
    v.winner_source = "tie";
  } else {
    const bool first_won = v.parsed == Verdict::First;
    v.winner = first_won == task.a_first ? Side::A : Side::B;
    v.winner_source = v.winner == Side::A ? task.source_a : task.source_b;
  }
  return v;
}

VerdictSummary aggregate_verdicts(const std::vector<JudgeVerdict>& verdicts) {
  if (verdicts.empty()) throw HarnessError(HarnessErrorKind::EmptyInput, "no verdicts to aggregate");
  VerdictSummary s;
  s.criterion = verdicts.front().criterion;
  for (const auto& v : verdicts) {
    if (v.criterion != s.criterion) throw HarnessError(HarnessErrorKind::MixedCriteria, "verdicts mix criteria");
    switch (v.winner) {
      case Side::A: ++s.wins_a; break;
      case Side::B: ++s.wins_b; break;
      case Side::Tie: ++s.ties; break;
    }
  }
  s.total = static_cast<std::int64_t>(verdicts.size());
  const auto n = static_cast<double>(s.total);
  s.win_rate_a = static_cast<double>(s.wins_a) / n;
  s.win_rate_b = static_cast<double>(s.wins_b) / n;
  s.tie_rate = static_cast<double>(s.ties) / n;
  return s;
}

// ---------------------------------------------------------------------------
// Transport

double RetryPolicy::delay(int retry) const {
  return std::min(max_delay_seconds, base_delay_seconds * std::ldexp(1.0, retry));
}

void AuditLog::record(const std::string& request_hash, const std::string& response_hash, double latency_ms,
                      int status, int attempt) {
  ordered_json j;
  j["request_hash"] = request_hash;
  j["response_hash"] = response_hash;
  j["latency_ms"] = latency_ms;
  j["status"] = status;
  j["attempt"] = attempt;
  const std::string line = j.dump() + "\n";
  std::lock_guard lock(mutex_);
  out_ << line;
  out_.flush();
}

struct ChatClient::Impl {
  explicit Impl(const std::string& base_url) : client(base_url) {}
  httplib::Client client;
};

ChatClient::ChatClient(Endpoint endpoint, RetryPolicy policy, AuditLog* audit)
    : endpoint_(std::move(endpoint)), policy_(std::move(policy)), audit_(audit) {}

ChatClient::~ChatClient() { delete impl_; }

namespace {

std::string credential(const Endpoint& endpoint) {
  const char* key = std::getenv(endpoint.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw HarnessError(HarnessErrorKind::AuthError, "environment variable " + endpoint.api_key_env + " is not set");
  }
  return key;
}

std::string first_choice_text(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
    }
    return text;
  } catch (const nlohmann::json::exception& e) {
    throw HarnessError(HarnessErrorKind::ProviderError, std::string("malformed completion body: ") + e.what());
  }
}

}  // namespace

std::string ChatClient::complete(const ChatRequest& req) {
  const std::string key = credential(endpoint_);
  if (impl_ == nullptr) {
    impl_ = new Impl(endpoint_.base_url);
    const auto whole = static_cast<time_t>(endpoint_.timeout_seconds);
    const auto micros = static_cast<time_t>((endpoint_.timeout_seconds - static_cast<double>(whole)) * 1e6);
    impl_->client.set_connection_timeout(whole, micros);
    impl_->client.set_read_timeout(whole, micros);
    impl_->client.set_write_timeout(whole, micros);
    impl_->client.set_keep_alive(true);
    impl_->client.set_tcp_nodelay(true);
  }
  const std::string body = to_wire_json(req);
  const std::string request_hash = sha256_hex(body);
  const httplib::Headers headers{{"Authorization", "Bearer " + key}};
  const int attempts = std::max(1, policy_.max_attempts);

  for (int attempt = 1;; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    auto res = impl_->client.Post(endpoint_.path, headers, body, "application/json");
    const double latency =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!res) {
      if (audit_) audit_->record(request_hash, "", latency, 0, attempt);
      throw HarnessError(HarnessErrorKind::TransportError, httplib::to_string(res.error()));
    }
    if (audit_) audit_->record(request_hash, sha256_hex(res->body), latency, res->status, attempt);
    const int status = res->status;
    if (status >= 200 && status < 300) return first_choice_text(res->body);
    if (status == 401 || status == 403) {
      throw HarnessError(HarnessErrorKind::AuthError, "endpoint rejected the credential (" + std::to_string(status) + ")");
    }
    const bool retryable = status == 429 || status >= 500;
    if (!retryable) {
      throw HarnessError(HarnessErrorKind::ProviderError, "HTTP " + std::to_string(status) + ": " + res->body);
    }
    if (attempt >= attempts) {
      if (status == 429) {
        throw HarnessError(HarnessErrorKind::RateLimited, "still rate limited after " + std::to_string(attempt) + " attempts");
      }
      throw HarnessError(HarnessErrorKind::ProviderError, "HTTP " + std::to_string(status) + " after " +
                                                               std::to_string(attempt) + " attempts: " + res->body);
    }
    const double wait = policy_.delay(attempt - 1);
    if (policy_.sleep) {
      policy_.sleep(wait);
    } else {
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
  }
}

std::string call_endpoint(const ChatRequest& req, const Endpoint& endpoint, const RetryPolicy& policy,
                          AuditLog* audit) {
  ChatClient client(endpoint, policy, audit);
  return client.complete(req);
}

JudgeRun run_judging(const std::vector<JudgeTask>& tasks, const Endpoint& endpoint, const RetryPolicy& policy,
                     const HarnessConfig& config, int in_flight, AuditLog* audit) {
  credential(endpoint);
  std::vector<std::optional<JudgeVerdict>> results(tasks.size());
  std::vector<std::string> reasons(tasks.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    ChatClient client(endpoint, policy, audit);
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const std::string text = client.complete(build_judge_request(tasks[i], config));
        results[i] = parse_judge_response(text, tasks[i]);
      } catch (const HarnessError& e) {
        reasons[i] = e.what();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, in_flight));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(threads, tasks.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  JudgeRun run;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (results[i]) {
      run.verdicts.push_back(std::move(*results[i]));
    } else {
      run.dropped.push_back(tasks[i].id + ": " + reasons[i]);
    }
  }
  return run;
}

}  // namespace cadmetrics
