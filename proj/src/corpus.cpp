#include "cadmetrics/corpus.hpp"

#include <istream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace cadmetrics {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_word(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || is_digit(c);
}

char lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word(text[i])) {
      ++i;
      continue;
    }
    std::string token;
    while (i < text.size()) {
      if (is_word(text[i])) {
        token.push_back(lower(text[i]));
        ++i;
      } else if (text[i] == '.' && !token.empty() && is_digit(token.back()) && i + 1 < text.size() &&
                 is_digit(text[i + 1])) {
        token.push_back('.');
        ++i;
      } else {
        break;
      }
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<int> numeric_digit_lengths(std::string_view text) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    int digits = 0;
    while (i < text.size() && is_digit(text[i])) {
      ++digits;
      ++i;
    }
    if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
      ++i;
      while (i < text.size() && is_digit(text[i])) {
        ++digits;
        ++i;
      }
    }
    out.push_back(digits);
  }
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> vocabulary_growth(const std::vector<AnnotationDoc>& corpus,
                                                                     std::uint64_t seed, std::int64_t checkpoint) {
  if (checkpoint <= 0) throw CorpusError("checkpoint interval must be positive");
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Fisher-Yates with an explicit index draw so the order is portable.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> curve;
  std::unordered_set<std::string> seen;
  std::int64_t count = 0;
  for (std::size_t idx : order) {
    for (auto& token : tokenize(corpus[idx].text)) {
      seen.insert(std::move(token));
      ++count;
      if (count % checkpoint == 0) curve.emplace_back(count, static_cast<std::int64_t>(seen.size()));
    }
  }
  if (count > 0 && (curve.empty() || curve.back().first != count)) {
    curve.emplace_back(count, static_cast<std::int64_t>(seen.size()));
  }
  return curve;
}

DocStats document_stats(const AnnotationDoc& doc) {
  DocStats s;
  s.id = doc.id;
  const auto tokens = tokenize(doc.text);
  s.word_count = static_cast<std::int64_t>(tokens.size());
  s.unique_words = static_cast<std::int64_t>(std::unordered_set<std::string>(tokens.begin(), tokens.end()).size());
  s.numeric_digit_lengths = numeric_digit_lengths(doc.text);
  return s;
}

CorpusStats corpus_summary(const std::vector<AnnotationDoc>& corpus, std::uint64_t seed, std::int64_t checkpoint) {
  if (corpus.empty()) throw CorpusError("corpus is empty");
  CorpusStats stats;
  stats.seed = seed;
  stats.checkpoint = checkpoint;
  stats.per_doc.reserve(corpus.size());
  for (const auto& doc : corpus) stats.per_doc.push_back(document_stats(doc));
  stats.vocab_growth = vocabulary_growth(corpus, seed, checkpoint);
  return stats;
}

std::vector<AnnotationDoc> read_corpus_jsonl(std::istream& in) {
  std::vector<AnnotationDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw CorpusError(where + ": expected an object with a string \"text\"");
    }
    AnnotationDoc doc;
    doc.text = j["text"].get<std::string>();
    if (j.contains("id")) {
      doc.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    } else {
      doc.id = std::to_string(docs.size());
    }
    if (doc.text.find_first_not_of(" \t\r\n") == std::string::npos) throw CorpusError(where + ": empty text");
    docs.push_back(std::move(doc));
  }
  return docs;
}

CorpusHistograms histograms(const CorpusStats& stats) {
  CorpusHistograms h;
  for (const auto& d : stats.per_doc) {
    ++h.word_count[d.word_count];
    ++h.unique_words[d.unique_words];
    for (int len : d.numeric_digit_lengths) ++h.digit_length[len];
  }
  return h;
}

std::string corpus_report_json(const CorpusStats& stats) {
  nlohmann::ordered_json j;
  j["metadata"] = {{"tokenizer", kTokenizerRule},
                   {"numeric_expression", "[+-]?digits(.digits)?, sign and dot not counted"},
                   {"shuffle_seed", stats.seed},
                   {"checkpoint_interval", stats.checkpoint}};
  std::int64_t tokens = 0;
  std::int64_t numbers = 0;
  for (const auto& d : stats.per_doc) {
    tokens += d.word_count;
    numbers += static_cast<std::int64_t>(d.numeric_digit_lengths.size());
  }
  const auto docs = static_cast<std::int64_t>(stats.per_doc.size());
  j["summary"] = {{"documents", docs},
                  {"tokens", tokens},
                  {"vocabulary", stats.vocab_growth.empty() ? 0 : stats.vocab_growth.back().second},
                  {"numeric_expressions", numbers},
                  {"mean_word_count", docs > 0 ? static_cast<double>(tokens) / static_cast<double>(docs) : 0.0}};
  auto& per_doc = j["documents"] = nlohmann::ordered_json::array();
  for (const auto& d : stats.per_doc) {
    per_doc.push_back({{"id", d.id},
                       {"word_count", d.word_count},
                       {"unique_words", d.unique_words},
                       {"numeric_digit_lengths", d.numeric_digit_lengths}});
  }
  auto& growth = j["vocab_growth"] = nlohmann::ordered_json::array();
  for (const auto& [t, v] : stats.vocab_growth) growth.push_back({t, v});
  return j.dump(2) + "\n";
}

std::string corpus_histogram_csv(const CorpusStats& stats) {
  const auto h = histograms(stats);
  std::ostringstream out;
  out << "metric,value,count\n";
  auto emit = [&](const char* name, const std::map<std::int64_t, std::int64_t>& m) {
    for (const auto& [value, count] : m) out << name << ',' << value << ',' << count << '\n';
  };
  emit("word_count", h.word_count);
  emit("unique_words", h.unique_words);
  emit("digit_length", h.digit_length);
  return out.str();
}

}  // namespace cadmetrics
