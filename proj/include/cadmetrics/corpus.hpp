#pragma once

// Annotation-corpus statistics: tokenization, word counts, digit lengths of
// numbers, and vocabulary growth over a shuffled token stream.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cadmetrics {

struct AnnotationDoc {
  std::string id;
  std::string text;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Human-readable tokenizer rule, recorded in every stats report.
inline constexpr std::string_view kTokenizerRule =
    "lowercase ASCII; split on whitespace and punctuation; a '.' between two digits stays inside the token; "
    "bytes >= 0x80 count as word characters";

/// Lowercased word tokens; "5.25" stays one token.
std::vector<std::string> tokenize(std::string_view text);

/// Digit count of every maximal [+-]?digits(.digits)? match.
std::vector<int> numeric_digit_lengths(std::string_view text);

inline constexpr std::int64_t kDefaultCheckpoint = 10000;

/// (cumulative tokens, distinct tokens) every `checkpoint` tokens and at the
/// end of the stream; documents are visited in a seeded shuffled order.
std::vector<std::pair<std::int64_t, std::int64_t>> vocabulary_growth(const std::vector<AnnotationDoc>& corpus,
                                                                     std::uint64_t seed,
                                                                     std::int64_t checkpoint = kDefaultCheckpoint);

struct DocStats {
  std::string id;
  std::int64_t word_count = 0;
  std::int64_t unique_words = 0;
  std::vector<int> numeric_digit_lengths;
};

DocStats document_stats(const AnnotationDoc& doc);

struct CorpusStats {
  std::vector<DocStats> per_doc;
  std::vector<std::pair<std::int64_t, std::int64_t>> vocab_growth;
  std::uint64_t seed = 0;
  std::int64_t checkpoint = kDefaultCheckpoint;
};

CorpusStats corpus_summary(const std::vector<AnnotationDoc>& corpus, std::uint64_t seed = 0,
                           std::int64_t checkpoint = kDefaultCheckpoint);

/// One {"id": ..., "text": ...} object per nonblank line.
std::vector<AnnotationDoc> read_corpus_jsonl(std::istream& in);

/// value -> count for word counts, unique-word counts and digit lengths.
struct CorpusHistograms {
  std::map<std::int64_t, std::int64_t> word_count;
  std::map<std::int64_t, std::int64_t> unique_words;
  std::map<std::int64_t, std::int64_t> digit_length;
};
CorpusHistograms histograms(const CorpusStats& stats);

/// JSON report (pretty-printed) and CSV table with columns metric,value,count.
std::string corpus_report_json(const CorpusStats& stats);
std::string corpus_histogram_csv(const CorpusStats& stats);

}  // namespace cadmetrics
