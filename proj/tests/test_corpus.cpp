#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "cadmetrics/corpus.hpp"
#include "doctest.h"

using namespace cadmetrics;

namespace {

// Regex reference for ASCII text: word runs joined by dots that sit between two digits.
std::vector<std::string> regex_tokens(const std::string& text) {
  std::string lower = text;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::regex word(R"((?:[a-z0-9]*[0-9]\.(?=[0-9]))*[a-z0-9]+)");
  std::vector<std::string> out;
  for (std::sregex_iterator it(lower.begin(), lower.end(), word), end; it != end; ++it) out.push_back(it->str());
  return out;
}

std::vector<int> regex_digit_lengths(const std::string& text) {
  static const std::regex number(R"([0-9]+(?:\.[0-9]+)?)");
  std::vector<int> out;
  for (std::sregex_iterator it(text.begin(), text.end(), number), end; it != end; ++it) {
    int d = 0;
    for (char c : it->str()) d += c != '.';
    out.push_back(d);
  }
  return out;
}

std::string random_text(std::mt19937_64& rng, std::size_t n) {
  static const char alphabet[] = "abcXYZ0123456789 .,;-+()\n\t.";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
  return s;
}

std::vector<AnnotationDoc> docs(std::initializer_list<std::string> texts) {
  std::vector<AnnotationDoc> out;
  int i = 0;
  for (const auto& t : texts) out.push_back({"d" + std::to_string(i++), t});
  return out;
}

}  // namespace

TEST_CASE("tokenizer keeps decimals together") {
  CHECK(tokenize("The block is 5.25 mm wide.") ==
        std::vector<std::string>{"the", "block", "is", "5.25", "mm", "wide"});
  CHECK(tokenize("end. 3. Next") == std::vector<std::string>{"end", "3", "next"});
  CHECK(tokenize("a-b,c;D") == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("caf\xc3\xa9 ok") == std::vector<std::string>{"caf\xc3\xa9", "ok"});
}

TEST_CASE("tokenizer agrees with a regex reference on ASCII text") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 2000; ++it) {
    const auto text = random_text(rng, rng() % 60);
    REQUIRE(tokenize(text) == regex_tokens(text));
    REQUIRE(numeric_digit_lengths(text) == regex_digit_lengths(text));
  }
}

TEST_CASE("numeric digit lengths") {
  CHECK(numeric_digit_lengths("The block is 5.25 mm wide.") == std::vector<int>{3});
  CHECK(numeric_digit_lengths("0.123456789012345") == std::vector<int>{16});
  CHECK(numeric_digit_lengths("-12 and +3.5") == std::vector<int>{2, 2});
  CHECK(numeric_digit_lengths("no numbers").empty());
}

TEST_CASE("vocabulary growth checkpoints") {
  const auto one = docs({"a b a"});
  CHECK(vocabulary_growth(one, 0, 3) == std::vector<std::pair<std::int64_t, std::int64_t>>{{3, 2}});
  CHECK(vocabulary_growth(one, 0, 2) == std::vector<std::pair<std::int64_t, std::int64_t>>{{2, 2}, {3, 2}});
  CHECK(vocabulary_growth(one, 0, 1) ==
        std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 1}, {2, 2}, {3, 2}});
  CHECK(vocabulary_growth(docs({""}), 0, 3).empty());
  CHECK_THROWS_AS(vocabulary_growth(one, 0, 0), CorpusError);
}

TEST_CASE("vocabulary growth properties") {
  std::mt19937_64 rng(8);
  std::vector<AnnotationDoc> corpus;
  for (int i = 0; i < 60; ++i) corpus.push_back({"d" + std::to_string(i), random_text(rng, 200)});
  std::set<std::string> all;
  std::int64_t total = 0;
  for (const auto& d : corpus) {
    for (const auto& t : tokenize(d.text)) {
      all.insert(t);
      ++total;
    }
  }
  const auto a = vocabulary_growth(corpus, 1, 50);
  const auto b = vocabulary_growth(corpus, 2, 50);
  CHECK(a.back() == std::make_pair(total, static_cast<std::int64_t>(all.size())));
  CHECK(b.back() == a.back());
  CHECK(a == vocabulary_growth(corpus, 1, 50));
  for (std::size_t i = 1; i < a.size(); ++i) {
    CHECK(a[i].first > a[i - 1].first);
    CHECK(a[i].second >= a[i - 1].second);
    CHECK(a[i].second <= a[i].first);
  }

  // Duplicating the corpus doubles the tokens and leaves the vocabulary alone.
  auto twice = corpus;
  twice.insert(twice.end(), corpus.begin(), corpus.end());
  CHECK(vocabulary_growth(twice, 3, 50).back() == std::make_pair(2 * total, static_cast<std::int64_t>(all.size())));
}

TEST_CASE("per-document stats on hand-counted documents") {
  const auto s = corpus_summary(docs({"The block is 5.25 mm wide.", "Two holes, two holes.", "R 12 x 0.5"}), 0, 4);
  CHECK(s.per_doc[0].word_count == 6);
  CHECK(s.per_doc[0].unique_words == 6);
  CHECK(s.per_doc[1].word_count == 4);
  CHECK(s.per_doc[1].unique_words == 2);
  CHECK(s.per_doc[2].word_count == 4);
  CHECK(s.per_doc[2].numeric_digit_lengths == std::vector<int>{2, 2});
  CHECK(s.vocab_growth.back() == std::make_pair<std::int64_t, std::int64_t>(14, 12));
  for (const auto& d : s.per_doc) CHECK(d.unique_words <= d.word_count);

  const auto h = histograms(s);
  CHECK(h.word_count == std::map<std::int64_t, std::int64_t>{{4, 2}, {6, 1}});
  CHECK(h.digit_length == std::map<std::int64_t, std::int64_t>{{2, 2}, {3, 1}});

  const auto report = corpus_report_json(s);
  CHECK(report.find("\"tokens\": 14") != std::string::npos);
  CHECK(corpus_histogram_csv(s).rfind("metric,value,count\n", 0) == 0);
  CHECK_THROWS_AS(corpus_summary({}), CorpusError);
}

TEST_CASE("corpus JSONL reader") {
  std::istringstream in("{\"id\":\"x\",\"text\":\"hello\"}\n\n{\"id\":\"y\",\"text\":\"world 1\"}\n");
  const auto c = read_corpus_jsonl(in);
  REQUIRE(c.size() == 2);
  CHECK(c[1].id == "y");
  CHECK(c[1].text == "world 1");
  std::istringstream bad("{\"id\":\"x\"}\n");
  CHECK_THROWS_AS(read_corpus_jsonl(bad), CorpusError);
  std::istringstream junk("not json\n");
  CHECK_THROWS_AS(read_corpus_jsonl(junk), CorpusError);
}
