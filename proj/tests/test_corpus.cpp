#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "curricula/corpus.hpp"
#include "support/textgen.hpp"

using namespace curricula;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() /
             ("curricula_corpus_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

fs::path write_lines(const fs::path& dir, const std::string& name,
                     const std::vector<std::string>& lines) {
  auto path = dir / name;
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
  return path;
}

Corpus synthetic_corpus(std::size_t per_source, std::uint64_t seed) {
  testsupport::TextGen gen(seed);
  Corpus corpus;
  const char* tags[] = {"casual", "formal", "mixed"};
  double lo[] = {0.0, 0.5, 0.0};
  double hi[] = {0.4, 1.0, 1.0};
  std::uint32_t id = 0;
  for (int s = 0; s < 3; ++s) {
    for (const auto& text : gen.lines(per_source, lo[s], hi[s])) {
      SentenceRecord rec;
      rec.id = id++;
      rec.text = text;
      rec.source = tags[s];
      rec.token_count = static_cast<std::uint32_t>(text.size());  // proxy
      corpus.sentences.push_back(std::move(rec));
    }
  }
  return corpus;
}

}  // namespace

TEST_CASE("ingest keeps non-whitespace lines in file order") {
  auto dir = temp_dir();
  auto path = write_lines(dir, "toy.txt", {"hello", "", "\t", "bye"});
  Corpus corpus = ingest({{path, "toy"}});
  REQUIRE(corpus.size() == 2);
  CHECK(corpus.sentences[0].text == "hello");
  CHECK(corpus.sentences[0].source == "toy");
  CHECK(corpus.sentences[0].id == 0);
  CHECK(corpus.sentences[1].text == "bye");
  CHECK(corpus.sentences[1].id == 1);
  CHECK(corpus.ingest_stats.lines_total == 4);
  CHECK(corpus.ingest_stats.lines_dropped == 2);
}

TEST_CASE("ingest aggregates two files under one tag") {
  auto dir = temp_dir();
  auto a = write_lines(dir, "a.txt", {"one", "two"});
  auto b = write_lines(dir, "b.txt", {"three"});
  Corpus corpus = ingest({{a, "story"}, {b, "story"}});
  REQUIRE(corpus.size() == 3);
  CHECK(corpus.sentences[2].text == "three");
  auto summary = corpus.source_summary();
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].first == "story");
  CHECK(summary[0].second.sentences == 3);
}

TEST_CASE("ingest errors and warnings") {
  auto dir = temp_dir();
  CHECK_THROWS_AS(ingest({{dir / "missing.txt", "x"}}), DataError);
  CHECK_THROWS_WITH(ingest({{dir / "missing.txt", "x"}}),
                    Catch::Contains("missing.txt"));
  auto empty = write_lines(dir, "empty.txt", {"", "  "});
  Corpus corpus = ingest({{empty, "x"}, {write_lines(dir, "ok.txt", {"hi"}), "x"}});
  CHECK(corpus.size() == 1);
  REQUIRE(corpus.ingest_stats.warnings.size() == 1);
  CHECK_THROWS_AS(ingest({{empty, ""}}), ConfigError);
}

TEST_CASE("ingest is lossless modulo dropped whitespace lines") {
  auto dir = temp_dir();
  testsupport::TextGen gen(8);
  auto lines = gen.lines(200, 0.0, 1.0);
  lines.insert(lines.begin() + 50, "   ");
  lines.insert(lines.begin() + 100, "");
  auto path = write_lines(dir, "loss.txt", lines);
  Corpus corpus = ingest({{path, "t"}});
  CHECK(corpus.size() + corpus.ingest_stats.lines_dropped ==
        corpus.ingest_stats.lines_total);
  CHECK(corpus.ingest_stats.lines_total == lines.size());
}

TEST_CASE("summarize proportions") {
  Corpus corpus;
  for (int i = 0; i < 30; ++i) {
    corpus.sentences.push_back(
        {static_cast<std::uint32_t>(i), "t", "a", 2});
  }
  for (int i = 30; i < 100; ++i) {
    corpus.sentences.push_back(
        {static_cast<std::uint32_t>(i), "t", "b", 2});
  }
  auto rows = summarize(corpus);
  REQUIRE(rows.size() == 3);  // a, b, total
  CHECK(rows[0].sentence_prop == Approx(0.3));
  CHECK(rows[1].sentence_prop == Approx(0.7));
  double sent_sum = rows[0].sentence_prop + rows[1].sentence_prop;
  double tok_sum = rows[0].token_prop + rows[1].token_prop;
  CHECK(sent_sum == Approx(1.0).margin(1e-9));
  CHECK(tok_sum == Approx(1.0).margin(1e-9));
  CHECK(rows[2].source == "total");
  CHECK(rows[2].sentences == 100);
}

TEST_CASE("summarize single source and empty corpus") {
  Corpus corpus;
  corpus.sentences.push_back({0, "x", "only", 3});
  auto rows = summarize(corpus);
  CHECK(rows[0].sentence_prop == 1.0);
  CHECK(rows[0].token_prop == 1.0);
  Corpus empty;
  CHECK_THROWS_WITH(summarize(empty), Catch::Contains("empty corpus"));
}

TEST_CASE("split_metasets deals equal sentences evenly") {
  Corpus corpus;
  for (int i = 0; i < 100; ++i) {
    corpus.sentences.push_back({static_cast<std::uint32_t>(i), "s", "src", 7});
  }
  auto assignment = split_metasets(corpus, 5, 42);
  for (const auto& st : assignment.per_metaset) {
    CHECK(st.sentences == 20);
    CHECK(st.tokens == 140);
  }
}

TEST_CASE("split_metasets is a deterministic partition") {
  Corpus corpus = synthetic_corpus(300, 21);
  auto a = split_metasets(corpus, 5, 42);
  auto b = split_metasets(corpus, 5, 42);
  CHECK(a.assignment == b.assignment);
  auto c = split_metasets(corpus, 5, 43);
  CHECK(a.assignment != c.assignment);

  // Partition: every id assigned exactly once (vector covers all ids by
  // construction; check the per-metaset counts add up).
  std::uint64_t total = 0;
  for (const auto& st : a.per_metaset) total += st.sentences;
  CHECK(total == corpus.size());
}

TEST_CASE("split_metasets balances tokens and stratifies sources") {
  Corpus corpus = synthetic_corpus(400, 33);
  double tolerance = 0.02;
  auto assignment = split_metasets(corpus, 5, 7, tolerance);

  std::uint64_t total_tokens = corpus.total_tokens();
  double token_target = static_cast<double>(total_tokens) / 5;
  double sentence_target = static_cast<double>(corpus.size()) / 5;
  for (const auto& st : assignment.per_metaset) {
    CHECK(std::abs(st.tokens - token_target) <= tolerance * token_target);
    CHECK(std::abs(st.sentences - sentence_target) <=
          tolerance * sentence_target);
  }

  // Stratification: per-metaset source mix within 2x tolerance of corpus mix.
  std::map<std::string, double> corpus_mix;
  for (const auto& s : corpus.sentences) corpus_mix[s.source] += 1.0;
  for (auto& [tag, v] : corpus_mix) v /= static_cast<double>(corpus.size());
  for (std::uint32_t m = 0; m < 5; ++m) {
    std::map<std::string, double> mix;
    double count = 0;
    for (const auto& s : corpus.sentences) {
      if (assignment.assignment[s.id] == m) {
        mix[s.source] += 1.0;
        count += 1.0;
      }
    }
    for (auto& [tag, v] : mix) {
      v /= count;
      CHECK(std::abs(v - corpus_mix[tag]) <= 2 * tolerance + 1e-9);
    }
  }
}

TEST_CASE("split_metasets input validation") {
  Corpus corpus;
  corpus.sentences.push_back({0, "a", "s", 1});
  CHECK_THROWS_AS(split_metasets(corpus, 1, 0), ConfigError);
  CHECK_THROWS_AS(split_metasets(corpus, 2, 0), DataError);
}

TEST_CASE("split_metasets reports unachievable tolerance") {
  Corpus corpus;
  // One sentence holds nearly all tokens; a 2-way even token split cannot
  // exist.
  corpus.sentences.push_back({0, "giant", "s", 10000});
  for (int i = 1; i < 10; ++i) {
    corpus.sentences.push_back({static_cast<std::uint32_t>(i), "w", "s", 1});
  }
  CHECK_THROWS_WITH(split_metasets(corpus, 2, 0, 0.02),
                    Catch::Contains("best deviation"));
}

TEST_CASE("corpus tsv round trip") {
  Corpus corpus;
  corpus.sentences.push_back({0, "has\ttab inside", "src", 0});
  corpus.sentences.push_back({1, "plain", "other", 0});
  std::stringstream buf;
  write_corpus_tsv(buf, corpus);
  Corpus loaded = read_corpus_tsv(buf);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.sentences[0].text == "has\ttab inside");
  CHECK(loaded.sentences[0].source == "src");
  CHECK(loaded.sentences[1].text == "plain");
}

TEST_CASE("metaset tsv format") {
  MetasetAssignment assignment;
  assignment.num_metasets = 2;
  assignment.assignment = {0, 1, 0};
  std::stringstream buf;
  write_metasets_tsv(buf, assignment);
  CHECK(buf.str() == "sentence_id\tmetaset\n0\t0\n1\t1\n2\t0\n");
}
