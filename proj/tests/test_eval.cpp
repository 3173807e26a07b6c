#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "curricula/eval.hpp"
#include "curricula/ngram.hpp"
#include "curricula/rng.hpp"
#include "support/kn_oracle.hpp"

using namespace curricula;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& body) {
  auto path = fs::temp_directory_path() /
              (name + "_" + std::to_string(::getpid()) + ".tsv");
  std::ofstream out(path);
  out << body;
  return path;
}

// Scorer stub with a fixed per-token surprisal table keyed by sequence
// length, for hand-computed effect tests.
struct StubScorer {
  std::map<std::size_t, std::vector<double>> by_length;
  std::vector<double> sequence_surprisals(std::span<const TokenId> ids) const {
    return by_length.at(ids.size());
  }
};

std::vector<TokenSequence> to_sequences(const BpeVocab& vocab,
                                        const std::vector<std::string>& lines) {
  std::vector<TokenSequence> out;
  for (const auto& line : lines) {
    TokenSequence s;
    s.ids = encode(vocab, line);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("pair file parsing") {
  auto path = write_file("pairs",
                         "# comment\n"
                         "agreement\tthe dog barks\tthe dog bark\n"
                         "agreement\tcats sleep\tcats sleeps\n");
  auto pairs = load_minimal_pairs(path);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].phenomenon == "agreement");
  CHECK(pairs[0].good_text == "the dog barks");

  CHECK_THROWS_WITH(load_minimal_pairs(write_file("bad1", "one\ttwo\n")),
                    Catch::Contains("3 columns"));
  CHECK_THROWS_WITH(load_minimal_pairs(write_file("bad2", "p\tsame\tsame\n")),
                    Catch::Contains("identical"));
  CHECK_THROWS_AS(load_minimal_pairs(fs::path("/nonexistent/x.tsv")), DataError);
}

TEST_CASE("uniform scorer ties count as incorrect") {
  BpeVocab vocab = make_byte_vocab();
  NGramTeacher uniform(1, vocab.size());  // no data: every byte 8+ bits
  std::vector<MinimalPair> pairs{{"p", "ab cd", "ab dc"}};  // equal lengths
  auto report = minimal_pair_accuracy(uniform, vocab, pairs);
  CHECK(report.overall.accuracy() == 0.0);
}

TEST_CASE("teacher prefers its attested sentence, matching the oracle") {
  std::vector<std::string> training;
  for (int i = 0; i < 40; ++i) training.push_back("the dog barks");
  training.push_back("a cat naps");
  BpeVocab vocab = train_bpe(training, 300);
  auto data = to_sequences(vocab, training);
  std::vector<double> discounts{0.5, 0.5, 0.5};
  auto teacher =
      NGramTeacher::train(data, 3, DiscountConfig{discounts}, vocab.size());

  std::vector<MinimalPair> pairs{{"agr", "the dog barks", "the dog bark"}};
  auto report = minimal_pair_accuracy(teacher, vocab, pairs);
  CHECK(report.overall.accuracy() == 1.0);

  // Independent check: total bits from the brute-force KN oracle.
  std::vector<std::vector<TokenId>> raw;
  for (const auto& line : training) raw.push_back(encode(vocab, line));
  testsupport::KnOracle oracle(raw, 3, discounts, vocab.size(),
                               BpeVocab::kBosId);
  auto oracle_bits = [&](const std::string& text) {
    auto ids = encode(vocab, text);
    double total = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::vector<TokenId> ctx(ids.begin(),
                               ids.begin() + static_cast<std::ptrdiff_t>(i));
      total += -std::log2(oracle.prob(ctx, ids[i]));
    }
    return total;
  };
  CHECK(oracle_bits("the dog barks") < oracle_bits("the dog bark"));
}

TEST_CASE("accuracy is grouped by phenomenon") {
  std::vector<std::string> training;
  for (int i = 0; i < 30; ++i) training.push_back("we run fast");
  BpeVocab vocab = train_bpe(training, 300);
  auto teacher = NGramTeacher::train(to_sequences(vocab, training), 2,
                                     DiscountConfig{{0.3}}, vocab.size());
  std::vector<MinimalPair> pairs{
      {"attested", "we run fast", "we run fasst"},
      {"attested", "we run fast", "wa run fast"},
      {"hopeless", "zzz qqq", "we run fast"},  // bad side is the attested one
  };
  auto report = minimal_pair_accuracy(teacher, vocab, pairs);
  CHECK(report.per_phenomenon.at("attested").accuracy() == 1.0);
  CHECK(report.per_phenomenon.at("hopeless").accuracy() == 0.0);
  CHECK(report.overall.correct == 2);
  CHECK(report.overall.total == 3);

  std::vector<MinimalPair> empty;
  CHECK_THROWS_AS(minimal_pair_accuracy(teacher, vocab, empty), DataError);

  std::stringstream csv;
  write_pair_report_csv(csv, report);
  CHECK(csv.str().find("overall,2,3,") != std::string::npos);
}

TEST_CASE("monotone transforms of surprisal keep pair decisions") {
  std::vector<std::string> training;
  for (int i = 0; i < 20; ++i) training.push_back("red fox jumps");
  BpeVocab vocab = train_bpe(training, 290);
  auto teacher = NGramTeacher::train(to_sequences(vocab, training), 2,
                                     DiscountConfig{{0.4}}, vocab.size());

  struct ScaledScorer {
    const NGramTeacher* inner;
    std::vector<double> sequence_surprisals(std::span<const TokenId> ids) const {
      auto out = inner->sequence_surprisals(ids);
      for (double& s : out) s = 3.0 * s;  // strictly increasing on totals
      return out;
    }
  };
  std::vector<MinimalPair> pairs{{"p", "red fox jumps", "red fox jusmp"},
                                 {"p", "red fox jumps", "rad fox jumps"}};
  auto base = minimal_pair_accuracy(teacher, vocab, pairs);
  ScaledScorer scaled{&teacher};
  auto transformed = minimal_pair_accuracy(scaled, vocab, pairs);
  CHECK(base.overall.correct == transformed.overall.correct);
}

TEST_CASE("sap item file parsing and offset validation") {
  auto path = write_file(
      "sap",
      "npz\tthe horse raced past the barn fell down\tthe horse that was raced "
      "past the barn fell down\t30\t34\t2\n");
  auto items = load_sap_items(path);
  REQUIRE(items.size() == 1);
  CHECK(items[0].construction == "npz");
  CHECK(items[0].ambiguous_text.substr(items[0].target_char_start,
                                       items[0].target_char_end -
                                           items[0].target_char_start) ==
        "fell");
  CHECK(items[0].spillover == 2);

  CHECK_THROWS_WITH(
      load_sap_items(write_file("sapbad", "c\tshort\tshort b\t10\t99\t2\n")),
      Catch::Contains("offsets"));
}

TEST_CASE("sap item resolution maps chars to tokens") {
  BpeVocab vocab = make_byte_vocab();  // token = byte
  SapItemSpec spec;
  spec.construction = "npz";
  spec.ambiguous_text = "aa bb cc dd ee";
  spec.unambiguous_text = "xx yy cc zz ww";
  spec.target_char_start = 6;  // "cc"
  spec.target_char_end = 8;
  spec.spillover = 1;  // region: "cc dd" / "cc zz"

  auto item = resolve_sap_item(spec, vocab);
  // Bytes 6..11 ("cc dd"); the space between is inside the region.
  CHECK(item.ambiguous_begin == 6);
  CHECK(item.ambiguous_end == 11);
  CHECK(item.unambiguous_begin == 6);
  CHECK(item.unambiguous_end == 11);

  spec.spillover = 0;
  item = resolve_sap_item(spec, vocab);
  CHECK(item.ambiguous_end - item.ambiguous_begin == 2);  // just "cc"

  // Target not present exactly once in the unambiguous text.
  spec.unambiguous_text = "cc and cc again";
  CHECK_THROWS_WITH(resolve_sap_item(spec, vocab), Catch::Contains("occurs 2"));
  spec.unambiguous_text = "nothing here";
  CHECK_THROWS_WITH(resolve_sap_item(spec, vocab), Catch::Contains("occurs 0"));
}

TEST_CASE("a token straddling the region boundary is rejected") {
  // Vocab with one merge "xy": encoding "axyb" -> 'a', "xy", 'b'.
  std::vector<std::string> lines{"xy xy xy xy"};
  BpeVocab vocab = train_bpe(lines, 260);
  SapItemSpec spec;
  spec.construction = "split";
  spec.ambiguous_text = "a xyb xy";
  spec.unambiguous_text = "c x yb";
  spec.target_char_start = 2;  // the "x" of "xyb": token "xy" straddles
  spec.target_char_end = 3;
  spec.spillover = 0;
  CHECK_THROWS_WITH(resolve_sap_item(spec, vocab),
                    Catch::Contains("ambiguously"));
}

TEST_CASE("surprisal effect on hand-built scores") {
  SapItem item;
  item.construction = "c";
  item.ambiguous_ids = {1, 2, 3};
  item.unambiguous_ids = {1, 2, 3, 4};
  item.ambiguous_begin = 1;
  item.ambiguous_end = 2;  // one token
  item.unambiguous_begin = 2;
  item.unambiguous_end = 3;
  StubScorer scorer;
  // Target bigram probability 0.25 ambiguous vs 0.5 unambiguous: 2 bits
  // vs 1 bit at the target, identical elsewhere -> effect exactly 1 bit.
  scorer.by_length[3] = {5.0, 2.0, 1.0};
  scorer.by_length[4] = {5.0, 7.0, 1.0, 1.0};
  CHECK(surprisal_effect(scorer, item) == Approx(1.0));

  // Swapping the sentences negates the effect.
  SapItem swapped;
  swapped.construction = "c";
  swapped.ambiguous_ids = item.unambiguous_ids;
  swapped.unambiguous_ids = item.ambiguous_ids;
  swapped.ambiguous_begin = item.unambiguous_begin;
  swapped.ambiguous_end = item.unambiguous_end;
  swapped.unambiguous_begin = item.ambiguous_begin;
  swapped.unambiguous_end = item.ambiguous_end;
  CHECK(surprisal_effect(scorer, swapped) == Approx(-1.0));

  SapItem broken = item;
  broken.ambiguous_end = 9;
  CHECK_THROWS_WITH(surprisal_effect(scorer, broken),
                    Catch::Contains("out of bounds"));
}

TEST_CASE("identical sentences give zero effect") {
  std::vector<std::string> lines{"the barn door fell shut"};
  BpeVocab vocab = make_byte_vocab();
  auto teacher = NGramTeacher::train(to_sequences(vocab, lines), 2,
                                     DiscountConfig{{0.2}}, vocab.size());
  SapItemSpec spec;
  spec.construction = "same";
  spec.ambiguous_text = "the barn door fell shut";
  spec.unambiguous_text = "the barn door fell shut";
  spec.target_char_start = 14;  // "fell"
  spec.target_char_end = 18;
  spec.spillover = 1;
  auto item = resolve_sap_item(spec, vocab);
  CHECK(surprisal_effect(teacher, item) == Approx(0.0).margin(1e-12));
}

TEST_CASE("aggregate effects per construction") {
  auto report = aggregate_effects({{"b", 1.0}, {"a", 2.0}, {"b", 3.0}});
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].construction == "a");  // sorted by tag
  CHECK(report.rows[0].count == 1);
  CHECK_FALSE(report.rows[0].standard_error.has_value());
  CHECK(report.rows[1].construction == "b");
  CHECK(report.rows[1].mean == Approx(2.0));
  REQUIRE(report.rows[1].standard_error.has_value());
  CHECK(*report.rows[1].standard_error == Approx(1.0));

  CHECK_THROWS_AS(aggregate_effects({}), DataError);
}

TEST_CASE("aggregated mean stays near the generating mean") {
  Rng rng(5);
  std::vector<std::pair<std::string, double>> effects;
  for (int i = 0; i < 100; ++i) {
    effects.emplace_back("mc", 5.0 + (rng.unit() - 0.5) * 2.0);
  }
  auto report = aggregate_effects(effects);
  REQUIRE(report.rows.size() == 1);
  REQUIRE(report.rows[0].standard_error.has_value());
  CHECK(std::abs(report.rows[0].mean - 5.0) <
        3.0 * *report.rows[0].standard_error);

  std::stringstream csv;
  write_effect_report_csv(csv, report);
  CHECK(csv.str().find("construction,mean_effect_bits") == 0);
}
