#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "curricula/bpe.hpp"
#include "curricula/common.hpp"
#include "curricula/stats.hpp"

namespace curricula {

struct MinimalPair {
  std::string phenomenon;
  std::string good_text;
  std::string bad_text;
};

// TSV: phenomenon<TAB>good<TAB>bad. '#' lines are comments.
inline std::vector<MinimalPair> load_minimal_pairs(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pair file: " + path.string());
  std::vector<MinimalPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw DataError(path.string() + ": expected 3 columns at line " +
                      std::to_string(lineno));
    }
    MinimalPair p{std::string(fields[0]), std::string(fields[1]),
                  std::string(fields[2])};
    if (p.good_text.empty() || p.bad_text.empty()) {
      throw DataError(path.string() + ": empty sentence at line " +
                      std::to_string(lineno));
    }
    if (p.good_text == p.bad_text) {
      throw DataError(path.string() + ": identical pair at line " +
                      std::to_string(lineno));
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

struct PhenomenonAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const {
    return static_cast<double>(correct) / static_cast<double>(total);
  }
};

struct PairReport {
  std::map<std::string, PhenomenonAccuracy> per_phenomenon;
  PhenomenonAccuracy overall;
};

// A pair counts as correct iff the grammatical member gets strictly higher
// total log probability, i.e. strictly lower summed surprisal; exact ties
// count as incorrect.
template <class Scorer>
inline PairReport minimal_pair_accuracy(const Scorer& scorer,
                                        const BpeVocab& vocab,
                                        std::span<const MinimalPair> pairs) {
  if (pairs.empty()) throw DataError("minimal_pair_accuracy: no pairs");
  PairReport report;
  for (const auto& pair : pairs) {
    auto total_bits = [&](const std::string& text) {
      std::vector<TokenId> ids = encode(vocab, text);
      double sum = 0.0;
      for (double s : scorer.sequence_surprisals(ids)) sum += s;
      return sum;
    };
    bool correct = total_bits(pair.good_text) < total_bits(pair.bad_text);
    auto& bucket = report.per_phenomenon[pair.phenomenon];
    bucket.total++;
    report.overall.total++;
    if (correct) {
      bucket.correct++;
      report.overall.correct++;
    }
  }
  return report;
}

inline void write_pair_report_csv(std::ostream& out, const PairReport& report) {
  out << "phenomenon,correct,total,accuracy\n";
  for (const auto& [tag, acc] : report.per_phenomenon) {
    out << tag << ',' << acc.correct << ',' << acc.total << ','
        << fmt_float(acc.accuracy()) << '\n';
  }
  out << "overall," << report.overall.correct << ',' << report.overall.total
      << ',' << fmt_float(report.overall.accuracy()) << '\n';
}

// ---- ambiguous / unambiguous surprisal effects ------------------------------

// One file row: the target region is given as character offsets into the
// ambiguous sentence; the same target word is located in the unambiguous
// sentence by unique whole-word match.
struct SapItemSpec {
  std::string construction;
  std::string ambiguous_text;
  std::string unambiguous_text;
  std::size_t target_char_start = 0;
  std::size_t target_char_end = 0;  // exclusive
  std::uint32_t spillover = 2;
};

// A resolved item: both texts encoded, with token index ranges covering the
// target word plus its spillover words in each.
struct SapItem {
  std::string construction;
  std::vector<TokenId> ambiguous_ids;
  std::vector<TokenId> unambiguous_ids;
  std::size_t ambiguous_begin = 0, ambiguous_end = 0;      // token indices
  std::size_t unambiguous_begin = 0, unambiguous_end = 0;  // exclusive
};

// TSV: construction<TAB>ambiguous<TAB>unambiguous<TAB>start<TAB>end<TAB>spillover
inline std::vector<SapItemSpec> load_sap_items(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open item file: " + path.string());
  std::vector<SapItemSpec> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 6) {
      throw DataError(path.string() + ": expected 6 columns at line " +
                      std::to_string(lineno));
    }
    SapItemSpec spec;
    spec.construction = std::string(fields[0]);
    spec.ambiguous_text = std::string(fields[1]);
    spec.unambiguous_text = std::string(fields[2]);
    spec.target_char_start = std::stoull(std::string(fields[3]));
    spec.target_char_end = std::stoull(std::string(fields[4]));
    spec.spillover = static_cast<std::uint32_t>(std::stoul(std::string(fields[5])));
    if (spec.target_char_start >= spec.target_char_end ||
        spec.target_char_end > spec.ambiguous_text.size()) {
      throw DataError(path.string() + ": bad target offsets at line " +
                      std::to_string(lineno));
    }
    items.push_back(std::move(spec));
  }
  return items;
}

namespace detail {

// Extends [start, end) rightwards over the next `spillover` whitespace-
// separated words of `text`.
inline std::size_t extend_region(std::string_view text, std::size_t end,
                                 std::uint32_t spillover) {
  std::size_t pos = end;
  for (std::uint32_t w = 0; w < spillover; ++w) {
    while (pos < text.size() && is_ascii_space(text[pos])) ++pos;
    if (pos >= text.size()) break;
    while (pos < text.size() && !is_ascii_space(text[pos])) ++pos;
  }
  return pos;
}

// Token index range covering [char_begin, char_end). A token straddling a
// region edge is accepted only when the bytes it adds outside the region
// are whitespace (byte-level merges routinely glue a leading space onto a
// word); anything else makes the region ambiguous.
inline std::pair<std::size_t, std::size_t> region_token_range(
    const std::vector<TokenSpan>& spans, std::string_view text,
    std::size_t char_begin, std::size_t char_end, const std::string& label) {
  std::size_t begin = spans.size(), end = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& tok = spans[i];
    bool overlaps = tok.byte_start < char_end && tok.byte_end > char_begin;
    if (!overlaps) continue;
    for (std::size_t b = tok.byte_start; b < tok.byte_end; ++b) {
      bool outside = b < char_begin || b >= char_end;
      if (outside && !is_ascii_space(text[b])) {
        throw DataError("item '" + label +
                        "': target region splits token " + std::to_string(i) +
                        " ambiguously");
      }
    }
    begin = std::min(begin, i);
    end = std::max(end, i + 1);
  }
  if (begin >= end) {
    throw DataError("item '" + label + "': target region matches no tokens");
  }
  return {begin, end};
}

}  // namespace detail

// Maps character offsets to token index ranges in both sentences. The target
// word is taken from the ambiguous text; it must occur as a whole word
// exactly once in the unambiguous text.
inline SapItem resolve_sap_item(const SapItemSpec& spec, const BpeVocab& vocab) {
  SapItem item;
  item.construction = spec.construction;

  std::string_view amb = spec.ambiguous_text;
  std::string_view unamb = spec.unambiguous_text;
  std::string_view target =
      amb.substr(spec.target_char_start,
                 spec.target_char_end - spec.target_char_start);

  // Locate the target word in the unambiguous sentence.
  std::size_t found = std::string_view::npos;
  std::size_t occurrences = 0;
  for (std::size_t pos = 0; (pos = unamb.find(target, pos)) != std::string_view::npos;
       ++pos) {
    bool left_ok = pos == 0 || is_ascii_space(unamb[pos - 1]);
    std::size_t after = pos + target.size();
    bool right_ok = after == unamb.size() || is_ascii_space(unamb[after]) ||
                    !std::isalnum(static_cast<unsigned char>(unamb[after]));
    if (left_ok && right_ok) {
      found = pos;
      ++occurrences;
    }
  }
  if (occurrences != 1) {
    throw DataError("item '" + spec.construction + "': target \"" +
                    std::string(target) + "\" occurs " +
                    std::to_string(occurrences) +
                    " times in the unambiguous sentence (need exactly 1)");
  }

  std::size_t amb_region_end =
      detail::extend_region(amb, spec.target_char_end, spec.spillover);
  std::size_t unamb_region_end =
      detail::extend_region(unamb, found + target.size(), spec.spillover);

  auto amb_spans = encode_with_offsets(vocab, amb);
  auto unamb_spans = encode_with_offsets(vocab, unamb);
  for (const auto& s : amb_spans) item.ambiguous_ids.push_back(s.id);
  for (const auto& s : unamb_spans) item.unambiguous_ids.push_back(s.id);

  std::tie(item.ambiguous_begin, item.ambiguous_end) =
      detail::region_token_range(amb_spans, amb, spec.target_char_start,
                                 amb_region_end, spec.construction);
  std::tie(item.unambiguous_begin, item.unambiguous_end) =
      detail::region_token_range(unamb_spans, unamb, found, unamb_region_end,
                                 spec.construction);
  return item;
}

// Summed surprisal over the target region of the ambiguous sentence minus
// the same region of the unambiguous one. Antisymmetric under swapping the
// two sentences.
template <class Scorer>
inline double surprisal_effect(const Scorer& scorer, const SapItem& item) {
  if (item.ambiguous_end > item.ambiguous_ids.size() ||
      item.unambiguous_end > item.unambiguous_ids.size() ||
      item.ambiguous_begin >= item.ambiguous_end ||
      item.unambiguous_begin >= item.unambiguous_end) {
    throw DataError("item '" + item.construction + "': region out of bounds");
  }
  auto region_sum = [&](const std::vector<TokenId>& ids, std::size_t begin,
                        std::size_t end) {
    auto surp = scorer.sequence_surprisals(ids);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += surp[i];
    return sum;
  };
  return region_sum(item.ambiguous_ids, item.ambiguous_begin,
                    item.ambiguous_end) -
         region_sum(item.unambiguous_ids, item.unambiguous_begin,
                    item.unambiguous_end);
}

struct EffectRow {
  std::string construction;
  double mean = 0.0;
  std::optional<double> standard_error;  // absent for a single item
  std::size_t count = 0;
};

struct EffectReport {
  std::vector<EffectRow> rows;  // sorted by construction tag
};

inline EffectReport aggregate_effects(
    const std::vector<std::pair<std::string, double>>& effects) {
  if (effects.empty()) throw DataError("aggregate_effects: no effects");
  std::map<std::string, std::vector<double>> grouped;
  for (const auto& [tag, value] : effects) grouped[tag].push_back(value);
  EffectReport report;
  for (const auto& [tag, values] : grouped) {
    EffectRow row;
    row.construction = tag;
    row.count = values.size();
    row.mean = mean_of(values);
    if (values.size() >= 2) {
      row.standard_error =
          sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline void write_effect_report_csv(std::ostream& out,
                                    const EffectReport& report) {
  out << "construction,mean_effect_bits,standard_error,items\n";
  for (const auto& row : report.rows) {
    out << row.construction << ',' << fmt_float(row.mean) << ','
        << (row.standard_error ? fmt_float(*row.standard_error) : "NA") << ','
        << row.count << '\n';
  }
}

}  // namespace curricula
