#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "curricula/common.hpp"
#include "curricula/corpus.hpp"
#include "curricula/cross_review.hpp"
#include "curricula/scheduler.hpp"
#include "curricula/stats.hpp"

namespace curricula {

struct WindowRow {
  std::uint64_t window_index = 0;
  std::uint64_t step_begin = 0;
  std::uint64_t step_end = 0;  // exclusive
  std::vector<double> proportions;  // aligned with WindowReport::sources
};

// Source mix of the sampled batches per window of training steps, plus the
// whole-corpus reference mix for comparison.
struct WindowReport {
  std::uint64_t window_size = 0;
  std::vector<std::string> sources;  // first-seen corpus order
  std::vector<WindowRow> windows;
  std::vector<double> corpus_reference;
  bool single_window_warning = false;
};

// Counts sentence slots (repeats count every time) per source per window of
// manifest steps.
inline WindowReport domain_proportions(std::istream& manifest,
                                       const Corpus& corpus,
                                       std::uint64_t window_size) {
  if (window_size < 1) throw ConfigError("window size must be >= 1");
  WindowReport report;
  report.window_size = window_size;

  auto summary = corpus.source_summary();
  std::unordered_map<std::string, std::size_t> source_index;
  for (const auto& [tag, stats] : summary) {
    source_index.emplace(tag, report.sources.size());
    report.sources.push_back(tag);
    report.corpus_reference.push_back(
        static_cast<double>(stats.sentences) /
        static_cast<double>(corpus.size()));
  }
  std::vector<std::size_t> sentence_source(corpus.size());
  for (const auto& s : corpus.sentences) {
    sentence_source[s.id] = source_index.at(s.source);
  }

  std::vector<std::uint64_t> counts(report.sources.size(), 0);
  std::uint64_t in_window = 0, window_start = 0, steps = 0;
  auto flush = [&](std::uint64_t end_step) {
    if (in_window == 0) return;
    WindowRow row;
    row.window_index = report.windows.size();
    row.step_begin = window_start;
    row.step_end = end_step;
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    for (auto c : counts) {
      row.proportions.push_back(static_cast<double>(c) /
                                static_cast<double>(total));
    }
    report.windows.push_back(std::move(row));
    counts.assign(counts.size(), 0);
    in_window = 0;
  };

  for_each_manifest_line(
      manifest, [&](std::uint64_t t, const std::vector<std::uint32_t>& ids) {
        for (std::uint32_t id : ids) {
          if (id >= sentence_source.size()) {
            throw DataError("manifest references unknown sentence " +
                            std::to_string(id));
          }
          counts[sentence_source[id]]++;
        }
        ++steps;
        ++in_window;
        if (in_window == window_size) {
          flush(t + 1);
          window_start = t + 1;
        }
      });
  flush(steps);
  report.single_window_warning = steps > 0 && steps < window_size;
  return report;
}

inline void write_window_csv(std::ostream& out, const WindowReport& report) {
  out << "window,step_begin,step_end,source,proportion\n";
  for (const auto& row : report.windows) {
    for (std::size_t s = 0; s < report.sources.size(); ++s) {
      out << row.window_index << ',' << row.step_begin << ',' << row.step_end
          << ',' << report.sources[s] << ',' << fmt_float(row.proportions[s])
          << '\n';
    }
  }
  for (std::size_t s = 0; s < report.sources.size(); ++s) {
    out << "corpus,,," << report.sources[s] << ','
        << fmt_float(report.corpus_reference[s]) << '\n';
  }
}

// Unigram token counts over the full training corpus.
inline std::vector<std::uint64_t> unigram_counts(
    const std::vector<std::vector<TokenId>>& sentence_tokens,
    std::size_t vocab_size) {
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (const auto& ids : sentence_tokens) {
    for (TokenId id : ids) counts[id]++;
  }
  return counts;
}

// Mean over the sentence's tokens of log2(count(token) / total_tokens).
// More negative = rarer vocabulary.
inline double sentence_mean_log_freq(std::span<const TokenId> ids,
                                     std::span<const std::uint64_t> counts,
                                     std::uint64_t total_tokens) {
  if (ids.empty()) throw DataError("mean_log_freq: empty sentence");
  double sum = 0.0;
  for (TokenId id : ids) {
    sum += std::log2(static_cast<double>(counts[id]) /
                     static_cast<double>(total_tokens));
  }
  return sum / static_cast<double>(ids.size());
}

struct CorrelatesReport {
  std::optional<double> spearman_length;
  std::optional<double> spearman_freq;
  OlsFit ols;  // difficulty ~ intercept + length + mean log frequency
};

// How well sentence length and unigram frequency explain the difficulty
// scores. Zero-variance predictors yield an absent correlation.
inline CorrelatesReport difficulty_correlates(
    std::span<const double> difficulty, std::span<const double> token_count,
    std::span<const double> mean_log_freq) {
  if (difficulty.size() != token_count.size() ||
      difficulty.size() != mean_log_freq.size()) {
    throw DataError("difficulty_correlates: length mismatch");
  }
  CorrelatesReport report;
  report.spearman_length = spearman(difficulty, token_count);
  report.spearman_freq = spearman(difficulty, mean_log_freq);
  report.ols = ols_fit(
      {std::vector<double>(token_count.begin(), token_count.end()),
       std::vector<double>(mean_log_freq.begin(), mean_log_freq.end())},
      difficulty);
  return report;
}

inline CorrelatesReport difficulty_correlates(
    const DifficultyTable& table,
    const std::vector<std::vector<TokenId>>& sentence_tokens,
    std::span<const std::uint64_t> unigrams) {
  std::uint64_t total = 0;
  for (auto c : unigrams) total += c;
  std::vector<double> difficulty, length, freq;
  difficulty.reserve(table.rows.size());
  for (std::size_t id = 0; id < table.rows.size(); ++id) {
    difficulty.push_back(table.rows[id].difficulty);
    length.push_back(static_cast<double>(sentence_tokens[id].size()));
    freq.push_back(sentence_mean_log_freq(sentence_tokens[id], unigrams, total));
  }
  return difficulty_correlates(difficulty, length, freq);
}

inline void write_correlates_csv(std::ostream& out,
                                 const CorrelatesReport& report) {
  out << "metric,value\n";
  out << "spearman_difficulty_length,"
      << (report.spearman_length ? fmt_float(*report.spearman_length) : "NA")
      << '\n';
  out << "spearman_difficulty_freq,"
      << (report.spearman_freq ? fmt_float(*report.spearman_freq) : "NA")
      << '\n';
  out << "ols_intercept," << fmt_float(report.ols.coefficients[0]) << '\n';
  out << "ols_coef_length," << fmt_float(report.ols.coefficients[1]) << '\n';
  out << "ols_coef_freq," << fmt_float(report.ols.coefficients[2]) << '\n';
  out << "ols_r2," << fmt_float(report.ols.r2) << '\n';
  out << "ols_adjusted_r2," << fmt_float(report.ols.adjusted_r2) << '\n';
}

}  // namespace curricula
