#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "curricula/common.hpp"
#include "curricula/corpus.hpp"
#include "curricula/ngram.hpp"
#include "curricula/stats.hpp"

namespace curricula {

// Per-sentence record of the cross-review protocol: one score from every
// teacher except the sentence's home teacher, and their mean.
struct SentenceScores {
  std::uint32_t home_metaset = 0;
  std::vector<double> scores;  // indexed by teacher id; home slot is NaN
  double difficulty = 0.0;
};

struct DifficultyTable {
  std::uint32_t num_metasets = 0;
  std::vector<SentenceScores> rows;  // indexed by sentence id

  // Checks the structural invariants: exactly M-1 scores per sentence,
  // none from the home teacher, difficulty equal to their mean.
  void validate() const {
    for (std::size_t id = 0; id < rows.size(); ++id) {
      const auto& row = rows[id];
      if (row.scores.size() != num_metasets) {
        throw DataError("difficulty table: row " + std::to_string(id) +
                        " has wrong width");
      }
      double sum = 0.0;
      std::uint32_t present = 0;
      for (std::uint32_t m = 0; m < num_metasets; ++m) {
        bool is_home = m == row.home_metaset;
        bool missing = std::isnan(row.scores[m]);
        if (is_home != missing) {
          throw DataError("difficulty table: row " + std::to_string(id) +
                          " violates the home-exclusion rule");
        }
        if (!missing) {
          sum += row.scores[m];
          ++present;
        }
      }
      if (present != num_metasets - 1 ||
          std::abs(row.difficulty - sum / present) > 1e-9) {
        throw DataError("difficulty table: row " + std::to_string(id) +
                        " difficulty does not match its scores");
      }
    }
  }
};

struct CrossReviewConfig {
  std::uint32_t order = 4;
  DiscountConfig discounts;
  std::size_t max_seq_len = 128;
  unsigned threads = 0;  // 0 = hardware
};

// Trains one teacher per metaset on that metaset's token sequences and
// scores every sentence with the teachers of the other metasets. Returns
// the difficulty table along with the teachers (for persistence / reuse).
inline std::pair<DifficultyTable, std::vector<NGramTeacher>> run_cross_review(
    const std::vector<std::vector<TokenId>>& sentence_tokens,
    const MetasetAssignment& assignment, const BpeVocab& vocab,
    const CrossReviewConfig& config) {
  std::uint32_t m = assignment.num_metasets;
  if (m < 2) throw ConfigError("cross-review: need at least 2 metasets");
  if (assignment.assignment.size() != sentence_tokens.size()) {
    throw DataError("cross-review: assignment does not cover the corpus");
  }

  // Chunk each metaset's sentences into training sequences.
  std::vector<std::vector<TokenSequence>> per_metaset(m);
  for (std::size_t id = 0; id < sentence_tokens.size(); ++id) {
    const auto& ids = sentence_tokens[id];
    std::uint32_t home = assignment.assignment[id];
    std::uint32_t segment = 0;
    for (std::size_t pos = 0; pos < ids.size(); pos += config.max_seq_len) {
      TokenSequence seq;
      seq.origin_sentence_id = static_cast<std::uint32_t>(id);
      seq.segment_index = segment++;
      std::size_t end = std::min(ids.size(), pos + config.max_seq_len);
      seq.ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                     ids.begin() + static_cast<std::ptrdiff_t>(end));
      per_metaset[home].push_back(std::move(seq));
    }
  }
  for (std::uint32_t i = 0; i < m; ++i) {
    if (per_metaset[i].empty()) {
      throw DataError("cross-review: metaset " + std::to_string(i) +
                      " is too small to train a teacher");
    }
  }

  unsigned threads = resolve_threads(config.threads);
  std::vector<std::optional<NGramTeacher>> teachers(m);
  std::uint64_t vocab_hash = vocab.fingerprint();
  parallel_chunks(m, std::min<unsigned>(threads, m),
                  [&](std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      teachers[i] = NGramTeacher::train(
                          per_metaset[i], config.order, config.discounts,
                          vocab.size(), BpeVocab::kBosId, std::to_string(i),
                          vocab_hash);
                    }
                  });

  DifficultyTable table;
  table.num_metasets = m;
  table.rows.resize(sentence_tokens.size());
  parallel_chunks(
      sentence_tokens.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t id = begin; id < end; ++id) {
          auto& row = table.rows[id];
          row.home_metaset = assignment.assignment[id];
          row.scores.assign(m, std::numeric_limits<double>::quiet_NaN());
          double sum = 0.0;
          for (std::uint32_t t = 0; t < m; ++t) {
            if (t == row.home_metaset) continue;
            double score = teachers[t]->sentence_difficulty(sentence_tokens[id]);
            row.scores[t] = score;
            sum += score;
          }
          row.difficulty = sum / static_cast<double>(m - 1);
        }
      });

  std::vector<NGramTeacher> out;
  out.reserve(m);
  for (auto& t : teachers) out.push_back(std::move(*t));
  return {std::move(table), std::move(out)};
}

// Builds a difficulty table from externally computed per-teacher scores
// (one table per metaset, same protocol: a sentence is never scored by its
// home teacher).
inline DifficultyTable difficulty_from_external(
    const MetasetAssignment& assignment,
    std::span<const ExternalScoreTable> tables) {
  std::uint32_t m = assignment.num_metasets;
  if (tables.size() != m) {
    throw DataError("external scores: need one table per metaset");
  }
  DifficultyTable table;
  table.num_metasets = m;
  table.rows.resize(assignment.assignment.size());
  for (std::size_t id = 0; id < table.rows.size(); ++id) {
    auto& row = table.rows[id];
    row.home_metaset = assignment.assignment[id];
    row.scores.assign(m, std::numeric_limits<double>::quiet_NaN());
    double sum = 0.0;
    for (std::uint32_t t = 0; t < m; ++t) {
      if (t == row.home_metaset) continue;
      auto it = tables[t].scores.find(id);
      if (it == tables[t].scores.end()) {
        throw DataError("external scores: teacher " + tables[t].teacher_label +
                        " is missing sentence " + std::to_string(id));
      }
      row.scores[t] = it->second;
      sum += it->second;
    }
    row.difficulty = sum / static_cast<double>(m - 1);
  }
  return table;
}

struct AgreementReport {
  // Mean Spearman rank correlation over all teacher pairs, each computed
  // on the sentences both teachers scored. Absent when M < 3 or no pair
  // had enough shared variance.
  std::optional<double> mean_pairwise_spearman;
  // Mean over sentences of the (population) standard deviation of that
  // sentence's M-1 scores. Bits/token, like the scores themselves.
  double mean_score_stddev = 0.0;
  std::size_t pairs_counted = 0;
};

inline AgreementReport teacher_agreement(const DifficultyTable& table) {
  AgreementReport report;
  std::uint32_t m = table.num_metasets;
  double std_sum = 0.0;
  std::vector<double> buf;
  for (const auto& row : table.rows) {
    buf.clear();
    for (std::uint32_t t = 0; t < m; ++t) {
      if (!std::isnan(row.scores[t])) buf.push_back(row.scores[t]);
    }
    std_sum += stddev_of(buf);
  }
  report.mean_score_stddev =
      table.rows.empty() ? 0.0 : std_sum / static_cast<double>(table.rows.size());

  if (m < 3) return report;  // no sentence is scored by two teachers' shared view
  double rho_sum = 0.0;
  std::size_t rho_count = 0;
  std::vector<double> xs, ys;
  for (std::uint32_t a = 0; a < m; ++a) {
    for (std::uint32_t b = a + 1; b < m; ++b) {
      xs.clear();
      ys.clear();
      for (const auto& row : table.rows) {
        if (row.home_metaset == a || row.home_metaset == b) continue;
        xs.push_back(row.scores[a]);
        ys.push_back(row.scores[b]);
      }
      if (xs.size() < 2) continue;
      auto rho = spearman(xs, ys);
      if (rho) {
        rho_sum += *rho;
        ++rho_count;
      }
    }
  }
  if (rho_count > 0) {
    report.mean_pairwise_spearman = rho_sum / static_cast<double>(rho_count);
    report.pairs_counted = rho_count;
  }
  return report;
}

// Ascending difficulty; ties broken by ascending sentence id so the order
// is a deterministic permutation of 0..N-1.
struct Ranking {
  std::vector<std::uint32_t> order;

  std::vector<std::uint32_t> rank_of() const {
    std::vector<std::uint32_t> out(order.size());
    for (std::uint32_t r = 0; r < order.size(); ++r) out[order[r]] = r;
    return out;
  }
};

inline Ranking rank_sentences(const DifficultyTable& table,
                              std::size_t expected_sentences) {
  if (table.rows.size() != expected_sentences) {
    std::string msg = "rank_sentences: table missing sentences:";
    for (std::size_t id = table.rows.size(); id < expected_sentences; ++id) {
      msg += ' ' + std::to_string(id);
      if (msg.size() > 200) {
        msg += " ...";
        break;
      }
    }
    throw DataError(msg);
  }
  Ranking ranking;
  ranking.order.resize(table.rows.size());
  for (std::uint32_t id = 0; id < ranking.order.size(); ++id)
    ranking.order[id] = id;
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     double da = table.rows[a].difficulty;
                     double db = table.rows[b].difficulty;
                     if (da != db) return da < db;
                     return a < b;
                   });
  return ranking;
}

// ---- persistence ------------------------------------------------------------

inline void write_difficulty_tsv(std::ostream& out,
                                 const DifficultyTable& table) {
  out << "sentence_id\thome_metaset";
  for (std::uint32_t t = 0; t < table.num_metasets; ++t) out << "\tscore_t" << t;
  out << "\tdifficulty\n";
  for (std::size_t id = 0; id < table.rows.size(); ++id) {
    const auto& row = table.rows[id];
    out << id << '\t' << row.home_metaset;
    for (std::uint32_t t = 0; t < table.num_metasets; ++t) {
      out << '\t';
      if (!std::isnan(row.scores[t])) out << fmt_float(row.scores[t]);
    }
    out << '\t' << fmt_float(row.difficulty) << '\n';
  }
}

inline DifficultyTable read_difficulty_tsv(std::istream& in) {
  DifficultyTable table;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (!header_seen) {
      header_seen = true;
      if (fields.size() < 4) throw DataError("difficulty tsv: bad header");
      table.num_metasets = static_cast<std::uint32_t>(fields.size() - 3);
      continue;
    }
    if (fields.size() != table.num_metasets + 3) {
      throw DataError("difficulty tsv: bad row at line " +
                      std::to_string(lineno));
    }
    SentenceScores row;
    std::size_t id = std::stoull(std::string(fields[0]));
    if (id != table.rows.size()) {
      throw DataError("difficulty tsv: non-contiguous id at line " +
                      std::to_string(lineno));
    }
    row.home_metaset = static_cast<std::uint32_t>(std::stoul(std::string(fields[1])));
    row.scores.assign(table.num_metasets,
                      std::numeric_limits<double>::quiet_NaN());
    for (std::uint32_t t = 0; t < table.num_metasets; ++t) {
      auto f = fields[2 + t];
      if (!f.empty()) row.scores[t] = std::stod(std::string(f));
    }
    row.difficulty = std::stod(std::string(fields.back()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void write_ranking(std::ostream& out, const Ranking& ranking) {
  for (std::uint32_t id : ranking.order) out << id << '\n';
}

inline Ranking read_ranking(std::istream& in) {
  Ranking ranking;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ranking.order.push_back(static_cast<std::uint32_t>(std::stoul(line)));
  }
  return ranking;
}

}  // namespace curricula
