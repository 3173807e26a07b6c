#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "curricula/common.hpp"
#include "curricula/rng.hpp"

namespace curricula {

// One training sentence. A sentence is a physical line of the input file
// with the trailing newline stripped; lines holding only whitespace are
// dropped at ingestion. token_count stays 0 until the tokenize pass.
struct SentenceRecord {
  std::uint32_t id = 0;
  std::string text;
  std::string source;
  std::uint32_t token_count = 0;
};

struct SourceStats {
  std::uint64_t sentences = 0;
  std::uint64_t tokens = 0;
};

struct FileEntry {
  std::filesystem::path path;
  std::string source;
};

struct IngestStats {
  std::uint64_t lines_total = 0;
  std::uint64_t lines_dropped = 0;  // whitespace-only
  std::vector<std::string> warnings;
};

class Corpus {
 public:
  std::vector<SentenceRecord> sentences;
  IngestStats ingest_stats;

  std::size_t size() const { return sentences.size(); }

  // Source tags in first-seen order, with per-source sentence/token counts.
  std::vector<std::pair<std::string, SourceStats>> source_summary() const {
    std::vector<std::pair<std::string, SourceStats>> out;
    std::map<std::string, std::size_t> index;
    for (const auto& s : sentences) {
      auto it = index.find(s.source);
      if (it == index.end()) {
        index.emplace(s.source, out.size());
        out.push_back({s.source, {}});
        it = index.find(s.source);
      }
      auto& stats = out[it->second].second;
      stats.sentences += 1;
      stats.tokens += s.token_count;
    }
    return out;
  }

  std::uint64_t total_tokens() const {
    std::uint64_t t = 0;
    for (const auto& s : sentences) t += s.token_count;
    return t;
  }
};

inline bool whitespace_only(std::string_view line) {
  for (char c : line) {
    if (!is_ascii_space(c)) return false;
  }
  return true;
}

// Reads each manifest file in order, one SentenceRecord per retained line.
// Ids are assigned contiguously in file order. Unreadable file -> DataError;
// a file that contributes no lines is only a warning.
inline Corpus ingest(const std::vector<FileEntry>& manifest) {
  Corpus corpus;
  for (const auto& entry : manifest) {
    if (entry.source.empty()) throw ConfigError("empty source tag in manifest");
    std::ifstream in(entry.path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + entry.path.string());
    std::string line;
    std::uint64_t kept = 0;
    while (std::getline(in, line)) {
      corpus.ingest_stats.lines_total++;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (whitespace_only(line)) {
        corpus.ingest_stats.lines_dropped++;
        continue;
      }
      SentenceRecord rec;
      rec.id = static_cast<std::uint32_t>(corpus.sentences.size());
      rec.text = line;
      rec.source = entry.source;
      corpus.sentences.push_back(std::move(rec));
      kept++;
    }
    if (in.bad()) throw DataError("read error on: " + entry.path.string());
    if (kept == 0) {
      corpus.ingest_stats.warnings.push_back("no usable lines in " +
                                             entry.path.string());
    }
  }
  return corpus;
}

struct SummaryRow {
  std::string source;  // "total" for the closing row
  std::uint64_t tokens = 0;
  double token_prop = 0.0;
  std::uint64_t sentences = 0;
  double sentence_prop = 0.0;
};

// Per-source token/sentence counts and proportions plus a total row.
// When no tokenize pass has run (zero tokens everywhere) the token
// proportion column is reported as zero.
inline std::vector<SummaryRow> summarize(const Corpus& corpus) {
  if (corpus.sentences.empty()) throw DataError("empty corpus");
  auto summary = corpus.source_summary();
  std::uint64_t tok_total = 0, sent_total = 0;
  for (const auto& [tag, st] : summary) {
    tok_total += st.tokens;
    sent_total += st.sentences;
  }
  std::vector<SummaryRow> rows;
  for (const auto& [tag, st] : summary) {
    SummaryRow r;
    r.source = tag;
    r.tokens = st.tokens;
    r.token_prop = tok_total ? static_cast<double>(st.tokens) / tok_total : 0.0;
    r.sentences = st.sentences;
    r.sentence_prop = static_cast<double>(st.sentences) / sent_total;
    rows.push_back(std::move(r));
  }
  SummaryRow total;
  total.source = "total";
  total.tokens = tok_total;
  total.token_prop = tok_total ? 1.0 : 0.0;
  total.sentences = sent_total;
  total.sentence_prop = 1.0;
  rows.push_back(std::move(total));
  return rows;
}

inline void write_summary_tsv(std::ostream& out,
                              const std::vector<SummaryRow>& rows) {
  out << "source\ttokens\ttoken_prop\tsentences\tsent_prop\n";
  for (const auto& r : rows) {
    out << r.source << '\t' << r.tokens << '\t' << fmt_float(r.token_prop)
        << '\t' << r.sentences << '\t' << fmt_float(r.sentence_prop) << '\n';
  }
}

struct MetasetStats {
  std::uint64_t sentences = 0;
  std::uint64_t tokens = 0;
};

struct MetasetAssignment {
  std::uint32_t num_metasets = 0;
  std::vector<std::uint32_t> assignment;  // sentence id -> metaset
  std::vector<MetasetStats> per_metaset;
};

// Partitions the corpus into M metasets balanced in both sentence and token
// counts. Within each source the sentences are shuffled (seeded) and dealt
// round-robin, which balances sentence counts and stratifies by source;
// same-source swaps between the richest and poorest metasets then close any
// token imbalance. Deterministic for a given seed.
inline MetasetAssignment split_metasets(const Corpus& corpus, std::uint32_t m,
                                        std::uint64_t seed,
                                        double tolerance = 0.02) {
  if (m < 2) throw ConfigError("split_metasets: need at least 2 metasets");
  std::size_t n = corpus.size();
  if (n < m) throw DataError("split_metasets: fewer sentences than metasets");

  MetasetAssignment result;
  result.num_metasets = m;
  result.assignment.assign(n, 0);
  result.per_metaset.assign(m, {});

  // Group sentence ids by source, first-seen order.
  std::vector<std::string> source_order;
  std::map<std::string, std::vector<std::uint32_t>> by_source;
  for (const auto& s : corpus.sentences) {
    auto it = by_source.find(s.source);
    if (it == by_source.end()) {
      source_order.push_back(s.source);
      by_source.emplace(s.source, std::vector<std::uint32_t>{s.id});
    } else {
      it->second.push_back(s.id);
    }
  }

  for (std::size_t si = 0; si < source_order.size(); ++si) {
    auto& ids = by_source[source_order[si]];
    Rng rng(derive_seed(seed, source_order[si]));
    rng.shuffle(ids);
    std::uint32_t offset = static_cast<std::uint32_t>(si % m);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      std::uint32_t ms = static_cast<std::uint32_t>((offset + j) % m);
      result.assignment[ids[j]] = ms;
    }
  }

  auto recompute = [&] {
    for (auto& st : result.per_metaset) st = {};
    for (const auto& s : corpus.sentences) {
      auto& st = result.per_metaset[result.assignment[s.id]];
      st.sentences += 1;
      st.tokens += s.token_count;
    }
  };
  recompute();

  std::uint64_t total_tokens = corpus.total_tokens();
  double token_target = static_cast<double>(total_tokens) / m;
  auto max_token_dev = [&] {
    double dev = 0.0;
    for (const auto& st : result.per_metaset) {
      dev = std::max(dev, std::abs(static_cast<double>(st.tokens) - token_target));
    }
    return token_target > 0 ? dev / token_target : 0.0;
  };

  if (total_tokens > 0 && max_token_dev() > tolerance) {
    // (metaset, source) -> sorted (token_count, id), kept in sync with swaps.
    std::vector<std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>>
        buckets(m, std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>(
                       source_order.size()));
    std::map<std::string, std::size_t> source_index;
    for (std::size_t si = 0; si < source_order.size(); ++si)
      source_index[source_order[si]] = si;
    for (const auto& s : corpus.sentences) {
      buckets[result.assignment[s.id]][source_index[s.source]].push_back(
          {s.token_count, s.id});
    }
    for (auto& per_ms : buckets)
      for (auto& b : per_ms) std::sort(b.begin(), b.end());

    const int max_rounds = 4000;
    for (int round = 0; round < max_rounds; ++round) {
      std::size_t rich = 0, poor = 0;
      for (std::size_t i = 1; i < m; ++i) {
        if (result.per_metaset[i].tokens > result.per_metaset[rich].tokens) rich = i;
        if (result.per_metaset[i].tokens < result.per_metaset[poor].tokens) poor = i;
      }
      double gap = static_cast<double>(result.per_metaset[rich].tokens) -
                   static_cast<double>(result.per_metaset[poor].tokens);
      if (max_token_dev() <= tolerance || gap <= 1.0) break;
      double want = gap / 2.0;  // ideal token transfer rich -> poor

      // Best same-source swap: maximize progress without overshooting.
      bool found = false;
      std::size_t best_src = 0, best_ri = 0, best_pi = 0;
      double best_score = 0.0;
      for (std::size_t si = 0; si < source_order.size(); ++si) {
        const auto& rb = buckets[rich][si];
        const auto& pb = buckets[poor][si];
        if (rb.empty() || pb.empty()) continue;
        // Walk the rich bucket; two-pointer the poor bucket for a partner
        // whose token count is close to (rich_tokens - want).
        std::size_t pj = 0;
        for (std::size_t ri = 0; ri < rb.size(); ++ri) {
          double target = static_cast<double>(rb[ri].first) - want;
          while (pj + 1 < pb.size() &&
                 static_cast<double>(pb[pj + 1].first) <= target)
            ++pj;
          for (std::size_t cand : {pj, std::min(pj + 1, pb.size() - 1)}) {
            double delta = static_cast<double>(rb[ri].first) -
                           static_cast<double>(pb[cand].first);
            if (delta <= 0.0 || delta > gap) continue;
            double score = std::min(delta, gap - delta);  // progress made
            if (score > best_score) {
              best_score = score;
              best_src = si;
              best_ri = ri;
              best_pi = cand;
              found = true;
            }
          }
        }
      }
      if (!found) break;

      auto& rb = buckets[rich][best_src];
      auto& pb = buckets[poor][best_src];
      auto a = rb[best_ri];
      auto b = pb[best_pi];
      rb.erase(rb.begin() + static_cast<std::ptrdiff_t>(best_ri));
      pb.erase(pb.begin() + static_cast<std::ptrdiff_t>(best_pi));
      rb.insert(std::lower_bound(rb.begin(), rb.end(), b), b);
      pb.insert(std::lower_bound(pb.begin(), pb.end(), a), a);
      result.assignment[a.second] = static_cast<std::uint32_t>(poor);
      result.assignment[b.second] = static_cast<std::uint32_t>(rich);
      result.per_metaset[rich].tokens += b.first;
      result.per_metaset[rich].tokens -= a.first;
      result.per_metaset[poor].tokens += a.first;
      result.per_metaset[poor].tokens -= b.first;
    }
    recompute();
  }

  // Verify both balance constraints.
  double sent_target = static_cast<double>(n) / m;
  double worst_sent = 0.0;
  for (const auto& st : result.per_metaset) {
    worst_sent = std::max(
        worst_sent, std::abs(static_cast<double>(st.sentences) - sent_target) /
                        sent_target);
  }
  double worst_tok = total_tokens > 0 ? max_token_dev() : 0.0;
  if (worst_sent > tolerance || worst_tok > tolerance) {
    throw DataError(
        "split_metasets: tolerance " + fmt_float(tolerance) +
        " unachievable; best deviation sentences=" + fmt_float(worst_sent) +
        " tokens=" + fmt_float(worst_tok));
  }
  return result;
}

inline void write_metasets_tsv(std::ostream& out,
                               const MetasetAssignment& assignment) {
  out << "sentence_id\tmetaset\n";
  for (std::size_t id = 0; id < assignment.assignment.size(); ++id) {
    out << id << '\t' << assignment.assignment[id] << '\n';
  }
}

// Corpus persistence: one row per sentence, text is the final column and
// may itself contain tabs.
inline void write_corpus_tsv(std::ostream& out, const Corpus& corpus) {
  out << "id\tsource\ttext\n";
  for (const auto& s : corpus.sentences) {
    out << s.id << '\t' << s.source << '\t' << s.text << '\n';
  }
}

inline Corpus read_corpus_tsv(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    auto fields = split_first(line, '\t', 2);
    if (fields.size() != 3) {
      throw DataError("corpus tsv: bad row at line " + std::to_string(lineno));
    }
    SentenceRecord rec;
    rec.id = static_cast<std::uint32_t>(std::stoul(std::string(fields[0])));
    rec.source = std::string(fields[1]);
    rec.text = std::string(fields[2]);
    if (rec.id != corpus.sentences.size()) {
      throw DataError("corpus tsv: non-contiguous id at line " +
                      std::to_string(lineno));
    }
    corpus.sentences.push_back(std::move(rec));
  }
  return corpus;
}

}  // namespace curricula
