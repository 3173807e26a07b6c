#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "curricula/common.hpp"
#include "curricula/cross_review.hpp"
#include "curricula/rng.hpp"

namespace curricula {

struct ScheduleConfig {
  double initial_competence = 0.01;   // fraction of the corpus open at step 0
  double root = 10.0;                 // p of the root-p ramp
  std::uint64_t ramp_steps = 150001;  // step at which competence saturates
  std::uint32_t batch_size = 32;
  std::uint64_t seed = 0;
  std::uint64_t emit_steps = 150001;  // manifest length; may exceed ramp_steps

  void validate() const {
    if (!(initial_competence > 0.0) || initial_competence > 1.0) {
      throw ConfigError("schedule: c0 must lie in (0, 1]");
    }
    if (root < 1.0) throw ConfigError("schedule: p must be >= 1");
    if (ramp_steps < 1) throw ConfigError("schedule: T must be >= 1");
    if (batch_size < 1) throw ConfigError("schedule: batch size must be >= 1");
    if (emit_steps < 1) throw ConfigError("schedule: steps to emit must be >= 1");
  }
};

// Root-p competence ramp: min(1, (t (1 - c0^p) / T + c0^p)^(1/p)).
// Boundary values are returned exactly: c0 at t <= 0 and 1 from t >= T on.
// Fractional t is accepted; batch sampling only ever uses whole steps.
inline double competence(double t, const ScheduleConfig& cfg) {
  if (t <= 0.0) return cfg.initial_competence;
  if (t >= static_cast<double>(cfg.ramp_steps)) return 1.0;
  double c0p = std::pow(cfg.initial_competence, cfg.root);
  double inner =
      (t / static_cast<double>(cfg.ramp_steps)) * (1.0 - c0p) + c0p;
  double c = std::pow(inner, 1.0 / cfg.root);
  return c > 1.0 ? 1.0 : c;
}

// Number of ranked sentences open at step t: ceil(c(t) * N), clamped to [1, N].
inline std::uint64_t eligible_count(double t, const ScheduleConfig& cfg,
                                    std::uint64_t corpus_size) {
  if (corpus_size < 1) throw DataError("eligible_count: empty corpus");
  double c = competence(t, cfg);
  auto n = static_cast<std::uint64_t>(
      std::ceil(c * static_cast<double>(corpus_size)));
  if (n < 1) n = 1;
  if (n > corpus_size) n = corpus_size;
  return n;
}

struct Batch {
  std::vector<std::uint32_t> sentence_ids;
  bool with_replacement = false;  // set when the eligible prefix is < B
};

// Draws batch_size sentences uniformly from the eligible prefix of the
// ranking. Within a batch the draw is without replacement (with replacement
// only when the prefix is smaller than the batch, flagged); across steps the
// draws are independent. Deterministic in (seed, t) via per-step substreams.
inline Batch sample_batch(std::uint64_t t, const Ranking& ranking,
                          const ScheduleConfig& cfg) {
  std::uint64_t n = eligible_count(static_cast<double>(t), cfg,
                                   ranking.order.size());
  Rng rng(derive_seed(cfg.seed, t));
  Batch batch;
  batch.sentence_ids.reserve(cfg.batch_size);
  if (n < cfg.batch_size) {
    batch.with_replacement = true;
    for (std::uint32_t i = 0; i < cfg.batch_size; ++i) {
      batch.sentence_ids.push_back(ranking.order[rng.below(n)]);
    }
  } else {
    for (std::uint64_t rank : sample_distinct(rng, n, cfg.batch_size)) {
      batch.sentence_ids.push_back(ranking.order[rank]);
    }
  }
  return batch;
}

// Streams the full manifest: a fingerprint header line, then one line per
// step, "t<TAB>id id id ...". Memory use is constant in the number of steps.
inline void emit_manifest(std::ostream& out, const Ranking& ranking,
                          const ScheduleConfig& cfg,
                          const std::string& fingerprint_hex) {
  cfg.validate();
  out << "#fingerprint=" << fingerprint_hex << '\n';
  for (std::uint64_t t = 0; t < cfg.emit_steps; ++t) {
    Batch batch = sample_batch(t, ranking, cfg);
    out << t << '\t';
    for (std::size_t i = 0; i < batch.sentence_ids.size(); ++i) {
      if (i) out << ' ';
      out << batch.sentence_ids[i];
    }
    out << '\n';
    if (!out) throw DataError("manifest write failed at step " + std::to_string(t));
  }
}

// Streaming reader; fn(t, ids) is called once per step line.
template <class Fn>
inline std::string for_each_manifest_line(std::istream& in, Fn&& fn) {
  std::string fingerprint;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#fingerprint=", 0) == 0) fingerprint = line.substr(13);
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("manifest: bad line " + std::to_string(lineno));
    }
    std::uint64_t t = std::stoull(line.substr(0, tab));
    std::vector<std::uint32_t> ids;
    const char* p = line.c_str() + tab + 1;
    while (*p) {
      char* end = nullptr;
      ids.push_back(static_cast<std::uint32_t>(std::strtoul(p, &end, 10)));
      if (end == p) throw DataError("manifest: bad id at line " + std::to_string(lineno));
      p = end;
      while (*p == ' ') ++p;
    }
    fn(t, ids);
  }
  return fingerprint;
}

struct ManifestValidation {
  std::uint64_t steps = 0;
  std::uint64_t batch_entries = 0;
  std::uint64_t eligibility_violations = 0;
  std::uint64_t batch_size_violations = 0;
  std::string fingerprint;
};

// Full-scan validator: every sampled id must sit inside the eligible prefix
// for its step, and every batch must have exactly B entries.
inline ManifestValidation validate_manifest(std::istream& in,
                                            const Ranking& ranking,
                                            const ScheduleConfig& cfg) {
  ManifestValidation result;
  auto rank_of = ranking.rank_of();
  result.fingerprint = for_each_manifest_line(
      in, [&](std::uint64_t t, const std::vector<std::uint32_t>& ids) {
        result.steps++;
        std::uint64_t eligible =
            eligible_count(static_cast<double>(t), cfg, ranking.order.size());
        if (ids.size() != cfg.batch_size) result.batch_size_violations++;
        for (std::uint32_t id : ids) {
          result.batch_entries++;
          if (id >= rank_of.size() || rank_of[id] >= eligible) {
            result.eligibility_violations++;
          }
        }
      });
  return result;
}

// Exposure diagnostics: how often each sentence appears across the manifest.
inline std::vector<std::uint64_t> exposure_counts(std::istream& in,
                                                  std::size_t corpus_size) {
  std::vector<std::uint64_t> counts(corpus_size, 0);
  for_each_manifest_line(in,
                         [&](std::uint64_t, const std::vector<std::uint32_t>& ids) {
                           for (std::uint32_t id : ids) {
                             if (id < counts.size()) counts[id]++;
                           }
                         });
  return counts;
}

}  // namespace curricula
