#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "curricula/bpe.hpp"
#include "curricula/common.hpp"

namespace curricula {

// Per-level absolute discounts. Empty -> estimated from count-of-counts
// (Ney's d = n1 / (n1 + 2 n2), per level). A single value broadcasts to all
// levels. 0 disables smoothing at that level (test use only: probabilities
// may then be zero and surprisal infinite).
struct DiscountConfig {
  std::vector<double> per_order;

  std::vector<double> resolve(std::size_t order) const {
    if (per_order.empty()) return {};
    std::vector<double> out;
    if (per_order.size() == 1) {
      out.assign(order, per_order[0]);
    } else if (per_order.size() == order) {
      out = per_order;
    } else {
      throw ConfigError("discounts: need 1 value or one per order");
    }
    for (double d : out) {
      if (!(d >= 0.0) || d >= 1.0) {
        throw ConfigError("discounts: values must lie in [0, 1)");
      }
    }
    return out;
  }
};

namespace detail {

inline void append_id(std::string& key, TokenId id) {
  char b[4];
  std::memcpy(b, &id, 4);
  key.append(b, 4);
}

inline std::string pack_ids(std::span<const TokenId> ids) {
  std::string key;
  key.reserve(ids.size() * 4);
  for (TokenId id : ids) append_id(key, id);
  return key;
}

struct ContextStats {
  std::uint64_t total = 0;     // sum of counts over continuations
  std::uint64_t distinct = 0;  // number of distinct continuations
};

using GramTable = std::unordered_map<std::string, std::uint64_t>;
using ContextTable = std::unordered_map<std::string, ContextStats>;

inline ContextTable build_context_stats(const GramTable& grams) {
  ContextTable ctx;
  ctx.reserve(grams.size() / 2 + 1);
  for (const auto& [key, count] : grams) {
    auto& st = ctx[key.substr(0, key.size() - 4)];
    st.total += count;
    st.distinct += 1;
  }
  return ctx;
}

inline double estimate_discount(const GramTable& grams) {
  std::uint64_t n1 = 0, n2 = 0;
  for (const auto& [key, count] : grams) {
    if (count == 1) ++n1;
    if (count == 2) ++n2;
  }
  if (n1 == 0 || n2 == 0) return 0.5;
  double d = static_cast<double>(n1) / (static_cast<double>(n1) + 2.0 * n2);
  return std::clamp(d, 1e-3, 1.0 - 1e-3);
}

}  // namespace detail

// Interpolated Kneser-Ney n-gram language model. Raw counts back the
// highest level; continuation counts back the lower levels; the recursion
// terminates in a uniform distribution over the vocabulary, so every token
// has positive probability whenever all discounts are positive. Sequences
// are begin-padded so each token is conditioned on a full-width context.
class NGramTeacher {
 public:
  NGramTeacher(std::uint32_t order, std::uint64_t vocab_size,
               TokenId bos_id = BpeVocab::kBosId)
      : order_(order), vocab_size_(vocab_size), bos_id_(bos_id) {
    if (order < 1) throw ConfigError("ngram order must be >= 1");
    if (vocab_size < 1) throw ConfigError("vocab size must be >= 1");
    raw_.resize(order + 1);
    cont_.resize(order + 1);
    raw_ctx_.resize(order + 1);
    cont_ctx_.resize(order + 1);
    discounts_.assign(order, 0.75);
  }

  static NGramTeacher train(std::span<const TokenSequence> sequences,
                            std::uint32_t order, const DiscountConfig& discounts,
                            std::uint64_t vocab_size,
                            TokenId bos_id = BpeVocab::kBosId,
                            std::string metaset_label = {},
                            std::uint64_t vocab_hash = 0) {
    if (order < 1) throw ConfigError("ngram order must be >= 1");
    if (sequences.empty()) throw DataError("train_ngram: empty training set");
    NGramTeacher model(order, vocab_size, bos_id);
    model.metaset_ = std::move(metaset_label);
    model.vocab_hash_ = vocab_hash;

    std::vector<TokenId> padded;
    for (const auto& seq : sequences) {
      if (seq.ids.empty()) continue;
      padded.assign(order - 1, bos_id);
      padded.insert(padded.end(), seq.ids.begin(), seq.ids.end());
      for (std::size_t i = order - 1; i < padded.size(); ++i) {
        std::string key;
        key.reserve(4 * order);
        for (std::uint32_t k = 1; k <= order; ++k) {
          // Build the k-gram ending at i incrementally (suffix of length k).
          key.clear();
          for (std::size_t j = i + 1 - k; j <= i; ++j)
            detail::append_id(key, padded[j]);
          model.raw_[k][key] += 1;
        }
        model.tokens_seen_ += 1;
      }
    }
    if (model.tokens_seen_ == 0) {
      throw DataError("train_ngram: training set holds no tokens");
    }
    model.finalize(discounts);
    return model;
  }

  std::uint32_t order() const { return order_; }
  std::uint64_t vocab_size() const { return vocab_size_; }
  std::uint64_t tokens_seen() const { return tokens_seen_; }
  const std::vector<double>& discounts() const { return discounts_; }
  const std::string& metaset() const { return metaset_; }
  std::uint64_t vocab_hash() const { return vocab_hash_; }

  // P(token | context); context may be any length, only the final order-1
  // tokens matter and short contexts are begin-padded.
  double token_probability(std::span<const TokenId> context,
                           TokenId token) const {
    std::vector<TokenId> ctx(order_ > 0 ? order_ - 1 : 0, bos_id_);
    std::size_t take = std::min<std::size_t>(context.size(), order_ - 1);
    for (std::size_t i = 0; i < take; ++i) {
      ctx[ctx.size() - take + i] = context[context.size() - take + i];
    }
    return prob_level(order_, ctx, token);
  }

  // Surprisal in bits.
  double token_surprisal(std::span<const TokenId> context, TokenId token) const {
    return -std::log2(token_probability(context, token));
  }

  // Per-token surprisal of a sequence with begin-padding.
  std::vector<double> sequence_surprisals(std::span<const TokenId> ids) const {
    std::vector<double> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::size_t ctx_begin = i >= order_ - 1 ? i - (order_ - 1) : 0;
      out.push_back(token_surprisal(ids.subspan(ctx_begin, i - ctx_begin),
                                    ids[i]));
    }
    return out;
  }

  // Mean per-token surprisal (bits/token).
  double sentence_difficulty(std::span<const TokenId> ids) const {
    if (ids.empty()) throw DataError("sentence_difficulty: empty sequence");
    auto surp = sequence_surprisals(ids);
    double sum = 0.0;
    for (double s : surp) sum += s;
    return sum / static_cast<double>(surp.size());
  }

  // Raw k-gram count, exposed for inspection and tests.
  std::uint64_t raw_count(std::span<const TokenId> gram) const {
    if (gram.empty() || gram.size() > order_) return 0;
    const auto& table = raw_[gram.size()];
    auto it = table.find(detail::pack_ids(gram));
    return it == table.end() ? 0 : it->second;
  }

  void save(const std::filesystem::path& path) const;
  static NGramTeacher load(const std::filesystem::path& path);

  // Applies the discount configuration and derives continuation and
  // context tables from the raw counts. Called by train() and load().
  void finalize(const DiscountConfig& config) {
    for (std::uint32_t k = 1; k + 1 <= order_; ++k) {
      cont_[k].clear();
      for (const auto& [key, count] : raw_[k + 1]) {
        cont_[k][key.substr(4)] += 1;  // distinct predecessors
      }
    }
    raw_ctx_[order_] = detail::build_context_stats(raw_[order_]);
    for (std::uint32_t k = 1; k + 1 <= order_; ++k) {
      cont_ctx_[k] = detail::build_context_stats(cont_[k]);
    }
    auto resolved = config.resolve(order_);
    if (!resolved.empty()) {
      discounts_ = resolved;
    } else {
      discounts_.assign(order_, 0.75);
      for (std::uint32_t k = 1; k <= order_; ++k) {
        const auto& table = k == order_ ? raw_[k] : cont_[k];
        discounts_[k - 1] = detail::estimate_discount(table);
      }
    }
  }

 private:
  double prob_level(std::uint32_t k, std::span<const TokenId> ctx,
                    TokenId token) const {
    if (k == 0) return 1.0 / static_cast<double>(vocab_size_);
    std::span<const TokenId> lower =
        ctx.empty() ? ctx : ctx.subspan(1);
    const auto& grams = k == order_ ? raw_[k] : cont_[k];
    const auto& contexts = k == order_ ? raw_ctx_[k] : cont_ctx_[k];
    auto ctx_it = contexts.find(detail::pack_ids(ctx));
    if (ctx_it == contexts.end() || ctx_it->second.total == 0) {
      return prob_level(k - 1, lower, token);
    }
    std::string key = detail::pack_ids(ctx);
    detail::append_id(key, token);
    auto gram_it = grams.find(key);
    double num = gram_it == grams.end()
                     ? 0.0
                     : static_cast<double>(gram_it->second);
    double total = static_cast<double>(ctx_it->second.total);
    double d = discounts_[k - 1];
    double backoff = d * static_cast<double>(ctx_it->second.distinct) / total;
    return std::max(num - d, 0.0) / total +
           backoff * prob_level(k - 1, lower, token);
  }

  std::uint32_t order_;
  std::uint64_t vocab_size_;
  TokenId bos_id_;
  std::uint64_t tokens_seen_ = 0;
  std::uint64_t vocab_hash_ = 0;
  std::string metaset_;
  std::vector<double> discounts_;                 // per level, index k-1
  std::vector<detail::GramTable> raw_;            // raw_[k]: k-gram counts
  std::vector<detail::GramTable> cont_;           // cont_[k]: continuation counts
  std::vector<detail::ContextTable> raw_ctx_;     // context stats over raw_
  std::vector<detail::ContextTable> cont_ctx_;    // context stats over cont_
};

// ---- binary persistence ----------------------------------------------------
// Versioned header, then the raw count tables sorted by key so the file is
// byte-identical for identical models. Derived tables are rebuilt on load.
// A text sidecar (<path>.meta) mirrors the header for quick inspection.

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace detail

inline constexpr char kTeacherMagic[8] = {'C', 'R', 'N', 'G', 'T', '0', '0', '1'};

inline void NGramTeacher::save(const std::filesystem::path& path) const {
  AtomicFile f(path);
  auto& out = f.stream();
  out.write(kTeacherMagic, 8);
  detail::write_u32(out, order_);
  detail::write_u64(out, vocab_size_);
  detail::write_u32(out, bos_id_);
  detail::write_u64(out, tokens_seen_);
  detail::write_u64(out, vocab_hash_);
  detail::write_u64(out, metaset_.size());
  out.write(metaset_.data(), static_cast<std::streamsize>(metaset_.size()));
  detail::write_u32(out, order_);  // number of discount entries
  for (double d : discounts_) detail::write_f64(out, d);
  for (std::uint32_t k = 1; k <= order_; ++k) {
    std::vector<std::pair<std::string, std::uint64_t>> entries(
        raw_[k].begin(), raw_[k].end());
    std::sort(entries.begin(), entries.end());
    detail::write_u64(out, entries.size());
    for (const auto& [key, count] : entries) {
      out.write(key.data(), static_cast<std::streamsize>(key.size()));
      detail::write_u64(out, count);
    }
  }
  f.commit();

  AtomicFile meta(path.string() + ".meta");
  meta.stream() << "order\t" << order_ << "\n"
                << "vocab_size\t" << vocab_size_ << "\n"
                << "vocab_hash\t" << to_hex(vocab_hash_) << "\n"
                << "metaset\t" << metaset_ << "\n"
                << "tokens_seen\t" << tokens_seen_ << "\n";
  meta.stream() << "discounts";
  for (double d : discounts_) meta.stream() << '\t' << fmt_float(d);
  meta.stream() << "\n";
  meta.commit();
}

inline NGramTeacher NGramTeacher::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open teacher file: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kTeacherMagic, 8) != 0) {
    throw DataError("not a teacher file (bad magic): " + path.string());
  }
  std::uint32_t order = detail::read_u32(in);
  std::uint64_t vocab_size = detail::read_u64(in);
  TokenId bos = detail::read_u32(in);
  NGramTeacher model(order, vocab_size, bos);
  model.tokens_seen_ = detail::read_u64(in);
  model.vocab_hash_ = detail::read_u64(in);
  std::uint64_t label_len = detail::read_u64(in);
  model.metaset_.resize(label_len);
  in.read(model.metaset_.data(), static_cast<std::streamsize>(label_len));
  std::uint32_t num_discounts = detail::read_u32(in);
  DiscountConfig config;
  config.per_order.resize(num_discounts);
  for (auto& d : config.per_order) d = detail::read_f64(in);
  for (std::uint32_t k = 1; k <= order; ++k) {
    std::uint64_t entries = detail::read_u64(in);
    model.raw_[k].reserve(entries);
    std::string key(4 * k, '\0');
    for (std::uint64_t i = 0; i < entries; ++i) {
      in.read(key.data(), 4 * k);
      std::uint64_t count = detail::read_u64(in);
      model.raw_[k].emplace(key, count);
    }
  }
  if (!in) throw DataError("truncated teacher file: " + path.string());
  model.finalize(config);
  return model;
}

// ---- externally computed scores --------------------------------------------

// Per-teacher mean-surprisal scores produced outside this toolkit (for
// example by neural teachers). TSV: a header row "sentence_id<TAB><label>",
// then one "id<TAB>score" row per sentence.
struct ExternalScoreTable {
  std::string teacher_label;
  std::unordered_map<std::uint64_t, double> scores;
  bool empty_warning = false;

  std::vector<std::uint64_t> missing_up_to(std::uint64_t n) const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t id = 0; id < n; ++id) {
      if (!scores.count(id)) out.push_back(id);
    }
    return out;
  }
};

inline ExternalScoreTable load_external_scores(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file: " + path.string());
  ExternalScoreTable table;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (!header) {
      if (fields.size() != 2 || trim(fields[1]).empty()) {
        throw DataError(path.string() + ": line 1 must be a header naming the teacher");
      }
      table.teacher_label = std::string(trim(fields[1]));
      header = true;
      continue;
    }
    if (fields.size() != 2) {
      throw DataError(path.string() + ": expected 2 columns at line " +
                      std::to_string(lineno));
    }
    char* end = nullptr;
    std::string id_str(fields[0]);
    std::uint64_t id = std::strtoull(id_str.c_str(), &end, 10);
    if (end == id_str.c_str() || *end != '\0') {
      throw DataError(path.string() + ": bad sentence id at line " +
                      std::to_string(lineno));
    }
    std::string score_str(fields[1]);
    double score = std::strtod(score_str.c_str(), &end);
    if (end == score_str.c_str() || *end != '\0' || !std::isfinite(score)) {
      throw DataError(path.string() + ": non-numeric score at line " +
                      std::to_string(lineno));
    }
    if (score < 0.0) {
      throw DataError(path.string() + ": negative score at line " +
                      std::to_string(lineno));
    }
    table.scores[id] = score;
  }
  if (!header) throw DataError(path.string() + ": missing header row");
  table.empty_warning = table.scores.empty();
  return table;
}

}  // namespace curricula
