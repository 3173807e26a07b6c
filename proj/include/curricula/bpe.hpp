#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "curricula/common.hpp"
#include "curricula/corpus.hpp"

namespace curricula {

// Byte-level BPE vocabulary. Id layout: the three specials, then the 256
// single-byte tokens, then merged tokens in training order. Tokens are raw
// byte strings; no normalization or pre-tokenization is applied, so merges
// may cross whitespace.
struct BpeVocab {
  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kUnkId = 1;
  static constexpr TokenId kBosId = 2;
  static constexpr TokenId kNumSpecials = 3;
  static constexpr TokenId kByteBase = kNumSpecials;  // byte b -> id b + 3

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, TokenId> token_to_id;
  std::vector<std::pair<TokenId, TokenId>> merges;  // by rank
  std::unordered_map<std::uint64_t, TokenId> merged_id;    // pair key -> new id
  std::unordered_map<std::uint64_t, std::size_t> merge_rank;  // pair key -> rank
  bool reached_target = true;  // false if the corpus ran out of pairs

  static std::uint64_t pair_key(TokenId left, TokenId right) {
    return (static_cast<std::uint64_t>(left) << 32) | right;
  }

  std::size_t size() const { return id_to_token.size(); }

  bool is_special(TokenId id) const { return id < kNumSpecials; }

  // Stable hash over the full token list; teachers record it so that models
  // and vocabularies cannot be mixed accidentally.
  std::uint64_t fingerprint() const {
    Fingerprint fp;
    for (const auto& t : id_to_token) fp.add(t);
    return fp.value();
  }
};

inline BpeVocab make_byte_vocab() {
  BpeVocab v;
  v.id_to_token = {"<pad>", "<unk>", "<s>"};
  for (int b = 0; b < 256; ++b) {
    v.id_to_token.push_back(std::string(1, static_cast<char>(b)));
  }
  for (TokenId id = 0; id < v.id_to_token.size(); ++id) {
    v.token_to_id.emplace(v.id_to_token[id], id);
  }
  return v;
}

// One encoded segment of a sentence; segment 0 is the head, higher indices
// hold overflow produced by chunk_encode.
struct TokenSequence {
  std::vector<TokenId> ids;
  std::uint32_t origin_sentence_id = 0;
  std::uint32_t segment_index = 0;
};

namespace detail {

struct PqEntry {
  std::uint64_t count;
  TokenId left;
  TokenId right;
};

// Orders by count, ties by lexicographically smaller (left, right) token
// strings so training is deterministic.
struct PqCompare {
  const std::vector<std::string>* tokens;
  bool operator()(const PqEntry& a, const PqEntry& b) const {
    if (a.count != b.count) return a.count < b.count;
    const std::string& al = (*tokens)[a.left];
    const std::string& bl = (*tokens)[b.left];
    if (al != bl) return al > bl;
    return (*tokens)[a.right] > (*tokens)[b.right];
  }
};

}  // namespace detail

// Trains a byte-level BPE vocabulary of (at most) vocab_size entries by
// greedy highest-frequency pair merging over whole lines. Identical lines
// are collapsed and weighted by frequency.
inline BpeVocab train_bpe(std::span<const std::string> lines,
                          std::size_t vocab_size) {
  BpeVocab vocab = make_byte_vocab();
  if (vocab_size < vocab.size()) {
    throw ConfigError("train_bpe: vocab_size must be at least " +
                      std::to_string(vocab.size()) +
                      " (bytes + special tokens)");
  }
  if (lines.empty()) throw DataError("train_bpe: empty corpus");

  // Collapse duplicate lines, first-seen order.
  std::vector<std::vector<TokenId>> words;
  std::vector<std::uint64_t> freq;
  {
    std::unordered_map<std::string_view, std::size_t> seen;
    for (const auto& line : lines) {
      auto it = seen.find(line);
      if (it != seen.end()) {
        freq[it->second]++;
        continue;
      }
      seen.emplace(line, words.size());
      std::vector<TokenId> syms;
      syms.reserve(line.size());
      for (unsigned char b : line) syms.push_back(BpeVocab::kByteBase + b);
      words.push_back(std::move(syms));
      freq.push_back(1);
    }
  }

  std::unordered_map<std::uint64_t, std::int64_t> pair_count;
  std::unordered_map<std::uint64_t, std::unordered_set<std::uint32_t>> pair_words;
  detail::PqCompare cmp{&vocab.id_to_token};
  std::priority_queue<detail::PqEntry, std::vector<detail::PqEntry>,
                      detail::PqCompare>
      queue(cmp);

  // Every count change pushes a fresh queue entry; pops discard entries whose
  // stored count no longer matches the live count (lazy invalidation).
  auto bump = [&](TokenId l, TokenId r, std::int64_t delta, std::uint32_t w) {
    std::uint64_t key = BpeVocab::pair_key(l, r);
    std::int64_t c = (pair_count[key] += delta);
    if (delta > 0) pair_words[key].insert(w);
    queue.push({static_cast<std::uint64_t>(c < 0 ? 0 : c), l, r});
  };

  for (std::uint32_t w = 0; w < words.size(); ++w) {
    const auto& syms = words[w];
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      std::uint64_t key = BpeVocab::pair_key(syms[i], syms[i + 1]);
      pair_count[key] += static_cast<std::int64_t>(freq[w]);
      pair_words[key].insert(w);
    }
  }
  for (const auto& [key, c] : pair_count) {
    queue.push({static_cast<std::uint64_t>(c), static_cast<TokenId>(key >> 32),
                static_cast<TokenId>(key & 0xffffffffu)});
  }

  std::size_t target_merges = vocab_size - vocab.size();
  std::unordered_set<std::uint64_t> banned;
  while (vocab.merges.size() < target_merges) {
    detail::PqEntry best{};
    bool have = false;
    while (!queue.empty()) {
      best = queue.top();
      std::uint64_t key = BpeVocab::pair_key(best.left, best.right);
      if (banned.count(key)) {
        queue.pop();
        continue;
      }
      auto it = pair_count.find(key);
      std::int64_t live = it == pair_count.end() ? 0 : it->second;
      if (live > 0 && best.count == static_cast<std::uint64_t>(live)) {
        // A merge whose concatenation collides with an existing token
        // (e.g. literal "<pad>" text) would break vocab bijectivity;
        // such pairs are skipped permanently.
        if (vocab.token_to_id.count(vocab.id_to_token[best.left] +
                                    vocab.id_to_token[best.right])) {
          banned.insert(key);
          queue.pop();
          continue;
        }
        have = true;
        break;
      }
      queue.pop();  // stale
    }
    if (!have) break;

    TokenId left = best.left, right = best.right;
    TokenId new_id = static_cast<TokenId>(vocab.size());
    vocab.id_to_token.push_back(vocab.id_to_token[left] +
                                vocab.id_to_token[right]);
    vocab.token_to_id.emplace(vocab.id_to_token.back(), new_id);
    std::uint64_t key = BpeVocab::pair_key(left, right);
    vocab.merge_rank.emplace(key, vocab.merges.size());
    vocab.merges.emplace_back(left, right);
    vocab.merged_id.emplace(key, new_id);

    std::vector<std::uint32_t> candidates(pair_words[key].begin(),
                                          pair_words[key].end());
    std::sort(candidates.begin(), candidates.end());
    pair_words.erase(key);

    for (std::uint32_t w : candidates) {
      auto& syms = words[w];
      std::int64_t f = static_cast<std::int64_t>(freq[w]);
      // Rewrite the line left to right, adjusting only the pairs around
      // each occurrence. prev_was_merge distinguishes a neighbor that was
      // itself just produced by this merge (its old boundary pair was
      // already retired as the previous occurrence's right neighbor).
      std::vector<TokenId> merged;
      merged.reserve(syms.size());
      bool prev_was_merge = false;
      bool any = false;
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          if (!merged.empty()) {
            if (!prev_was_merge) bump(merged.back(), left, -f, w);
            bump(merged.back(), new_id, f, w);
          }
          if (i + 2 < syms.size()) bump(right, syms[i + 2], -f, w);
          merged.push_back(new_id);
          prev_was_merge = true;
          any = true;
          i += 2;
        } else {
          if (prev_was_merge) bump(new_id, syms[i], f, w);
          merged.push_back(syms[i]);
          prev_was_merge = false;
          ++i;
        }
      }
      if (any) syms = std::move(merged);
    }
    pair_count.erase(key);
  }

  vocab.reached_target = vocab.size() == vocab_size;
  return vocab;
}

inline BpeVocab train_bpe(const Corpus& corpus, std::size_t vocab_size) {
  std::vector<std::string> lines;
  lines.reserve(corpus.size());
  for (const auto& s : corpus.sentences) lines.push_back(s.text);
  return train_bpe(lines, vocab_size);
}

struct TokenSpan {
  TokenId id;
  std::uint32_t byte_start;
  std::uint32_t byte_end;
};

// Encodes text to tokens with byte offsets: start from single bytes, then
// repeatedly apply the earliest-ranked merge present anywhere in the
// sequence (all its occurrences, left to right).
inline std::vector<TokenSpan> encode_with_offsets(const BpeVocab& vocab,
                                                  std::string_view text) {
  std::vector<TokenSpan> syms;
  syms.reserve(text.size());
  for (std::uint32_t i = 0; i < text.size(); ++i) {
    syms.push_back({BpeVocab::kByteBase + static_cast<unsigned char>(text[i]),
                    i, i + 1});
  }
  if (syms.size() < 2) return syms;

  const auto& rank = vocab.merge_rank;
  for (;;) {
    std::size_t best_rank = SIZE_MAX;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = rank.find(BpeVocab::pair_key(syms[i].id, syms[i + 1].id));
      if (it != rank.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == SIZE_MAX) break;
    TokenId left = vocab.merges[best_rank].first;
    TokenId right = vocab.merges[best_rank].second;
    TokenId merged =
        vocab.merged_id.at(BpeVocab::pair_key(left, right));
    std::vector<TokenSpan> next;
    next.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i].id == left && syms[i + 1].id == right) {
        next.push_back({merged, syms[i].byte_start, syms[i + 1].byte_end});
        i += 2;
      } else {
        next.push_back(syms[i]);
        ++i;
      }
    }
    syms = std::move(next);
  }
  return syms;
}

inline std::vector<TokenId> encode(const BpeVocab& vocab,
                                   std::string_view text) {
  auto spans = encode_with_offsets(vocab, text);
  std::vector<TokenId> ids;
  ids.reserve(spans.size());
  for (const auto& s : spans) ids.push_back(s.id);
  return ids;
}

// Inverse of encode; byte-exact. Special or out-of-range ids are rejected
// with the offending position.
inline std::string decode(const BpeVocab& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    TokenId id = ids[i];
    if (id >= vocab.size()) {
      throw DataError("decode: id " + std::to_string(id) +
                      " out of range at position " + std::to_string(i));
    }
    if (vocab.is_special(id)) {
      throw DataError("decode: special id " + std::to_string(id) +
                      " in payload at position " + std::to_string(i));
    }
    out += vocab.id_to_token[id];
  }
  return out;
}

// Splits the full encoding of a sentence into segments of at most
// max_seq_len tokens; overflow becomes additional segments rather than
// being discarded. Concatenating the segments reproduces the encoding.
// The sentence's token_count is set to the total id count.
inline std::vector<TokenSequence> chunk_encode(const BpeVocab& vocab,
                                               SentenceRecord& sentence,
                                               std::size_t max_seq_len) {
  if (max_seq_len < 2) throw ConfigError("chunk_encode: max_seq_len must be >= 2");
  std::vector<TokenId> ids = encode(vocab, sentence.text);
  sentence.token_count = static_cast<std::uint32_t>(ids.size());
  std::vector<TokenSequence> segments;
  std::uint32_t index = 0;
  std::size_t pos = 0;
  do {
    TokenSequence seq;
    seq.origin_sentence_id = sentence.id;
    seq.segment_index = index++;
    std::size_t end = std::min(ids.size(), pos + max_seq_len);
    seq.ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                   ids.begin() + static_cast<std::ptrdiff_t>(end));
    segments.push_back(std::move(seq));
    pos = end;
  } while (pos < ids.size());
  return segments;
}

// ---- persistence ----------------------------------------------------------
// merges.txt: "<left> <right>" per line; vocab.tsv: "<token>\t<id>".
// Tokens are escaped byte-hex (\xHH) for anything outside printable ASCII,
// plus space and backslash since those are structural in the formats.

inline std::string escape_token(std::string_view token) {
  std::string out;
  for (unsigned char c : token) {
    if (c > 0x20 && c < 0x7f && c != '\\') {
      out += static_cast<char>(c);
    } else {
      char buf[5];
      std::snprintf(buf, sizeof(buf), "\\x%02x", c);
      out += buf;
    }
  }
  return out;
}

inline std::string unescape_token(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '\\') {
      if (i + 3 >= text.size() || text[i + 1] != 'x') {
        throw DataError("bad escape in token: " + std::string(text));
      }
      auto hex = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw DataError("bad hex digit in token: " + std::string(text));
      };
      out += static_cast<char>(hex(text[i + 2]) * 16 + hex(text[i + 3]));
      i += 4;
    } else {
      out += text[i];
      ++i;
    }
  }
  return out;
}

inline void save_vocab(const BpeVocab& vocab,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    AtomicFile f(dir / "vocab.tsv");
    for (TokenId id = 0; id < vocab.size(); ++id) {
      f.stream() << escape_token(vocab.id_to_token[id]) << '\t' << id << '\n';
    }
    f.commit();
  }
  {
    AtomicFile f(dir / "merges.txt");
    for (const auto& [l, r] : vocab.merges) {
      f.stream() << escape_token(vocab.id_to_token[l]) << ' '
                 << escape_token(vocab.id_to_token[r]) << '\n';
    }
    f.commit();
  }
}

inline BpeVocab load_vocab(const std::filesystem::path& dir) {
  BpeVocab vocab;
  {
    std::ifstream in(dir / "vocab.tsv");
    if (!in) throw DataError("cannot open " + (dir / "vocab.tsv").string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split(line, '\t');
      if (fields.size() != 2) {
        throw DataError("vocab.tsv: bad row at line " + std::to_string(lineno));
      }
      std::string token = unescape_token(fields[0]);
      auto id = static_cast<TokenId>(std::stoul(std::string(fields[1])));
      if (id != vocab.id_to_token.size()) {
        throw DataError("vocab.tsv: ids must be contiguous, line " +
                        std::to_string(lineno));
      }
      vocab.id_to_token.push_back(token);
      if (!vocab.token_to_id.emplace(std::move(token), id).second) {
        throw DataError("vocab.tsv: duplicate token at line " +
                        std::to_string(lineno));
      }
    }
  }
  if (vocab.size() < BpeVocab::kByteBase + 256) {
    throw DataError("vocab.tsv: missing byte-level base alphabet");
  }
  {
    std::ifstream in(dir / "merges.txt");
    if (!in) throw DataError("cannot open " + (dir / "merges.txt").string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split(line, ' ');
      if (fields.size() != 2) {
        throw DataError("merges.txt: bad row at line " + std::to_string(lineno));
      }
      auto find = [&](std::string_view esc) -> TokenId {
        auto it = vocab.token_to_id.find(unescape_token(esc));
        if (it == vocab.token_to_id.end()) {
          throw DataError("merges.txt: unknown token at line " +
                          std::to_string(lineno));
        }
        return it->second;
      };
      TokenId l = find(fields[0]);
      TokenId r = find(fields[1]);
      auto it = vocab.token_to_id.find(vocab.id_to_token[l] + vocab.id_to_token[r]);
      if (it == vocab.token_to_id.end()) {
        throw DataError("merges.txt: merge result missing from vocab, line " +
                        std::to_string(lineno));
      }
      // Merge k must have produced token id base+256+k; anything else means
      // the two files disagree.
      TokenId expected = BpeVocab::kByteBase + 256 +
                         static_cast<TokenId>(vocab.merges.size());
      if (it->second != expected) {
        throw DataError("merges.txt: merge order does not match vocab ids, line " +
                        std::to_string(lineno));
      }
      vocab.merge_rank.emplace(BpeVocab::pair_key(l, r), vocab.merges.size());
      vocab.merges.emplace_back(l, r);
      vocab.merged_id.emplace(BpeVocab::pair_key(l, r), it->second);
    }
  }
  if (vocab.size() != BpeVocab::kByteBase + 256 + vocab.merges.size()) {
    throw DataError("vocab.tsv holds tokens that no merge produces");
  }
  return vocab;
}

}  // namespace curricula
