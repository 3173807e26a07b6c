#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "curricula/analysis.hpp"
#include "curricula/bpe.hpp"
#include "curricula/common.hpp"
#include "curricula/config.hpp"
#include "curricula/corpus.hpp"
#include "curricula/cross_review.hpp"
#include "curricula/eval.hpp"
#include "curricula/ngram.hpp"
#include "curricula/scheduler.hpp"

namespace curricula {

inline constexpr char kTokensMagic[8] = {'C', 'R', 'T', 'O', 'K', '0', '0', '1'};

inline void write_tokens_bin(const std::filesystem::path& path,
                             std::uint64_t fingerprint,
                             const std::vector<std::vector<TokenId>>& tokens) {
  AtomicFile f(path);
  auto& out = f.stream();
  out.write(kTokensMagic, 8);
  detail::write_u64(out, fingerprint);
  detail::write_u64(out, tokens.size());
  for (const auto& ids : tokens) {
    detail::write_u32(out, static_cast<std::uint32_t>(ids.size()));
    out.write(reinterpret_cast<const char*>(ids.data()),
              static_cast<std::streamsize>(ids.size() * sizeof(TokenId)));
  }
  f.commit();
}

inline std::pair<std::uint64_t, std::vector<std::vector<TokenId>>>
read_tokens_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open tokens file: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kTokensMagic, 8) != 0) {
    throw DataError("not a tokens file (bad magic): " + path.string());
  }
  std::uint64_t fp = detail::read_u64(in);
  std::uint64_t n = detail::read_u64(in);
  std::vector<std::vector<TokenId>> tokens(n);
  for (auto& ids : tokens) {
    std::uint32_t len = detail::read_u32(in);
    ids.resize(len);
    in.read(reinterpret_cast<char*>(ids.data()),
            static_cast<std::streamsize>(len * sizeof(TokenId)));
  }
  if (!in) throw DataError("truncated tokens file: " + path.string());
  return {fp, std::move(tokens)};
}

// First "#fingerprint=<hex>" header line of a text artifact, if any.
inline std::optional<std::uint64_t> read_fingerprint_header(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  if (line.rfind("#fingerprint=", 0) != 0) return std::nullopt;
  return std::strtoull(line.substr(13).c_str(), nullptr, 16);
}

// Runs pipeline stages against the artifact directory. Every artifact is
// stamped with the fingerprint of everything it was derived from; a stage
// whose stamp already matches is skipped, and a stage whose inputs carry a
// mismatched stamp refuses to run rather than mix provenance.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::ostream& log = std::cout)
      : cfg_(std::move(config)), log_(log) {
    cfg_.validate();
  }

  const PipelineConfig& config() const { return cfg_; }

  std::filesystem::path corpus_path() const { return cfg_.output_dir / "corpus.tsv"; }
  std::filesystem::path summary_path() const {
    return cfg_.output_dir / "corpus_summary.tsv";
  }
  std::filesystem::path vocab_dir() const { return cfg_.output_dir / "vocab"; }
  std::filesystem::path tokens_path() const { return cfg_.output_dir / "tokens.bin"; }
  std::filesystem::path metasets_path() const {
    return cfg_.output_dir / "metasets.tsv";
  }
  std::filesystem::path teacher_path(std::uint32_t m) const {
    return cfg_.output_dir / ("teacher_" + std::to_string(m) + ".bin");
  }
  std::filesystem::path difficulty_path() const {
    return cfg_.output_dir / "difficulty.tsv";
  }
  std::filesystem::path ranking_path() const {
    return cfg_.output_dir / "ranking.txt";
  }
  std::filesystem::path manifest_path() const {
    return cfg_.output_dir / "manifest.txt";
  }
  std::filesystem::path windows_path() const {
    return cfg_.output_dir / "windows.csv";
  }
  std::filesystem::path correlates_path() const {
    return cfg_.output_dir / "correlates.csv";
  }
  std::filesystem::path pairs_report_path() const {
    return cfg_.output_dir / "pairs_report.csv";
  }
  std::filesystem::path sap_report_path() const {
    return cfg_.output_dir / "sap_report.csv";
  }

  void run(const std::string& command) {
    if (command == "ingest") {
      stage_ingest();
    } else if (command == "tokenize") {
      stage_tokenize();
    } else if (command == "split") {
      stage_split();
    } else if (command == "cross-review") {
      stage_cross_review();
    } else if (command == "rank") {
      stage_rank();
    } else if (command == "schedule") {
      stage_schedule();
    } else if (command == "analyze") {
      stage_analyze();
    } else if (command == "eval-pairs") {
      stage_eval_pairs();
    } else if (command == "eval-sap") {
      stage_eval_sap();
    } else if (command == "all") {
      stage_ingest();
      stage_tokenize();
      stage_split();
      stage_cross_review();
      stage_rank();
      stage_schedule();
      stage_analyze();
      if (cfg_.eval_pairs) stage_eval_pairs();
      if (cfg_.eval_sap) stage_eval_sap();
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
  }

  // ---- expected fingerprints ------------------------------------------------

  std::uint64_t fp_sources() {
    if (!fp_sources_) {
      Fingerprint fp;
      fp.add("sources/v1");
      for (const auto& entry : cfg_.sources) {
        fp.add(entry.source);
        fp.add(read_file(entry.path));
      }
      fp_sources_ = fp.value();
    }
    return *fp_sources_;
  }
  std::uint64_t fp_ingest() {
    return Fingerprint().add("ingest/v1").add_u64(fp_sources()).value();
  }
  std::uint64_t fp_tokenize() {
    return Fingerprint()
        .add("tokenize/v1")
        .add_u64(fp_ingest())
        .add_u64(cfg_.vocab_size)
        .add_u64(cfg_.max_seq_len)
        .value();
  }
  std::uint64_t fp_split() {
    return Fingerprint()
        .add("split/v1")
        .add_u64(fp_tokenize())
        .add_u64(cfg_.num_metasets)
        .add_double(cfg_.split_tolerance)
        .add_u64(cfg_.stage_seed("split"))
        .value();
  }
  std::uint64_t fp_cross_review() {
    Fingerprint fp;
    fp.add("cross-review/v1")
        .add_u64(fp_tokenize())
        .add_u64(fp_split())
        .add_u64(cfg_.ngram_order);
    add_discounts(fp);
    return fp.value();
  }
  std::uint64_t fp_rank() {
    return Fingerprint().add("rank/v1").add_u64(fp_cross_review()).value();
  }
  std::uint64_t fp_schedule() {
    return Fingerprint()
        .add("schedule/v1")
        .add_u64(fp_rank())
        .add_double(cfg_.schedule.initial_competence)
        .add_double(cfg_.schedule.root)
        .add_u64(cfg_.schedule.ramp_steps)
        .add_u64(cfg_.schedule.batch_size)
        .add_u64(cfg_.schedule.emit_steps)
        .add_u64(cfg_.stage_seed("schedule"))
        .value();
  }
  std::uint64_t fp_analyze() {
    return Fingerprint()
        .add("analyze/v1")
        .add_u64(fp_schedule())
        .add_u64(fp_cross_review())
        .add_u64(cfg_.window_size)
        .value();
  }
  std::uint64_t fp_eval_pairs() {
    Fingerprint fp;
    fp.add("eval-pairs/v1").add_u64(fp_tokenize()).add_u64(cfg_.ngram_order);
    add_discounts(fp);
    fp.add(read_file(*cfg_.eval_pairs));
    return fp.value();
  }
  std::uint64_t fp_eval_sap() {
    Fingerprint fp;
    fp.add("eval-sap/v1").add_u64(fp_tokenize()).add_u64(cfg_.ngram_order);
    add_discounts(fp);
    fp.add(read_file(*cfg_.eval_sap));
    return fp.value();
  }

  // ---- stages ----------------------------------------------------------------

  bool stage_ingest() {
    std::uint64_t expected = fp_ingest();
    if (fresh(corpus_path(), expected)) return skip("ingest");
    Corpus corpus = ingest(cfg_.sources);
    if (corpus.sentences.empty()) throw DataError("ingest: empty corpus");
    for (const auto& w : corpus.ingest_stats.warnings) {
      log_ << "[ingest] warning: " << w << '\n';
    }
    write_text_artifact(corpus_path(), expected,
                        [&](std::ostream& out) { write_corpus_tsv(out, corpus); });
    log_ << "[ingest] wrote " << corpus_path().string() << " ("
         << corpus.size() << " sentences, "
         << corpus.ingest_stats.lines_dropped << " whitespace-only lines dropped)\n";
    corpus_ = std::move(corpus);
    return true;
  }

  bool stage_tokenize() {
    std::uint64_t expected = fp_tokenize();
    require(corpus_path(), fp_ingest(), "ingest");
    if (fresh(tokens_path(), expected)) return skip("tokenize");
    Corpus& corpus = load_corpus();
    BpeVocab vocab = train_bpe(corpus, cfg_.vocab_size);
    if (!vocab.reached_target) {
      log_ << "[tokenize] warning: corpus exhausted at vocab size "
           << vocab.size() << " (requested " << cfg_.vocab_size << ")\n";
    }
    save_vocab(vocab, vocab_dir());

    std::vector<std::vector<TokenId>> tokens(corpus.size());
    unsigned threads = resolve_threads(cfg_.threads);
    parallel_chunks(corpus.size(), threads,
                    [&](std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i) {
                        tokens[i] = encode(vocab, corpus.sentences[i].text);
                      }
                    });
    std::uint64_t truncated = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      corpus.sentences[i].token_count =
          static_cast<std::uint32_t>(tokens[i].size());
      if (tokens[i].size() > cfg_.max_seq_len) ++truncated;
    }
    write_tokens_bin(tokens_path(), expected, tokens);
    write_text_artifact(summary_path(), expected, [&](std::ostream& out) {
      write_summary_tsv(out, summarize(corpus));
    });
    double truncated_pct = 100.0 * static_cast<double>(truncated) /
                           static_cast<double>(corpus.size());
    char pct[32];
    std::snprintf(pct, sizeof(pct), "%.2f", truncated_pct);
    log_ << "[tokenize] wrote " << tokens_path().string() << " ("
         << corpus.total_tokens() << " tokens, vocab " << vocab.size() << ", "
         << pct << "% of sentences longer than " << cfg_.max_seq_len
         << " tokens)\n";
    vocab_ = std::move(vocab);
    tokens_ = std::move(tokens);
    return true;
  }

  bool stage_split() {
    std::uint64_t expected = fp_split();
    require(corpus_path(), fp_ingest(), "ingest");
    require(tokens_path(), fp_tokenize(), "tokenize");
    if (fresh(metasets_path(), expected)) return skip("split");
    Corpus& corpus = load_corpus_with_tokens();
    MetasetAssignment assignment = split_metasets(
        corpus, cfg_.num_metasets, cfg_.stage_seed("split"), cfg_.split_tolerance);
    write_text_artifact(metasets_path(), expected, [&](std::ostream& out) {
      write_metasets_tsv(out, assignment);
    });
    log_ << "[split] wrote " << metasets_path().string() << " (";
    for (std::uint32_t m = 0; m < assignment.num_metasets; ++m) {
      if (m) log_ << ", ";
      log_ << assignment.per_metaset[m].sentences << "s/"
           << assignment.per_metaset[m].tokens << "t";
    }
    log_ << ")\n";
    return true;
  }

  bool stage_cross_review() {
    std::uint64_t expected = fp_cross_review();
    require(tokens_path(), fp_tokenize(), "tokenize");
    require(metasets_path(), fp_split(), "split");
    if (fresh(difficulty_path(), expected)) return skip("cross-review");
    auto& tokens = load_tokens();
    BpeVocab& vocab = load_vocab_files();
    MetasetAssignment assignment = load_metasets(tokens.size());

    CrossReviewConfig cr;
    cr.order = cfg_.ngram_order;
    cr.discounts = cfg_.discounts;
    cr.max_seq_len = cfg_.max_seq_len;
    cr.threads = cfg_.threads;
    auto [table, teachers] = run_cross_review(tokens, assignment, vocab, cr);
    for (std::uint32_t m = 0; m < teachers.size(); ++m) {
      teachers[m].save(teacher_path(m));
    }
    write_text_artifact(difficulty_path(), expected, [&](std::ostream& out) {
      write_difficulty_tsv(out, table);
    });
    auto agreement = teacher_agreement(table);
    log_ << "[cross-review] wrote " << difficulty_path().string() << " ("
         << table.rows.size() << " sentences, " << teachers.size()
         << " teachers; mean score stddev "
         << fmt_float(agreement.mean_score_stddev) << " bits"
         << (agreement.mean_pairwise_spearman
                 ? ", mean pairwise spearman " +
                       fmt_float(*agreement.mean_pairwise_spearman)
                 : std::string())
         << ")\n";
    return true;
  }

  bool stage_rank() {
    std::uint64_t expected = fp_rank();
    require(difficulty_path(), fp_cross_review(), "cross-review");
    if (fresh(ranking_path(), expected)) return skip("rank");
    DifficultyTable table = load_difficulty();
    Ranking ranking = rank_sentences(table, table.rows.size());
    write_text_artifact(ranking_path(), expected, [&](std::ostream& out) {
      write_ranking(out, ranking);
    });
    log_ << "[rank] wrote " << ranking_path().string() << " ("
         << ranking.order.size() << " sentences)\n";
    return true;
  }

  bool stage_schedule() {
    std::uint64_t expected = fp_schedule();
    require(ranking_path(), fp_rank(), "rank");
    if (fresh(manifest_path(), expected)) return skip("schedule");
    Ranking ranking = load_ranking();
    ScheduleConfig sched = cfg_.schedule;
    sched.seed = cfg_.stage_seed("schedule");
    AtomicFile f(manifest_path());
    emit_manifest(f.stream(), ranking, sched, to_hex(expected));
    f.commit();
    log_ << "[schedule] wrote " << manifest_path().string() << " ("
         << sched.emit_steps << " steps x " << sched.batch_size << ")\n";
    return true;
  }

  bool stage_analyze() {
    std::uint64_t expected = fp_analyze();
    require(corpus_path(), fp_ingest(), "ingest");
    require(tokens_path(), fp_tokenize(), "tokenize");
    require(difficulty_path(), fp_cross_review(), "cross-review");
    require(manifest_path(), fp_schedule(), "schedule");
    if (fresh(windows_path(), expected) && fresh(correlates_path(), expected)) {
      return skip("analyze");
    }
    Corpus& corpus = load_corpus_with_tokens();
    auto& tokens = load_tokens();
    DifficultyTable table = load_difficulty();

    std::ifstream manifest(manifest_path());
    WindowReport windows = domain_proportions(manifest, corpus, cfg_.window_size);
    if (windows.single_window_warning) {
      log_ << "[analyze] warning: window_size exceeds manifest steps; "
              "reporting a single window\n";
    }
    auto unigrams = unigram_counts(tokens, vocab_size_hint());
    CorrelatesReport correlates = difficulty_correlates(table, tokens, unigrams);
    write_text_artifact(windows_path(), expected, [&](std::ostream& out) {
      write_window_csv(out, windows);
    });
    write_text_artifact(correlates_path(), expected, [&](std::ostream& out) {
      write_correlates_csv(out, correlates);
    });
    log_ << "[analyze] wrote " << windows_path().string() << ", "
         << correlates_path().string() << " (spearman length "
         << (correlates.spearman_length ? fmt_float(*correlates.spearman_length)
                                        : "NA")
         << ", adjusted R^2 " << fmt_float(correlates.ols.adjusted_r2) << ")\n";
    return true;
  }

  bool stage_eval_pairs() {
    if (!cfg_.eval_pairs) throw ConfigError("eval-pairs: eval.pairs not configured");
    std::uint64_t expected = fp_eval_pairs();
    require(tokens_path(), fp_tokenize(), "tokenize");
    if (fresh(pairs_report_path(), expected)) return skip("eval-pairs");
    auto pairs = load_minimal_pairs(*cfg_.eval_pairs);
    if (pairs.empty()) throw DataError("eval-pairs: no pairs in file");
    const NGramTeacher& teacher = full_corpus_teacher();
    PairReport report = minimal_pair_accuracy(teacher, load_vocab_files(), pairs);
    write_text_artifact(pairs_report_path(), expected, [&](std::ostream& out) {
      write_pair_report_csv(out, report);
    });
    log_ << "[eval-pairs] wrote " << pairs_report_path().string()
         << " (overall accuracy " << fmt_float(report.overall.accuracy())
         << " on " << report.overall.total << " pairs)\n";
    return true;
  }

  bool stage_eval_sap() {
    if (!cfg_.eval_sap) throw ConfigError("eval-sap: eval.sap not configured");
    std::uint64_t expected = fp_eval_sap();
    require(tokens_path(), fp_tokenize(), "tokenize");
    if (fresh(sap_report_path(), expected)) return skip("eval-sap");
    auto specs = load_sap_items(*cfg_.eval_sap);
    if (specs.empty()) throw DataError("eval-sap: no items in file");
    const NGramTeacher& teacher = full_corpus_teacher();
    BpeVocab& vocab = load_vocab_files();
    std::vector<std::pair<std::string, double>> effects;
    for (const auto& spec : specs) {
      SapItem item = resolve_sap_item(spec, vocab);
      effects.emplace_back(item.construction, surprisal_effect(teacher, item));
    }
    EffectReport report = aggregate_effects(effects);
    write_text_artifact(sap_report_path(), expected, [&](std::ostream& out) {
      write_effect_report_csv(out, report);
    });
    log_ << "[eval-sap] wrote " << sap_report_path().string() << " ("
         << report.rows.size() << " constructions)\n";
    return true;
  }

 private:
  void add_discounts(Fingerprint& fp) const {
    if (cfg_.discounts.per_order.empty()) {
      fp.add("estimate");
    } else {
      for (double d : cfg_.discounts.per_order) fp.add_double(d);
    }
  }

  bool fresh(const std::filesystem::path& path, std::uint64_t expected) const {
    if (path == tokens_path()) {
      std::ifstream in(path, std::ios::binary);
      if (!in) return false;
      char magic[8];
      in.read(magic, 8);
      if (!in || std::memcmp(magic, kTokensMagic, 8) != 0) return false;
      return detail::read_u64(in) == expected;
    }
    auto fp = read_fingerprint_header(path);
    return fp && *fp == expected;
  }

  void require(const std::filesystem::path& path, std::uint64_t expected,
               const std::string& producer) {
    if (!std::filesystem::exists(path)) {
      throw DependencyError("missing artifact " + path.string() + "; run `" +
                            producer + "` first");
    }
    if (!fresh(path, expected)) {
      throw DependencyError("stale artifact " + path.string() +
                            " (fingerprint mismatch); rebuild with `" +
                            producer + "`");
    }
  }

  bool skip(const std::string& stage) {
    log_ << "[" << stage << "] up to date\n";
    return false;
  }

  template <class Writer>
  void write_text_artifact(const std::filesystem::path& path,
                           std::uint64_t fingerprint, Writer&& writer) {
    AtomicFile f(path);
    f.stream() << "#fingerprint=" << to_hex(fingerprint) << '\n';
    writer(f.stream());
    f.commit();
  }

  Corpus& load_corpus() {
    if (!corpus_) {
      std::ifstream in(corpus_path());
      if (!in) throw DependencyError("missing artifact " + corpus_path().string());
      corpus_ = read_corpus_tsv(in);
    }
    return *corpus_;
  }

  std::vector<std::vector<TokenId>>& load_tokens() {
    if (!tokens_) {
      auto [fp, tokens] = read_tokens_bin(tokens_path());
      tokens_ = std::move(tokens);
    }
    return *tokens_;
  }

  Corpus& load_corpus_with_tokens() {
    Corpus& corpus = load_corpus();
    auto& tokens = load_tokens();
    if (tokens.size() != corpus.size()) {
      throw DependencyError("tokens.bin does not match corpus.tsv");
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      corpus.sentences[i].token_count =
          static_cast<std::uint32_t>(tokens[i].size());
    }
    return corpus;
  }

  BpeVocab& load_vocab_files() {
    if (!vocab_) vocab_ = load_vocab(vocab_dir());
    return *vocab_;
  }

  MetasetAssignment load_metasets(std::size_t corpus_size) {
    std::ifstream in(metasets_path());
    if (!in) throw DependencyError("missing artifact " + metasets_path().string());
    MetasetAssignment assignment;
    assignment.assignment.assign(corpus_size, 0);
    std::string line;
    bool header_seen = false;
    std::uint32_t max_metaset = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header_seen) {
        header_seen = true;
        continue;
      }
      auto fields = split(line, '\t');
      if (fields.size() != 2) throw DataError("metasets.tsv: bad row");
      std::size_t id = std::stoull(std::string(fields[0]));
      auto m = static_cast<std::uint32_t>(std::stoul(std::string(fields[1])));
      if (id >= corpus_size) throw DataError("metasets.tsv: id out of range");
      assignment.assignment[id] = m;
      max_metaset = std::max(max_metaset, m);
      ++rows;
    }
    if (rows != corpus_size) {
      throw DataError("metasets.tsv: expected " + std::to_string(corpus_size) +
                      " rows, found " + std::to_string(rows));
    }
    assignment.num_metasets = std::max(cfg_.num_metasets, max_metaset + 1);
    assignment.per_metaset.assign(assignment.num_metasets, {});
    for (std::size_t id = 0; id < corpus_size; ++id) {
      assignment.per_metaset[assignment.assignment[id]].sentences++;
    }
    return assignment;
  }

  DifficultyTable load_difficulty() {
    std::ifstream in(difficulty_path());
    if (!in) throw DependencyError("missing artifact " + difficulty_path().string());
    return read_difficulty_tsv(in);
  }

  Ranking load_ranking() {
    std::ifstream in(ranking_path());
    if (!in) throw DependencyError("missing artifact " + ranking_path().string());
    return read_ranking(in);
  }

  std::size_t vocab_size_hint() {
    return load_vocab_files().size();
  }

  // Shared scorer for the eval stages: one teacher trained on the entire
  // tokenized corpus (evaluation items are external, so holding data out
  // buys nothing).
  const NGramTeacher& full_corpus_teacher() {
    if (!full_teacher_) {
      auto& tokens = load_tokens();
      BpeVocab& vocab = load_vocab_files();
      std::vector<TokenSequence> sequences;
      sequences.reserve(tokens.size());
      for (std::size_t id = 0; id < tokens.size(); ++id) {
        for (std::size_t pos = 0; pos < tokens[id].size();
             pos += cfg_.max_seq_len) {
          TokenSequence seq;
          seq.origin_sentence_id = static_cast<std::uint32_t>(id);
          seq.segment_index = static_cast<std::uint32_t>(pos / cfg_.max_seq_len);
          std::size_t end = std::min(tokens[id].size(), pos + cfg_.max_seq_len);
          seq.ids.assign(tokens[id].begin() + static_cast<std::ptrdiff_t>(pos),
                         tokens[id].begin() + static_cast<std::ptrdiff_t>(end));
          sequences.push_back(std::move(seq));
        }
      }
      full_teacher_ = NGramTeacher::train(sequences, cfg_.ngram_order,
                                          cfg_.discounts, vocab.size(),
                                          BpeVocab::kBosId, "full",
                                          vocab.fingerprint());
    }
    return *full_teacher_;
  }

  PipelineConfig cfg_;
  std::ostream& log_;
  std::optional<std::uint64_t> fp_sources_;
  std::optional<Corpus> corpus_;
  std::optional<std::vector<std::vector<TokenId>>> tokens_;
  std::optional<BpeVocab> vocab_;
  std::optional<NGramTeacher> full_teacher_;
};

// ---- command line -----------------------------------------------------------

inline constexpr const char* kCliUsage = R"(usage: curricula <command> --config <file> [--set key=value]...

Orders a line-delimited training corpus from easy to difficult using
cross-review teacher surprisal and emits a deterministic batch schedule.

commands:
  ingest        read source files into the sentence inventory
  tokenize      train the BPE vocabulary and encode the corpus
  split         partition the corpus into balanced metasets
  cross-review  train per-metaset teachers and score every sentence
  rank          order sentences by ascending difficulty
  schedule      emit the competence-gated batch manifest
  analyze       per-window source mix and difficulty correlates
  eval-pairs    minimal-pair accuracy of the full-corpus teacher
  eval-sap      ambiguous/unambiguous surprisal effects
  all           run every stage in dependency order

options:
  --config <file>     pipeline configuration (required)
  --set key=value     override a config entry (repeatable)
  -h, --help          show this message

Stages are idempotent: artifacts carry a fingerprint of their inputs and a
stage whose artifact is current is skipped. Exit codes: 0 success, 2 config
error, 3 dependency/fingerprint error, 4 data error.
)";

inline int run_cli(int argc, const char* const* argv) {
  try {
    std::string command;
    std::string config_path;
    std::vector<std::string> overrides;
    for (int i = 1; i < argc; ++i) {
      std::string arg = argv[i];
      if (arg == "-h" || arg == "--help") {
        std::cout << kCliUsage;
        return 0;
      } else if (arg == "--config") {
        if (++i >= argc) throw ConfigError("--config expects a path");
        config_path = argv[i];
      } else if (arg == "--set") {
        if (++i >= argc) throw ConfigError("--set expects key=value");
        overrides.push_back(argv[i]);
      } else if (!arg.empty() && arg[0] == '-') {
        throw ConfigError("unknown option '" + arg + "'");
      } else if (command.empty()) {
        command = arg;
      } else {
        throw ConfigError("unexpected argument '" + arg + "'");
      }
    }
    if (command.empty()) {
      std::cout << kCliUsage;
      return 2;
    }
    if (config_path.empty()) throw ConfigError("--config is required");
    PipelineConfig cfg = parse_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    Pipeline pipeline(std::move(cfg));
    pipeline.run(command);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error\tconfig\t" << e.what() << '\n';
    return 2;
  } catch (const DependencyError& e) {
    std::cerr << "error\tdependency\t" << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error\tdata\t" << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error\tdata\tmalformed numeric field: " << e.what() << '\n';
    return 4;
  } catch (const std::out_of_range& e) {
    std::cerr << "error\tdata\tnumeric field out of range: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error\tinternal\t" << e.what() << '\n';
    return 1;
  }
}

}  // namespace curricula
