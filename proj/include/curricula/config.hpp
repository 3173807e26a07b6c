#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curricula/common.hpp"
#include "curricula/corpus.hpp"
#include "curricula/ngram.hpp"
#include "curricula/scheduler.hpp"

namespace curricula {

// Declarative pipeline configuration, read from a line-oriented
// "key = value" file with dotted section prefixes. Every stage draws its
// parameters (and its derived seed) from here.
struct PipelineConfig {
  std::vector<FileEntry> sources;  // source.<tag> = path[,path...]
  std::filesystem::path output_dir = "out";

  std::size_t vocab_size = 50272;
  std::size_t max_seq_len = 128;

  std::uint32_t num_metasets = 5;
  double split_tolerance = 0.02;

  std::uint32_t ngram_order = 4;
  DiscountConfig discounts;  // ngram.discounts = d1,d2,... (empty: estimate)

  ScheduleConfig schedule;  // schedule.c0/p/T/batch_size/steps
  bool schedule_steps_set = false;

  std::uint64_t seed = 12345;
  std::uint64_t window_size = 28937;
  unsigned threads = 0;

  std::optional<std::filesystem::path> eval_pairs;
  std::optional<std::filesystem::path> eval_sap;

  std::uint64_t stage_seed(std::string_view stage) const {
    return derive_seed(seed, stage);
  }

  void validate() const {
    if (sources.empty()) throw ConfigError("config: no source.<tag> entries");
    if (vocab_size <= 259) {
      throw ConfigError("config: vocab_size must exceed 259 (bytes + specials)");
    }
    if (max_seq_len < 2) throw ConfigError("config: max_seq_len must be >= 2");
    if (num_metasets < 2) throw ConfigError("config: metasets must be >= 2");
    if (!(split_tolerance > 0.0) || split_tolerance >= 1.0) {
      throw ConfigError("config: split_tolerance must lie in (0, 1)");
    }
    if (ngram_order < 1) throw ConfigError("config: ngram.order must be >= 1");
    discounts.resolve(ngram_order);  // validates values
    schedule.validate();
    if (window_size < 1) throw ConfigError("config: window_size must be >= 1");
  }
};

namespace detail {

inline std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  char* end = nullptr;
  std::string v(value);
  std::uint64_t out = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config: bad integer for '" + std::string(key) + "': " + v);
  }
  return out;
}

inline double parse_f64(std::string_view key, std::string_view value) {
  char* end = nullptr;
  std::string v(value);
  double out = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config: bad number for '" + std::string(key) + "': " + v);
  }
  return out;
}

}  // namespace detail

// Applies one "key = value" assignment. Unknown keys are an error naming
// the key.
inline void apply_config_entry(PipelineConfig& cfg, std::string_view key,
                               std::string_view value) {
  using detail::parse_f64;
  using detail::parse_u64;
  if (key.rfind("source.", 0) == 0) {
    std::string tag(key.substr(7));
    if (tag.empty()) throw ConfigError("config: empty source tag");
    for (auto path : split(value, ',')) {
      path = trim(path);
      if (path.empty()) continue;
      cfg.sources.push_back({std::filesystem::path(std::string(path)), tag});
    }
  } else if (key == "output_dir") {
    cfg.output_dir = std::string(value);
  } else if (key == "vocab_size") {
    cfg.vocab_size = parse_u64(key, value);
  } else if (key == "max_seq_len") {
    cfg.max_seq_len = parse_u64(key, value);
  } else if (key == "metasets") {
    cfg.num_metasets = static_cast<std::uint32_t>(parse_u64(key, value));
  } else if (key == "split_tolerance") {
    cfg.split_tolerance = parse_f64(key, value);
  } else if (key == "ngram.order") {
    cfg.ngram_order = static_cast<std::uint32_t>(parse_u64(key, value));
  } else if (key == "ngram.discounts") {
    cfg.discounts.per_order.clear();
    for (auto part : split(value, ',')) {
      part = trim(part);
      if (!part.empty()) cfg.discounts.per_order.push_back(parse_f64(key, part));
    }
  } else if (key == "schedule.c0") {
    cfg.schedule.initial_competence = parse_f64(key, value);
  } else if (key == "schedule.p") {
    cfg.schedule.root = parse_f64(key, value);
  } else if (key == "schedule.T") {
    cfg.schedule.ramp_steps = parse_u64(key, value);
    if (!cfg.schedule_steps_set) cfg.schedule.emit_steps = cfg.schedule.ramp_steps;
  } else if (key == "schedule.batch_size") {
    cfg.schedule.batch_size = static_cast<std::uint32_t>(parse_u64(key, value));
  } else if (key == "schedule.steps") {
    cfg.schedule.emit_steps = parse_u64(key, value);
    cfg.schedule_steps_set = true;
  } else if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "window_size") {
    cfg.window_size = parse_u64(key, value);
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(parse_u64(key, value));
  } else if (key == "eval.pairs") {
    cfg.eval_pairs = std::string(value);
  } else if (key == "eval.sap") {
    cfg.eval_sap = std::string(value);
  } else {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
}

inline PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv[0] == '#') continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config: missing '=' at line " + std::to_string(lineno));
    }
    apply_config_entry(cfg, trim(sv.substr(0, eq)), trim(sv.substr(eq + 1)));
  }
  return cfg;
}

inline PipelineConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

// "--set key=value" command-line overrides.
inline void apply_override(PipelineConfig& cfg, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("--set expects key=value, got '" +
                      std::string(assignment) + "'");
  }
  auto key = trim(assignment.substr(0, eq));
  if (key.rfind("source.", 0) == 0) {
    // Replace that tag's paths rather than appending to them.
    std::string tag(key.substr(7));
    std::erase_if(cfg.sources,
                  [&](const FileEntry& e) { return e.source == tag; });
  }
  apply_config_entry(cfg, key, trim(assignment.substr(eq + 1)));
}

}  // namespace curricula
