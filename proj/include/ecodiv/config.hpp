#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecodiv/corpus.hpp"
#include "ecodiv/ecosystem.hpp"

namespace ecodiv {

/// Flat `key = value` file with `[section]` headers and `#` comments.
class IniDocument {
 public:
  struct Value {
    std::string text;
    std::size_t line = 0;
  };

  static IniDocument parse(const std::string& text, std::string source = "<config>");
  static IniDocument load(const std::filesystem::path& path);

  const std::string& source() const noexcept { return source_; }
  const Value* find(const std::string& section, const std::string& key) const;
  /// (section, key) pairs in file order.
  const std::vector<std::pair<std::string, std::string>>& keys() const noexcept { return order_; }

  /// Errc::kConfig error prefixed with "source:line: ".
  [[noreturn]] void fail(std::size_t line, const std::string& message) const;

 private:
  std::string source_;
  std::map<std::pair<std::string, std::string>, Value> values_;
  std::vector<std::pair<std::string, std::string>> order_;
};

struct CorpusConfig {
  /// Either one combined text file or explicit train/valid/test files.
  std::filesystem::path path;
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path test;
  std::size_t min_token_freq = 2;
  /// Truncate the token stream to this many tokens (0 = no limit).
  std::size_t max_tokens = 0;
  SplitFractions split;

  bool explicit_splits() const { return !train.empty(); }
  bool operator==(const CorpusConfig&) const = default;
};

struct OutputConfig {
  std::filesystem::path out = "runs/default";
  bool persist_shards = false;
  bool persist_models = false;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  CorpusConfig corpus;
  EcosystemConfig eco;
  OutputConfig output;
};

bool operator==(const EcosystemConfig& a, const EcosystemConfig& b);
inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.corpus == b.corpus && a.eco == b.eco && a.output == b.output;
}

struct SweepSpec {
  RunConfig base;
  std::vector<std::size_t> model_counts{1, 2, 4, 16};
  std::vector<std::uint64_t> seeds{1};
};

/// Relative corpus/output paths resolve against `base_dir`.
RunConfig parse_run_config(const IniDocument& doc, const std::filesystem::path& base_dir);
SweepSpec parse_sweep_spec(const IniDocument& doc, const std::filesystem::path& base_dir);

RunConfig load_run_config(const std::filesystem::path& path);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

/// Canonical snapshot text; parsing it back yields an equal config.
std::string to_ini(const RunConfig& cfg);
std::string to_ini(const SweepSpec& spec);

}  // namespace ecodiv
