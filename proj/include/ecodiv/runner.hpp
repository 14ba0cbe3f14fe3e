#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecodiv/config.hpp"
#include "ecodiv/corpus.hpp"
#include "ecodiv/ecosystem.hpp"

namespace ecodiv {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitRuntime = 2,
  kExitReport = 3,
};

struct PreparedCorpus {
  Vocab vocab;
  CorpusSplits splits;
};

/// Reads, tokenizes, blocks and splits the corpus described by `corpus`
/// using the block size, subset fraction and seed of `eco`.
PreparedCorpus prepare_corpus(const CorpusConfig& corpus, const EcosystemConfig& eco);

/// Command-line overrides applied on top of a config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> workers;
  bool persist_shards = false;
  bool baseline = false;

  void apply(RunConfig& cfg) const;
};

inline constexpr std::string_view kCompleteMarker = "COMPLETE";
inline constexpr std::string_view kFailedMarker = "FAILED";

/// Executes one ecosystem run into cfg.output.out: config.ini, vocab.txt,
/// records.jsonl, histograms.jsonl, summary.csv and a COMPLETE or FAILED
/// marker. Returns an ExitCode; messages go to `log`.
int execute_run(const RunConfig& cfg, std::ostream& log);

int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides, std::ostream& log);

struct SweepOutcome {
  std::vector<std::string> executed;
  std::vector<std::string> skipped;
  std::vector<std::string> failed;
  int exit_code = kExitOk;
};

/// Runs every (M, seed) pair into <out>/runs/M<M>_seed<seed>, skipping runs
/// whose directory already holds a COMPLETE marker and an identical config
/// snapshot, then writes sweep_summary.csv and d_vs_mu.dat from the
/// persisted records.
SweepOutcome execute_sweep(const SweepSpec& spec, std::size_t workers, std::ostream& log);

int cmd_sweep(const std::filesystem::path& spec_path, const RunOverrides& overrides, std::ostream& log);

inline constexpr std::string_view kSweepHeader = "# ecodiv sweep v1";
inline constexpr std::string_view kSweepColumns = "D,M,seed,mu_T,final_rate,status";

std::string run_directory_name(std::size_t models, std::uint64_t seed);

/// Writes plot-ready data under <dir>/report/ and a readable summary to
/// `out`. Works on a run directory or a sweep directory.
int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace ecodiv
