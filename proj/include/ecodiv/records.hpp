#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecodiv/corpus.hpp"
#include "ecodiv/ecosystem.hpp"

namespace ecodiv {

/// One JSON object per line; numbers round-trip exactly.
std::string record_to_json(const IterationRecord& record);
IterationRecord record_from_json(const std::string& line);

/// {"t":..,"edges":[..],"counts":[..]}
std::string histogram_to_json(long t, const Histogram& hist);

/// Reads a records.jsonl file. Throws Errc::kFormat naming the line.
std::vector<IterationRecord> read_records(const std::filesystem::path& path);

inline constexpr std::string_view kSummaryHeader = "# ecodiv summary v1";
inline constexpr std::string_view kSummaryColumns = "t,M,D,mu_t,mu_m,recall,precision,iqr,std";

/// Per-iteration summary table: t, M, D, mu_t, per-model mu (';'-joined),
/// pooled recall, pooled precision, distribution IQR, std.
std::string summary_csv(const std::vector<IterationRecord>& records);

struct ShardFileHeader {
  std::uint64_t vocab_fingerprint = 0;
  std::size_t model = 0;
  long t = 0;
};

/// "# ecodiv-shard v1 vocab=<hex> model=<m> t=<t> blocks=<n>" followed by
/// one block per line as space-separated ids.
void write_shard_file(const std::filesystem::path& path, const Shard& shard, const ShardFileHeader& header);
Shard read_shard_file(const std::filesystem::path& path, ShardFileHeader* header = nullptr);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ecodiv
