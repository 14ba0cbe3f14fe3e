#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ecodiv {

using TokenId = std::uint32_t;

/// A fixed-length block of token ids.
struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t size() const noexcept { return ids.size(); }
  auto operator<=>(const TokenSequence&) const = default;
};

/// Whitespace word-level vocabulary. Id 0 is always the unknown token.
class Vocab {
 public:
  static constexpr TokenId kUnkId = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();
  /// `tokens` must not contain the unk marker; ids are assigned 1..n in order.
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId unk_id() const noexcept { return kUnkId; }

  /// Id of `token`, or unk_id() when it is not in the vocabulary.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;

  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

  /// FNV-1a over the token list; names the vocab in shard file headers.
  std::uint64_t fingerprint() const;

  /// One token per line, line number = id, first line is the unk marker.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct IngestResult {
  Vocab vocab;
  std::vector<TokenId> stream;
};

/// Builds a vocabulary of every token seen at least `min_token_freq` times
/// and encodes the whole text with it. Throws Errc::kEmptyCorpus when the
/// text holds no tokens.
IngestResult ingest_text(std::string_view raw_text, std::size_t min_token_freq = 2);

/// Splits `text` on ASCII whitespace.
std::vector<std::string_view> split_whitespace(std::string_view text);

/// floor(len / block_size) consecutive blocks; the remainder is dropped.
std::vector<TokenSequence> blockify(std::span<const TokenId> stream, std::size_t block_size);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;

  bool operator==(const SplitFractions&) const = default;
};

struct CorpusSplits {
  std::vector<TokenSequence> train_gen;
  std::vector<TokenSequence> validation;
  std::vector<TokenSequence> test;
  /// Index of every train_gen block in the blockified input, ascending.
  std::vector<std::size_t> train_gen_source;
};

/// Contiguous train/validation/test partition followed by a seeded block
/// subset of the train part (ceil(subset_fraction * train blocks), kept in
/// document order).
CorpusSplits make_splits(std::span<const TokenSequence> blocks, SplitFractions fractions,
                         double subset_fraction, std::uint64_t seed);

/// Subset sampling only, for corpora that come with predefined splits.
CorpusSplits make_splits(std::vector<TokenSequence> train, std::vector<TokenSequence> validation,
                         std::vector<TokenSequence> test, double subset_fraction,
                         std::uint64_t seed);

/// One model's dataset for an iteration.
struct Shard {
  std::vector<TokenSequence> sequences;
  std::size_t owner = 0;

  std::size_t size() const noexcept { return sequences.size(); }
  bool empty() const noexcept { return sequences.empty(); }
  bool operator==(const Shard&) const = default;
};

std::string read_text_file(const std::filesystem::path& path);

}  // namespace ecodiv
