#include "ecodiv/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ecodiv/error.hpp"
#include "ecodiv/rng.hpp"

namespace ecodiv {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t subset_count(std::size_t train_blocks, double subset_fraction) {
  // 1e-9 slack so that 0.4 * 80 lands on 32 and not 33.
  const double raw = subset_fraction * static_cast<double>(train_blocks);
  const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(count, 1, train_blocks);
}

std::vector<std::size_t> sample_sorted(std::size_t population, std::size_t count,
                                       std::uint64_t seed) {
  std::vector<std::size_t> index(population);
  for (std::size_t i = 0; i < population; ++i) index[i] = i;
  Rng rng(derive_seed(seed, stream::kSubset));
  // Partial Fisher-Yates: the first `count` slots become the sample.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(population - i));
    std::swap(index[i], index[j]);
  }
  index.resize(count);
  std::sort(index.begin(), index.end());
  return index;
}

}  // namespace

Vocab::Vocab() : tokens_{std::string(kUnkToken)} {}

Vocab::Vocab(std::vector<std::string> tokens) : Vocab() {
  tokens_.reserve(tokens.size() + 1);
  for (auto& t : tokens) {
    if (t == kUnkToken) throw Error(Errc::kInvalidArgument, "vocab token list contains the unk marker");
    if (index_.contains(t)) throw Error(Errc::kInvalidArgument, "duplicate vocab token '" + t + "'");
    index_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(t));
  }
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) throw Error(Errc::kInvalidArgument, "token id out of range");
  return tokens_[id];
}

bool Vocab::contains(std::string_view token) const { return index_.contains(std::string(token)); }

std::vector<TokenId> Vocab::encode(std::string_view text) const {
  std::vector<TokenId> out;
  for (auto tok : split_whitespace(text)) out.push_back(id(tok));
  return out;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

std::uint64_t Vocab::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kUnkToken) {
    throw Error(Errc::kFormat, path.string() + ":1: first line must be " + std::string(kUnkToken));
  }
  std::vector<std::string> tokens;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

IngestResult ingest_text(std::string_view raw_text, std::size_t min_token_freq) {
  const auto words = split_whitespace(raw_text);
  if (words.empty()) throw Error(Errc::kEmptyCorpus, "input holds no whitespace-delimited tokens");

  std::unordered_map<std::string_view, std::size_t> freq;
  for (auto w : words) ++freq[w];

  std::vector<std::pair<std::string_view, std::size_t>> kept;
  for (const auto& [w, n] : freq) {
    if (n >= min_token_freq && w != Vocab::kUnkToken) kept.emplace_back(w, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (const auto& [w, n] : kept) tokens.emplace_back(w);

  IngestResult result{Vocab(std::move(tokens)), {}};
  result.stream.reserve(words.size());
  for (auto w : words) result.stream.push_back(result.vocab.id(w));
  return result;
}

std::vector<TokenSequence> blockify(std::span<const TokenId> stream, std::size_t block_size) {
  if (block_size < 2) throw Error(Errc::kInvalidArgument, "block size must be at least 2");
  if (stream.size() < block_size) {
    throw Error(Errc::kInsufficientTokens, std::to_string(stream.size()) + " tokens, block size " +
                                               std::to_string(block_size));
  }
  const std::size_t count = stream.size() / block_size;
  std::vector<TokenSequence> blocks(count);
  for (std::size_t b = 0; b < count; ++b) {
    const auto first = stream.begin() + static_cast<std::ptrdiff_t>(b * block_size);
    blocks[b].ids.assign(first, first + static_cast<std::ptrdiff_t>(block_size));
  }
  return blocks;
}

CorpusSplits make_splits(std::span<const TokenSequence> blocks, SplitFractions fractions,
                         double subset_fraction, std::uint64_t seed) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9 || fractions.train < 0 || fractions.validation < 0 ||
      fractions.test < 0) {
    throw Error(Errc::kInvalidArgument, "split fractions must be non-negative and sum to 1");
  }
  const std::size_t total = blocks.size();
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(total)));
  const auto n_valid =
      static_cast<std::size_t>(std::llround(fractions.validation * static_cast<double>(total)));
  if (n_train + n_valid > total) throw Error(Errc::kDegenerateSplit, "fractions exceed block count");
  const std::size_t n_test = total - n_train - n_valid;

  auto slice = [&](std::size_t from, std::size_t count) {
    return std::vector<TokenSequence>(blocks.begin() + static_cast<std::ptrdiff_t>(from),
                                      blocks.begin() + static_cast<std::ptrdiff_t>(from + count));
  };
  if (n_train == 0 || n_valid == 0 || n_test == 0) {
    throw Error(Errc::kDegenerateSplit, "split sizes " + std::to_string(n_train) + "/" +
                                            std::to_string(n_valid) + "/" + std::to_string(n_test));
  }
  return make_splits(slice(0, n_train), slice(n_train, n_valid), slice(n_train + n_valid, n_test),
                     subset_fraction, seed);
}

CorpusSplits make_splits(std::vector<TokenSequence> train, std::vector<TokenSequence> validation,
                         std::vector<TokenSequence> test, double subset_fraction,
                         std::uint64_t seed) {
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "subset fraction must be in (0, 1]");
  }
  if (train.empty() || validation.empty() || test.empty()) {
    throw Error(Errc::kDegenerateSplit, "every split needs at least one block");
  }
  CorpusSplits splits;
  splits.train_gen_source = sample_sorted(train.size(), subset_count(train.size(), subset_fraction), seed);
  splits.train_gen.reserve(splits.train_gen_source.size());
  for (auto i : splits.train_gen_source) splits.train_gen.push_back(train[i]);
  splits.validation = std::move(validation);
  splits.test = std::move(test);
  return splits;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ecodiv
