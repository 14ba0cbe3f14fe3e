#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecodiv/corpus.hpp"
#include "ecodiv/lm.hpp"

namespace ecodiv {

/// A scored continuation.
struct Hypothesis {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
};

/// Beam search over continuations of `prompt`.
///
/// Each step extends every hypothesis by every vocabulary token, scores by
/// the cumulative log-probability and keeps the `width` best; equal scores
/// are ordered by the lexicographically smaller token sequence. Only the
/// last order-1 tokens of prompt + hypothesis are consulted. The result is
/// the best surviving hypothesis after `length` steps.
Hypothesis beam_search(const NGramModel& model, std::span<const TokenId> prompt, std::size_t length,
                       std::size_t width);

TokenSequence beam_continuation(const NGramModel& model, const TokenSequence& prompt, std::size_t length,
                                std::size_t width);

/// Argmax at every step with the same tie-break (beam width 1).
Hypothesis greedy_search(const NGramModel& model, std::span<const TokenId> prompt, std::size_t length);

/// Largest vocab^length the exhaustive oracle will enumerate.
inline constexpr std::size_t kExhaustiveLimit = 1'000'000;

/// True argmax continuation by full enumeration, same tie-break and the
/// same per-step score accumulation as beam_search. Throws
/// Errc::kOracleTooLarge when vocab^length exceeds kExhaustiveLimit.
Hypothesis exhaustive_search(const NGramModel& model, std::span<const TokenId> prompt, std::size_t length);

TokenSequence exhaustive_continuation(const NGramModel& model, const TokenSequence& prompt,
                                      std::size_t length);

/// One continuation per generation-set block, in generation-set order.
/// Prompts are processed by up to `workers` threads.
Shard generate_dataset(const NGramModel& model, std::span<const TokenSequence> generation_set,
                       std::size_t width, std::size_t length, std::size_t workers = 1);

}  // namespace ecodiv
