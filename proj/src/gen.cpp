#include "ecodiv/gen.hpp"

#include <algorithm>

#include "ecodiv/error.hpp"
#include "ecodiv/parallel.hpp"

namespace ecodiv {

namespace {

/// Last (order - 1) tokens of prompt followed by `tail`.
void scoring_context(const NGramModel& model, std::span<const TokenId> prompt,
                     std::span<const TokenId> tail, std::vector<TokenId>& out) {
  const std::size_t want = static_cast<std::size_t>(model.order() - 1);
  out.clear();
  const std::size_t from_tail = std::min(want, tail.size());
  const std::size_t from_prompt = std::min(want - from_tail, prompt.size());
  out.insert(out.end(), prompt.end() - static_cast<std::ptrdiff_t>(from_prompt), prompt.end());
  out.insert(out.end(), tail.end() - static_cast<std::ptrdiff_t>(from_tail), tail.end());
}

/// The `limit` best next tokens after `node`, best first: seen tokens by
/// count (then id), followed by unseen tokens by id. Every unseen token has
/// the same probability, so only the smallest ids can ever survive pruning.
void best_next(const NGramModel& model, NGramModel::NodeId node, std::size_t limit,
               std::vector<TokenId>& out) {
  out.clear();
  const auto ranked = model.ranked(node);
  for (std::size_t i = 0; i < ranked.size() && out.size() < limit; ++i) out.push_back(ranked[i]);
  const auto seen = model.seen(node);
  const auto vocab = static_cast<TokenId>(model.vocab_size());
  for (TokenId id = 0; id < vocab && out.size() < limit; ++id) {
    if (!std::binary_search(seen.begin(), seen.end(), id)) out.push_back(id);
  }
}

void check_search_args(const NGramModel& model, std::size_t length, std::size_t width) {
  if (length == 0) throw Error(Errc::kInvalidArgument, "continuation length must be >= 1");
  if (width == 0) throw Error(Errc::kInvalidArgument, "beam width must be >= 1");
  if (model.vocab_size() == 0) throw Error(Errc::kInvalidArgument, "model has no vocabulary");
}

}  // namespace

Hypothesis beam_search(const NGramModel& model, std::span<const TokenId> prompt, std::size_t length,
                       std::size_t width) {
  check_search_args(model, length, width);

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
  };

  std::vector<Hypothesis> beam(1);
  beam.front().tokens.reserve(length);
  std::vector<Hypothesis> next_beam;
  std::vector<Candidate> candidates;
  std::vector<TokenId> context;
  std::vector<TokenId> options;

  for (std::size_t step = 0; step < length; ++step) {
    candidates.clear();
    for (std::size_t h = 0; h < beam.size(); ++h) {
      scoring_context(model, prompt, beam[h].tokens, context);
      const auto node = model.match(context);
      best_next(model, node, width, options);
      for (TokenId w : options) candidates.push_back({h, w, beam[h].log_prob + model.log_prob(node, w)});
    }
    // Score descending; ties by lexicographically smaller sequence, which is
    // the parent's tokens and then the new token.
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return beam[a.parent].tokens < beam[b.parent].tokens;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);

    next_beam.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      Hypothesis hyp;
      hyp.tokens.reserve(length);
      hyp.tokens = beam[candidates[i].parent].tokens;
      hyp.tokens.push_back(candidates[i].token);
      hyp.log_prob = candidates[i].score;
      next_beam.push_back(std::move(hyp));
    }
    beam.swap(next_beam);
  }
  // The beam is kept sorted best-first.
  return std::move(beam.front());
}

TokenSequence beam_continuation(const NGramModel& model, const TokenSequence& prompt, std::size_t length,
                                std::size_t width) {
  return TokenSequence{beam_search(model, prompt.ids, length, width).tokens};
}

Hypothesis greedy_search(const NGramModel& model, std::span<const TokenId> prompt, std::size_t length) {
  return beam_search(model, prompt, length, 1);
}

Hypothesis exhaustive_search(const NGramModel& model, std::span<const TokenId> prompt, std::size_t length) {
  check_search_args(model, length, 1);
  std::size_t space = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (space > kExhaustiveLimit / model.vocab_size()) {
      throw Error(Errc::kOracleTooLarge, "vocab^length exceeds " + std::to_string(kExhaustiveLimit));
    }
    space *= model.vocab_size();
  }

  const auto vocab = static_cast<TokenId>(model.vocab_size());
  Hypothesis best;
  bool have_best = false;
  std::vector<TokenId> prefix;
  prefix.reserve(length);
  std::vector<TokenId> context;

  // Depth-first in lexicographic order; a later sequence replaces the best
  // only on a strictly higher score, so ties keep the smallest sequence.
  auto visit = [&](auto&& self, double score) -> void {
    if (prefix.size() == length) {
      if (!have_best || score > best.log_prob) {
        have_best = true;
        best.tokens = prefix;
        best.log_prob = score;
      }
      return;
    }
    scoring_context(model, prompt, prefix, context);
    const auto node = model.match(context);
    for (TokenId w = 0; w < vocab; ++w) {
      prefix.push_back(w);
      self(self, score + model.log_prob(node, w));
      prefix.pop_back();
    }
  };
  visit(visit, 0.0);
  return best;
}

TokenSequence exhaustive_continuation(const NGramModel& model, const TokenSequence& prompt,
                                      std::size_t length) {
  return TokenSequence{exhaustive_search(model, prompt.ids, length).tokens};
}

Shard generate_dataset(const NGramModel& model, std::span<const TokenSequence> generation_set,
                       std::size_t width, std::size_t length, std::size_t workers) {
  if (generation_set.empty()) throw Error(Errc::kInvalidArgument, "generation set is empty");
  Shard shard;
  shard.sequences.resize(generation_set.size());
  parallel_for(generation_set.size(), workers, [&](std::size_t i) {
    shard.sequences[i] = beam_continuation(model, generation_set[i], length, width);
  });
  return shard;
}

}  // namespace ecodiv
