#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "ecodiv/corpus.hpp"

namespace ecodiv {

/// Anything that can assign a natural-log likelihood to a token block.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual double sequence_log_prob(const TokenSequence& seq) const = 0;
};

enum class RefitMode { kFresh, kAccumulate };

struct NextTokenDist {
  std::vector<double> probs;
};

/// Backoff k-gram model with additive smoothing at the matched level.
///
/// Counts live in a trie over reversed contexts: the root is the empty
/// context, and the child of context c via token x is the context (x, c...).
/// Nodes are numbered breadth-first with children sorted by token, so two
/// models with the same count table have identical internal arrays.
class NGramModel : public SequenceScorer {
 public:
  using NodeId = std::uint32_t;
  static constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

  /// One row of the count table; context is in text order (oldest first).
  struct Entry {
    std::vector<TokenId> context;
    TokenId next = 0;
    double count = 0.0;
    bool operator==(const Entry&) const = default;
  };

  NGramModel() = default;

  /// A model with no counts: every distribution is uniform.
  static NGramModel uniform(std::size_t vocab_size, int order, double alpha);

  /// Builds a model from a count table. Entries with the same (context,
  /// next) are summed; non-positive totals are dropped.
  static NGramModel from_entries(int order, double alpha, std::size_t vocab_size,
                                 std::size_t trained_on, std::span<const Entry> entries);

  int order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t trained_on() const noexcept { return trained_on_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  /// Same counts, different smoothing.
  NGramModel with_alpha(double alpha) const;

  /// Node of the longest suffix of `context` (at most order-1 tokens) that
  /// has counts; kNoNode when the model has no counts at all.
  NodeId match(std::span<const TokenId> context) const;
  /// Context length of a node (0 for the root).
  std::size_t depth(NodeId node) const;

  double count(NodeId node, TokenId next) const;
  double total(NodeId node) const;

  /// ln P(next | node). The one scoring formula shared by evaluation, beam
  /// search and the exhaustive oracle.
  double log_prob(NodeId node, TokenId next) const;
  double prob(NodeId node, TokenId next) const;

  /// Tokens seen after `node`, sorted by id.
  std::span<const TokenId> seen(NodeId node) const;
  /// Tokens seen after `node`, by count descending then id ascending.
  std::span<const TokenId> ranked(NodeId node) const;
  std::span<const double> seen_counts(NodeId node) const;

  NextTokenDist next_token_dist(std::span<const TokenId> context) const;

  double sequence_log_prob(const TokenSequence& seq) const override;

  /// Count table in canonical order: context length, context ids, next id.
  std::vector<Entry> entries() const;

  /// Versioned text snapshot; byte-stable for a given model.
  void save(std::ostream& out) const;
  static NGramModel load(std::istream& in);

  bool operator==(const NGramModel& other) const;

 private:
  struct Node {
    NodeId parent = kNoNode;
    TokenId edge = 0;  // token prepended to the parent's context
    std::uint32_t depth = 0;
    std::uint32_t first_child = 0;
    std::uint32_t child_count = 0;
    std::uint32_t first_entry = 0;
    std::uint32_t entry_count = 0;
    double total = 0.0;
    bool operator==(const Node&) const = default;
  };

  NodeId find_child(NodeId node, TokenId token) const;
  double denominator(NodeId node) const;

  int order_ = 1;
  double alpha_ = 1.0;
  std::size_t vocab_size_ = 0;
  std::size_t trained_on_ = 0;
  std::vector<Node> nodes_;
  std::vector<TokenId> entry_next_;
  std::vector<double> entry_count_;
  std::vector<TokenId> ranked_next_;

  friend class CountTableBuilder;
};

struct FitParams {
  int order = 3;
  double alpha = 0.1;
  RefitMode mode = RefitMode::kFresh;
  double decay = 0.0;
};

/// Exact k-gram counts of the shard (all context lengths 0..order-1, never
/// crossing block boundaries). In accumulate mode the counts of `prev`
/// scaled by `decay` are added on top.
NGramModel fit(const Shard& shard, std::size_t vocab_size, const FitParams& params,
               const NGramModel* prev = nullptr);

struct PerplexityResult {
  std::vector<double> per_sequence;
  double mean = 0.0;
};

/// exp(-log_prob / length) per sequence and their arithmetic mean.
PerplexityResult perplexity(const SequenceScorer& model, std::span<const TokenSequence> seqs);

struct SelectionGrid {
  std::vector<int> orders{3};
  std::vector<double> alphas{0.1, 0.01, 0.001};
};

struct ModelCandidate {
  int order = 0;
  double alpha = 0.0;
  double validation_perplexity = 0.0;
};

struct ModelSelection {
  NGramModel model;
  std::vector<ModelCandidate> candidates;
  std::size_t chosen = 0;
};

/// Fits one model per (order, alpha) and keeps the one with the lowest mean
/// validation perplexity; ties go to the smaller order, then smaller alpha.
ModelSelection select_model(const Shard& shard, std::span<const TokenSequence> validation,
                            std::size_t vocab_size, const SelectionGrid& grid,
                            RefitMode mode = RefitMode::kFresh, double decay = 0.0,
                            const NGramModel* prev = nullptr);

}  // namespace ecodiv
