#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ecodiv/corpus.hpp"
#include "ecodiv/lm.hpp"
#include "ecodiv/metrics.hpp"

namespace ecodiv {

/// A fitted member of the ecosystem: scores blocks and writes continuations.
class GenerativeModel : public SequenceScorer {
 public:
  virtual TokenSequence continuation(const TokenSequence& prompt, std::size_t length,
                                     std::size_t width) const = 0;
  /// The underlying count model, when there is one.
  virtual const NGramModel* ngram() const { return nullptr; }
};

using ModelPtr = std::shared_ptr<const GenerativeModel>;

struct TrainedModel {
  ModelPtr model;
  int order = 0;
  double alpha = 0.0;
  double validation_perplexity = 0.0;
};

/// Produces the next model for one ecosystem member.
class ModelTrainer {
 public:
  virtual ~ModelTrainer() = default;
  virtual TrainedModel train(const Shard& shard, std::span<const TokenSequence> validation,
                             const GenerativeModel* previous) const = 0;
};

class NGramGenerativeModel final : public GenerativeModel {
 public:
  explicit NGramGenerativeModel(NGramModel model) : model_(std::move(model)) {}

  double sequence_log_prob(const TokenSequence& seq) const override { return model_.sequence_log_prob(seq); }
  TokenSequence continuation(const TokenSequence& prompt, std::size_t length, std::size_t width) const override;
  const NGramModel* ngram() const override { return &model_; }

 private:
  NGramModel model_;
};

/// Validation-selected k-gram refit (select_model) for every member.
class NGramTrainer final : public ModelTrainer {
 public:
  NGramTrainer(std::size_t vocab_size, SelectionGrid grid, RefitMode mode = RefitMode::kFresh, double decay = 0.0)
      : vocab_size_(vocab_size), grid_(std::move(grid)), mode_(mode), decay_(decay) {}

  TrainedModel train(const Shard& shard, std::span<const TokenSequence> validation,
                     const GenerativeModel* previous) const override;

 private:
  std::size_t vocab_size_;
  SelectionGrid grid_;
  RefitMode mode_;
  double decay_;
};

struct EcosystemConfig {
  std::size_t models = 1;
  std::size_t iterations = 10;
  std::uint64_t seed = 0;
  std::size_t block_size = 128;
  std::size_t beam_width = 5;
  SelectionGrid grid;
  RefitMode refit = RefitMode::kFresh;
  double decay = 0.0;
  double subset_fraction = 0.4;
  /// n-gram order for support stats; 0 means the smallest order in the grid.
  std::size_t support_order = 0;
  bool baseline = false;
  std::size_t workers = 1;

  /// Throws Errc::kConfig on any invalid field.
  void validate() const;
  /// validate() plus the requirement that `models` divides the block count.
  void validate_for(std::size_t train_gen_blocks) const;
  std::size_t effective_support_order() const;
};

/// Everything that stays fixed for the whole run.
struct FixedSets {
  std::vector<std::vector<TokenSequence>> generation_sets;
  std::vector<TokenSequence> evaluation;
  std::vector<TokenSequence> validation;
  /// The original training blocks (train_gen, document order).
  std::vector<TokenSequence> reference;
  NGramTypeSet reference_types;
};

struct EcosystemState {
  std::size_t t = 0;
  std::vector<ModelPtr> models;  // null until the first fit
  std::vector<Shard> training_shards;
  std::shared_ptr<const FixedSets> fixed;

  std::size_t model_count() const noexcept { return training_shards.size(); }
};

struct ModelRecord {
  double mean_perplexity = 0.0;
  int order = 0;
  double alpha = 0.0;
  double validation_perplexity = 0.0;
  std::optional<SupportStats> support;
};

struct IterationRecord {
  long t = 0;  // -1 for the pre-evolution baseline
  std::size_t models = 0;
  double diversity = 0.0;
  double ecosystem_mean = 0.0;
  std::vector<ModelRecord> per_model;
  std::optional<SupportStats> pooled_support;
  PerplexityDistribution distribution;
  double duration_seconds = 0.0;

  std::vector<double> per_model_means() const;
};

struct IterationOutcome {
  EcosystemState next;
  IterationRecord record;
  std::vector<Shard> artificial;  // generated shards, by model
};

/// Seeded permutation of train_gen cut into M equal generation sets; each
/// training shard starts as a copy of its generation set.
EcosystemState initialize(const CorpusSplits& splits, const EcosystemConfig& cfg);

/// One train / evaluate / generate / pool-shuffle-redistribute step. The
/// input state is never modified, so a failure leaves it intact.
IterationOutcome run_iteration(const EcosystemState& state, const EcosystemConfig& cfg, const ModelTrainer& trainer);

/// A single model fitted on the whole train_gen set, evaluated once (t = -1).
IterationRecord baseline_record(const EcosystemState& state, const EcosystemConfig& cfg, const ModelTrainer& trainer);

struct RunCallbacks {
  std::function<void(const IterationRecord&)> on_record;
  std::function<void(const EcosystemState& before, const IterationOutcome&)> on_iteration;
};

struct RunResult {
  std::optional<IterationRecord> baseline;
  std::vector<IterationRecord> records;
  EcosystemState final_state;
};

/// initialize + cfg.iterations steps (+ baseline when enabled).
RunResult run(const CorpusSplits& splits, const EcosystemConfig& cfg, const ModelTrainer& trainer,
              const RunCallbacks& callbacks = {});

/// Concatenate, shuffle with the (seed, t) stream, cut into M equal shards.
std::vector<Shard> redistribute(std::span<const Shard> artificial, std::uint64_t seed, std::size_t t);

}  // namespace ecodiv
