#include "ecodiv/ecosystem.hpp"

#include <algorithm>
#include <chrono>

#include "ecodiv/error.hpp"
#include "ecodiv/gen.hpp"
#include "ecodiv/parallel.hpp"
#include "ecodiv/rng.hpp"

namespace ecodiv {

namespace {

void config_error(const std::string& what) { throw Error(Errc::kConfig, what); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<const SequenceScorer*> scorers(const std::vector<ModelPtr>& models) {
  std::vector<const SequenceScorer*> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(m.get());
  return out;
}

}  // namespace

TokenSequence NGramGenerativeModel::continuation(const TokenSequence& prompt, std::size_t length,
                                                 std::size_t width) const {
  return beam_continuation(model_, prompt, length, width);
}

TrainedModel NGramTrainer::train(const Shard& shard, std::span<const TokenSequence> validation,
                                 const GenerativeModel* previous) const {
  const NGramModel* prev = previous != nullptr ? previous->ngram() : nullptr;
  // Accumulation starts from the second iteration; the first fit is fresh.
  const RefitMode mode = (mode_ == RefitMode::kAccumulate && prev != nullptr) ? mode_ : RefitMode::kFresh;
  auto selection = select_model(shard, validation, vocab_size_, grid_, mode, decay_, prev);
  const auto& chosen = selection.candidates[selection.chosen];
  TrainedModel out;
  out.order = chosen.order;
  out.alpha = chosen.alpha;
  out.validation_perplexity = chosen.validation_perplexity;
  out.model = std::make_shared<NGramGenerativeModel>(std::move(selection.model));
  return out;
}

void EcosystemConfig::validate() const {
  if (models < 1) config_error("models must be >= 1");
  if (iterations < 1) config_error("iterations must be >= 1");
  if (block_size < 2) config_error("block_size must be >= 2");
  if (beam_width < 1) config_error("beam_width must be >= 1");
  if (grid.orders.empty()) config_error("k_grid is empty");
  if (grid.alphas.empty()) config_error("alpha_grid is empty");
  for (int k : grid.orders) {
    if (k < 1) config_error("k_grid entries must be >= 1");
  }
  for (double a : grid.alphas) {
    if (!(a > 0.0)) config_error("alpha_grid entries must be > 0");
  }
  if (!(decay >= 0.0 && decay < 1.0)) config_error("decay must be in [0, 1)");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) config_error("subset_fraction must be in (0, 1]");
  if (workers < 1) config_error("workers must be >= 1");
}

void EcosystemConfig::validate_for(std::size_t train_gen_blocks) const {
  validate();
  if (train_gen_blocks == 0 || train_gen_blocks % models != 0) {
    config_error("models = " + std::to_string(models) + " does not divide the " +
                 std::to_string(train_gen_blocks) + " training-generation blocks");
  }
}

std::size_t EcosystemConfig::effective_support_order() const {
  if (support_order != 0) return support_order;
  return static_cast<std::size_t>(*std::min_element(grid.orders.begin(), grid.orders.end()));
}

std::vector<double> IterationRecord::per_model_means() const {
  std::vector<double> out;
  out.reserve(per_model.size());
  for (const auto& m : per_model) out.push_back(m.mean_perplexity);
  return out;
}

EcosystemState initialize(const CorpusSplits& splits, const EcosystemConfig& cfg) {
  cfg.validate_for(splits.train_gen.size());
  const std::size_t total = splits.train_gen.size();
  const std::size_t n = total / cfg.models;

  std::vector<std::size_t> perm(total);
  for (std::size_t i = 0; i < total; ++i) perm[i] = i;
  Rng rng(derive_seed(cfg.seed, stream::kSegment));
  rng.shuffle(std::span<std::size_t>(perm));

  std::vector<std::vector<TokenSequence>> generation_sets(cfg.models);
  for (std::size_t m = 0; m < cfg.models; ++m) {
    generation_sets[m].reserve(n);
    for (std::size_t i = 0; i < n; ++i) generation_sets[m].push_back(splits.train_gen[perm[m * n + i]]);
  }

  EcosystemState state;
  state.models.assign(cfg.models, nullptr);
  state.training_shards.resize(cfg.models);
  for (std::size_t m = 0; m < cfg.models; ++m) {
    state.training_shards[m].sequences = generation_sets[m];
    state.training_shards[m].owner = m;
  }
  state.fixed = std::make_shared<const FixedSets>(FixedSets{
      std::move(generation_sets), splits.test, splits.validation, splits.train_gen,
      NGramTypeSet(splits.train_gen, cfg.effective_support_order())});
  return state;
}

std::vector<Shard> redistribute(std::span<const Shard> artificial, std::uint64_t seed, std::size_t t) {
  const std::size_t models = artificial.size();
  if (models == 0) throw Error(Errc::kInvalidArgument, "nothing to redistribute");
  std::vector<TokenSequence> pool;
  for (const auto& shard : artificial) pool.insert(pool.end(), shard.sequences.begin(), shard.sequences.end());
  if (pool.size() % models != 0) throw Error(Errc::kInvalidArgument, "pool size not divisible by model count");

  Rng rng(derive_seed(seed, stream::kRedistribute, t));
  rng.shuffle(std::span<TokenSequence>(pool));

  const std::size_t n = pool.size() / models;
  std::vector<Shard> shards(models);
  for (std::size_t m = 0; m < models; ++m) {
    shards[m].owner = m;
    shards[m].sequences.assign(std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(m * n)),
                               std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>((m + 1) * n)));
  }
  return shards;
}

IterationOutcome run_iteration(const EcosystemState& state, const EcosystemConfig& cfg, const ModelTrainer& trainer) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t models = state.model_count();
  if (models == 0 || !state.fixed || state.fixed->generation_sets.size() != models) {
    throw Error(Errc::kInvalidArgument, "ecosystem state is not initialized");
  }
  const FixedSets& fixed = *state.fixed;

  const std::size_t model_workers = std::min(cfg.workers, models);
  const std::size_t prompt_workers = std::max<std::size_t>(1, cfg.workers / models);

  std::vector<TrainedModel> trained(models);
  std::vector<double> eval_means(models);
  std::vector<Shard> artificial(models);

  // Per-model fan-out: fit, evaluate, generate.
  parallel_for(models, model_workers, [&](std::size_t m) {
    trained[m] = trainer.train(state.training_shards[m], fixed.validation, state.models[m].get());
    eval_means[m] = perplexity(*trained[m].model, fixed.evaluation).mean;

    const auto& prompts = fixed.generation_sets[m];
    Shard& out = artificial[m];
    out.owner = m;
    out.sequences.resize(prompts.size());
    parallel_for(prompts.size(), prompt_workers, [&](std::size_t i) {
      out.sequences[i] = trained[m].model->continuation(prompts[i], cfg.block_size, cfg.beam_width);
    });
  });

  IterationOutcome outcome;
  auto& record = outcome.record;
  record.t = static_cast<long>(state.t);
  record.models = models;
  record.diversity = hill_shannon_equal(models);
  record.per_model.resize(models);
  for (std::size_t m = 0; m < models; ++m) {
    auto& r = record.per_model[m];
    r.mean_perplexity = eval_means[m];
    r.order = trained[m].order;
    r.alpha = trained[m].alpha;
    r.validation_perplexity = trained[m].validation_perplexity;
    r.support = support_stats(artificial[m].sequences, fixed.reference_types);
  }
  record.ecosystem_mean = ecosystem_mean(eval_means);

  std::vector<TokenSequence> pooled;
  for (const auto& shard : artificial) pooled.insert(pooled.end(), shard.sequences.begin(), shard.sequences.end());
  record.pooled_support = support_stats(pooled, fixed.reference_types);

  auto& next = outcome.next;
  next.models.resize(models);
  for (std::size_t m = 0; m < models; ++m) next.models[m] = trained[m].model;
  record.distribution = perplexity_distribution(scorers(next.models), fixed.reference);

  next.training_shards = redistribute(artificial, cfg.seed, state.t);
  next.fixed = state.fixed;
  next.t = state.t + 1;
  outcome.artificial = std::move(artificial);
  record.duration_seconds = seconds_since(start);
  return outcome;
}

IterationRecord baseline_record(const EcosystemState& state, const EcosystemConfig& cfg, const ModelTrainer& trainer) {
  (void)cfg;
  const auto start = std::chrono::steady_clock::now();
  const FixedSets& fixed = *state.fixed;
  Shard full{fixed.reference, 0};
  const auto trained = trainer.train(full, fixed.validation, nullptr);

  IterationRecord record;
  record.t = -1;
  record.models = 1;
  record.diversity = 1.0;
  ModelRecord r;
  r.mean_perplexity = perplexity(*trained.model, fixed.evaluation).mean;
  r.order = trained.order;
  r.alpha = trained.alpha;
  r.validation_perplexity = trained.validation_perplexity;
  record.per_model.push_back(r);
  record.ecosystem_mean = ecosystem_mean(record.per_model_means());
  const SequenceScorer* scorer = trained.model.get();
  record.distribution = perplexity_distribution(std::span<const SequenceScorer* const>(&scorer, 1), fixed.reference);
  record.duration_seconds = seconds_since(start);
  return record;
}

RunResult run(const CorpusSplits& splits, const EcosystemConfig& cfg, const ModelTrainer& trainer,
              const RunCallbacks& callbacks) {
  RunResult result;
  result.final_state = initialize(splits, cfg);
  if (cfg.baseline) {
    result.baseline = baseline_record(result.final_state, cfg, trainer);
    if (callbacks.on_record) callbacks.on_record(*result.baseline);
  }
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    auto outcome = run_iteration(result.final_state, cfg, trainer);
    if (callbacks.on_iteration) callbacks.on_iteration(result.final_state, outcome);
    if (callbacks.on_record) callbacks.on_record(outcome.record);
    result.records.push_back(std::move(outcome.record));
    result.final_state = std::move(outcome.next);
  }
  return result;
}

}  // namespace ecodiv
