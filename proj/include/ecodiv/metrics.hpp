#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ecodiv/corpus.hpp"
#include "ecodiv/lm.hpp"

namespace ecodiv {

/// Hill-Shannon diversity exp(-sum w ln w). Weights are normalized when
/// they do not already sum to 1 (within 1e-9); zero weights contribute
/// nothing. All-zero or negative weights throw Errc::kDomain.
double hill_shannon(std::span<const double> weights);

/// Diversity of M equally weighted models.
double hill_shannon_equal(std::size_t models);

/// Mean of per-model mean perplexities for one iteration.
double ecosystem_mean(std::span<const double> per_model_means);

/// Mean of per-iteration ecosystem means over a run.
double aggregated_mean(std::span<const double> per_iteration_means);

/// Least-squares slope of the trajectory against its index over the final
/// ceil(T/2) points (at least two).
double perplexity_rate(std::span<const double> trajectory);

/// Lower quantile: smallest sample value x with ECDF(x) >= p. Unlike
/// interpolating definitions it is unchanged when the sample is repeated.
double ecdf_quantile(std::span<const double> sorted, double p);

struct Histogram {
  std::vector<double> edges;          // log-spaced, ascending
  std::vector<std::size_t> counts;    // edges.size() - 1 bins
};

/// Fixed perplexity bins: edges 10^(i/10) for i = 0..80. Values below the
/// first edge land in bin 0, values at or above the last in the final bin.
const std::vector<double>& perplexity_bin_edges();
Histogram histogram(std::span<const double> samples);

struct DistributionSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
};

DistributionSummary summarize(std::span<const double> samples);

struct PerplexityDistribution {
  std::vector<double> samples;  // model-major: model 0 over the reference, then model 1, ...
  DistributionSummary summary;
  Histogram hist;
};

/// Pooled per-sequence perplexities of every model over the reference set.
PerplexityDistribution perplexity_distribution(std::span<const SequenceScorer* const> models,
                                               std::span<const TokenSequence> reference);
PerplexityDistribution distribution_from_samples(std::vector<double> samples);

struct SupportStats {
  double recall = 0.0;
  double precision = 0.0;
  std::size_t order = 0;
  std::size_t reference_types = 0;
  std::size_t generated_types = 0;
  std::size_t shared_types = 0;
};

/// Distinct g-gram types of a block set (g-grams never cross blocks).
class NGramTypeSet {
 public:
  NGramTypeSet(std::span<const TokenSequence> blocks, std::size_t order);

  std::size_t order() const noexcept { return order_; }
  std::size_t size() const noexcept { return types_.size(); }
  bool contains(const std::u32string& type) const { return types_.contains(type); }
  const std::unordered_set<std::u32string>& types() const noexcept { return types_; }

 private:
  std::size_t order_;
  std::unordered_set<std::u32string> types_;
};

/// recall = shared / reference types, precision = shared / generated types.
/// Throws Errc::kDomain when the reference has no g-grams.
SupportStats support_stats(std::span<const TokenSequence> generated, const NGramTypeSet& reference);
SupportStats support_stats(std::span<const TokenSequence> generated, std::span<const TokenSequence> reference,
                           std::size_t order);

}  // namespace ecodiv
