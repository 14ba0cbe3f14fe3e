#include "ecodiv/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ecodiv/error.hpp"
#include "ecodiv/kernels.hpp"

namespace ecodiv {

namespace {

double fixed_order_sum(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

}  // namespace

double hill_shannon(std::span<const double> weights) {
  if (weights.empty()) throw Error(Errc::kDomain, "no weights");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::kDomain, "weights must be finite and non-negative");
  }
  const double sum = fixed_order_sum(weights);
  if (sum <= 0.0) throw Error(Errc::kDomain, "all weights are zero");
  const bool normalized = std::abs(sum - 1.0) <= 1e-9;
  double entropy = 0.0;
  for (double w : weights) {
    const double p = normalized ? w : w / sum;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

double hill_shannon_equal(std::size_t models) {
  if (models == 0) throw Error(Errc::kDomain, "no models");
  const std::vector<double> weights(models, 1.0 / static_cast<double>(models));
  return hill_shannon(weights);
}

double ecosystem_mean(std::span<const double> per_model_means) {
  if (per_model_means.empty()) throw Error(Errc::kDomain, "no per-model means");
  return fixed_order_sum(per_model_means) / static_cast<double>(per_model_means.size());
}

double aggregated_mean(std::span<const double> per_iteration_means) {
  if (per_iteration_means.empty()) throw Error(Errc::kDomain, "empty trajectory");
  return fixed_order_sum(per_iteration_means) / static_cast<double>(per_iteration_means.size());
}

double perplexity_rate(std::span<const double> trajectory) {
  const std::size_t n = trajectory.size();
  if (n < 2) throw Error(Errc::kDomain, "rate needs at least two iterations");
  const std::size_t window = std::max<std::size_t>(2, (n + 1) / 2);
  const std::size_t first = n - window;
  const double w = static_cast<double>(window);
  double t_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    t_mean += static_cast<double>(i);
    y_mean += trajectory[i];
  }
  t_mean /= w;
  y_mean /= w;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    sxy += dt * (trajectory[i] - y_mean);
    sxx += dt * dt;
  }
  return sxy / sxx;
}

double ecdf_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(Errc::kDomain, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::kDomain, "quantile level outside [0, 1]");
  const double n = static_cast<double>(sorted.size());
  // Smallest rank r (1-based) with r / n >= p.
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

const std::vector<double>& perplexity_bin_edges() {
  static const std::vector<double> edges = [] {
    std::vector<double> e(81);
    for (int i = 0; i <= 80; ++i) e[static_cast<std::size_t>(i)] = std::pow(10.0, i / 10.0);
    return e;
  }();
  return edges;
}

Histogram histogram(std::span<const double> samples) {
  Histogram h;
  h.edges = perplexity_bin_edges();
  const std::size_t bins = h.edges.size() - 1;
  h.counts.assign(bins, 0);
  for (double x : samples) {
    const std::size_t at_or_below = kernels::count_not_greater(h.edges, x);
    const std::size_t bin = at_or_below == 0 ? 0 : std::min(at_or_below - 1, bins - 1);
    ++h.counts[bin];
  }
  return h;
}

DistributionSummary summarize(std::span<const double> samples) {
  if (samples.empty()) throw Error(Errc::kDomain, "empty sample");
  DistributionSummary s;
  s.count = samples.size();
  const double n = static_cast<double>(samples.size());
  s.mean = fixed_order_sum(samples) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  s.q1 = ecdf_quantile(sorted, 0.25);
  s.median = ecdf_quantile(sorted, 0.5);
  s.q3 = ecdf_quantile(sorted, 0.75);
  s.iqr = s.q3 - s.q1;
  return s;
}

PerplexityDistribution distribution_from_samples(std::vector<double> samples) {
  PerplexityDistribution d;
  d.summary = summarize(samples);
  d.hist = histogram(samples);
  d.samples = std::move(samples);
  return d;
}

PerplexityDistribution perplexity_distribution(std::span<const SequenceScorer* const> models,
                                               std::span<const TokenSequence> reference) {
  if (models.empty() || reference.empty()) throw Error(Errc::kDomain, "distribution needs models and reference blocks");
  std::vector<double> samples;
  samples.reserve(models.size() * reference.size());
  for (const auto* model : models) {
    const auto scored = perplexity(*model, reference);
    samples.insert(samples.end(), scored.per_sequence.begin(), scored.per_sequence.end());
  }
  return distribution_from_samples(std::move(samples));
}

NGramTypeSet::NGramTypeSet(std::span<const TokenSequence> blocks, std::size_t order) : order_(order) {
  if (order == 0) throw Error(Errc::kInvalidArgument, "support order must be >= 1");
  std::u32string key(order, U'\0');
  for (const auto& block : blocks) {
    const auto& ids = block.ids;
    if (ids.size() < order) continue;
    for (std::size_t i = 0; i + order <= ids.size(); ++i) {
      for (std::size_t j = 0; j < order; ++j) key[j] = static_cast<char32_t>(ids[i + j]);
      types_.insert(key);
    }
  }
}

SupportStats support_stats(std::span<const TokenSequence> generated, const NGramTypeSet& reference) {
  if (reference.size() == 0) throw Error(Errc::kDomain, "reference has no n-gram types");
  const NGramTypeSet gen(generated, reference.order());
  SupportStats s;
  s.order = reference.order();
  s.reference_types = reference.size();
  s.generated_types = gen.size();
  for (const auto& t : gen.types()) s.shared_types += reference.contains(t) ? 1 : 0;
  s.recall = static_cast<double>(s.shared_types) / static_cast<double>(s.reference_types);
  s.precision = s.generated_types == 0 ? 0.0
                                       : static_cast<double>(s.shared_types) / static_cast<double>(s.generated_types);
  return s;
}

SupportStats support_stats(std::span<const TokenSequence> generated, std::span<const TokenSequence> reference,
                           std::size_t order) {
  return support_stats(generated, NGramTypeSet(reference, order));
}

}  // namespace ecodiv
