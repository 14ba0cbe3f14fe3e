#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ecodiv/corpus.hpp"
#include "ecodiv/lm.hpp"

namespace testkit {

using ecodiv::TokenId;
using ecodiv::TokenSequence;

inline std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) { return rng() % bound; }

inline std::vector<TokenSequence> random_blocks(std::mt19937_64& rng, std::size_t count, std::size_t length,
                                                std::size_t vocab) {
  std::vector<TokenSequence> out(count);
  for (auto& b : out) {
    b.ids.resize(length);
    for (auto& id : b.ids) id = static_cast<TokenId>(draw(rng, vocab));
  }
  return out;
}

/// Blocks from a first-order Markov source with a sparse random transition
/// table: each token has `fanout` successors with random weights.
struct BigramSource {
  std::size_t vocab;
  std::vector<std::vector<TokenId>> next;
  std::vector<std::vector<double>> cdf;

  BigramSource(std::mt19937_64& rng, std::size_t v, std::size_t fanout) : vocab(v), next(v), cdf(v) {
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    for (std::size_t a = 0; a < v; ++a) {
      double acc = 0.0;
      for (std::size_t j = 0; j < fanout; ++j) {
        next[a].push_back(static_cast<TokenId>(draw(rng, v)));
        acc += unit(rng);
        cdf[a].push_back(acc);
      }
      for (auto& c : cdf[a]) c /= acc;
    }
  }

  std::vector<TokenSequence> sample(std::mt19937_64& rng, std::size_t count, std::size_t length) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<TokenSequence> out(count);
    for (auto& b : out) {
      TokenId cur = static_cast<TokenId>(draw(rng, vocab));
      for (std::size_t i = 0; i < length; ++i) {
        b.ids.push_back(cur);
        const double u = unit(rng);
        const auto& c = cdf[cur];
        const auto j = static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), u) - c.begin());
        cur = next[cur][std::min(j, c.size() - 1)];
      }
    }
    return out;
  }
};

/// Tally keyed by (context, next), scanned position by position.
using Tally = std::map<std::pair<std::vector<TokenId>, TokenId>, double>;

inline Tally window_tally(const std::vector<TokenSequence>& blocks, int order) {
  Tally tally;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.ids.size(); ++i) {
      const std::size_t longest = std::min<std::size_t>(i, static_cast<std::size_t>(order - 1));
      for (std::size_t len = 0; len <= longest; ++len) {
        std::vector<TokenId> ctx(b.ids.begin() + static_cast<std::ptrdiff_t>(i - len),
                                 b.ids.begin() + static_cast<std::ptrdiff_t>(i));
        tally[{ctx, b.ids[i]}] += 1.0;
      }
    }
  }
  return tally;
}

inline Tally model_tally(const ecodiv::NGramModel& model) {
  Tally out;
  for (const auto& e : model.entries()) out[{e.context, e.next}] += e.count;
  return out;
}

/// Stupid-backoff additive-smoothing probabilities straight from a tally.
class NaiveScorer {
 public:
  NaiveScorer(const Tally& tally, int order, double alpha, std::size_t vocab)
      : order_(order), alpha_(alpha), vocab_(vocab) {
    for (const auto& [key, c] : tally) {
      totals_[key.first] += c;
      counts_[key] = c;
    }
  }

  double prob(const std::vector<TokenId>& history, TokenId next) const {
    const std::size_t longest = std::min<std::size_t>(history.size(), static_cast<std::size_t>(order_ - 1));
    for (std::size_t len = longest + 1; len-- > 0;) {
      std::vector<TokenId> ctx(history.end() - static_cast<std::ptrdiff_t>(len), history.end());
      const auto t = totals_.find(ctx);
      if (t == totals_.end() || t->second <= 0.0) continue;
      const auto c = counts_.find({ctx, next});
      const double count = c == counts_.end() ? 0.0 : c->second;
      return (count + alpha_) / (t->second + alpha_ * static_cast<double>(vocab_));
    }
    return 1.0 / static_cast<double>(vocab_);
  }

  /// Product of per-position probabilities, accumulated in linear space.
  long double linear_prob(const TokenSequence& seq) const {
    long double p = 1.0L;
    std::vector<TokenId> history;
    for (TokenId w : seq.ids) {
      p *= static_cast<long double>(prob(history, w));
      history.push_back(w);
    }
    return p;
  }

  double log_prob(const TokenSequence& seq) const {
    double lp = 0.0;
    std::vector<TokenId> history;
    for (TokenId w : seq.ids) {
      lp += std::log(prob(history, w));
      history.push_back(w);
    }
    return lp;
  }

  double perplexity(const TokenSequence& seq) const {
    return std::exp(-log_prob(seq) / static_cast<double>(seq.size()));
  }

 private:
  int order_;
  double alpha_;
  std::size_t vocab_;
  std::map<std::vector<TokenId>, double> totals_;
  std::map<std::pair<std::vector<TokenId>, TokenId>, double> counts_;
};

inline ecodiv::Shard shard_of(std::vector<TokenSequence> blocks, std::size_t owner = 0) {
  return ecodiv::Shard{std::move(blocks), owner};
}

inline std::vector<TokenSequence> sorted(std::vector<TokenSequence> blocks) {
  std::sort(blocks.begin(), blocks.end());
  return blocks;
}

/// Synthetic natural-ish text: words from a Zipf vocabulary chained by a
/// sparse random successor table, so n-gram structure is learnable.
inline std::string synthetic_text(std::uint64_t seed, std::size_t tokens, std::size_t types = 2000) {
  std::mt19937_64 rng(seed);
  std::vector<double> cdf(types);
  double acc = 0.0;
  for (std::size_t r = 0; r < types; ++r) {
    acc += 1.0 / static_cast<double>(r + 1);
    cdf[r] = acc;
  }
  for (auto& c : cdf) c /= acc;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto zipf = [&] {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), unit(rng));
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(types - 1)));
  };
  std::vector<std::array<std::size_t, 4>> successors(types);
  for (auto& s : successors) {
    for (auto& x : s) x = zipf();
  }
  std::string text;
  std::size_t cur = zipf();
  for (std::size_t i = 0; i < tokens; ++i) {
    text += 'w';
    text += std::to_string(cur);
    text += (i % 20 == 19) ? '\n' : ' ';
    cur = unit(rng) < 0.7 ? successors[cur][draw(rng, 4)] : zipf();
  }
  return text;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ecodiv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testkit

namespace testkit {

struct SyntheticCorpus {
  ecodiv::Vocab vocab;
  ecodiv::CorpusSplits splits;
};

/// Synthetic text ingested, blocked and split with the usual fractions.
inline SyntheticCorpus synthetic_corpus(std::uint64_t seed, std::size_t tokens, std::size_t block,
                                        double subset_fraction, std::size_t types = 2000) {
  auto ingest = ecodiv::ingest_text(synthetic_text(seed, tokens, types), 2);
  const auto blocks = ecodiv::blockify(ingest.stream, block);
  return {std::move(ingest.vocab), ecodiv::make_splits(blocks, {}, subset_fraction, seed)};
}

}  // namespace testkit
