#include "ecodiv/lm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "ecodiv/error.hpp"
#include "ecodiv/kernels.hpp"
#include "ecodiv/text_format.hpp"

namespace ecodiv {

// Accumulates weighted (context, next) events in an unordered trie, then
// freezes them into the canonical NGramModel layout.
class CountTableBuilder {
 public:
  using NodeId = NGramModel::NodeId;

  CountTableBuilder() { nodes_.push_back({NGramModel::kNoNode, 0, 0}); }

  static constexpr NodeId root() { return 0; }

  NodeId child(NodeId parent, TokenId token) {
    const std::uint64_t key = (std::uint64_t{parent} << 32) | token;
    auto [it, inserted] = children_.try_emplace(key, static_cast<NodeId>(nodes_.size()));
    if (inserted) nodes_.push_back({parent, token, nodes_[parent].depth + 1});
    return it->second;
  }

  void add(NodeId node, TokenId next, double weight) {
    counts_[(std::uint64_t{node} << 32) | next] += weight;
  }

  /// Node for a text-order context, created on demand.
  NodeId context_node(std::span<const TokenId> context) {
    NodeId node = root();
    for (std::size_t j = context.size(); j > 0; --j) node = child(node, context[j - 1]);
    return node;
  }

  NGramModel finish(int order, double alpha, std::size_t vocab_size, std::size_t trained_on) &&;

 private:
  struct BuildNode {
    NodeId parent;
    TokenId edge;
    std::uint32_t depth;
  };

  std::vector<BuildNode> nodes_;
  std::unordered_map<std::uint64_t, NodeId> children_;
  std::unordered_map<std::uint64_t, double> counts_;
};

NGramModel CountTableBuilder::finish(int order, double alpha, std::size_t vocab_size,
                                     std::size_t trained_on) && {
  NGramModel model;
  model.order_ = order;
  model.alpha_ = alpha;
  model.vocab_size_ = vocab_size;
  model.trained_on_ = trained_on;

  struct Event {
    NodeId node;
    TokenId next;
    double count;
  };
  std::vector<Event> events;
  events.reserve(counts_.size());
  for (const auto& [key, count] : counts_) {
    if (count > 0.0) {
      events.push_back({static_cast<NodeId>(key >> 32), static_cast<TokenId>(key & 0xffffffffu), count});
    }
  }
  if (events.empty()) return model;

  // Keep every node with counts plus its ancestor chain.
  std::vector<char> keep(nodes_.size(), 0);
  for (const auto& e : events) {
    for (NodeId n = e.node; n != NGramModel::kNoNode && !keep[n]; n = nodes_[n].parent) keep[n] = 1;
  }

  // Canonical numbering: by depth, then (canonical parent id, edge token).
  std::uint32_t max_depth = 0;
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (keep[n]) max_depth = std::max(max_depth, nodes_[n].depth);
  }
  std::vector<std::vector<NodeId>> by_depth(max_depth + 1);
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (keep[n]) by_depth[nodes_[n].depth].push_back(static_cast<NodeId>(n));
  }
  std::vector<NodeId> canon(nodes_.size(), NGramModel::kNoNode);
  std::vector<NodeId> order_of;  // canonical id -> builder id
  order_of.reserve(nodes_.size());
  for (auto& level : by_depth) {
    std::sort(level.begin(), level.end(), [&](NodeId a, NodeId b) {
      const NodeId pa = nodes_[a].parent == NGramModel::kNoNode ? 0 : canon[nodes_[a].parent];
      const NodeId pb = nodes_[b].parent == NGramModel::kNoNode ? 0 : canon[nodes_[b].parent];
      return pa != pb ? pa < pb : nodes_[a].edge < nodes_[b].edge;
    });
    for (NodeId n : level) {
      canon[n] = static_cast<NodeId>(order_of.size());
      order_of.push_back(n);
    }
  }

  const std::size_t node_count = order_of.size();
  model.nodes_.resize(node_count);
  for (std::size_t c = 0; c < node_count; ++c) {
    const auto& b = nodes_[order_of[c]];
    auto& node = model.nodes_[c];
    node.parent = b.parent == NGramModel::kNoNode ? NGramModel::kNoNode : canon[b.parent];
    node.edge = b.edge;
    node.depth = b.depth;
  }
  // Children of a node are contiguous in canonical order.
  for (std::size_t c = 1; c < node_count; ++c) {
    auto& parent = model.nodes_[model.nodes_[c].parent];
    if (parent.child_count == 0) parent.first_child = static_cast<std::uint32_t>(c);
    ++parent.child_count;
  }

  for (auto& e : events) e.node = canon[e.node];
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.node != b.node ? a.node < b.node : a.next < b.next; });

  model.entry_next_.resize(events.size());
  model.entry_count_.resize(events.size());
  model.ranked_next_.resize(events.size());
  std::size_t i = 0;
  for (std::size_t c = 0; c < node_count; ++c) {
    auto& node = model.nodes_[c];
    node.first_entry = static_cast<std::uint32_t>(i);
    double total = 0.0;
    while (i < events.size() && events[i].node == c) {
      model.entry_next_[i] = events[i].next;
      model.entry_count_[i] = events[i].count;
      total += events[i].count;
      ++i;
    }
    node.entry_count = static_cast<std::uint32_t>(i - node.first_entry);
    node.total = total;

    const auto begin = node.first_entry;
    std::vector<std::uint32_t> idx(node.entry_count);
    std::iota(idx.begin(), idx.end(), begin);
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double ca = model.entry_count_[a];
      const double cb = model.entry_count_[b];
      return ca != cb ? ca > cb : model.entry_next_[a] < model.entry_next_[b];
    });
    for (std::size_t r = 0; r < idx.size(); ++r) model.ranked_next_[begin + r] = model.entry_next_[idx[r]];
  }
  return model;
}

namespace {

void check_params(int order, double alpha, std::size_t vocab_size) {
  if (order < 1) throw Error(Errc::kInvalidArgument, "model order must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(Errc::kInvalidArgument, "alpha must be positive");
  if (vocab_size == 0) throw Error(Errc::kInvalidArgument, "vocabulary is empty");
}

}  // namespace

NGramModel NGramModel::uniform(std::size_t vocab_size, int order, double alpha) {
  check_params(order, alpha, vocab_size);
  NGramModel model;
  model.order_ = order;
  model.alpha_ = alpha;
  model.vocab_size_ = vocab_size;
  return model;
}

NGramModel NGramModel::from_entries(int order, double alpha, std::size_t vocab_size,
                                    std::size_t trained_on, std::span<const Entry> entries) {
  check_params(order, alpha, vocab_size);
  CountTableBuilder builder;
  for (const auto& e : entries) {
    if (e.context.size() + 1 > static_cast<std::size_t>(order)) {
      throw Error(Errc::kInvalidArgument, "entry context longer than order - 1");
    }
    if (e.next >= vocab_size) throw Error(Errc::kInvalidArgument, "entry token id out of range");
    builder.add(builder.context_node(e.context), e.next, e.count);
  }
  return std::move(builder).finish(order, alpha, vocab_size, trained_on);
}

NGramModel NGramModel::with_alpha(double alpha) const {
  check_params(order_, alpha, vocab_size_);
  NGramModel copy = *this;
  copy.alpha_ = alpha;
  return copy;
}

NGramModel::NodeId NGramModel::find_child(NodeId node, TokenId token) const {
  const auto& n = nodes_[node];
  auto first = nodes_.begin() + n.first_child;
  auto last = first + n.child_count;
  auto it = std::lower_bound(first, last, token, [](const Node& c, TokenId t) { return c.edge < t; });
  return (it != last && it->edge == token) ? static_cast<NodeId>(it - nodes_.begin()) : kNoNode;
}

NGramModel::NodeId NGramModel::match(std::span<const TokenId> context) const {
  if (nodes_.empty()) return kNoNode;
  NodeId node = 0;
  NodeId best = nodes_[0].total > 0.0 ? 0 : kNoNode;
  const std::size_t max_len = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t j = 1; j <= max_len; ++j) {
    node = find_child(node, context[context.size() - j]);
    if (node == kNoNode) break;
    if (nodes_[node].total > 0.0) best = node;
  }
  return best;
}

std::size_t NGramModel::depth(NodeId node) const { return node == kNoNode ? 0 : nodes_[node].depth; }

double NGramModel::count(NodeId node, TokenId next) const {
  if (node == kNoNode) return 0.0;
  const auto ids = seen(node);
  auto it = std::lower_bound(ids.begin(), ids.end(), next);
  if (it == ids.end() || *it != next) return 0.0;
  return entry_count_[nodes_[node].first_entry + static_cast<std::size_t>(it - ids.begin())];
}

double NGramModel::total(NodeId node) const { return node == kNoNode ? 0.0 : nodes_[node].total; }

double NGramModel::denominator(NodeId node) const {
  return nodes_[node].total + alpha_ * static_cast<double>(vocab_size_);
}

double NGramModel::prob(NodeId node, TokenId next) const {
  if (node == kNoNode) return 1.0 / static_cast<double>(vocab_size_);
  return (count(node, next) + alpha_) / denominator(node);
}

double NGramModel::log_prob(NodeId node, TokenId next) const { return std::log(prob(node, next)); }

std::span<const TokenId> NGramModel::seen(NodeId node) const {
  if (node == kNoNode) return {};
  const auto& n = nodes_[node];
  return std::span<const TokenId>(entry_next_).subspan(n.first_entry, n.entry_count);
}

std::span<const TokenId> NGramModel::ranked(NodeId node) const {
  if (node == kNoNode) return {};
  const auto& n = nodes_[node];
  return std::span<const TokenId>(ranked_next_).subspan(n.first_entry, n.entry_count);
}

std::span<const double> NGramModel::seen_counts(NodeId node) const {
  if (node == kNoNode) return {};
  const auto& n = nodes_[node];
  return std::span<const double>(entry_count_).subspan(n.first_entry, n.entry_count);
}

NextTokenDist NGramModel::next_token_dist(std::span<const TokenId> context) const {
  NextTokenDist dist;
  dist.probs.assign(vocab_size_, 0.0);
  const NodeId node = match(context);
  if (node == kNoNode) {
    std::fill(dist.probs.begin(), dist.probs.end(), 1.0 / static_cast<double>(vocab_size_));
    return dist;
  }
  std::vector<double> dense(vocab_size_, 0.0);
  const auto ids = seen(node);
  const auto counts = seen_counts(node);
  for (std::size_t i = 0; i < ids.size(); ++i) dense[ids[i]] = counts[i];
  kernels::smoothed_fill(dense, alpha_, denominator(node), dist.probs);
  return dist;
}

double NGramModel::sequence_log_prob(const TokenSequence& seq) const {
  const std::span<const TokenId> ids(seq.ids);
  const std::size_t ctx_max = static_cast<std::size_t>(order_ - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t from = i > ctx_max ? i - ctx_max : 0;
    total += log_prob(match(ids.subspan(from, i - from)), ids[i]);
  }
  return total;
}

std::vector<NGramModel::Entry> NGramModel::entries() const {
  std::vector<Entry> out;
  out.reserve(entry_next_.size());
  for (std::size_t c = 0; c < nodes_.size(); ++c) {
    const auto& node = nodes_[c];
    if (node.entry_count == 0) continue;
    std::vector<TokenId> context;
    for (NodeId n = static_cast<NodeId>(c); n != 0; n = nodes_[n].parent) context.push_back(nodes_[n].edge);
    for (std::uint32_t i = 0; i < node.entry_count; ++i) {
      out.push_back({context, entry_next_[node.first_entry + i], entry_count_[node.first_entry + i]});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
    if (a.context.size() != b.context.size()) return a.context.size() < b.context.size();
    if (a.context != b.context) return a.context < b.context;
    return a.next < b.next;
  });
  return out;
}

namespace {
constexpr std::string_view kSnapshotMagic = "ecodiv-ngram";
constexpr int kSnapshotVersion = 1;
}  // namespace

void NGramModel::save(std::ostream& out) const {
  const auto table = entries();
  out << kSnapshotMagic << ' ' << kSnapshotVersion << '\n'
      << "order " << order_ << '\n'
      << "alpha " << format_double(alpha_) << '\n'
      << "vocab_size " << vocab_size_ << '\n'
      << "trained_on " << trained_on_ << '\n'
      << "entries " << table.size() << '\n';
  for (const auto& e : table) {
    out << e.context.size();
    for (auto id : e.context) out << ' ' << id;
    out << ' ' << e.next << ' ' << format_double(e.count) << '\n';
  }
}

NGramModel NGramModel::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw Error(Errc::kFormat, "model snapshot truncated at line " + std::to_string(line_no + 1));
    ++line_no;
    return line;
  };
  auto header_value = [&](std::string_view key) {
    const std::string& l = next_line();
    if (l.rfind(std::string(key) + " ", 0) != 0) {
      throw Error(Errc::kFormat, "model snapshot line " + std::to_string(line_no) + ": expected '" + std::string(key) + "'");
    }
    return l.substr(key.size() + 1);
  };

  if (next_line() != std::string(kSnapshotMagic) + " " + std::to_string(kSnapshotVersion)) {
    throw Error(Errc::kFormat, "not an ecodiv-ngram v1 snapshot");
  }
  const int order = parse_int<int>(header_value("order"));
  const double alpha = parse_double(header_value("alpha"));
  const auto vocab_size = parse_int<std::size_t>(header_value("vocab_size"));
  const auto trained_on = parse_int<std::size_t>(header_value("trained_on"));
  const auto count = parse_int<std::size_t>(header_value("entries"));

  std::vector<Entry> table;
  table.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream row(next_line());
    std::vector<std::string> fields;
    for (std::string f; row >> f;) fields.push_back(f);
    if (fields.empty()) throw Error(Errc::kFormat, "model snapshot line " + std::to_string(line_no) + ": empty row");
    const auto ctx_len = parse_int<std::size_t>(fields[0]);
    if (fields.size() != ctx_len + 3) {
      throw Error(Errc::kFormat, "model snapshot line " + std::to_string(line_no) + ": wrong field count");
    }
    Entry e;
    for (std::size_t j = 0; j < ctx_len; ++j) e.context.push_back(parse_int<TokenId>(fields[1 + j]));
    e.next = parse_int<TokenId>(fields[1 + ctx_len]);
    e.count = parse_double(fields[2 + ctx_len]);
    table.push_back(std::move(e));
  }
  return from_entries(order, alpha, vocab_size, trained_on, table);
}

bool NGramModel::operator==(const NGramModel& other) const {
  return order_ == other.order_ && alpha_ == other.alpha_ && vocab_size_ == other.vocab_size_ &&
         trained_on_ == other.trained_on_ && nodes_ == other.nodes_ && entry_next_ == other.entry_next_ &&
         entry_count_ == other.entry_count_ && ranked_next_ == other.ranked_next_;
}

NGramModel fit(const Shard& shard, std::size_t vocab_size, const FitParams& params, const NGramModel* prev) {
  check_params(params.order, params.alpha, vocab_size);
  if (!(params.decay >= 0.0 && params.decay < 1.0)) {
    throw Error(Errc::kInvalidArgument, "decay must be in [0, 1)");
  }
  if (shard.empty()) throw Error(Errc::kEmptyTrainingData, "shard " + std::to_string(shard.owner) + " has no blocks");
  if (params.mode == RefitMode::kAccumulate && prev == nullptr) {
    throw Error(Errc::kInvalidArgument, "accumulate mode needs a previous model");
  }

  CountTableBuilder builder;
  const std::size_t ctx_max = static_cast<std::size_t>(params.order - 1);
  for (const auto& seq : shard.sequences) {
    const auto& ids = seq.ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] >= vocab_size) throw Error(Errc::kInvalidArgument, "token id out of range in shard");
      auto node = CountTableBuilder::root();
      builder.add(node, ids[i], 1.0);
      const std::size_t reach = std::min(i, ctx_max);
      for (std::size_t j = 1; j <= reach; ++j) {
        node = builder.child(node, ids[i - j]);
        builder.add(node, ids[i], 1.0);
      }
    }
  }

  if (params.mode == RefitMode::kAccumulate) {
    if (prev->vocab_size() != vocab_size) throw Error(Errc::kInvalidArgument, "previous model vocabulary differs");
    auto carried = prev->entries();
    std::erase_if(carried, [&](const NGramModel::Entry& e) { return e.context.size() > ctx_max; });
    std::vector<double> counts(carried.size());
    std::vector<double> scaled(carried.size());
    for (std::size_t i = 0; i < carried.size(); ++i) counts[i] = carried[i].count;
    kernels::scale(counts, params.decay, scaled);
    // Shard counts are complete before the carried mass is added, so each
    // entry is exactly shard + decay * prev.
    for (std::size_t i = 0; i < carried.size(); ++i) {
      builder.add(builder.context_node(carried[i].context), carried[i].next, scaled[i]);
    }
  }
  return std::move(builder).finish(params.order, params.alpha, vocab_size, shard.size());
}

PerplexityResult perplexity(const SequenceScorer& model, std::span<const TokenSequence> seqs) {
  if (seqs.empty()) throw Error(Errc::kInvalidArgument, "perplexity needs at least one sequence");
  PerplexityResult result;
  result.per_sequence.reserve(seqs.size());
  double sum = 0.0;
  for (const auto& seq : seqs) {
    if (seq.ids.empty()) throw Error(Errc::kInvalidArgument, "cannot score an empty sequence");
    const double ppl = std::exp(-model.sequence_log_prob(seq) / static_cast<double>(seq.size()));
    result.per_sequence.push_back(ppl);
    sum += ppl;
  }
  result.mean = sum / static_cast<double>(seqs.size());
  return result;
}

ModelSelection select_model(const Shard& shard, std::span<const TokenSequence> validation,
                            std::size_t vocab_size, const SelectionGrid& grid, RefitMode mode,
                            double decay, const NGramModel* prev) {
  if (grid.orders.empty() || grid.alphas.empty()) throw Error(Errc::kInvalidArgument, "selection grid is empty");
  auto orders = grid.orders;
  auto alphas = grid.alphas;
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

  ModelSelection selection;
  bool have_best = false;
  double best_ppl = 0.0;
  for (int order : orders) {
    const NGramModel base = fit(shard, vocab_size, {order, alphas.front(), mode, decay}, prev);
    for (double alpha : alphas) {
      NGramModel candidate = base.with_alpha(alpha);
      const double ppl = perplexity(candidate, validation).mean;
      selection.candidates.push_back({order, alpha, ppl});
      // Strict improvement only: earlier (smaller order, smaller alpha) wins ties.
      if (!have_best || ppl < best_ppl) {
        have_best = true;
        best_ppl = ppl;
        selection.chosen = selection.candidates.size() - 1;
        selection.model = std::move(candidate);
      }
    }
  }
  return selection;
}

}  // namespace ecodiv
