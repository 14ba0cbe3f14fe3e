#pragma once

#include <map>
#include <memory>
#include <stdexcept>

#include "ecodiv/ecosystem.hpp"

namespace testkit {

/// Returns the block that follows the prompt in the original training data
/// (the first block follows the last). Scores every block as certain.
class SuccessorModel final : public ecodiv::GenerativeModel {
 public:
  explicit SuccessorModel(const std::vector<ecodiv::TokenSequence>& blocks) {
    for (std::size_t i = 0; i < blocks.size(); ++i) next_[blocks[i]] = blocks[(i + 1) % blocks.size()];
  }
  double sequence_log_prob(const ecodiv::TokenSequence&) const override { return 0.0; }
  ecodiv::TokenSequence continuation(const ecodiv::TokenSequence& prompt, std::size_t, std::size_t) const override {
    const auto it = next_.find(prompt);
    if (it == next_.end()) throw std::runtime_error("prompt is not an original block");
    return it->second;
  }

 private:
  std::map<ecodiv::TokenSequence, ecodiv::TokenSequence> next_;
};

class SuccessorTrainer final : public ecodiv::ModelTrainer {
 public:
  explicit SuccessorTrainer(const std::vector<ecodiv::TokenSequence>& blocks)
      : model_(std::make_shared<SuccessorModel>(blocks)) {}
  ecodiv::TrainedModel train(const ecodiv::Shard&, std::span<const ecodiv::TokenSequence>,
                             const ecodiv::GenerativeModel*) const override {
    return {model_, 0, 0.0, 1.0};
  }

 private:
  std::shared_ptr<const SuccessorModel> model_;
};

/// Fails on the n-th call to train().
class FailingTrainer final : public ecodiv::ModelTrainer {
 public:
  FailingTrainer(const ecodiv::ModelTrainer& inner, std::size_t fail_at) : inner_(inner), fail_at_(fail_at) {}
  ecodiv::TrainedModel train(const ecodiv::Shard& shard, std::span<const ecodiv::TokenSequence> validation,
                             const ecodiv::GenerativeModel* previous) const override {
    if (calls_++ == fail_at_) throw std::runtime_error("injected training failure");
    return inner_.train(shard, validation, previous);
  }

 private:
  const ecodiv::ModelTrainer& inner_;
  std::size_t fail_at_;
  mutable std::size_t calls_ = 0;
};

}  // namespace testkit
