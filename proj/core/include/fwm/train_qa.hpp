// Truncated-BPTT training on the concatenated story stream. The stream is
// cut into batch lanes; gradients flow only inside a window while (h, c, F)
// are detached and carried across windows and epochs.

#pragma once

#include <functional>
#include <memory>

#include "fwm/adam.hpp"
#include "fwm/babi.hpp"

namespace fwm {

struct QaTrainConfig {
  LossMode mode = LossMode::kQa;
  int batch = 16;
  int window = 50;
  long long steps = 1000;
  AdamConfig adam;
  uint64_t seed = 0;
  long long eval_every = 0;  // 0 disables during-training evaluation
};

struct QaStepMetrics {
  long long step = 0;
  int epoch = 0;
  double loss = 0.0;  // masked mean cross-entropy of the window
  size_t masked_tokens = 0;
};

struct QaEvalMetrics {
  long long step = 0;
  EvalResult valid;
};

class QaTrainer {
 public:
  QaTrainer(SeqModel& model, const Dataset& ds, const QaTrainConfig& cfg);

  using StepSink = std::function<void(const QaStepMetrics&)>;
  using EvalSink = std::function<void(const QaEvalMetrics&)>;

  // Runs cfg.steps optimizer steps (continuing from the current counter).
  void run(const StepSink& on_step = nullptr, const EvalSink& on_eval = nullptr);

  // One window over all lanes: masked mean cross-entropy, backward, Adam
  // step. An all-masked window advances the carried states and applies no
  // update.
  QaStepMetrics train_step();
  QaStepMetrics train_on_batch(const Batch& batch);

  Adam& optimizer() { return adam_; }
  long long step_count() const { return step_; }

 private:
  void ensure_batch(Batch* out);

  SeqModel& model_;
  const Dataset& ds_;
  QaTrainConfig cfg_;
  Adam adam_;
  GradBuffer grads_;
  Tape tape_;
  std::vector<CoreState> lane_states_;
  TokenStream epoch_stream_;
  std::unique_ptr<BatchIterator> iter_;
  TokenStream valid_stream_;
  Rng shuffle_rng_;
  long long step_ = 0;
  int epoch_ = 0;
};

}  // namespace fwm
