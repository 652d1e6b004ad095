#include "fwm/train_qa.hpp"

namespace fwm {

QaTrainer::QaTrainer(SeqModel& model, const Dataset& ds, const QaTrainConfig& cfg)
    : model_(model),
      ds_(ds),
      cfg_(cfg),
      adam_(model.params(), cfg.adam),
      grads_(model.params()),
      tape_(&model.params()),
      shuffle_rng_(Rng::stream(cfg.seed, 30)) {
  lane_states_.assign(static_cast<size_t>(cfg.batch), model.initial_state());
  valid_stream_ = concat_stream(ds.valid, nullptr);
}

void QaTrainer::ensure_batch(Batch* out) {
  while (true) {
    if (iter_ && iter_->next(out)) return;
    epoch_stream_ = concat_stream(ds_.train, &shuffle_rng_);
    iter_ = std::make_unique<BatchIterator>(epoch_stream_, cfg_.batch, cfg_.window, cfg_.mode,
                                            ds_.pad_id);
    ++epoch_;
    // Carried states deliberately survive the epoch boundary.
  }
}

QaStepMetrics QaTrainer::train_step() {
  Batch batch;
  ensure_batch(&batch);
  return train_on_batch(batch);
}

QaStepMetrics QaTrainer::train_on_batch(const Batch& batch) {
  const size_t total_mask = batch.mask_count();

  QaStepMetrics metrics;
  metrics.epoch = epoch_;
  metrics.masked_tokens = total_mask;

  if (total_mask == 0) {
    // Nothing to learn from; advance the carried states on the pure path.
    for (int lane = 0; lane < batch.b; ++lane)
      for (int t = 0; t < batch.l; ++t)
        model_.step_logits(lane_states_[static_cast<size_t>(lane)], batch.input(lane, t));
    metrics.step = ++step_;
    return metrics;
  }

  grads_.zero();
  double loss = 0.0;
  const CoreConfig core = model_.config().core();
  for (int lane = 0; lane < batch.b; ++lane) {
    tape_.reset();
    TapedCoreState state = tape_core_state(tape_, lane_states_[static_cast<size_t>(lane)]);
    NodeId sum = -1;
    for (int t = 0; t < batch.l; ++t) {
      NodeId logits = model_.step_taped(tape_, state, batch.input(lane, t));
      if (!batch.masked(lane, t)) continue;
      NodeId ce = tape_.softmax_xent(logits, batch.target(lane, t));
      sum = sum < 0 ? ce : tape_.add(sum, ce);
    }
    if (sum >= 0) {
      NodeId lane_loss = tape_.scale(sum, 1.0 / static_cast<double>(total_mask));
      loss += tape_.value_scalar(lane_loss);
      tape_.backward(lane_loss, grads_);
    }
    lane_states_[static_cast<size_t>(lane)] = detach_core_state(tape_, state, core);
  }
  adam_.step(model_.params(), grads_);

  metrics.loss = loss;
  metrics.step = ++step_;
  return metrics;
}

void QaTrainer::run(const StepSink& on_step, const EvalSink& on_eval) {
  for (long long i = 0; i < cfg_.steps; ++i) {
    const QaStepMetrics m = train_step();
    if (on_step) on_step(m);
    if (cfg_.eval_every > 0 && on_eval && m.step % cfg_.eval_every == 0) {
      QaEvalMetrics em;
      em.step = m.step;
      em.valid = evaluate_qa(model_, valid_stream_);
      on_eval(em);
    }
  }
}

}  // namespace fwm
