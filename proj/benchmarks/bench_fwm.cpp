#include <benchmark/benchmark.h>

#include "fwm/babi.hpp"
#include "fwm/model.hpp"
#include "fwm/synth.hpp"

namespace {

using namespace fwm;

void BM_FwmUpdate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(1);
  WriteCommand cmd;
  cmd.k1 = Vec(d);
  cmd.k2 = Vec(d);
  cmd.v = Vec(d);
  for (int i = 0; i < d; ++i) {
    cmd.k1[i] = rng.uniform_real(-0.9, 0.9);
    cmd.k2[i] = rng.uniform_real(-0.9, 0.9);
    cmd.v[i] = rng.uniform_real(-0.9, 0.9);
  }
  cmd.beta = 0.5;
  Mat f(d, d * d);
  for (auto _ : state) {
    f = fwm_update(f, cmd, KeyMode::kTensor);
    benchmark::DoNotOptimize(f.data());
  }
}
BENCHMARK(BM_FwmUpdate)->Arg(16)->Arg(32);

void BM_SeqModelStepPure(benchmark::State& state) {
  SeqModelConfig cfg;
  cfg.vocab = 64;
  cfg.d_e = 32;
  cfg.d_lstm = static_cast<int>(state.range(0));
  cfg.d_fwm = 16;
  cfg.n_r = 3;
  SeqModel model(cfg, 2);
  CoreState st = model.initial_state();
  int token = 0;
  for (auto _ : state) {
    const Vec logits = model.step_logits(st, token);
    token = (token + 1) % cfg.vocab;
    benchmark::DoNotOptimize(logits.data());
  }
}
BENCHMARK(BM_SeqModelStepPure)->Arg(64)->Arg(128);

void BM_SeqModelStepTapedWithBackward(benchmark::State& state) {
  SeqModelConfig cfg;
  cfg.vocab = 64;
  cfg.d_e = 32;
  cfg.d_lstm = static_cast<int>(state.range(0));
  cfg.d_fwm = 16;
  cfg.n_r = 3;
  SeqModel model(cfg, 3);
  Tape tape(&model.params());
  GradBuffer grads(model.params());
  const int window = 25;
  for (auto _ : state) {
    tape.reset();
    TapedCoreState st = tape_core_state(tape, model.initial_state());
    NodeId loss = -1;
    for (int t = 0; t < window; ++t) {
      const NodeId logits = model.step_taped(tape, st, t % cfg.vocab);
      const NodeId ce = tape.softmax_xent(logits, (t + 1) % cfg.vocab);
      loss = loss < 0 ? ce : tape.add(loss, ce);
    }
    tape.backward(loss, grads);
    benchmark::DoNotOptimize(grads.grad(0).data());
  }
  state.SetItemsProcessed(state.iterations() * window);
}
BENCHMARK(BM_SeqModelStepTapedWithBackward)->Arg(64);

void BM_SynthGeneration(benchmark::State& state) {
  SynthConfig cfg;
  cfg.train_stories = 200;
  cfg.valid_stories = 10;
  cfg.test_stories = 10;
  for (auto _ : state) {
    const BabiCorpus corpus = synth_stories(7, cfg);
    benchmark::DoNotOptimize(corpus.train.size());
  }
}
BENCHMARK(BM_SynthGeneration);

}  // namespace
