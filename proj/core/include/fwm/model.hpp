// The slow network: token embedding, a single-layer LSTM, and the fast
// weight memory heads. Two execution paths exist on purpose: a pure path
// used for evaluation and introspection, and a taped path used for training.
// A test pins them to identical forward values.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fwm/autodiff.hpp"
#include "fwm/fwm_cell.hpp"
#include "fwm/tensor.hpp"

namespace fwm {

enum class ModelMode { kFwm, kLstmOnly };

struct CoreConfig {
  int d_in = 0;
  int d_lstm = 0;
  int d_fwm = 0;
  int n_r = 1;
  ModelMode mode = ModelMode::kFwm;
  KeyMode key_mode = KeyMode::kTensor;

  FwmConfig fwm() const { return FwmConfig{d_fwm, n_r, key_mode}; }
};

// Parameter ids of the controller and memory heads inside a ParamStore.
struct CoreParamIds {
  int w_ih = -1, w_hh = -1, b = -1;
  int w_write = -1, w_beta = -1, w_n = -1, w_o = -1;
  std::vector<int> w_e;
};

struct CoreState {
  Vec h, c;
  Mat f;
};

struct StepTrace {
  WriteCommand cmd;
  ReadQuery query;
  std::vector<Vec> hops;  // n0..n_{n_r}
};

struct TapedCoreState {
  NodeId h = -1, c = -1, f = -1;
};

// Registers LSTM + memory head parameters (memory heads only in kFwm mode)
// and initialises them: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) everywhere,
// zero biases with the forget gate bias at 1.
CoreParamIds register_core_params(ParamStore& ps, const CoreConfig& cfg, Rng& rng,
                                  const std::string& prefix = "");

CoreState initial_core_state(const CoreConfig& cfg);

// One step of the full cell on the pure path. Mutates state (h, c, f) and
// returns s = h_t + W_o n^(n_r) (just h_t in lstm-only mode).
Vec core_step(const CoreConfig& cfg, const ParamStore& ps, const CoreParamIds& ids,
              CoreState& state, const Vec& x, StepTrace* trace = nullptr);

TapedCoreState tape_core_state(Tape& tape, const CoreState& state);

// Same computation recorded on the tape; state node ids are replaced.
NodeId core_step_taped(const CoreConfig& cfg, const CoreParamIds& ids, Tape& tape,
                       TapedCoreState& state, NodeId x);

CoreState detach_core_state(const Tape& tape, const TapedCoreState& state, const CoreConfig& cfg);

// ---------------------------------------------------------------------------
// Token sequence model with a softmax output head over the vocabulary.

struct SeqModelConfig {
  int vocab = 0;
  int d_e = 0;
  int d_lstm = 0;
  int d_fwm = 0;
  int n_r = 1;
  ModelMode mode = ModelMode::kFwm;
  KeyMode key_mode = KeyMode::kTensor;

  CoreConfig core() const { return CoreConfig{d_e, d_lstm, d_fwm, n_r, mode, key_mode}; }
};

class SeqModel {
 public:
  SeqModel(const SeqModelConfig& cfg, uint64_t seed);

  const SeqModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const CoreParamIds& core_ids() const { return ids_; }
  int embedding_id() const { return embedding_; }
  int w_s_id() const { return w_s_; }
  size_t total_weights() const { return params_.total_weights(); }

  CoreState initial_state() const { return initial_core_state(cfg_.core()); }

  // Next-token logits; the distribution is softmax(logits).
  Vec step_logits(CoreState& state, int token, StepTrace* trace = nullptr) const;
  NodeId step_taped(Tape& tape, TapedCoreState& state, int token) const;

 private:
  SeqModelConfig cfg_;
  ParamStore params_;
  CoreParamIds ids_;
  int embedding_ = -1;
  int w_s_ = -1;
};

// ---------------------------------------------------------------------------
// Observation-driven agent with linear actor and critic heads on s.

struct AgentModelConfig {
  int obs_dim = 0;
  int n_actions = 0;
  int d_lstm = 0;
  int d_fwm = 0;
  int n_r = 1;
  ModelMode mode = ModelMode::kFwm;
  KeyMode key_mode = KeyMode::kTensor;

  CoreConfig core() const { return CoreConfig{obs_dim, d_lstm, d_fwm, n_r, mode, key_mode}; }
};

struct AgentStepValues {
  Vec policy_logits;
  double value = 0.0;
};

struct AgentStepNodes {
  NodeId policy_logits = -1;
  NodeId value = -1;
};

class AgentModel {
 public:
  AgentModel(const AgentModelConfig& cfg, uint64_t seed);

  const AgentModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  size_t total_weights() const { return params_.total_weights(); }

  CoreState initial_state() const { return initial_core_state(cfg_.core()); }

  AgentStepValues step(CoreState& state, const Vec& obs) const;
  AgentStepNodes step_taped(Tape& tape, TapedCoreState& state, const Vec& obs) const;

 private:
  AgentModelConfig cfg_;
  ParamStore params_;
  CoreParamIds ids_;
  int w_pi_ = -1, b_pi_ = -1, w_v_ = -1, b_v_ = -1;
};

}  // namespace fwm
