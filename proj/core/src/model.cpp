#include "fwm/model.hpp"

#include <cmath>

namespace fwm {

namespace {

// Gate order inside the 4H pre-activation block: input, forget, cell, output.
enum { kGateI = 0, kGateF = 1, kGateG = 2, kGateO = 3 };

void lstm_step_pure(const ParamStore& ps, const CoreParamIds& ids, CoreState& state,
                    const Vec& x) {
  const Mat& w_ih = ps.mat(ids.w_ih);
  const Mat& w_hh = ps.mat(ids.w_hh);
  const Mat& b = ps.mat(ids.b);
  const int h = w_hh.cols();
  FWM_CHECK(w_ih.cols() == x.size(), "lstm step: input dimension mismatch");

  Vec z(4 * h);
  for (int i = 0; i < 4 * h; ++i) {
    const double* r1 = w_ih.row(i);
    const double* r2 = w_hh.row(i);
    double acc = b.data()[i];
    for (int j = 0; j < w_ih.cols(); ++j) acc += r1[j] * x[j];
    for (int j = 0; j < h; ++j) acc += r2[j] * state.h[j];
    z[i] = acc;
  }
  Vec c_new(h), h_new(h);
  for (int i = 0; i < h; ++i) {
    const double gi = sigmoid(z[kGateI * h + i]);
    const double gf = sigmoid(z[kGateF * h + i]);
    const double gg = std::tanh(z[kGateG * h + i]);
    const double go = sigmoid(z[kGateO * h + i]);
    c_new[i] = gf * state.c[i] + gi * gg;
    h_new[i] = go * std::tanh(c_new[i]);
  }
  state.c = c_new;
  state.h = h_new;
}

}  // namespace

CoreParamIds register_core_params(ParamStore& ps, const CoreConfig& cfg, Rng& rng,
                                  const std::string& prefix) {
  FWM_CHECK(cfg.d_in > 0 && cfg.d_lstm > 0, "core config: dims must be positive");
  const int h = cfg.d_lstm;
  CoreParamIds ids;
  ids.w_ih = ps.add(prefix + "lstm.w_ih", 4 * h, cfg.d_in);
  ids.w_hh = ps.add(prefix + "lstm.w_hh", 4 * h, h);
  ids.b = ps.add(prefix + "lstm.b", 4 * h, 1);
  ps.init_uniform_fan_in(ids.w_ih, cfg.d_in, rng);
  ps.init_uniform_fan_in(ids.w_hh, h, rng);
  ps.init_constant(ids.b, 0.0);
  for (int i = kGateF * h; i < (kGateF + 1) * h; ++i) ps.entry(ids.b).value.data()[i] = 1.0;

  if (cfg.mode == ModelMode::kFwm) {
    FWM_CHECK(cfg.d_fwm > 0 && cfg.n_r >= 1, "core config: fwm dims must be positive");
    const int d = cfg.d_fwm;
    ids.w_write = ps.add(prefix + "fwm.w_write", 3 * d, h);
    ids.w_beta = ps.add(prefix + "fwm.w_beta", 1, h);
    ids.w_n = ps.add(prefix + "fwm.w_n", d, h);
    ps.init_uniform_fan_in(ids.w_write, h, rng);
    ps.init_uniform_fan_in(ids.w_beta, h, rng);
    ps.init_uniform_fan_in(ids.w_n, h, rng);
    for (int i = 0; i < cfg.n_r; ++i) {
      ids.w_e.push_back(ps.add(prefix + "fwm.w_e." + std::to_string(i), d, h));
      ps.init_uniform_fan_in(ids.w_e.back(), h, rng);
    }
    ids.w_o = ps.add(prefix + "fwm.w_o", h, d);
    ps.init_uniform_fan_in(ids.w_o, d, rng);
  }
  return ids;
}

CoreState initial_core_state(const CoreConfig& cfg) {
  CoreState s;
  s.h = Vec(cfg.d_lstm);
  s.c = Vec(cfg.d_lstm);
  if (cfg.mode == ModelMode::kFwm) s.f = Mat(cfg.d_fwm, cfg.fwm().key_dim());
  return s;
}

Vec core_step(const CoreConfig& cfg, const ParamStore& ps, const CoreParamIds& ids,
              CoreState& state, const Vec& x, StepTrace* trace) {
  lstm_step_pure(ps, ids, state, x);
  if (cfg.mode == ModelMode::kLstmOnly) return state.h;

  WriteCommand cmd = generate_write_command(state.h, ps.mat(ids.w_write), ps.mat(ids.w_beta));
  state.f = fwm_update(state.f, cmd, cfg.key_mode);

  std::vector<Mat> w_e;
  w_e.reserve(ids.w_e.size());
  for (int id : ids.w_e) w_e.push_back(ps.mat(id));
  ReadQuery q = generate_read_query(state.h, ps.mat(ids.w_n), w_e);
  std::vector<Vec> hops;
  const Vec n = read_chain(state.f, q, cfg.key_mode, trace ? &hops : nullptr);
  const Vec r = fwm_output(n, ps.mat(ids.w_o));

  if (trace) {
    trace->cmd = cmd;
    trace->query = q;
    trace->hops = hops;
  }
  return add(state.h, r);
}

TapedCoreState tape_core_state(Tape& tape, const CoreState& state) {
  TapedCoreState s;
  s.h = tape.constant(state.h);
  s.c = tape.constant(state.c);
  if (state.f.size() > 0) s.f = tape.constant(state.f);
  return s;
}

NodeId core_step_taped(const CoreConfig& cfg, const CoreParamIds& ids, Tape& tape,
                       TapedCoreState& state, NodeId x) {
  const int h = cfg.d_lstm;
  NodeId z = tape.add(tape.add(tape.matvec(tape.param(ids.w_ih), x),
                               tape.matvec(tape.param(ids.w_hh), state.h)),
                      tape.param(ids.b));
  NodeId gi = tape.sigmoid(tape.slice(z, kGateI * h, h));
  NodeId gf = tape.sigmoid(tape.slice(z, kGateF * h, h));
  NodeId gg = tape.tanh(tape.slice(z, kGateG * h, h));
  NodeId go = tape.sigmoid(tape.slice(z, kGateO * h, h));
  NodeId c_new = tape.add(tape.hadamard(gf, state.c), tape.hadamard(gi, gg));
  NodeId h_new = tape.hadamard(go, tape.tanh(c_new));
  state.h = h_new;
  state.c = c_new;
  if (cfg.mode == ModelMode::kLstmOnly) return h_new;

  const int d = cfg.d_fwm;
  NodeId a = tape.tanh(tape.matvec(tape.param(ids.w_write), h_new));
  NodeId k1 = tape.slice(a, 0, d);
  NodeId k2 = tape.slice(a, d, d);
  NodeId v = tape.slice(a, 2 * d, d);
  NodeId beta = tape.sigmoid(tape.matvec(tape.param(ids.w_beta), h_new));
  NodeId kappa = cfg.key_mode == KeyMode::kTensor ? tape.outer_vec(k1, k2) : tape.concat(k1, k2);
  NodeId v_old = tape.matvec(state.f, kappa);
  NodeId diff = tape.sub(v, v_old);
  NodeId f_t = tape.frob_rescale(tape.fwm_write(state.f, beta, diff, kappa));
  state.f = f_t;

  NodeId n = tape.tanh(tape.matvec(tape.param(ids.w_n), h_new));
  for (int i = 0; i < cfg.n_r; ++i) {
    NodeId e = tape.tanh(tape.matvec(tape.param(ids.w_e[static_cast<size_t>(i)]), h_new));
    NodeId q = cfg.key_mode == KeyMode::kTensor ? tape.outer_vec(n, e) : tape.concat(n, e);
    n = tape.layer_norm(tape.matvec(f_t, q));
  }
  NodeId r = tape.matvec(tape.param(ids.w_o), n);
  return tape.add(h_new, r);
}

CoreState detach_core_state(const Tape& tape, const TapedCoreState& state, const CoreConfig& cfg) {
  CoreState s;
  s.h = tape.value_vec(state.h);
  s.c = tape.value_vec(state.c);
  if (cfg.mode == ModelMode::kFwm) {
    s.f = Mat(cfg.d_fwm, cfg.fwm().key_dim());
    const double* v = tape.value(state.f);
    std::copy(v, v + s.f.size(), s.f.data());
  }
  return s;
}

SeqModel::SeqModel(const SeqModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  FWM_CHECK(cfg.vocab > 0 && cfg.d_e > 0, "seq model: vocab and d_e must be positive");
  Rng rng = Rng::stream(seed, 0);
  embedding_ = params_.add("embedding", cfg.vocab, cfg.d_e);
  params_.init_uniform(embedding_, -0.25, 0.25, rng);
  ids_ = register_core_params(params_, cfg.core(), rng);
  w_s_ = params_.add("head.w_s", cfg.vocab, cfg.d_lstm);
  params_.init_uniform_fan_in(w_s_, cfg.d_lstm, rng);
}

Vec SeqModel::step_logits(CoreState& state, int token, StepTrace* trace) const {
  FWM_CHECK(token >= 0 && token < cfg_.vocab, "step: token id out of range");
  const Mat& table = params_.mat(embedding_);
  Vec e(cfg_.d_e);
  const double* row = table.row(token);
  for (int i = 0; i < cfg_.d_e; ++i) e[i] = row[i];
  const Vec s = core_step(cfg_.core(), params_, ids_, state, e, trace);
  return matvec(params_.mat(w_s_), s);
}

NodeId SeqModel::step_taped(Tape& tape, TapedCoreState& state, int token) const {
  FWM_CHECK(token >= 0 && token < cfg_.vocab, "step: token id out of range");
  NodeId e = tape.embed_row(embedding_, token);
  NodeId s = core_step_taped(cfg_.core(), ids_, tape, state, e);
  return tape.matvec(tape.param(w_s_), s);
}

AgentModel::AgentModel(const AgentModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  FWM_CHECK(cfg.obs_dim > 0 && cfg.n_actions > 0, "agent model: bad dims");
  Rng rng = Rng::stream(seed, 1);
  ids_ = register_core_params(params_, cfg.core(), rng);
  w_pi_ = params_.add("head.w_pi", cfg.n_actions, cfg.d_lstm);
  b_pi_ = params_.add("head.b_pi", cfg.n_actions, 1);
  w_v_ = params_.add("head.w_v", 1, cfg.d_lstm);
  b_v_ = params_.add("head.b_v", 1, 1);
  params_.init_uniform_fan_in(w_pi_, cfg.d_lstm, rng);
  params_.init_constant(b_pi_, 0.0);
  params_.init_uniform_fan_in(w_v_, cfg.d_lstm, rng);
  params_.init_constant(b_v_, 0.0);
}

AgentStepValues AgentModel::step(CoreState& state, const Vec& obs) const {
  const Vec s = core_step(cfg_.core(), params_, ids_, state, obs);
  AgentStepValues out;
  out.policy_logits = add(matvec(params_.mat(w_pi_), s), vec(params_.mat(b_pi_)));
  out.value = matvec(params_.mat(w_v_), s)[0] + params_.mat(b_v_).data()[0];
  return out;
}

AgentStepNodes AgentModel::step_taped(Tape& tape, TapedCoreState& state, const Vec& obs) const {
  NodeId x = tape.constant(obs);
  NodeId s = core_step_taped(cfg_.core(), ids_, tape, state, x);
  AgentStepNodes out;
  out.policy_logits = tape.add(tape.matvec(tape.param(w_pi_), s), tape.param(b_pi_));
  out.value = tape.add(tape.matvec(tape.param(w_v_), s), tape.param(b_v_));
  return out;
}

}  // namespace fwm
