#include "fwm/train_rl.hpp"

#include <cmath>
#include <thread>

namespace fwm {

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (size_t i = rewards.size(); i > 0; --i) {
    acc = rewards[i - 1] + gamma * acc;
    returns[i - 1] = acc;
  }
  return returns;
}

namespace {

RewardStat stat_from_samples(const std::vector<double>& samples) {
  RewardStat s;
  s.episodes = static_cast<int>(samples.size());
  if (samples.empty()) return s;
  for (double v : samples) s.mean += v;
  s.mean /= samples.size();
  double var = 0.0;
  for (double v : samples) var += (v - s.mean) * (v - s.mean);
  if (samples.size() > 1) {
    var /= static_cast<double>(samples.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return s;
}

int sample_categorical(const Vec& probs, Rng& rng) {
  const double u = rng.uniform_real(0.0, 1.0);
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

int argmax(const Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

NodeId a2c_step_loss(Tape& tape, NodeId policy_logits, NodeId value, int action,
                     double advantage, double ret, double value_coef, double entropy_coef) {
  // -A log pi(a) == A * cross-entropy(logits, a).
  NodeId pol = tape.scale(tape.softmax_xent(policy_logits, action), advantage);
  NodeId verr = tape.add_const(value, -ret);
  NodeId vloss = tape.scale(tape.hadamard(verr, verr), value_coef);
  NodeId ent = tape.scale(tape.softmax_entropy(policy_logits), -entropy_coef);
  return tape.add(tape.add(pol, vloss), ent);
}

RewardStat evaluate_policy(const AgentModel& model, const std::vector<GraphSpec>& graphs,
                           const EnvConfig& env, int episodes_per_graph, uint64_t seed,
                           bool greedy) {
  std::vector<double> samples;
  samples.reserve(graphs.size() * static_cast<size_t>(episodes_per_graph));
  for (size_t gi = 0; gi < graphs.size(); ++gi) {
    for (int e = 0; e < episodes_per_graph; ++e) {
      Rng env_rng = Rng::stream(seed, gi * 1000003ull + static_cast<uint64_t>(e) * 2 + 0);
      Rng act_rng = Rng::stream(seed, gi * 1000003ull + static_cast<uint64_t>(e) * 2 + 1);
      const GraphSpec& g = graphs[gi];
      EnvState s = env_reset(g, env_rng);
      CoreState state = model.initial_state();
      double total = 0.0;
      while (true) {
        const Vec obs = encode_observation(g, s, env);
        const AgentStepValues out = model.step(state, obs);
        const Vec probs = softmax(out.policy_logits);
        const int action = greedy ? argmax(probs) : sample_categorical(probs, act_rng);
        const StepOutcome res = env_step(g, s, action, env_rng, env);
        total += res.reward;
        if (res.done) break;
      }
      samples.push_back(total);
    }
  }
  return stat_from_samples(samples);
}

RewardStat oracle_reward(const std::vector<GraphSpec>& graphs, const EnvConfig& env,
                         int episodes_per_graph, uint64_t seed) {
  std::vector<double> samples;
  for (size_t gi = 0; gi < graphs.size(); ++gi)
    for (int e = 0; e < episodes_per_graph; ++e) {
      Rng rng = Rng::stream(seed, gi * 1000003ull + static_cast<uint64_t>(e));
      samples.push_back(oracle_episode_reward(graphs[gi], env, rng));
    }
  return stat_from_samples(samples);
}

RewardStat random_reward(const std::vector<GraphSpec>& graphs, const EnvConfig& env,
                         int episodes_per_graph, uint64_t seed) {
  std::vector<double> samples;
  for (size_t gi = 0; gi < graphs.size(); ++gi)
    for (int e = 0; e < episodes_per_graph; ++e) {
      Rng rng = Rng::stream(seed, gi * 1000003ull + static_cast<uint64_t>(e));
      samples.push_back(random_episode_reward(graphs[gi], env, rng));
    }
  return stat_from_samples(samples);
}

A2CTrainer::A2CTrainer(AgentModel& model, std::vector<GraphSpec> train_graphs,
                       std::vector<GraphSpec> test_graphs, const RlTrainConfig& cfg)
    : model_(model),
      train_graphs_(std::move(train_graphs)),
      test_graphs_(std::move(test_graphs)),
      cfg_(cfg),
      adam_(model.params(), cfg.adam),
      grads_(model.params()) {
  FWM_CHECK(!train_graphs_.empty(), "a2c: empty training graph set");
}

Trajectory A2CTrainer::rollout(Tape& tape, const GraphSpec& graph, Rng& env_rng, Rng& action_rng,
                               std::vector<NodeId>* logit_nodes,
                               std::vector<NodeId>* value_nodes) const {
  Trajectory traj;
  EnvState env_state = env_reset(graph, env_rng);
  CoreState init = model_.initial_state();
  TapedCoreState state = tape_core_state(tape, init);
  while (true) {
    const Vec obs = encode_observation(graph, env_state, cfg_.env);
    const AgentStepNodes nodes = model_.step_taped(tape, state, obs);
    const Vec probs = softmax(tape.value_vec(nodes.policy_logits));
    const int action = sample_categorical(probs, action_rng);
    const StepOutcome out = env_step(graph, env_state, action, env_rng, cfg_.env);

    traj.actions.push_back(action);
    traj.rewards.push_back(out.reward);
    traj.values.push_back(tape.value_scalar(nodes.value));
    traj.log_probs.push_back(std::log(std::max(probs[action], 1e-300)));
    double h = 0.0;
    for (int i = 0; i < probs.size(); ++i)
      if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    traj.entropies.push_back(h);
    if (logit_nodes) logit_nodes->push_back(nodes.policy_logits);
    if (value_nodes) value_nodes->push_back(nodes.value);
    if (out.done) break;
  }
  return traj;
}

RlUpdateMetrics A2CTrainer::update_once() {
  RlUpdateMetrics metrics;
  metrics.update = update_ + 1;
  grads_.zero();

  const int batch = cfg_.batch_agents;
  const int threads = std::max(1, cfg_.threads);
  const double inv_steps = 1.0 / (static_cast<double>(batch) * cfg_.env.episode_len);

  struct WorkerResult {
    GradBuffer grads;
    double reward = 0.0, loss = 0.0, policy = 0.0, value = 0.0, entropy = 0.0;
  };
  std::vector<WorkerResult> results;
  results.reserve(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w) results.push_back({GradBuffer(model_.params()), 0, 0, 0, 0, 0});

  auto work = [&](int worker) {
    WorkerResult& res = results[static_cast<size_t>(worker)];
    Tape tape(&model_.params());
    for (int agent = worker; agent < batch; agent += threads) {
      const GraphSpec& graph = train_graphs_[static_cast<size_t>(agent) % train_graphs_.size()];
      const uint64_t episode_id =
          static_cast<uint64_t>(update_) * static_cast<uint64_t>(batch) + static_cast<uint64_t>(agent);
      Rng env_rng = Rng::stream(cfg_.seed, 2 * episode_id + 100);
      Rng act_rng = Rng::stream(cfg_.seed, 2 * episode_id + 101);

      tape.reset();
      std::vector<NodeId> logit_nodes, value_nodes;
      const Trajectory traj = rollout(tape, graph, env_rng, act_rng, &logit_nodes, &value_nodes);
      const std::vector<double> returns = discounted_returns(traj.rewards, cfg_.gamma);

      NodeId loss = -1;
      for (size_t t = 0; t < traj.actions.size(); ++t) {
        const double advantage = returns[t] - traj.values[t];
        NodeId term = a2c_step_loss(tape, logit_nodes[t], value_nodes[t], traj.actions[t],
                                    advantage, returns[t], cfg_.value_coef, cfg_.entropy_coef);
        loss = loss < 0 ? term : tape.add(loss, term);

        res.policy += advantage * -traj.log_probs[t];
        res.value += cfg_.value_coef * (returns[t] - traj.values[t]) * (returns[t] - traj.values[t]);
        res.entropy += traj.entropies[t];
      }
      loss = tape.scale(loss, inv_steps);
      res.loss += tape.value_scalar(loss);
      tape.backward(loss, res.grads);
      res.reward += traj.total_reward();
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  for (const WorkerResult& res : results) {
    grads_.add(res.grads);
    metrics.mean_reward += res.reward;
    metrics.loss += res.loss;
    metrics.policy_loss += res.policy;
    metrics.value_loss += res.value;
    metrics.entropy += res.entropy;
  }
  metrics.mean_reward /= batch;
  metrics.policy_loss *= inv_steps;
  metrics.value_loss *= inv_steps;
  metrics.entropy *= inv_steps;

  adam_.step(model_.params(), grads_);
  ++update_;
  return metrics;
}

void A2CTrainer::run(const UpdateSink& on_update, const EvalSink& on_eval) {
  for (long long i = 0; i < cfg_.updates; ++i) {
    const RlUpdateMetrics m = update_once();
    if (on_update) on_update(m);
    if (cfg_.eval_every > 0 && on_eval && m.update % cfg_.eval_every == 0) {
      RlEvalMetrics em;
      em.update = m.update;
      em.train = evaluate_policy(model_, train_graphs_, cfg_.env, cfg_.eval_episodes_per_graph,
                                 cfg_.seed + 7000, /*greedy=*/true);
      em.test = evaluate_policy(model_, test_graphs_, cfg_.env, cfg_.eval_episodes_per_graph,
                                cfg_.seed + 9000, /*greedy=*/true);
      on_eval(em);
    }
  }
}

}  // namespace fwm
