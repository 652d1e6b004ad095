// Synchronous advantage actor-critic on the graph navigation POMDP. Each
// update rolls out one fixed-length episode per agent (one training graph
// per agent), computes discounted returns, and takes a single Adam step on
// the mean per-step loss:
//   advantage * (-log pi(a_t))  +  value_coef * (R_t - V_t)^2  -  entropy_coef * H_t
// with the advantage R_t - V_t treated as a constant for the policy term.

#pragma once

#include <functional>

#include "fwm/adam.hpp"
#include "fwm/graph_env.hpp"
#include "fwm/model.hpp"

namespace fwm {

struct RlTrainConfig {
  EnvConfig env;
  int batch_agents = 600;
  double gamma = 0.9;
  double value_coef = 0.1;
  double entropy_coef = 0.03;
  AdamConfig adam;
  long long updates = 5000;
  uint64_t seed = 0;
  long long eval_every = 0;
  int eval_episodes_per_graph = 1;
  int threads = 1;
};

struct Trajectory {
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<double> entropies;
  double total_reward() const {
    double s = 0.0;
    for (double r : rewards) s += r;
    return s;
  }
};

// R_t = r_t + gamma * R_{t+1}, terminal bootstrap 0.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma);

// One step's contribution to the A2C objective. The advantage enters as a
// plain scalar so no gradient flows through it.
NodeId a2c_step_loss(Tape& tape, NodeId policy_logits, NodeId value, int action,
                     double advantage, double ret, double value_coef, double entropy_coef);

struct RlUpdateMetrics {
  long long update = 0;
  double mean_reward = 0.0;
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct RewardStat {
  double mean = 0.0;
  double stderr_ = 0.0;
  int episodes = 0;
};

struct RlEvalMetrics {
  long long update = 0;
  RewardStat train, test;
};

// Greedy (argmax) or sampled episodes over a graph set on the pure path.
RewardStat evaluate_policy(const AgentModel& model, const std::vector<GraphSpec>& graphs,
                           const EnvConfig& env, int episodes_per_graph, uint64_t seed,
                           bool greedy);

RewardStat oracle_reward(const std::vector<GraphSpec>& graphs, const EnvConfig& env,
                         int episodes_per_graph, uint64_t seed);
RewardStat random_reward(const std::vector<GraphSpec>& graphs, const EnvConfig& env,
                         int episodes_per_graph, uint64_t seed);

class A2CTrainer {
 public:
  A2CTrainer(AgentModel& model, std::vector<GraphSpec> train_graphs,
             std::vector<GraphSpec> test_graphs, const RlTrainConfig& cfg);

  using UpdateSink = std::function<void(const RlUpdateMetrics&)>;
  using EvalSink = std::function<void(const RlEvalMetrics&)>;

  void run(const UpdateSink& on_update = nullptr, const EvalSink& on_eval = nullptr);

  // One synchronous update over the agent batch.
  RlUpdateMetrics update_once();

  // On-policy rollout of a single agent; actions sampled from the policy.
  // Exposed for tests.
  Trajectory rollout(Tape& tape, const GraphSpec& graph, Rng& env_rng, Rng& action_rng,
                     std::vector<NodeId>* logit_nodes, std::vector<NodeId>* value_nodes) const;

  Adam& optimizer() { return adam_; }
  long long update_count() const { return update_; }
  const std::vector<GraphSpec>& train_graphs() const { return train_graphs_; }
  const std::vector<GraphSpec>& test_graphs() const { return test_graphs_; }

 private:
  AgentModel& model_;
  std::vector<GraphSpec> train_graphs_, test_graphs_;
  RlTrainConfig cfg_;
  Adam adam_;
  GradBuffer grads_;
  long long update_ = 0;
};

}  // namespace fwm
