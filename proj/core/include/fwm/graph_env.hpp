// Meta-RL POMDP family: action-labelled directed graphs with five states and
// three actions (configurable for tests). Episodes relocate the agent and
// reward on success or after six fruitless steps; observations expose the
// locations and bookkeeping but never the graph itself.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fwm/rng.hpp"
#include "fwm/tensor.hpp"

namespace fwm {

struct GraphSpec {
  int n_actions = 0;
  int n_states = 0;
  std::vector<uint8_t> adj;  // [action][from][to]

  GraphSpec() = default;
  GraphSpec(int actions, int states)
      : n_actions(actions),
        n_states(states),
        adj(static_cast<size_t>(actions) * states * states, 0) {}

  uint8_t at(int a, int from, int to) const {
    return adj[(static_cast<size_t>(a) * n_states + from) * n_states + to];
  }
  void set(int a, int from, int to, uint8_t v) {
    adj[(static_cast<size_t>(a) * n_states + from) * n_states + to] = v;
  }
  // Deterministic transitions: the unique target, or -1 for an invalid action.
  int next_state(int a, int from) const {
    for (int to = 0; to < n_states; ++to)
      if (at(a, from, to)) return to;
    return -1;
  }
  bool operator==(const GraphSpec& o) const {
    return n_actions == o.n_actions && n_states == o.n_states && adj == o.adj;
  }
};

// No self-loops, deterministic actions, every state with at least one
// outgoing and one incoming edge, strongly connected.
bool graph_invariants_hold(const GraphSpec& g);

bool strongly_connected(const GraphSpec& g);

// Rejection sampler: each state gets a random outgoing edge, then each state
// an incoming edge drawn from the free (action, from) slots, then the
// candidate is rejected unless strongly connected. The draw sequence through
// `draws` is part of the contract (tests replay it against an independent
// transcription of the generating algorithm).
GraphSpec sample_graph(DrawSource& draws, int n_actions = 3, int n_states = 5);

struct EnvConfig {
  int episode_len = 30;
  double goal_reward = 10.0;
  double invalid_penalty = 0.05;
  int reset_after = 6;
};

struct EnvState {
  int agent_loc = 0;
  int reward_loc = 0;
  int reset_timer = 0;
  int step_count = 0;
  double cumulative_reward = 0.0;
  int prev_action = -1;  // -1 before the first step
};

// reward one-hot ++ agent one-hot ++ previous action one-hot (with a "none"
// slot) ++ fixed bit ++ fractional progress ++ cumulative reward. 17 dims at
// the default (3, 5) configuration.
int observation_dim(const GraphSpec& g);
Vec encode_observation(const GraphSpec& g, const EnvState& s, const EnvConfig& cfg);

EnvState env_reset(const GraphSpec& g, Rng& rng);

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
};
StepOutcome env_step(const GraphSpec& g, EnvState& s, int action, Rng& rng,
                     const EnvConfig& cfg);

// First action of a shortest valid path from `from` to `goal`; asserts
// reachability (guaranteed by the sampler's connectivity check).
int bfs_next_action(const GraphSpec& g, int from, int goal);

// Full-observability shortest-path policy over one episode.
double oracle_episode_reward(const GraphSpec& g, const EnvConfig& cfg, Rng& rng);
double optimal_reward_oracle(const GraphSpec& g, const EnvConfig& cfg, uint64_t seed,
                             int episodes);

double random_episode_reward(const GraphSpec& g, const EnvConfig& cfg, Rng& rng);
double random_policy_baseline(const GraphSpec& g, const EnvConfig& cfg, uint64_t seed,
                              int episodes);

// Graph sets are stored as JSON (adjacency tensors plus the sampling seed).
std::string graphs_to_json(const std::vector<GraphSpec>& graphs, uint64_t seed);
std::vector<GraphSpec> graphs_from_json(const std::string& text, uint64_t* seed_out = nullptr);
void save_graphs(const std::vector<GraphSpec>& graphs, uint64_t seed, const std::string& path);
std::vector<GraphSpec> load_graphs(const std::string& path, uint64_t* seed_out = nullptr);

}  // namespace fwm
