#include "fwm/graph_env.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "json.hpp"

namespace fwm {

bool strongly_connected(const GraphSpec& g) {
  const int n = g.n_states;
  // Boolean reachability closure: seed with the identity, square n times.
  std::vector<uint8_t> r(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) r[static_cast<size_t>(i) * n + i] = 1;
  for (int a = 0; a < g.n_actions; ++a)
    for (int from = 0; from < n; ++from)
      for (int to = 0; to < n; ++to)
        if (g.at(a, from, to)) r[static_cast<size_t>(from) * n + to] = 1;
  std::vector<uint8_t> next(static_cast<size_t>(n) * n);
  for (int iter = 0; iter < n; ++iter) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        uint8_t v = 0;
        for (int k = 0; k < n; ++k)
          if (r[static_cast<size_t>(i) * n + k] && r[static_cast<size_t>(k) * n + j]) {
            v = 1;
            break;
          }
        next[static_cast<size_t>(i) * n + j] = v;
      }
    r.swap(next);
  }
  return std::all_of(r.begin(), r.end(), [](uint8_t v) { return v != 0; });
}

bool graph_invariants_hold(const GraphSpec& g) {
  const int n = g.n_states;
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < g.n_actions; ++a) {
      if (g.at(a, s, s)) return false;  // self-loop
      int targets = 0;
      for (int to = 0; to < n; ++to) targets += g.at(a, s, to);
      if (targets > 1) return false;  // nondeterministic action
    }
  for (int s = 0; s < n; ++s) {
    int out = 0, in = 0;
    for (int a = 0; a < g.n_actions; ++a)
      for (int other = 0; other < n; ++other) {
        out += g.at(a, s, other);
        in += g.at(a, other, s);
      }
    if (out == 0 || in == 0) return false;
  }
  return strongly_connected(g);
}

GraphSpec sample_graph(DrawSource& draws, int n_actions, int n_states) {
  FWM_CHECK(n_actions >= 1 && n_states >= 2, "sample_graph: need >=1 action and >=2 states");
  while (true) {
    GraphSpec g(n_actions, n_states);

    // Every state gets one random outgoing edge via a random action.
    for (int from = 0; from < n_states; ++from) {
      const int idx = static_cast<int>(draws.uniform(static_cast<uint64_t>(n_states - 1)));
      const int to = idx < from ? idx : idx + 1;
      const int action = static_cast<int>(draws.uniform(static_cast<uint64_t>(n_actions)));
      g.set(action, from, to, 1);
    }

    // Every state gets an incoming edge from an (action, from) slot that has
    // no target yet, excluding from == to. Options are enumerated action-major
    // and a uniform index is drawn. States with no remaining free slot are
    // skipped; at the default configuration this never triggers.
    for (int to = 0; to < n_states; ++to) {
      std::vector<std::pair<int, int>> options;  // (from, action)
      for (int a = 0; a < n_actions; ++a)
        for (int from = 0; from < n_states; ++from) {
          if (from == to) continue;
          if (g.next_state(a, from) < 0) options.emplace_back(from, a);
        }
      if (options.empty()) continue;
      const auto [from, action] =
          options[static_cast<size_t>(draws.uniform(options.size()))];
      g.set(action, from, to, 1);
    }

    if (strongly_connected(g)) return g;
  }
}

int observation_dim(const GraphSpec& g) { return 2 * g.n_states + g.n_actions + 1 + 3; }

Vec encode_observation(const GraphSpec& g, const EnvState& s, const EnvConfig& cfg) {
  Vec obs(observation_dim(g));
  int off = 0;
  obs[off + s.reward_loc] = 1.0;
  off += g.n_states;
  obs[off + s.agent_loc] = 1.0;
  off += g.n_states;
  obs[off + 1 + s.prev_action] = 1.0;  // slot 0 is "none"
  off += g.n_actions + 1;
  obs[off++] = 1.0;  // fixed bit
  obs[off++] = static_cast<double>(s.step_count) / cfg.episode_len;
  obs[off++] = s.cumulative_reward;
  return obs;
}

namespace {

void relocate(const GraphSpec& g, EnvState& s, Rng& rng) {
  int agent, reward;
  do {
    agent = static_cast<int>(rng.uniform(static_cast<uint64_t>(g.n_states)));
    reward = static_cast<int>(rng.uniform(static_cast<uint64_t>(g.n_states)));
  } while (agent == reward);
  s.agent_loc = agent;
  s.reward_loc = reward;
  s.reset_timer = 0;
}

}  // namespace

EnvState env_reset(const GraphSpec& g, Rng& rng) {
  EnvState s;
  relocate(g, s, rng);
  s.step_count = 0;
  s.cumulative_reward = 0.0;
  s.prev_action = -1;
  return s;
}

StepOutcome env_step(const GraphSpec& g, EnvState& s, int action, Rng& rng,
                     const EnvConfig& cfg) {
  FWM_CHECK(action >= 0 && action < g.n_actions, "env_step: invalid action id");
  StepOutcome out;
  const int to = g.next_state(action, s.agent_loc);
  if (to < 0) {
    out.reward -= cfg.invalid_penalty;
  } else {
    s.agent_loc = to;
  }
  s.prev_action = action;
  s.step_count += 1;
  if (s.agent_loc == s.reward_loc) {
    out.reward += cfg.goal_reward;
    relocate(g, s, rng);
  } else {
    s.reset_timer += 1;
    if (s.reset_timer >= cfg.reset_after) relocate(g, s, rng);
  }
  s.cumulative_reward += out.reward;
  out.done = s.step_count >= cfg.episode_len;
  return out;
}

int bfs_next_action(const GraphSpec& g, int from, int goal) {
  FWM_CHECK(from != goal, "bfs_next_action: already at goal");
  // Distance to goal for every state, via reverse BFS.
  std::vector<int> dist(static_cast<size_t>(g.n_states), -1);
  dist[static_cast<size_t>(goal)] = 0;
  std::deque<int> queue{goal};
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    for (int a = 0; a < g.n_actions; ++a)
      for (int src = 0; src < g.n_states; ++src)
        if (g.at(a, src, cur) && dist[static_cast<size_t>(src)] < 0) {
          dist[static_cast<size_t>(src)] = dist[static_cast<size_t>(cur)] + 1;
          queue.push_back(src);
        }
  }
  FWM_CHECK(dist[static_cast<size_t>(from)] > 0, "bfs_next_action: goal unreachable");
  for (int a = 0; a < g.n_actions; ++a) {
    const int to = g.next_state(a, from);
    if (to >= 0 && dist[static_cast<size_t>(to)] == dist[static_cast<size_t>(from)] - 1)
      return a;
  }
  throw std::runtime_error("bfs_next_action: no descending neighbour");
}

double oracle_episode_reward(const GraphSpec& g, const EnvConfig& cfg, Rng& rng) {
  EnvState s = env_reset(g, rng);
  double total = 0.0;
  while (true) {
    const int action = bfs_next_action(g, s.agent_loc, s.reward_loc);
    const StepOutcome out = env_step(g, s, action, rng, cfg);
    total += out.reward;
    if (out.done) break;
  }
  return total;
}

double optimal_reward_oracle(const GraphSpec& g, const EnvConfig& cfg, uint64_t seed,
                             int episodes) {
  double sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(e));
    sum += oracle_episode_reward(g, cfg, rng);
  }
  return sum / episodes;
}

double random_episode_reward(const GraphSpec& g, const EnvConfig& cfg, Rng& rng) {
  EnvState s = env_reset(g, rng);
  double total = 0.0;
  while (true) {
    const int action = static_cast<int>(rng.uniform(static_cast<uint64_t>(g.n_actions)));
    const StepOutcome out = env_step(g, s, action, rng, cfg);
    total += out.reward;
    if (out.done) break;
  }
  return total;
}

double random_policy_baseline(const GraphSpec& g, const EnvConfig& cfg, uint64_t seed,
                              int episodes) {
  double sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(e));
    sum += random_episode_reward(g, cfg, rng);
  }
  return sum / episodes;
}

std::string graphs_to_json(const std::vector<GraphSpec>& graphs, uint64_t seed) {
  nlohmann::json j;
  j["seed"] = seed;
  FWM_CHECK(!graphs.empty(), "graphs_to_json: empty set");
  j["n_actions"] = graphs.front().n_actions;
  j["n_states"] = graphs.front().n_states;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& g : graphs) {
    nlohmann::json a = nlohmann::json::array();
    for (uint8_t v : g.adj) a.push_back(static_cast<int>(v));
    arr.push_back(std::move(a));
  }
  j["graphs"] = std::move(arr);
  return j.dump();
}

std::vector<GraphSpec> graphs_from_json(const std::string& text, uint64_t* seed_out) {
  const auto j = nlohmann::json::parse(text);
  const int n_actions = j.at("n_actions").get<int>();
  const int n_states = j.at("n_states").get<int>();
  if (seed_out) *seed_out = j.at("seed").get<uint64_t>();
  std::vector<GraphSpec> graphs;
  for (const auto& a : j.at("graphs")) {
    GraphSpec g(n_actions, n_states);
    FWM_CHECK(a.size() == g.adj.size(), "graph json: adjacency size mismatch");
    for (size_t i = 0; i < g.adj.size(); ++i) g.adj[i] = static_cast<uint8_t>(a[i].get<int>());
    graphs.push_back(std::move(g));
  }
  return graphs;
}

void save_graphs(const std::vector<GraphSpec>& graphs, uint64_t seed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << graphs_to_json(graphs, seed) << "\n";
}

std::vector<GraphSpec> load_graphs(const std::string& path, uint64_t* seed_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return graphs_from_json(text, seed_out);
}

}  // namespace fwm
