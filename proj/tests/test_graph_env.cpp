#include "fwm/graph_env.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "support.hpp"

using namespace fwm;

namespace {

// Records (bound, value) pairs so a second implementation can be driven by
// the exact same draw sequence, bound-checked.
class RecordingSource final : public DrawSource {
 public:
  explicit RecordingSource(Rng& rng) : rng_(rng) {}
  uint64_t uniform(uint64_t bound) override {
    const uint64_t v = rng_.uniform(bound);
    log.emplace_back(bound, v);
    return v;
  }
  std::vector<std::pair<uint64_t, uint64_t>> log;

 private:
  Rng& rng_;
};

class ReplaySource final : public DrawSource {
 public:
  explicit ReplaySource(const std::vector<std::pair<uint64_t, uint64_t>>& log) : log_(log) {}
  uint64_t uniform(uint64_t bound) override {
    if (pos_ >= log_.size()) throw std::runtime_error("replay: draw sequence exhausted");
    const auto [b, v] = log_[pos_++];
    if (b != bound) throw std::runtime_error("replay: draw bound diverged");
    return v;
  }
  bool exhausted() const { return pos_ == log_.size(); }

 private:
  const std::vector<std::pair<uint64_t, uint64_t>>& log_;
  size_t pos_ = 0;
};

// Independent transcription of the published sampling routine: one outgoing
// edge per state, one incoming edge per state drawn from the free
// (action, from) slots enumerated action-major, then reject-and-retry until
// the reachability closure (identity-seeded, squared n_states times) is full.
GraphSpec listing_transcription(DrawSource& draws, int n_actions, int n_states) {
  while (true) {
    GraphSpec a(n_actions, n_states);

    for (int from_state = 0; from_state < n_states; ++from_state) {
      std::vector<int> candidates;
      for (int i = 0; i < n_states; ++i)
        if (i != from_state) candidates.push_back(i);
      const int to_state = candidates[draws.uniform(candidates.size())];
      const int action = static_cast<int>(draws.uniform(static_cast<uint64_t>(n_actions)));
      a.set(action, from_state, to_state, 1);
    }

    for (int to_state = 0; to_state < n_states; ++to_state) {
      // np.where over A.sum(2) == 0 yields (action, from) row-major; the
      // zip flips to (from, action) and the filter drops from == to.
      std::vector<std::pair<int, int>> options;
      for (int action = 0; action < n_actions; ++action)
        for (int from = 0; from < n_states; ++from) {
          int row_sum = 0;
          for (int to = 0; to < n_states; ++to) row_sum += a.at(action, from, to);
          if (row_sum == 0 && from != to_state) options.emplace_back(from, action);
        }
      if (options.empty()) continue;
      const auto [from, action] = options[draws.uniform(options.size())];
      a.set(action, from, to_state, 1);
    }

    std::vector<int> q(static_cast<size_t>(n_states) * n_states, 0);
    for (int i = 0; i < n_states; ++i) q[static_cast<size_t>(i) * n_states + i] = 1;
    for (int action = 0; action < n_actions; ++action)
      for (int from = 0; from < n_states; ++from)
        for (int to = 0; to < n_states; ++to)
          if (a.at(action, from, to)) q[static_cast<size_t>(from) * n_states + to] = 1;
    for (int rep = 0; rep < n_states; ++rep) {
      std::vector<int> next(q.size(), 0);
      for (int i = 0; i < n_states; ++i)
        for (int k = 0; k < n_states; ++k)
          if (q[static_cast<size_t>(i) * n_states + k])
            for (int j = 0; j < n_states; ++j)
              if (q[static_cast<size_t>(k) * n_states + j])
                next[static_cast<size_t>(i) * n_states + j] = 1;
      q = next;
    }
    bool all = true;
    for (int v : q) all &= v != 0;
    if (all) return a;
  }
}

GraphSpec five_cycle() {
  GraphSpec g(3, 5);
  for (int s = 0; s < 5; ++s) g.set(0, s, (s + 1) % 5, 1);
  return g;
}

}  // namespace

TEST(GraphEnv, SamplerMatchesTranscriptionOnSharedDraws) {
  Rng rng(70);
  for (int trial = 0; trial < 200; ++trial) {
    RecordingSource rec(rng);
    const GraphSpec sampled = sample_graph(rec, 3, 5);
    ReplaySource replay(rec.log);
    const GraphSpec oracle = listing_transcription(replay, 3, 5);
    ASSERT_TRUE(sampled == oracle) << "trial " << trial;
    ASSERT_TRUE(replay.exhausted());
  }
}

TEST(GraphEnv, TwoStateOneActionYieldsUniqueValidGraph) {
  // Exhaustive enumeration: every 1x2x2 binary tensor satisfying the
  // invariants. There is exactly one.
  std::vector<GraphSpec> valid;
  for (int bits = 0; bits < 16; ++bits) {
    GraphSpec g(1, 2);
    for (int i = 0; i < 4; ++i) g.adj[static_cast<size_t>(i)] = (bits >> i) & 1;
    if (graph_invariants_hold(g)) valid.push_back(g);
  }
  ASSERT_EQ(valid.size(), 1u);
  EXPECT_EQ(valid[0].at(0, 0, 1), 1);
  EXPECT_EQ(valid[0].at(0, 1, 0), 1);

  Rng rng(71);
  RngDrawSource draws(rng);
  const GraphSpec sampled = sample_graph(draws, 1, 2);
  EXPECT_TRUE(sampled == valid[0]);
}

TEST(GraphEnv, SampledGraphsSatisfyInvariants) {
  Rng rng(72);
  RngDrawSource draws(rng);
  for (int i = 0; i < 500; ++i) {
    const GraphSpec g = sample_graph(draws, 3, 5);
    ASSERT_TRUE(graph_invariants_hold(g));
  }
}

TEST(GraphEnv, ResetPlacesDistinctLocations) {
  Rng rng(73);
  RngDrawSource draws(rng);
  const GraphSpec g = sample_graph(draws, 3, 5);
  EnvConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const EnvState s = env_reset(g, rng);
    ASSERT_NE(s.agent_loc, s.reward_loc);
    const Vec obs = encode_observation(g, s, cfg);
    ASSERT_EQ(obs.size(), 17);
    EXPECT_EQ(obs[10 + 0], 1.0);  // previous action = none
    EXPECT_EQ(obs[14], 1.0);      // fixed bit
    EXPECT_EQ(obs[15], 0.0);      // progress
    EXPECT_EQ(obs[16], 0.0);      // reward sum
  }
}

TEST(GraphEnv, ResetMarginalsUniformOverOrderedDistinctPairs) {
  Rng rng(74);
  RngDrawSource draws(rng);
  const GraphSpec g = sample_graph(draws, 3, 5);
  std::map<std::pair<int, int>, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const EnvState s = env_reset(g, rng);
    ++counts[{s.agent_loc, s.reward_loc}];
  }
  ASSERT_EQ(counts.size(), 20u);
  const double expected = n / 20.0;
  double chi2 = 0.0;
  for (const auto& [pair, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 19 degrees of freedom; 43.8 is the 99.9th percentile.
  EXPECT_LT(chi2, 43.8);
}

TEST(GraphEnv, InvalidActionPenaltyAndStay) {
  const GraphSpec g = five_cycle();  // only action 0 is ever valid
  EnvConfig cfg;
  Rng rng(75);
  EnvState s;
  s.agent_loc = 0;
  s.reward_loc = 2;
  const StepOutcome out = env_step(g, s, 1, rng, cfg);
  EXPECT_EQ(s.agent_loc, 0);
  EXPECT_DOUBLE_EQ(out.reward, -0.05);
  EXPECT_EQ(s.reset_timer, 1);
  EXPECT_EQ(s.prev_action, 1);
}

TEST(GraphEnv, ReachingRewardPaysTenAndRelocates) {
  const GraphSpec g = five_cycle();
  EnvConfig cfg;
  Rng rng(76);
  EnvState s;
  s.agent_loc = 1;
  s.reward_loc = 2;
  const StepOutcome out = env_step(g, s, 0, rng, cfg);
  EXPECT_DOUBLE_EQ(out.reward, 10.0);
  EXPECT_EQ(s.reset_timer, 0);
  EXPECT_NE(s.agent_loc, s.reward_loc);
  EXPECT_DOUBLE_EQ(s.cumulative_reward, 10.0);
}

TEST(GraphEnv, SixFruitlessStepsForceRelocation) {
  // 0 <-> 1 via action 0; the rest of the graph only keeps it connected.
  GraphSpec g(3, 5);
  g.set(0, 0, 1, 1);
  g.set(0, 1, 0, 1);
  g.set(1, 1, 2, 1);
  g.set(1, 2, 3, 1);
  g.set(1, 3, 4, 1);
  g.set(1, 4, 1, 1);
  EnvConfig cfg;
  Rng rng(77);
  EnvState s;
  s.agent_loc = 0;
  s.reward_loc = 3;
  for (int step = 1; step <= 5; ++step) {
    const StepOutcome out = env_step(g, s, 0, rng, cfg);
    ASSERT_DOUBLE_EQ(out.reward, 0.0);
    ASSERT_EQ(s.reset_timer, step);
    ASSERT_EQ(s.reward_loc, 3);
  }
  const StepOutcome out = env_step(g, s, 0, rng, cfg);
  EXPECT_DOUBLE_EQ(out.reward, 0.0);  // relocation pays nothing
  EXPECT_EQ(s.reset_timer, 0);
  EXPECT_NE(s.agent_loc, s.reward_loc);
}

TEST(GraphEnv, CumulativeRewardConservation) {
  Rng rng(78);
  RngDrawSource draws(rng);
  EnvConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const GraphSpec g = sample_graph(draws, 3, 5);
    EnvState s = env_reset(g, rng);
    int hits = 0, invalid = 0;
    while (true) {
      const int action = static_cast<int>(rng.uniform(3));
      const bool was_invalid = g.next_state(action, s.agent_loc) < 0;
      const StepOutcome out = env_step(g, s, action, rng, cfg);
      invalid += was_invalid ? 1 : 0;
      hits += out.reward > 5.0 ? 1 : 0;
      if (out.done) break;
    }
    EXPECT_NEAR(s.cumulative_reward, 10.0 * hits - 0.05 * invalid, 1e-9);
  }
}

TEST(GraphEnv, ObservationValidityFuzz) {
  Rng rng(79);
  RngDrawSource draws(rng);
  EnvConfig cfg;
  int steps = 0;
  while (steps < 100000) {
    const GraphSpec g = sample_graph(draws, 3, 5);
    EnvState s = env_reset(g, rng);
    while (true) {
      const int action = static_cast<int>(rng.uniform(3));
      const StepOutcome out = env_step(g, s, action, rng, cfg);
      ++steps;
      const Vec obs = encode_observation(g, s, cfg);
      double block1 = 0.0, block2 = 0.0, block3 = 0.0;
      for (int i = 0; i < 5; ++i) block1 += obs[i];
      for (int i = 5; i < 10; ++i) block2 += obs[i];
      for (int i = 10; i < 14; ++i) block3 += obs[i];
      ASSERT_DOUBLE_EQ(block1, 1.0);
      ASSERT_DOUBLE_EQ(block2, 1.0);
      ASSERT_DOUBLE_EQ(block3, 1.0);
      ASSERT_GE(obs[15], 0.0);
      ASSERT_LE(obs[15], 1.0);
      if (out.done) break;
    }
  }
}

TEST(GraphEnv, OracleOnTwoCycleCollectsEveryStep) {
  Rng rng(80);
  RngDrawSource draws(rng);
  const GraphSpec g = sample_graph(draws, 1, 2);
  EnvConfig cfg;
  Rng episode(81);
  // Agent and reward always occupy the two distinct nodes, so the oracle
  // reaches the reward every single step.
  EXPECT_DOUBLE_EQ(oracle_episode_reward(g, cfg, episode), 300.0);
}

TEST(GraphEnv, OracleDominatesFixedPoliciesAndRandom) {
  Rng rng(82);
  RngDrawSource draws(rng);
  EnvConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    const GraphSpec g = sample_graph(draws, 3, 5);
    const double oracle = optimal_reward_oracle(g, cfg, 900 + trial, 20);
    for (int fixed = 0; fixed < 3; ++fixed) {
      double total = 0.0;
      for (int e = 0; e < 20; ++e) {
        Rng er = Rng::stream(900 + trial, static_cast<uint64_t>(e));
        EnvState s = env_reset(g, er);
        while (true) {
          const StepOutcome out = env_step(g, s, fixed, er, cfg);
          if (out.done) break;
        }
        total += s.cumulative_reward;
      }
      EXPECT_GE(oracle, total / 20.0);
    }
    EXPECT_GE(oracle, random_policy_baseline(g, cfg, 900 + trial, 20));
  }
}

TEST(GraphEnv, OracleNeverPaysInvalidPenalty) {
  Rng rng(83);
  RngDrawSource draws(rng);
  EnvConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const GraphSpec g = sample_graph(draws, 3, 5);
    Rng episode = Rng::stream(84, static_cast<uint64_t>(trial));
    EnvState s = env_reset(g, episode);
    while (true) {
      const int action = bfs_next_action(g, s.agent_loc, s.reward_loc);
      ASSERT_GE(g.next_state(action, s.agent_loc), 0);
      const StepOutcome out = env_step(g, s, action, episode, cfg);
      ASSERT_GE(out.reward, 0.0);
      if (out.done) break;
    }
  }
}

TEST(GraphEnv, RandomBaselineIsStableAndAboveFloor) {
  Rng rng(85);
  RngDrawSource draws(rng);
  const GraphSpec g = sample_graph(draws, 3, 5);
  EnvConfig cfg;
  const double m1 = random_policy_baseline(g, cfg, 1000, 10000);
  const double m2 = random_policy_baseline(g, cfg, 2000, 10000);
  EXPECT_LT(std::abs(m1 - m2), 0.5);
  EXPECT_GT(m1, -0.05 * 30);
}

TEST(GraphEnv, GraphJsonRoundTrip) {
  Rng rng(86);
  RngDrawSource draws(rng);
  std::vector<GraphSpec> graphs;
  for (int i = 0; i < 5; ++i) graphs.push_back(sample_graph(draws, 3, 5));
  const auto path = std::filesystem::temp_directory_path() / "fwm_graphs.json";
  save_graphs(graphs, 4242, path.string());
  uint64_t seed = 0;
  const auto back = load_graphs(path.string(), &seed);
  std::filesystem::remove(path);
  EXPECT_EQ(seed, 4242u);
  ASSERT_EQ(back.size(), graphs.size());
  for (size_t i = 0; i < graphs.size(); ++i) EXPECT_TRUE(back[i] == graphs[i]);
}
