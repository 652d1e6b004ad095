#include "fwm/synth.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

namespace fwm {

namespace {

const std::array<const char*, 30> kNames = {
    "gertrude", "bernhard", "winona",  "julius",  "emily",   "lily",
    "brian",    "greg",     "jessica", "antoine", "sumit",   "yann",
    "fred",     "mary",     "john",    "sandra",  "daniel",  "bill",
    "jason",    "julie",    "martha",  "pedro",   "ada",     "grace",
    "alan",     "edsger",   "barbara", "donald",  "marvin",  "rosa"};

const std::array<const char*, 8> kLocations = {"bathroom", "kitchen", "garden", "office",
                                               "hallway",  "bedroom", "park",   "school"};

struct TypeWord {
  const char* singular;
  const char* plural;
};
const std::array<TypeWord, 8> kTypes = {{{"mouse", "mice"},
                                         {"wolf", "wolves"},
                                         {"cat", "cats"},
                                         {"lion", "lions"},
                                         {"frog", "frogs"},
                                         {"swan", "swans"},
                                         {"bird", "birds"},
                                         {"spider", "spiders"}}};

struct Pair {
  int a, b;
  bool operator<(const Pair& o) const { return std::tie(a, b) < std::tie(o.a, o.b); }
};

// Splits the full pair space {0..na-1} x {0..nb-1} (minus the diagonal when
// exclude_diagonal) into train and held-out sets. Every left and right atom
// keeps at least one training pair.
struct PairSplit {
  std::vector<Pair> train, held;
};

PairSplit split_pairs(int na, int nb, bool exclude_diagonal, double holdout_fraction, Rng& rng) {
  std::vector<Pair> all;
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b) {
      if (exclude_diagonal && a == b) continue;
      all.push_back({a, b});
    }
  for (size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.uniform(i)]);

  const size_t held_target = static_cast<size_t>(holdout_fraction * all.size());
  std::vector<int> left_count(static_cast<size_t>(na), 0), right_count(static_cast<size_t>(nb), 0);
  PairSplit out;
  for (const Pair& p : all) {
    const bool can_hold =
        out.held.size() < held_target &&
        left_count[static_cast<size_t>(p.a)] > 0 && right_count[static_cast<size_t>(p.b)] > 0;
    if (can_hold) {
      out.held.push_back(p);
    } else {
      out.train.push_back(p);
      ++left_count[static_cast<size_t>(p.a)];
      ++right_count[static_cast<size_t>(p.b)];
    }
  }
  FWM_CHECK(!out.held.empty(), "pair split: holdout is empty; raise holdout_fraction");
  return out;
}

const Pair& pick(const std::vector<Pair>& pairs, Rng& rng) {
  return pairs[static_cast<size_t>(rng.uniform(pairs.size()))];
}

void emit(Story* s, std::initializer_list<std::string> words) {
  for (const auto& w : words) {
    s->tokens.push_back(w);
    s->answer_flags.push_back(0);
  }
}

void emit_answer(Story* s, const std::string& w) {
  s->tokens.push_back(w);
  s->answer_flags.push_back(1);
}

struct Generator {
  const SynthConfig& cfg;
  PairSplit loc_pairs;    // (entity, location)
  PairSplit type_pairs;   // (entity, type)
  PairSplit fear_pairs;   // (type, feared type), diagonal excluded
  // fear pairs indexed by the fearing type
  std::vector<std::vector<int>> fears_train_by_type, fears_held_by_type;

  void index_fears(int n_types) {
    fears_train_by_type.assign(static_cast<size_t>(n_types), {});
    fears_held_by_type.assign(static_cast<size_t>(n_types), {});
    for (const Pair& p : fear_pairs.train)
      fears_train_by_type[static_cast<size_t>(p.a)].push_back(p.b);
    for (const Pair& p : fear_pairs.held)
      fears_held_by_type[static_cast<size_t>(p.a)].push_back(p.b);
  }

  Story make_story(Rng& rng, bool held_out, int task) const {
    const auto& locs = held_out ? loc_pairs.held : loc_pairs.train;
    const auto& types = held_out ? type_pairs.held : type_pairs.train;

    Story s;
    s.task_id = task;

    if (task == kSynthTaskOneHop) {
      // Several entities move around; one-hop questions about their latest
      // location. Distinct entities per story keep answers unambiguous.
      std::map<int, int> latest;
      std::vector<int> entities;
      int guard = 0;
      while (static_cast<int>(entities.size()) < cfg.entities_per_story && guard++ < 200) {
        const Pair& p = pick(locs, rng);
        if (latest.count(p.a)) continue;
        entities.push_back(p.a);
        latest[p.a] = p.b;
        emit(&s, {kNames[static_cast<size_t>(p.a)], "moved", "to", "the",
                  kLocations[static_cast<size_t>(p.b)], "."});
      }
      for (int e : entities) {
        if (rng.uniform_real(0.0, 1.0) < cfg.move_again_prob) {
          // Re-place using another training/held pair with the same entity.
          for (int tries = 0; tries < 50; ++tries) {
            const Pair& p = pick(locs, rng);
            if (p.a != e || p.b == latest[e]) continue;
            latest[e] = p.b;
            emit(&s, {kNames[static_cast<size_t>(p.a)], "moved", "to", "the",
                      kLocations[static_cast<size_t>(p.b)], "."});
            break;
          }
        }
      }
      // Ask about a shuffled subset.
      std::vector<int> order = entities;
      for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);
      const int n_q = std::max<int>(1, static_cast<int>(order.size()) / 2);
      for (int qi = 0; qi < n_q; ++qi) {
        const int e = order[static_cast<size_t>(qi)];
        emit(&s, {"where", "is", kNames[static_cast<size_t>(e)], "?"});
        emit_answer(&s, kLocations[static_cast<size_t>(latest[e])]);
      }
    } else {
      // Two-hop chains: entity -> type, type -> feared type. The two facts
      // of a chain are separated by the other chains' facts so the answer
      // needs chaining, not adjacency.
      struct Chain {
        int entity, type, fear;
      };
      std::vector<Chain> chains;
      std::set<int> used_entities, used_types;
      int guard = 0;
      while (static_cast<int>(chains.size()) < cfg.chains_per_story && guard++ < 400) {
        const Pair& tp = pick(types, rng);
        if (used_entities.count(tp.a) || used_types.count(tp.b)) continue;
        // Fear binding for this type; held-out stories fall back to a
        // training fear pair when the type has no held-out one (the entity
        // to type hop is still a never-trained combination).
        const auto& held_fears = fears_held_by_type[static_cast<size_t>(tp.b)];
        const auto& train_fears = fears_train_by_type[static_cast<size_t>(tp.b)];
        const auto& pool = held_out && !held_fears.empty() ? held_fears : train_fears;
        if (pool.empty()) continue;
        const int fear = pool[static_cast<size_t>(rng.uniform(pool.size()))];
        chains.push_back({tp.a, tp.b, fear});
        used_entities.insert(tp.a);
        used_types.insert(tp.b);
      }
      FWM_CHECK(!chains.empty(), "synth: could not assemble a two-hop chain");
      for (const Chain& c : chains)
        emit(&s, {kNames[static_cast<size_t>(c.entity)], "is", "a",
                  kTypes[static_cast<size_t>(c.type)].singular, "."});
      for (const Chain& c : chains)
        emit(&s, {kTypes[static_cast<size_t>(c.type)].plural, "are", "afraid", "of",
                  kTypes[static_cast<size_t>(c.fear)].plural, "."});
      std::vector<size_t> order(chains.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);
      for (size_t idx : order) {
        const Chain& c = chains[idx];
        emit(&s, {"what", "is", kNames[static_cast<size_t>(c.entity)], "afraid", "of", "?"});
        emit_answer(&s, kTypes[static_cast<size_t>(c.fear)].singular);
      }
    }
    s.tokens.push_back(kEosToken);
    s.answer_flags.push_back(0);
    return s;
  }
};

std::vector<Story> make_split(const Generator& gen, Rng& rng, int n, bool held_out) {
  std::vector<Story> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int task = rng.uniform(2) == 0 ? kSynthTaskOneHop : kSynthTaskTwoHop;
    out.push_back(gen.make_story(rng, held_out, task));
  }
  return out;
}

}  // namespace

BabiCorpus synth_stories(uint64_t seed, const SynthConfig& cfg) {
  FWM_CHECK(cfg.n_entities >= 2 && cfg.n_entities <= static_cast<int>(kNames.size()),
            "synth: n_entities out of range");
  FWM_CHECK(cfg.n_locations >= 2 && cfg.n_locations <= static_cast<int>(kLocations.size()),
            "synth: n_locations out of range");
  FWM_CHECK(cfg.n_types >= 3 && cfg.n_types <= static_cast<int>(kTypes.size()),
            "synth: n_types out of range");

  Rng split_rng = Rng::stream(seed, 20);
  Generator gen{cfg,
                split_pairs(cfg.n_entities, cfg.n_locations, false, cfg.holdout_fraction, split_rng),
                split_pairs(cfg.n_entities, cfg.n_types, false, cfg.holdout_fraction, split_rng),
                split_pairs(cfg.n_types, cfg.n_types, true, cfg.holdout_fraction, split_rng),
                {},
                {}};
  gen.index_fears(cfg.n_types);

  BabiCorpus corpus;
  Rng train_rng = Rng::stream(seed, 21);
  Rng valid_rng = Rng::stream(seed, 22);
  Rng test_rng = Rng::stream(seed, 23);
  corpus.train = make_split(gen, train_rng, cfg.train_stories, false);
  corpus.valid = make_split(gen, valid_rng, cfg.valid_stories, true);
  corpus.test = make_split(gen, test_rng, cfg.test_stories, true);
  return corpus;
}

}  // namespace fwm
