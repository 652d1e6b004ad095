// Built-in synthetic story generator: entity-location facts with one-hop
// "where is X ?" questions (task id 1) and two-hop type/fear deduction
// chains ("gertrude is a mouse . mice are afraid of wolves ." -> "what is
// gertrude afraid of ? wolf", task id 2). Fact pairs are split into train
// and held-out sets so evaluation questions require composing bindings never
// seen together during training. Repeated facts about the same subject
// follow latest-fact-wins semantics.

#pragma once

#include <cstdint>

#include "fwm/babi.hpp"

namespace fwm {

struct SynthConfig {
  int n_entities = 30;
  int n_locations = 8;
  int n_types = 8;
  int train_stories = 8000;
  int valid_stories = 400;
  int test_stories = 1000;
  // Entities/chains per story.
  int entities_per_story = 4;
  int chains_per_story = 2;
  double move_again_prob = 0.3;   // latest-fact-wins exercise
  double holdout_fraction = 0.2;  // of each pair space
};

inline constexpr int kSynthTaskOneHop = 1;
inline constexpr int kSynthTaskTwoHop = 2;

// Stories whose answers are uniquely determined by the preceding facts of
// the same story. Train stories draw from the training pair sets; valid and
// test stories draw from the held-out pair sets.
BabiCorpus synth_stories(uint64_t seed, const SynthConfig& cfg);

}  // namespace fwm
