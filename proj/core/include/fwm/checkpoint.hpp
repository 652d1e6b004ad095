// Self-describing checkpoint container: a JSON config header naming the
// model kind and dimensions, then named parameter matrices, optionally
// followed by optimizer state so training can resume.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fwm/adam.hpp"
#include "fwm/model.hpp"

namespace fwm {

struct CheckpointData {
  std::string config_json;
  std::vector<std::pair<std::string, Mat>> params;
  bool has_optimizer = false;
  long long adam_step = 0;
  std::vector<std::vector<double>> adam_m, adam_v;  // aligned with params order
};

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& params, const Adam* adam = nullptr);
CheckpointData load_checkpoint(const std::string& path);

// Copies parameters into the store by name; shapes must match exactly.
void apply_params(const CheckpointData& ckpt, ParamStore* params);
void apply_optimizer(const CheckpointData& ckpt, const ParamStore& params, Adam* adam);

// Model config headers. "kind" discriminates seq vs agent checkpoints.
std::string seq_config_to_json(const SeqModelConfig& cfg);
SeqModelConfig seq_config_from_json(const std::string& text);
std::string agent_config_to_json(const AgentModelConfig& cfg);
AgentModelConfig agent_config_from_json(const std::string& text);
std::string checkpoint_kind(const std::string& config_json);

}  // namespace fwm
