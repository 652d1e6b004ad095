// Bias-corrected Adam with an optional global gradient-norm clip.

#pragma once

#include <stdexcept>
#include <vector>

#include "fwm/autodiff.hpp"

namespace fwm {

// Non-finite gradients and similar numerical failures; the CLI maps this to
// its own exit code.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 1.0;  // <= 0 disables clipping
};

class Adam {
 public:
  Adam(const ParamStore& params, const AdamConfig& cfg);

  // One update. Throws std::runtime_error naming the parameter if a
  // gradient is not finite.
  void step(ParamStore& params, const GradBuffer& grads);

  long long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  // Raw moment access for checkpointing.
  std::vector<std::vector<double>>& m() { return m_; }
  std::vector<std::vector<double>>& v() { return v_; }
  void set_step_count(long long t) { t_ = t; }

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace fwm
