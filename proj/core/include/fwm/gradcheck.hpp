// Finite-difference verification of the reverse-mode gradients through the
// full model, including the fast-weight recurrence across timesteps.

#pragma once

#include <string>
#include <vector>

#include "fwm/model.hpp"

namespace fwm {

struct GradCheckConfig {
  SeqModelConfig model{/*vocab=*/11, /*d_e=*/8, /*d_lstm=*/8, /*d_fwm=*/4, /*n_r=*/2};
  int seq_len = 10;
  uint64_t seed = 0;
  double fd_step = 1e-5;
};

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  double max_abs_diff = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool passed(double tol) const { return max_rel_err < tol; }
};

// Mean next-token cross-entropy over a random window, differentiated on the
// tape and compared coordinate by coordinate against central finite
// differences of an independent extended-precision forward pass. Relative
// error per coordinate: |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8).
GradCheckReport grad_check(const GradCheckConfig& cfg);

}  // namespace fwm
