// The fast weight memory: a d_fwm × d_fwm² matrix rewritten at every step by
// the controller. Writing retrieves the value currently stored under the key
// pair, moves it toward the new value by a learned rate, and rescales the
// whole memory back inside the unit Frobenius ball. Reading chains n_r
// retrievals, feeding each retrieved vector back as half of the next query.

#pragma once

#include <vector>

#include "fwm/tensor.hpp"

namespace fwm {

enum class KeyMode { kTensor, kConcat };

struct FwmConfig {
  int d_fwm = 0;
  int n_r = 1;
  KeyMode key_mode = KeyMode::kTensor;

  // Key dimension of the memory matrix: d² for tensor-product keys, 2d for
  // concatenated keys.
  int key_dim() const {
    return key_mode == KeyMode::kTensor ? d_fwm * d_fwm : 2 * d_fwm;
  }
};

struct WriteCommand {
  Vec k1, k2, v;
  double beta = 0.0;
};

struct ReadQuery {
  Vec n0;
  std::vector<Vec> e;  // one per read hop
};

// [k1, k2, v] = tanh(w_write h), three equal slices in that order;
// beta = sigmoid(w_beta h).
WriteCommand generate_write_command(const Vec& h, const Mat& w_write, const Mat& w_beta);

// vec(k1 ⊗ k2) for tensor keys, [k1; k2] for concatenated keys.
Vec combined_key(const Vec& k1, const Vec& k2, KeyMode mode);

// F' = F + beta (v - F kappa) kappa^T, then F' / max(1, ||F'||_F).
Mat fwm_update(const Mat& f, const WriteCommand& cmd, KeyMode mode);

// n0 = tanh(w_n h); e_i = tanh(w_e[i] h), each hop with its own matrix.
ReadQuery generate_read_query(const Vec& h, const Mat& w_n, const std::vector<Mat>& w_e);

// n_i = layer_norm(F combined_key(n_{i-1}, e_i)); returns n_{n_r}. When hops
// is given, it receives n0..n_{n_r} (the chained intermediates).
Vec read_chain(const Mat& f, const ReadQuery& q, KeyMode mode, std::vector<Vec>* hops = nullptr);

Vec fwm_output(const Vec& n, const Mat& w_o);

// Alignment between every retained write key pair and each chained read
// query: entry (i, t) = <combined_key(k1_t, k2_t), combined_key(n_{i-1}, e_i)>.
// hops must hold the chained intermediates n0..n_{n_r} from read_chain.
Mat write_read_alignment(const std::vector<WriteCommand>& history, const ReadQuery& q,
                         const std::vector<Vec>& hops, KeyMode mode);

}  // namespace fwm
