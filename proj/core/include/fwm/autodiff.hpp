// Reverse-mode automatic differentiation over the kernel vocabulary in
// tensor.hpp. A Tape records primitive applications in topological order;
// backward() walks the record once in reverse. One tape per truncated
// window or rollout; tapes are single-owner and reusable (reset() keeps the
// node storage so steady-state training does not allocate).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fwm/rng.hpp"
#include "fwm/tensor.hpp"

namespace fwm {

// Named slow weights plus per-parameter gradient shapes.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Mat value;
  };

  int add(const std::string& name, int rows, int cols);
  int find(const std::string& name) const;  // -1 if absent

  int count() const { return static_cast<int>(entries_.size()); }
  Entry& entry(int id) { return entries_[static_cast<size_t>(id)]; }
  const Entry& entry(int id) const { return entries_[static_cast<size_t>(id)]; }
  const Mat& mat(int id) const { return entries_[static_cast<size_t>(id)].value; }
  size_t total_weights() const;

  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
  void init_uniform_fan_in(int id, int fan_in, Rng& rng);
  void init_uniform(int id, double lo, double hi, Rng& rng);
  void init_constant(int id, double v);

 private:
  std::vector<Entry> entries_;
};

// Per-parameter gradient accumulator. Thread-replicated during parallel
// sections and summed before the optimizer step.
class GradBuffer {
 public:
  explicit GradBuffer(const ParamStore& params);
  void zero();
  std::vector<double>& grad(int param_id) { return grads_[static_cast<size_t>(param_id)]; }
  const std::vector<double>& grad(int param_id) const { return grads_[static_cast<size_t>(param_id)]; }
  void add(const GradBuffer& other);
  void scale(double c);
  double squared_norm() const;
  int count() const { return static_cast<int>(grads_.size()); }

 private:
  std::vector<std::vector<double>> grads_;
};

using NodeId = int;

enum class Op : uint8_t {
  kConst,
  kParam,
  kEmbedRow,
  kAdd,
  kSub,
  kScale,        // c * x, constant c
  kMulScalar,    // s * x, s a 1x1 node
  kHadamard,
  kMatVec,
  kMatMul,
  kSlice,
  kConcat,
  kTanh,
  kSigmoid,
  kOuterVec,     // vec(a ⊗ b)
  kLayerNorm,    // no affine map
  kFwmWrite,     // F + beta * diff * kappa^T
  kFrobRescale,  // F / max(1, ||F||_F), pass-through subgradient at norm <= 1
  kSoftmaxXent,  // -log softmax(x)[target]
  kSoftmaxEntropy,
  kAddConst,     // x + c elementwise
};

class Tape {
 public:
  explicit Tape(const ParamStore* params) : params_(params) {}

  // Leaves. Constants are copied in; they are the detachment points for
  // carried recurrent state. Parameters are referenced in place.
  NodeId constant(const double* data, int rows, int cols);
  NodeId constant(const Vec& v) { return constant(v.data(), v.size(), 1); }
  NodeId constant(const Mat& m) { return constant(m.data(), m.rows(), m.cols()); }
  NodeId param(int param_id);
  NodeId embed_row(int table_param_id, int row);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId add_const(NodeId x, double c);
  NodeId mul_scalar(NodeId x, NodeId s);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId matvec(NodeId m, NodeId x);
  NodeId matmul(NodeId a, NodeId b);
  NodeId slice(NodeId x, int offset, int len);
  NodeId concat(NodeId a, NodeId b);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId outer_vec(NodeId a, NodeId b);
  NodeId layer_norm(NodeId x);
  NodeId fwm_write(NodeId f, NodeId beta, NodeId diff, NodeId kappa);
  NodeId frob_rescale(NodeId f);
  NodeId softmax_xent(NodeId logits, int target);
  NodeId softmax_entropy(NodeId logits);

  const double* value(NodeId id) const { return nodes_[static_cast<size_t>(id)].vptr; }
  int rows(NodeId id) const { return nodes_[static_cast<size_t>(id)].rows; }
  int cols(NodeId id) const { return nodes_[static_cast<size_t>(id)].cols; }
  int numel(NodeId id) const { return rows(id) * cols(id); }
  Vec value_vec(NodeId id) const;
  double value_scalar(NodeId id) const;
  int node_count() const { return used_; }

  // Gradients of a scalar loss w.r.t. every parameter, accumulated into gb.
  // Parameters the loss does not depend on receive exact zero contributions.
  void backward(NodeId loss, GradBuffer& gb);

  // Keep node storage, forget the recording.
  void reset() { used_ = 0; param_cache_.assign(param_cache_.size(), -1); }

 private:
  struct Node {
    Op op = Op::kConst;
    NodeId in0 = -1, in1 = -1, in2 = -1, in3 = -1;
    int rows = 0, cols = 0;
    int iaux0 = 0, iaux1 = 0;
    double daux0 = 0.0, daux1 = 0.0;
    const double* vptr = nullptr;
    std::vector<double> vbuf;
    std::vector<double> gbuf;
    std::vector<double> aux;  // cached softmax probs
  };

  Node& fresh(Op op, int rows, int cols, bool needs_value_buffer);
  NodeId last() const { return used_ - 1; }
  Node& at(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& at(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  double* grad_ptr(NodeId id, GradBuffer& gb);
  void check_same_numel(NodeId a, NodeId b, const char* what) const;

  const ParamStore* params_;
  std::vector<Node> nodes_;
  int used_ = 0;
  std::vector<NodeId> param_cache_;  // param id -> leaf node id for this recording
};

}  // namespace fwm
