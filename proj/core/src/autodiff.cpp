#include "fwm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace fwm {

int ParamStore::add(const std::string& name, int rows, int cols) {
  FWM_CHECK(find(name) < 0, "ParamStore: duplicate name " + name);
  FWM_CHECK(rows > 0 && cols > 0, "ParamStore: bad shape for " + name);
  Entry e;
  e.name = name;
  e.value = Mat(rows, cols);
  entries_.push_back(std::move(e));
  return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return static_cast<int>(i);
  return -1;
}

size_t ParamStore::total_weights() const {
  size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::init_uniform_fan_in(int id, int fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  init_uniform(id, -s, s, rng);
}

void ParamStore::init_uniform(int id, double lo, double hi, Rng& rng) {
  Mat& m = entry(id).value;
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform_real(lo, hi);
}

void ParamStore::init_constant(int id, double v) {
  Mat& m = entry(id).value;
  std::fill(m.data(), m.data() + m.size(), v);
}

GradBuffer::GradBuffer(const ParamStore& params) {
  grads_.resize(static_cast<size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i)
    grads_[static_cast<size_t>(i)].assign(params.entry(i).value.size(), 0.0);
}

void GradBuffer::zero() {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
}

void GradBuffer::add(const GradBuffer& other) {
  for (size_t i = 0; i < grads_.size(); ++i)
    for (size_t j = 0; j < grads_[i].size(); ++j) grads_[i][j] += other.grads_[i][j];
}

void GradBuffer::scale(double c) {
  for (auto& g : grads_)
    for (double& v : g) v *= c;
}

double GradBuffer::squared_norm() const {
  double acc = 0.0;
  for (const auto& g : grads_)
    for (double v : g) acc += v * v;
  return acc;
}

Tape::Node& Tape::fresh(Op op, int rows, int cols, bool needs_value_buffer) {
  if (used_ == static_cast<int>(nodes_.size())) nodes_.emplace_back();
  Node& n = nodes_[static_cast<size_t>(used_++)];
  n.op = op;
  n.in0 = n.in1 = n.in2 = n.in3 = -1;
  n.rows = rows;
  n.cols = cols;
  n.iaux0 = n.iaux1 = 0;
  n.daux0 = n.daux1 = 0.0;
  const size_t numel = static_cast<size_t>(rows) * cols;
  if (needs_value_buffer) {
    n.vbuf.resize(numel);
    n.vptr = n.vbuf.data();
  } else {
    n.vptr = nullptr;
  }
  return n;
}

NodeId Tape::constant(const double* data, int rows, int cols) {
  Node& n = fresh(Op::kConst, rows, cols, true);
  std::copy(data, data + static_cast<size_t>(rows) * cols, n.vbuf.begin());
  return last();
}

NodeId Tape::param(int param_id) {
  if (param_cache_.size() < static_cast<size_t>(params_->count()))
    param_cache_.resize(static_cast<size_t>(params_->count()), -1);
  NodeId& cached = param_cache_[static_cast<size_t>(param_id)];
  if (cached >= 0) return cached;
  const Mat& m = params_->mat(param_id);
  Node& n = fresh(Op::kParam, m.rows(), m.cols(), false);
  n.vptr = m.data();
  n.iaux0 = param_id;
  cached = last();
  return cached;
}

NodeId Tape::embed_row(int table_param_id, int row) {
  const Mat& m = params_->mat(table_param_id);
  FWM_CHECK(row >= 0 && row < m.rows(), "embed_row: id out of range");
  Node& n = fresh(Op::kEmbedRow, m.cols(), 1, false);
  n.vptr = m.row(row);
  n.iaux0 = table_param_id;
  n.iaux1 = row;
  return last();
}

void Tape::check_same_numel(NodeId a, NodeId b, const char* what) const {
  FWM_CHECK(numel(a) == numel(b), std::string(what) + ": size mismatch");
}

NodeId Tape::add(NodeId a, NodeId b) {
  check_same_numel(a, b, "add");
  Node& n = fresh(Op::kAdd, rows(a), cols(a), true);
  n.in0 = a;
  n.in1 = b;
  const double* va = value(a);
  const double* vb = value(b);
  for (int i = 0; i < numel(a); ++i) n.vbuf[static_cast<size_t>(i)] = va[i] + vb[i];
  return last();
}

NodeId Tape::sub(NodeId a, NodeId b) {
  check_same_numel(a, b, "sub");
  Node& n = fresh(Op::kSub, rows(a), cols(a), true);
  n.in0 = a;
  n.in1 = b;
  const double* va = value(a);
  const double* vb = value(b);
  for (int i = 0; i < numel(a); ++i) n.vbuf[static_cast<size_t>(i)] = va[i] - vb[i];
  return last();
}

NodeId Tape::scale(NodeId x, double c) {
  Node& n = fresh(Op::kScale, rows(x), cols(x), true);
  n.in0 = x;
  n.daux0 = c;
  const double* v = value(x);
  for (int i = 0; i < numel(x); ++i) n.vbuf[static_cast<size_t>(i)] = c * v[i];
  return last();
}

NodeId Tape::add_const(NodeId x, double c) {
  Node& n = fresh(Op::kAddConst, rows(x), cols(x), true);
  n.in0 = x;
  n.daux0 = c;
  const double* v = value(x);
  for (int i = 0; i < numel(x); ++i) n.vbuf[static_cast<size_t>(i)] = v[i] + c;
  return last();
}

NodeId Tape::mul_scalar(NodeId x, NodeId s) {
  FWM_CHECK(numel(s) == 1, "mul_scalar: scalar operand must be 1x1");
  Node& n = fresh(Op::kMulScalar, rows(x), cols(x), true);
  n.in0 = x;
  n.in1 = s;
  const double sv = value(s)[0];
  const double* v = value(x);
  for (int i = 0; i < numel(x); ++i) n.vbuf[static_cast<size_t>(i)] = sv * v[i];
  return last();
}

NodeId Tape::hadamard(NodeId a, NodeId b) {
  check_same_numel(a, b, "hadamard");
  Node& n = fresh(Op::kHadamard, rows(a), cols(a), true);
  n.in0 = a;
  n.in1 = b;
  const double* va = value(a);
  const double* vb = value(b);
  for (int i = 0; i < numel(a); ++i) n.vbuf[static_cast<size_t>(i)] = va[i] * vb[i];
  return last();
}

NodeId Tape::matvec(NodeId m, NodeId x) {
  FWM_CHECK(cols(x) == 1, "matvec: x must be a vector");
  FWM_CHECK(cols(m) == rows(x), "matvec: dimension mismatch");
  Node& n = fresh(Op::kMatVec, rows(m), 1, true);
  n.in0 = m;
  n.in1 = x;
  const double* mv = value(m);
  const double* xv = value(x);
  const int r = rows(m), c = cols(m);
  for (int i = 0; i < r; ++i) {
    const double* row = mv + static_cast<size_t>(i) * c;
    double acc = 0.0;
    for (int j = 0; j < c; ++j) acc += row[j] * xv[j];
    n.vbuf[static_cast<size_t>(i)] = acc;
  }
  return last();
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  FWM_CHECK(cols(a) == rows(b), "matmul: dimension mismatch");
  const int m = rows(a), k = cols(a), p = cols(b);
  Node& n = fresh(Op::kMatMul, m, p, true);
  n.in0 = a;
  n.in1 = b;
  const double* va = value(a);
  const double* vb = value(b);
  for (int i = 0; i < m; ++i) {
    double* out = n.vbuf.data() + static_cast<size_t>(i) * p;
    std::fill(out, out + p, 0.0);
    for (int l = 0; l < k; ++l) {
      const double ail = va[static_cast<size_t>(i) * k + l];
      const double* brow = vb + static_cast<size_t>(l) * p;
      for (int j = 0; j < p; ++j) out[j] += ail * brow[j];
    }
  }
  return last();
}

NodeId Tape::slice(NodeId x, int offset, int len) {
  FWM_CHECK(offset >= 0 && len > 0 && offset + len <= numel(x), "slice: out of range");
  Node& n = fresh(Op::kSlice, len, 1, true);
  n.in0 = x;
  n.iaux0 = offset;
  const double* v = value(x);
  std::copy(v + offset, v + offset + len, n.vbuf.begin());
  return last();
}

NodeId Tape::concat(NodeId a, NodeId b) {
  Node& n = fresh(Op::kConcat, numel(a) + numel(b), 1, true);
  n.in0 = a;
  n.in1 = b;
  const double* va = value(a);
  const double* vb = value(b);
  std::copy(va, va + numel(a), n.vbuf.begin());
  std::copy(vb, vb + numel(b), n.vbuf.begin() + numel(a));
  return last();
}

NodeId Tape::tanh(NodeId x) {
  Node& n = fresh(Op::kTanh, rows(x), cols(x), true);
  n.in0 = x;
  const double* v = value(x);
  for (int i = 0; i < numel(x); ++i) n.vbuf[static_cast<size_t>(i)] = std::tanh(v[i]);
  return last();
}

NodeId Tape::sigmoid(NodeId x) {
  Node& n = fresh(Op::kSigmoid, rows(x), cols(x), true);
  n.in0 = x;
  const double* v = value(x);
  for (int i = 0; i < numel(x); ++i)
    n.vbuf[static_cast<size_t>(i)] = 1.0 / (1.0 + std::exp(-v[i]));
  return last();
}

NodeId Tape::outer_vec(NodeId a, NodeId b) {
  FWM_CHECK(cols(a) == 1 && cols(b) == 1, "outer_vec: vector operands expected");
  const int m = rows(a), p = rows(b);
  Node& n = fresh(Op::kOuterVec, m * p, 1, true);
  n.in0 = a;
  n.in1 = b;
  const double* va = value(a);
  const double* vb = value(b);
  size_t k = 0;
  for (int i = 0; i < m; ++i) {
    const double ai = va[i];
    for (int j = 0; j < p; ++j) n.vbuf[k++] = ai * vb[j];
  }
  return last();
}

NodeId Tape::layer_norm(NodeId x) {
  FWM_CHECK(cols(x) == 1, "layer_norm: vector expected");
  const int len = rows(x);
  Node& n = fresh(Op::kLayerNorm, len, 1, true);
  n.in0 = x;
  const double* v = value(x);
  double mean = 0.0;
  for (int i = 0; i < len; ++i) mean += v[i];
  mean /= len;
  double var = 0.0;
  for (int i = 0; i < len; ++i) {
    const double d = v[i] - mean;
    var += d * d;
  }
  var /= len;
  const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
  for (int i = 0; i < len; ++i) n.vbuf[static_cast<size_t>(i)] = (v[i] - mean) * inv;
  n.daux0 = inv;
  return last();
}

NodeId Tape::fwm_write(NodeId f, NodeId beta, NodeId diff, NodeId kappa) {
  FWM_CHECK(numel(beta) == 1, "fwm_write: beta must be scalar");
  FWM_CHECK(rows(f) == rows(diff) && cols(f) == rows(kappa), "fwm_write: shape mismatch");
  const int r = rows(f), c = cols(f);
  Node& n = fresh(Op::kFwmWrite, r, c, true);
  n.in0 = f;
  n.in1 = beta;
  n.in2 = diff;
  n.in3 = kappa;
  const double* fv = value(f);
  const double* dv = value(diff);
  const double* kv = value(kappa);
  const double b = value(beta)[0];
  for (int i = 0; i < r; ++i) {
    const double bd = b * dv[i];
    const double* frow = fv + static_cast<size_t>(i) * c;
    double* out = n.vbuf.data() + static_cast<size_t>(i) * c;
    for (int j = 0; j < c; ++j) out[j] = frow[j] + bd * kv[j];
  }
  return last();
}

NodeId Tape::frob_rescale(NodeId f) {
  const int r = rows(f), c = cols(f);
  Node& n = fresh(Op::kFrobRescale, r, c, true);
  n.in0 = f;
  const double* fv = value(f);
  double sq = 0.0;
  const int total = r * c;
  for (int i = 0; i < total; ++i) sq += fv[i] * fv[i];
  const double norm = std::sqrt(sq);
  n.daux0 = norm;
  if (norm <= 1.0) {
    std::copy(fv, fv + total, n.vbuf.begin());
  } else {
    const double inv = 1.0 / norm;
    for (int i = 0; i < total; ++i) n.vbuf[static_cast<size_t>(i)] = fv[i] * inv;
  }
  return last();
}

NodeId Tape::softmax_xent(NodeId logits, int target) {
  FWM_CHECK(cols(logits) == 1, "softmax_xent: vector expected");
  const int len = rows(logits);
  FWM_CHECK(target >= 0 && target < len, "softmax_xent: target out of range");
  Node& n = fresh(Op::kSoftmaxXent, 1, 1, true);
  n.in0 = logits;
  n.iaux0 = target;
  n.aux.resize(static_cast<size_t>(len));
  const double* v = value(logits);
  double mx = v[0];
  for (int i = 1; i < len; ++i) mx = std::max(mx, v[i]);
  double sum = 0.0;
  for (int i = 0; i < len; ++i) {
    n.aux[static_cast<size_t>(i)] = std::exp(v[i] - mx);
    sum += n.aux[static_cast<size_t>(i)];
  }
  for (int i = 0; i < len; ++i) n.aux[static_cast<size_t>(i)] /= sum;
  n.vbuf[0] = -(v[target] - mx - std::log(sum));
  return last();
}

NodeId Tape::softmax_entropy(NodeId logits) {
  FWM_CHECK(cols(logits) == 1, "softmax_entropy: vector expected");
  const int len = rows(logits);
  Node& n = fresh(Op::kSoftmaxEntropy, 1, 1, true);
  n.in0 = logits;
  n.aux.resize(static_cast<size_t>(len));
  const double* v = value(logits);
  double mx = v[0];
  for (int i = 1; i < len; ++i) mx = std::max(mx, v[i]);
  double sum = 0.0;
  for (int i = 0; i < len; ++i) {
    n.aux[static_cast<size_t>(i)] = std::exp(v[i] - mx);
    sum += n.aux[static_cast<size_t>(i)];
  }
  double h = 0.0;
  for (int i = 0; i < len; ++i) {
    double& p = n.aux[static_cast<size_t>(i)];
    p /= sum;
    if (p > 0.0) h -= p * std::log(p);
  }
  n.vbuf[0] = h;
  return last();
}

Vec Tape::value_vec(NodeId id) const {
  Vec out(numel(id));
  const double* v = value(id);
  for (int i = 0; i < out.size(); ++i) out[i] = v[i];
  return out;
}

double Tape::value_scalar(NodeId id) const {
  FWM_CHECK(numel(id) == 1, "value_scalar: node is not 1x1");
  return value(id)[0];
}

double* Tape::grad_ptr(NodeId id, GradBuffer& gb) {
  Node& n = at(id);
  if (n.op == Op::kParam) return gb.grad(n.iaux0).data();
  if (n.op == Op::kEmbedRow)  // value is a column vector; table row stride is n.rows
    return gb.grad(n.iaux0).data() + static_cast<size_t>(n.iaux1) * n.rows;
  return n.gbuf.data();
}

void Tape::backward(NodeId loss, GradBuffer& gb) {
  FWM_CHECK(numel(loss) == 1, "backward: loss must be scalar");
  for (int id = 0; id <= loss; ++id) {
    Node& n = at(id);
    if (n.op == Op::kParam || n.op == Op::kEmbedRow) continue;
    n.gbuf.assign(static_cast<size_t>(n.rows) * n.cols, 0.0);
  }
  at(loss).gbuf[0] = 1.0;

  for (NodeId id = loss; id >= 0; --id) {
    Node& n = at(id);
    if (n.op == Op::kConst || n.op == Op::kParam || n.op == Op::kEmbedRow) continue;
    const double* g = n.gbuf.data();
    const int total = n.rows * n.cols;
    switch (n.op) {
      case Op::kAdd: {
        double* ga = grad_ptr(n.in0, gb);
        double* gbp = grad_ptr(n.in1, gb);
        for (int i = 0; i < total; ++i) {
          ga[i] += g[i];
          gbp[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        double* ga = grad_ptr(n.in0, gb);
        double* gbp = grad_ptr(n.in1, gb);
        for (int i = 0; i < total; ++i) {
          ga[i] += g[i];
          gbp[i] -= g[i];
        }
        break;
      }
      case Op::kScale: {
        double* gx = grad_ptr(n.in0, gb);
        for (int i = 0; i < total; ++i) gx[i] += n.daux0 * g[i];
        break;
      }
      case Op::kAddConst: {
        double* gx = grad_ptr(n.in0, gb);
        for (int i = 0; i < total; ++i) gx[i] += g[i];
        break;
      }
      case Op::kMulScalar: {
        double* gx = grad_ptr(n.in0, gb);
        double* gs = grad_ptr(n.in1, gb);
        const double sv = value(n.in1)[0];
        const double* xv = value(n.in0);
        double acc = 0.0;
        for (int i = 0; i < total; ++i) {
          gx[i] += sv * g[i];
          acc += g[i] * xv[i];
        }
        gs[0] += acc;
        break;
      }
      case Op::kHadamard: {
        double* ga = grad_ptr(n.in0, gb);
        double* gbp = grad_ptr(n.in1, gb);
        const double* va = value(n.in0);
        const double* vb = value(n.in1);
        for (int i = 0; i < total; ++i) {
          ga[i] += vb[i] * g[i];
          gbp[i] += va[i] * g[i];
        }
        break;
      }
      case Op::kMatVec: {
        const int r = rows(n.in0), c = cols(n.in0);
        double* gm = grad_ptr(n.in0, gb);
        double* gx = grad_ptr(n.in1, gb);
        const double* mv = value(n.in0);
        const double* xv = value(n.in1);
        for (int i = 0; i < r; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* gmrow = gm + static_cast<size_t>(i) * c;
          const double* mrow = mv + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) {
            gmrow[j] += gi * xv[j];
            gx[j] += mrow[j] * gi;
          }
        }
        break;
      }
      case Op::kMatMul: {
        const int m = rows(n.in0), k = cols(n.in0), p = cols(n.in1);
        double* ga = grad_ptr(n.in0, gb);
        double* gbp = grad_ptr(n.in1, gb);
        const double* va = value(n.in0);
        const double* vb = value(n.in1);
        // gA += g B^T ; gB += A^T g
        for (int i = 0; i < m; ++i) {
          const double* grow = g + static_cast<size_t>(i) * p;
          for (int l = 0; l < k; ++l) {
            const double* brow = vb + static_cast<size_t>(l) * p;
            double acc = 0.0;
            for (int j = 0; j < p; ++j) acc += grow[j] * brow[j];
            ga[static_cast<size_t>(i) * k + l] += acc;
          }
        }
        for (int l = 0; l < k; ++l) {
          double* gbrow = gbp + static_cast<size_t>(l) * p;
          for (int i = 0; i < m; ++i) {
            const double ail = va[static_cast<size_t>(i) * k + l];
            const double* grow = g + static_cast<size_t>(i) * p;
            for (int j = 0; j < p; ++j) gbrow[j] += ail * grow[j];
          }
        }
        break;
      }
      case Op::kSlice: {
        double* gx = grad_ptr(n.in0, gb);
        for (int i = 0; i < total; ++i) gx[n.iaux0 + i] += g[i];
        break;
      }
      case Op::kConcat: {
        double* ga = grad_ptr(n.in0, gb);
        double* gbp = grad_ptr(n.in1, gb);
        const int na = numel(n.in0);
        for (int i = 0; i < na; ++i) ga[i] += g[i];
        for (int i = na; i < total; ++i) gbp[i - na] += g[i];
        break;
      }
      case Op::kTanh: {
        double* gx = grad_ptr(n.in0, gb);
        const double* y = n.vptr;
        for (int i = 0; i < total; ++i) gx[i] += (1.0 - y[i] * y[i]) * g[i];
        break;
      }
      case Op::kSigmoid: {
        double* gx = grad_ptr(n.in0, gb);
        const double* y = n.vptr;
        for (int i = 0; i < total; ++i) gx[i] += y[i] * (1.0 - y[i]) * g[i];
        break;
      }
      case Op::kOuterVec: {
        const int m = rows(n.in0), p = rows(n.in1);
        double* ga = grad_ptr(n.in0, gb);
        double* gbp = grad_ptr(n.in1, gb);
        const double* va = value(n.in0);
        const double* vb = value(n.in1);
        for (int i = 0; i < m; ++i) {
          const double* grow = g + static_cast<size_t>(i) * p;
          const double ai = va[i];
          double acc = 0.0;
          for (int j = 0; j < p; ++j) {
            acc += grow[j] * vb[j];
            gbp[j] += grow[j] * ai;
          }
          ga[i] += acc;
        }
        break;
      }
      case Op::kLayerNorm: {
        // gx = inv * (g - mean(g) - y * mean(g ⊙ y))
        double* gx = grad_ptr(n.in0, gb);
        const double* y = n.vptr;
        const double inv = n.daux0;
        double gm = 0.0, gym = 0.0;
        for (int i = 0; i < total; ++i) {
          gm += g[i];
          gym += g[i] * y[i];
        }
        gm /= total;
        gym /= total;
        for (int i = 0; i < total; ++i) gx[i] += inv * (g[i] - gm - y[i] * gym);
        break;
      }
      case Op::kFwmWrite: {
        const int r = n.rows, c = n.cols;
        double* gf = grad_ptr(n.in0, gb);
        double* gbeta = grad_ptr(n.in1, gb);
        double* gdiff = grad_ptr(n.in2, gb);
        double* gkappa = grad_ptr(n.in3, gb);
        const double b = value(n.in1)[0];
        const double* dv = value(n.in2);
        const double* kv = value(n.in3);
        double bacc = 0.0;
        for (int i = 0; i < r; ++i) {
          const double* grow = g + static_cast<size_t>(i) * c;
          double* gfrow = gf + static_cast<size_t>(i) * c;
          const double di = dv[i];
          double racc = 0.0;
          for (int j = 0; j < c; ++j) {
            gfrow[j] += grow[j];
            racc += grow[j] * kv[j];
            gkappa[j] += b * di * grow[j];
          }
          bacc += racc * di;
          gdiff[i] += b * racc;
        }
        gbeta[0] += bacc;
        break;
      }
      case Op::kFrobRescale: {
        double* gf = grad_ptr(n.in0, gb);
        const double norm = n.daux0;
        if (norm <= 1.0) {
          for (int i = 0; i < total; ++i) gf[i] += g[i];
        } else {
          const double* y = n.vptr;
          double gy = 0.0;
          for (int i = 0; i < total; ++i) gy += g[i] * y[i];
          const double inv = 1.0 / norm;
          for (int i = 0; i < total; ++i) gf[i] += inv * (g[i] - gy * y[i]);
        }
        break;
      }
      case Op::kSoftmaxXent: {
        double* gx = grad_ptr(n.in0, gb);
        const double gs = g[0];
        const int len = rows(n.in0);
        for (int i = 0; i < len; ++i) {
          double p = n.aux[static_cast<size_t>(i)];
          if (i == n.iaux0) p -= 1.0;
          gx[i] += gs * p;
        }
        break;
      }
      case Op::kSoftmaxEntropy: {
        double* gx = grad_ptr(n.in0, gb);
        const double gs = g[0];
        const double h = n.vptr[0];
        const int len = rows(n.in0);
        for (int i = 0; i < len; ++i) {
          const double p = n.aux[static_cast<size_t>(i)];
          const double lp = p > 0.0 ? std::log(p) : 0.0;
          gx[i] += gs * (-p * (lp + h));
        }
        break;
      }
      default:
        throw std::runtime_error("backward: unhandled op");
    }
  }
}

}  // namespace fwm
