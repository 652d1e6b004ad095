#include "fwm/tensor.hpp"

#include <cmath>

namespace fwm {

Mat outer_product(const Vec& a, const Vec& b) {
  FWM_CHECK(a.size() > 0 && b.size() > 0, "outer_product: empty operand");
  Mat out(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    double* row = out.row(i);
    const double ai = a[i];
    for (int j = 0; j < b.size(); ++j) row[j] = ai * b[j];
  }
  return out;
}

Vec vec(const Mat& m) {
  Vec out(m.rows() * m.cols());
  const double* src = m.data();
  for (size_t i = 0; i < m.size(); ++i) out[static_cast<int>(i)] = src[i];
  return out;
}

Vec outer_vec(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  int k = 0;
  for (int i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    for (int j = 0; j < b.size(); ++j) out[k++] = ai * b[j];
  }
  return out;
}

Vec matvec(const Mat& m, const Vec& x) {
  FWM_CHECK(m.cols() == x.size(), "matvec: dimension mismatch (" +
                                      std::to_string(m.cols()) + " vs " +
                                      std::to_string(x.size()) + ")");
  Vec out(m.rows());
  matvec_into(m, x.data(), out.data());
  return out;
}

void matvec_into(const Mat& m, const double* x, double* out) {
  const int rows = m.rows(), cols = m.cols();
  for (int i = 0; i < rows; ++i) {
    const double* row = m.row(i);
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

void matvec_transpose_accum(const Mat& m, const double* g, double* out) {
  const int rows = m.rows(), cols = m.cols();
  for (int i = 0; i < rows; ++i) {
    const double* row = m.row(i);
    const double gi = g[i];
    for (int j = 0; j < cols; ++j) out[j] += row[j] * gi;
  }
}

Vec layer_norm(const Vec& x, double eps) {
  FWM_CHECK(x.size() >= 1, "layer_norm: empty input");
  const int n = x.size();
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += x[i];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    var += d * d;
  }
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = (x[i] - mean) * inv;
  return out;
}

Vec tanh_vec(const Vec& x) {
  Vec out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec sigmoid_vec(const Vec& x) {
  Vec out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

Vec softmax(const Vec& x) {
  FWM_CHECK(x.size() >= 1, "softmax: empty input");
  double mx = x[0];
  for (int i = 1; i < x.size(); ++i) mx = std::max(mx, x[i]);
  Vec out(x.size());
  double sum = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (int i = 0; i < x.size(); ++i) out[i] /= sum;
  return out;
}

double frobenius_norm(const Mat& m) {
  double acc = 0.0;
  const double* d = m.data();
  for (size_t i = 0; i < m.size(); ++i) acc += d[i] * d[i];
  return std::sqrt(acc);
}

double dot(const Vec& a, const Vec& b) {
  FWM_CHECK(a.size() == b.size(), "dot: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double cosine(const Vec& a, const Vec& b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

Vec add(const Vec& a, const Vec& b) {
  FWM_CHECK(a.size() == b.size(), "add: dimension mismatch");
  Vec out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec sub(const Vec& a, const Vec& b) {
  FWM_CHECK(a.size() == b.size(), "sub: dimension mismatch");
  Vec out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec scale(const Vec& a, double c) {
  Vec out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a[i];
  for (int i = 0; i < b.size(); ++i) out[a.size() + i] = b[i];
  return out;
}

Vec slice(const Vec& x, int offset, int len) {
  FWM_CHECK(offset >= 0 && len >= 0 && offset + len <= x.size(), "slice: out of range");
  Vec out(len);
  for (int i = 0; i < len; ++i) out[i] = x[offset + i];
  return out;
}

}  // namespace fwm
