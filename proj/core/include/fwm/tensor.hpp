// Dense vector/matrix kernels and elementwise nonlinearities.
// All functions here are pure and deterministic; double precision throughout.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace fwm {

// Contract checks throw std::invalid_argument so callers can distinguish
// misuse from numerical failures (std::runtime_error).
#define FWM_CHECK(cond, msg)                          \
  do {                                                \
    if (!(cond)) throw std::invalid_argument((msg));  \
  } while (0)

class Vec {
 public:
  Vec() = default;
  explicit Vec(int n, double fill = 0.0) : d_(static_cast<size_t>(n), fill) {
    FWM_CHECK(n >= 0, "Vec: negative size");
  }
  Vec(std::initializer_list<double> xs) : d_(xs) {}

  int size() const { return static_cast<int>(d_.size()); }
  double& operator[](int i) { return d_[static_cast<size_t>(i)]; }
  double operator[](int i) const { return d_[static_cast<size_t>(i)]; }
  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  auto begin() { return d_.begin(); }
  auto end() { return d_.end(); }
  auto begin() const { return d_.begin(); }
  auto end() const { return d_.end(); }

 private:
  std::vector<double> d_;
};

// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, fill) {
    FWM_CHECK(rows >= 0 && cols >= 0, "Mat: negative shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return d_.size(); }
  double& operator()(int r, int c) { return d_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return d_[static_cast<size_t>(r) * cols_ + c]; }
  double* row(int r) { return d_.data() + static_cast<size_t>(r) * cols_; }
  const double* row(int r) const { return d_.data() + static_cast<size_t>(r) * cols_; }
  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

inline constexpr double kLayerNormEps = 1e-5;

// a ⊗ b as an m×n matrix: out[i][j] = a[i]*b[j].
Mat outer_product(const Vec& a, const Vec& b);

// Row-major flattening; vec(a ⊗ b)[i*cols + j] = a[i]*b[j].
Vec vec(const Mat& m);

// vec(a ⊗ b) without materialising the matrix.
Vec outer_vec(const Vec& a, const Vec& b);

Vec matvec(const Mat& m, const Vec& x);
void matvec_into(const Mat& m, const double* x, double* out);

// y += A^T g, used by backward passes.
void matvec_transpose_accum(const Mat& m, const double* g, double* out);

// (x - mean) / sqrt(var + eps) with population variance and no affine map.
Vec layer_norm(const Vec& x, double eps = kLayerNormEps);

Vec tanh_vec(const Vec& x);
Vec sigmoid_vec(const Vec& x);
double sigmoid(double x);

// Max-subtracted softmax.
Vec softmax(const Vec& x);

double frobenius_norm(const Mat& m);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
double cosine(const Vec& a, const Vec& b);

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scale(const Vec& a, double c);
Vec concat(const Vec& a, const Vec& b);
Vec slice(const Vec& x, int offset, int len);

}  // namespace fwm
