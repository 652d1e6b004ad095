// Shared test helpers: seeded random values and the central-difference
// gradient comparison used by the autodiff and model tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fwm/autodiff.hpp"
#include "fwm/rng.hpp"
#include "fwm/tensor.hpp"

namespace fwm::test {

inline Vec random_vec(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform_real(lo, hi);
  return v;
}

inline Mat random_mat(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Mat m(r, c);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform_real(lo, hi);
  return m;
}

inline Vec unit_vec(int n, Rng& rng) {
  Vec v = random_vec(n, rng);
  const double s = 1.0 / norm2(v);
  for (int i = 0; i < n; ++i) v[i] *= s;
  return v;
}

inline Vec one_hot(int n, int i) {
  Vec v(n);
  v[i] = 1.0;
  return v;
}

struct FdResult {
  double max_rel_err = 0.0;
  double max_abs_diff = 0.0;
  std::string worst;
};

// Central differences over every coordinate of every parameter, compared
// against analytic gradients with |ad - fd| / max(|ad|, |fd|, floor). The
// floor guards coordinates whose true gradient sits below the cancellation
// noise of the double-precision loss difference (~|loss| * eps / h);
// max_abs_diff still bounds those absolutely.
inline FdResult fd_compare(ParamStore& ps, const GradBuffer& analytic,
                           const std::function<double()>& loss, double h = 1e-6,
                           double floor = 1e-8) {
  FdResult res;
  for (int id = 0; id < ps.count(); ++id) {
    double* data = ps.entry(id).value.data();
    const size_t n = ps.entry(id).value.size();
    for (size_t i = 0; i < n; ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss();
      data[i] = saved - h;
      const double down = loss();
      data[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double ad = analytic.grad(id)[i];
      const double diff = std::abs(ad - fd);
      const double rel = diff / std::max({std::abs(ad), std::abs(fd), floor});
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = ps.entry(id).name + "[" + std::to_string(i) + "]";
      }
      res.max_abs_diff = std::max(res.max_abs_diff, diff);
    }
  }
  return res;
}

}  // namespace fwm::test
