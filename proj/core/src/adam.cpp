#include "fwm/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace fwm {

Adam::Adam(const ParamStore& params, const AdamConfig& cfg) : cfg_(cfg) {
  m_.resize(static_cast<size_t>(params.count()));
  v_.resize(static_cast<size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    m_[static_cast<size_t>(i)].assign(params.entry(i).value.size(), 0.0);
    v_[static_cast<size_t>(i)].assign(params.entry(i).value.size(), 0.0);
  }
}

void Adam::step(ParamStore& params, const GradBuffer& grads) {
  for (int id = 0; id < params.count(); ++id) {
    for (double g : grads.grad(id)) {
      if (!std::isfinite(g))
        throw NumericalError("adam: non-finite gradient in parameter " + params.entry(id).name);
    }
  }
  double clip_scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > cfg_.grad_clip) clip_scale = cfg_.grad_clip / norm;
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (int id = 0; id < params.count(); ++id) {
    double* p = params.entry(id).value.data();
    const std::vector<double>& g = grads.grad(id);
    std::vector<double>& m = m_[static_cast<size_t>(id)];
    std::vector<double>& v = v_[static_cast<size_t>(id)];
    for (size_t i = 0; i < g.size(); ++i) {
      const double gi = g[i] * clip_scale;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace fwm
