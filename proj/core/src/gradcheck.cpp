#include "fwm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fwm {

namespace {

// Extended-precision un-taped recomputation of the window loss. The finite
// differences divide by 2e-5, so the double-precision rounding of a regular
// forward pass (~1e-15 absolute) would alias into ~1e-10 gradient noise and
// swamp coordinates whose true gradient is near the 1e-8 report floor. An
// 80-bit forward keeps the difference quotient accurate to ~1e-13. This is
// also an implementation-independent oracle: it shares no code with the tape.
class LongDoubleForward {
 public:
  LongDoubleForward(const SeqModel& model) : model_(model), cfg_(model.config()) {}

  long double window_loss(const std::vector<int>& tokens) const {
    const ParamStore& ps = model_.params();
    const CoreParamIds& ids = model_.core_ids();
    const int h = cfg_.d_lstm, d = cfg_.d_fwm;
    const int kdim = cfg_.core().fwm().key_dim();
    std::vector<long double> hs(static_cast<size_t>(h), 0.0L);
    std::vector<long double> cs(static_cast<size_t>(h), 0.0L);
    std::vector<long double> f(static_cast<size_t>(d) * kdim, 0.0L);

    long double total = 0.0L;
    int positions = 0;
    for (size_t t = 0; t + 1 < tokens.size(); ++t) {
      // embed
      std::vector<long double> x(static_cast<size_t>(cfg_.d_e));
      const double* row = ps.mat(model_.embedding_id()).row(tokens[t]);
      for (int i = 0; i < cfg_.d_e; ++i) x[static_cast<size_t>(i)] = row[i];
      // lstm
      std::vector<long double> hn(static_cast<size_t>(h)), cn(static_cast<size_t>(h));
      const Mat& w_ih = ps.mat(ids.w_ih);
      const Mat& w_hh = ps.mat(ids.w_hh);
      const Mat& b = ps.mat(ids.b);
      for (int i = 0; i < h; ++i) {
        long double z[4];
        for (int g = 0; g < 4; ++g) {
          long double acc = b.data()[g * h + i];
          const double* r1 = w_ih.row(g * h + i);
          for (int j = 0; j < cfg_.d_e; ++j) acc += static_cast<long double>(r1[j]) * x[static_cast<size_t>(j)];
          const double* r2 = w_hh.row(g * h + i);
          for (int j = 0; j < h; ++j) acc += static_cast<long double>(r2[j]) * hs[static_cast<size_t>(j)];
          z[g] = acc;
        }
        const long double gi = sig(z[0]), gf = sig(z[1]), gg = tanhl(z[2]), go = sig(z[3]);
        cn[static_cast<size_t>(i)] = gf * cs[static_cast<size_t>(i)] + gi * gg;
        hn[static_cast<size_t>(i)] = go * tanhl(cn[static_cast<size_t>(i)]);
      }
      hs = hn;
      cs = cn;

      std::vector<long double> s = hs;
      if (cfg_.mode == ModelMode::kFwm) {
        // write
        std::vector<long double> a(static_cast<size_t>(3 * d));
        matvec_ld(ps.mat(ids.w_write), hs, &a);
        for (auto& v : a) v = tanhl(v);
        std::vector<long double> bv(1);
        matvec_ld(ps.mat(ids.w_beta), hs, &bv);
        const long double beta = sig(bv[0]);
        const std::vector<long double> k1(a.begin(), a.begin() + d);
        const std::vector<long double> k2(a.begin() + d, a.begin() + 2 * d);
        const std::vector<long double> kappa = key_ld(k1, k2);
        std::vector<long double> v_old(static_cast<size_t>(d), 0.0L);
        for (int i = 0; i < d; ++i) {
          long double acc = 0.0L;
          for (int j = 0; j < kdim; ++j) acc += f[static_cast<size_t>(i) * kdim + j] * kappa[static_cast<size_t>(j)];
          v_old[static_cast<size_t>(i)] = acc;
        }
        for (int i = 0; i < d; ++i) {
          const long double bd = beta * (a[static_cast<size_t>(2 * d + i)] - v_old[static_cast<size_t>(i)]);
          for (int j = 0; j < kdim; ++j) f[static_cast<size_t>(i) * kdim + j] += bd * kappa[static_cast<size_t>(j)];
        }
        long double sq = 0.0L;
        for (const long double v : f) sq += v * v;
        const long double norm = sqrtl(sq);
        if (norm > 1.0L)
          for (auto& v : f) v /= norm;
        // read
        std::vector<long double> n(static_cast<size_t>(d));
        matvec_ld(ps.mat(ids.w_n), hs, &n);
        for (auto& v : n) v = tanhl(v);
        for (int hop = 0; hop < cfg_.n_r; ++hop) {
          std::vector<long double> e(static_cast<size_t>(d));
          matvec_ld(ps.mat(ids.w_e[static_cast<size_t>(hop)]), hs, &e);
          for (auto& v : e) v = tanhl(v);
          const std::vector<long double> q = key_ld(n, e);
          std::vector<long double> m(static_cast<size_t>(d));
          for (int i = 0; i < d; ++i) {
            long double acc = 0.0L;
            for (int j = 0; j < kdim; ++j) acc += f[static_cast<size_t>(i) * kdim + j] * q[static_cast<size_t>(j)];
            m[static_cast<size_t>(i)] = acc;
          }
          n = layer_norm_ld(m);
        }
        std::vector<long double> r(static_cast<size_t>(h));
        matvec_ld(ps.mat(ids.w_o), n, &r);
        for (int i = 0; i < h; ++i) s[static_cast<size_t>(i)] += r[static_cast<size_t>(i)];
      }
      // logits + cross entropy
      const Mat& w_s = ps.mat(model_.w_s_id());
      std::vector<long double> logits(static_cast<size_t>(cfg_.vocab));
      matvec_ld(w_s, s, &logits);
      long double mx = logits[0];
      for (const long double v : logits) mx = std::max(mx, v);
      long double sum = 0.0L;
      for (const long double v : logits) sum += expl(v - mx);
      total += -(logits[static_cast<size_t>(tokens[t + 1])] - mx - logl(sum));
      ++positions;
    }
    return total / positions;
  }

 private:
  static long double sig(long double x) { return 1.0L / (1.0L + expl(-x)); }

  static void matvec_ld(const Mat& m, const std::vector<long double>& x,
                        std::vector<long double>* out) {
    out->assign(static_cast<size_t>(m.rows()), 0.0L);
    for (int i = 0; i < m.rows(); ++i) {
      const double* row = m.row(i);
      long double acc = 0.0L;
      for (int j = 0; j < m.cols(); ++j) acc += static_cast<long double>(row[j]) * x[static_cast<size_t>(j)];
      (*out)[static_cast<size_t>(i)] = acc;
    }
  }

  std::vector<long double> key_ld(const std::vector<long double>& k1,
                                  const std::vector<long double>& k2) const {
    if (cfg_.key_mode == KeyMode::kConcat) {
      std::vector<long double> out = k1;
      out.insert(out.end(), k2.begin(), k2.end());
      return out;
    }
    std::vector<long double> out;
    out.reserve(k1.size() * k2.size());
    for (const long double a : k1)
      for (const long double b : k2) out.push_back(a * b);
    return out;
  }

  static std::vector<long double> layer_norm_ld(const std::vector<long double>& x) {
    const int n = static_cast<int>(x.size());
    long double mean = 0.0L;
    for (const long double v : x) mean += v;
    mean /= n;
    long double var = 0.0L;
    for (const long double v : x) var += (v - mean) * (v - mean);
    var /= n;
    const long double inv = 1.0L / sqrtl(var + static_cast<long double>(kLayerNormEps));
    std::vector<long double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv;
    return out;
  }

  const SeqModel& model_;
  SeqModelConfig cfg_;
};

}  // namespace

GradCheckReport grad_check(const GradCheckConfig& cfg) {
  SeqModel model(cfg.model, cfg.seed);
  Rng rng = Rng::stream(cfg.seed, 2);
  std::vector<int> tokens(static_cast<size_t>(cfg.seq_len) + 1);
  for (int& t : tokens) t = static_cast<int>(rng.uniform(static_cast<uint64_t>(cfg.model.vocab)));

  // Analytic gradients of the mean window cross-entropy.
  ParamStore& ps = model.params();
  GradBuffer grads(ps);
  {
    Tape tape(&ps);
    CoreState init = model.initial_state();
    TapedCoreState state = tape_core_state(tape, init);
    NodeId loss = -1;
    for (size_t t = 0; t + 1 < tokens.size(); ++t) {
      NodeId logits = model.step_taped(tape, state, tokens[t]);
      NodeId ce = tape.softmax_xent(logits, tokens[t + 1]);
      loss = loss < 0 ? ce : tape.add(loss, ce);
    }
    loss = tape.scale(loss, 1.0 / cfg.seq_len);
    tape.backward(loss, grads);
  }

  const LongDoubleForward oracle(model);
  GradCheckReport report;
  const long double h = cfg.fd_step;
  for (int id = 0; id < ps.count(); ++id) {
    GradCheckEntry entry;
    entry.param = ps.entry(id).name;
    double* data = ps.entry(id).value.data();
    const size_t n = ps.entry(id).value.size();
    const std::vector<double>& g = grads.grad(id);
    for (size_t i = 0; i < n; ++i) {
      const double saved = data[i];
      const double xp = static_cast<double>(saved + h);
      const double xm = static_cast<double>(saved - h);
      data[i] = xp;
      const long double up = oracle.window_loss(tokens);
      data[i] = xm;
      const long double down = oracle.window_loss(tokens);
      data[i] = saved;
      // divide by the realised step, not the nominal one
      const double fd = static_cast<double>((up - down) / (static_cast<long double>(xp) - xm));
      const double diff = std::abs(g[i] - fd);
      const double rel = diff / std::max({std::abs(g[i]), std::abs(fd), 1e-8});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      entry.max_abs_diff = std::max(entry.max_abs_diff, diff);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace fwm
