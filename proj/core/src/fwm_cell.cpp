#include "fwm/fwm_cell.hpp"

namespace fwm {

WriteCommand generate_write_command(const Vec& h, const Mat& w_write, const Mat& w_beta) {
  FWM_CHECK(w_write.rows() % 3 == 0, "generate_write_command: w_write rows not divisible by 3");
  FWM_CHECK(w_beta.rows() == 1, "generate_write_command: w_beta must have one row");
  const int d = w_write.rows() / 3;
  const Vec a = tanh_vec(matvec(w_write, h));
  WriteCommand cmd;
  cmd.k1 = slice(a, 0, d);
  cmd.k2 = slice(a, d, d);
  cmd.v = slice(a, 2 * d, d);
  cmd.beta = sigmoid(matvec(w_beta, h)[0]);
  return cmd;
}

Vec combined_key(const Vec& k1, const Vec& k2, KeyMode mode) {
  return mode == KeyMode::kTensor ? outer_vec(k1, k2) : concat(k1, k2);
}

Mat fwm_update(const Mat& f, const WriteCommand& cmd, KeyMode mode) {
  const Vec kappa = combined_key(cmd.k1, cmd.k2, mode);
  FWM_CHECK(f.cols() == kappa.size() && f.rows() == cmd.v.size(),
            "fwm_update: memory shape inconsistent with command");
  const Vec v_old = matvec(f, kappa);
  Mat out(f.rows(), f.cols());
  for (int i = 0; i < f.rows(); ++i) {
    const double bd = cmd.beta * (cmd.v[i] - v_old[i]);
    const double* src = f.row(i);
    double* dst = out.row(i);
    for (int j = 0; j < f.cols(); ++j) dst[j] = src[j] + bd * kappa[j];
  }
  const double norm = frobenius_norm(out);
  if (norm > 1.0) {
    const double inv = 1.0 / norm;
    double* d = out.data();
    for (size_t i = 0; i < out.size(); ++i) d[i] *= inv;
  }
  return out;
}

ReadQuery generate_read_query(const Vec& h, const Mat& w_n, const std::vector<Mat>& w_e) {
  FWM_CHECK(!w_e.empty(), "generate_read_query: need at least one read matrix");
  ReadQuery q;
  q.n0 = tanh_vec(matvec(w_n, h));
  q.e.reserve(w_e.size());
  for (const Mat& m : w_e) q.e.push_back(tanh_vec(matvec(m, h)));
  return q;
}

Vec read_chain(const Mat& f, const ReadQuery& q, KeyMode mode, std::vector<Vec>* hops) {
  Vec n = q.n0;
  if (hops) {
    hops->clear();
    hops->push_back(n);
  }
  for (const Vec& e : q.e) {
    n = layer_norm(matvec(f, combined_key(n, e, mode)));
    if (hops) hops->push_back(n);
  }
  return n;
}

Vec fwm_output(const Vec& n, const Mat& w_o) { return matvec(w_o, n); }

Mat write_read_alignment(const std::vector<WriteCommand>& history, const ReadQuery& q,
                         const std::vector<Vec>& hops, KeyMode mode) {
  const int n_r = static_cast<int>(q.e.size());
  FWM_CHECK(static_cast<int>(hops.size()) == n_r + 1,
            "write_read_alignment: hops must hold n0..n_{n_r}");
  Mat out(n_r, static_cast<int>(history.size()));
  for (int i = 0; i < n_r; ++i) {
    const Vec query = combined_key(hops[static_cast<size_t>(i)], q.e[static_cast<size_t>(i)], mode);
    for (size_t t = 0; t < history.size(); ++t) {
      const Vec key = combined_key(history[t].k1, history[t].k2, mode);
      out(i, static_cast<int>(t)) = dot(key, query);
    }
  }
  return out;
}

}  // namespace fwm
