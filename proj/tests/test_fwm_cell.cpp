#include "fwm/fwm_cell.hpp"

#include <gtest/gtest.h>

#include "support.hpp"

using namespace fwm;
using test::one_hot;
using test::random_mat;
using test::random_vec;
using test::unit_vec;

namespace {

// Memory with a single association stored under kappa: F = v * kappa^T.
Mat rank1_memory(const Vec& v, const Vec& kappa) {
  Mat f(v.size(), kappa.size());
  for (int i = 0; i < v.size(); ++i)
    for (int j = 0; j < kappa.size(); ++j) f(i, j) = v[i] * kappa[j];
  return f;
}

}  // namespace

TEST(FwmCell, WriteCommandZeroHidden) {
  Rng rng(31);
  const Mat w_write = random_mat(12, 6, rng);
  const Mat w_beta = random_mat(1, 6, rng);
  const WriteCommand cmd = generate_write_command(Vec(6), w_write, w_beta);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(cmd.k1[i], 0.0);
    EXPECT_EQ(cmd.k2[i], 0.0);
    EXPECT_EQ(cmd.v[i], 0.0);
  }
  EXPECT_EQ(cmd.beta, 0.5);
}

TEST(FwmCell, WriteCommandSliceOrderIsK1K2V) {
  Rng rng(32);
  const Vec h = random_vec(6, rng);
  Mat w_write(12, 6);
  Mat w_beta = random_mat(1, 6, rng);
  const WriteCommand base = generate_write_command(h, w_write, w_beta);
  w_write(0, 0) = 1.0;  // perturb row 0: only k1[0] may change
  const WriteCommand bumped = generate_write_command(h, w_write, w_beta);
  EXPECT_NE(bumped.k1[0], base.k1[0]);
  for (int i = 1; i < 4; ++i) EXPECT_EQ(bumped.k1[i], base.k1[i]);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(bumped.k2[i], base.k2[i]);
    EXPECT_EQ(bumped.v[i], base.v[i]);
  }
}

TEST(FwmCell, WriteCommandMatchesUnslicedRecomputation) {
  Rng rng(33);
  const Vec h = random_vec(6, rng);
  const Mat w_write = random_mat(12, 6, rng);
  const Mat w_beta = random_mat(1, 6, rng);
  const WriteCommand cmd = generate_write_command(h, w_write, w_beta);
  const Vec a = tanh_vec(matvec(w_write, h));
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(cmd.k1[i], a[i]);
    EXPECT_EQ(cmd.k2[i], a[4 + i]);
    EXPECT_EQ(cmd.v[i], a[8 + i]);
  }
  EXPECT_EQ(cmd.beta, sigmoid(matvec(w_beta, h)[0]));
}

TEST(FwmCell, UpdateOnEmptyMemoryStoresScaledValue) {
  Rng rng(34);
  WriteCommand cmd;
  cmd.k1 = random_vec(3, rng, -0.9, 0.9);
  cmd.k2 = random_vec(3, rng, -0.9, 0.9);
  cmd.v = random_vec(3, rng, -0.9, 0.9);
  cmd.beta = 0.5;
  const Mat f = fwm_update(Mat(3, 9), cmd, KeyMode::kTensor);
  const Vec kappa = outer_vec(cmd.k1, cmd.k2);
  Mat expected = rank1_memory(scale(cmd.v, 0.5), kappa);
  const double norm = frobenius_norm(expected);
  if (norm > 1.0)
    for (size_t i = 0; i < expected.size(); ++i) expected.data()[i] /= norm;
  for (size_t i = 0; i < expected.size(); ++i)
    EXPECT_NEAR(f.data()[i], expected.data()[i], 1e-12);
}

// On a rank-1 memory with unit keys the update rule replaces the stored
// value with the convex mixture (1-beta) v_old + beta v_new, exactly.
TEST(FwmCell, ConvexReplacementOnRank1Memory) {
  Rng rng(35);
  const int d = 5;
  for (const double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      WriteCommand cmd;
      cmd.k1 = unit_vec(d, rng);
      cmd.k2 = unit_vec(d, rng);
      cmd.v = unit_vec(d, rng);
      cmd.beta = beta;
      const Vec v_old = unit_vec(d, rng);
      const Vec kappa = outer_vec(cmd.k1, cmd.k2);
      const Mat f_old = rank1_memory(v_old, kappa);
      const Mat f_new = fwm_update(f_old, cmd, KeyMode::kTensor);
      Vec mix(d);
      for (int i = 0; i < d; ++i) mix[i] = (1.0 - beta) * v_old[i] + beta * cmd.v[i];
      const Mat expected = rank1_memory(mix, kappa);
      for (size_t i = 0; i < expected.size(); ++i)
        ASSERT_NEAR(f_new.data()[i], expected.data()[i], 1e-12);
    }
  }
}

// A key orthogonal to everything already stored retrieves beta * v with no
// interference from the resident associations.
TEST(FwmCell, OrthogonalKeyWritesDoNotInterfere) {
  Rng rng(36);
  const int d = 4;
  Mat f(d, d * d);
  // Resident associations under one-hot key pairs (0,1), (1,2), (2,3).
  for (int k = 0; k < 3; ++k) {
    const Vec kappa = outer_vec(one_hot(d, k), one_hot(d, k + 1));
    const Vec v = scale(unit_vec(d, rng), 0.4);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d * d; ++j) f(i, j) += v[i] * kappa[j];
  }
  WriteCommand cmd;
  cmd.k1 = one_hot(d, 3);
  cmd.k2 = one_hot(d, 0);  // unused pair: orthogonal to all residents
  cmd.v = scale(unit_vec(d, rng), 0.3);
  cmd.beta = 0.7;
  const Mat f2 = fwm_update(f, cmd, KeyMode::kTensor);
  ASSERT_LE(frobenius_norm(f2), 1.0 + 1e-9);
  const Vec got = matvec(f2, outer_vec(cmd.k1, cmd.k2));
  for (int i = 0; i < d; ++i) EXPECT_NEAR(got[i], cmd.beta * cmd.v[i], 1e-12);
}

TEST(FwmCell, NormBoundHoldsUnderRandomUpdateSequences) {
  Rng rng(37);
  for (int seq = 0; seq < 50; ++seq) {
    const int d = 3 + static_cast<int>(rng.uniform(3));
    Mat f(d, d * d);
    for (int step = 0; step < 40; ++step) {
      WriteCommand cmd;
      cmd.k1 = random_vec(d, rng, -0.99, 0.99);
      cmd.k2 = random_vec(d, rng, -0.99, 0.99);
      cmd.v = random_vec(d, rng, -0.99, 0.99);
      cmd.beta = rng.uniform_real(0.0, 1.0);
      f = fwm_update(f, cmd, KeyMode::kTensor);
      ASSERT_LE(frobenius_norm(f), 1.0 + 1e-9);
    }
  }
}

TEST(FwmCell, ReadQueryZeroHiddenAndPerHopMatrices) {
  Rng rng(38);
  const Mat w_n = random_mat(4, 6, rng);
  std::vector<Mat> w_e = {random_mat(4, 6, rng), random_mat(4, 6, rng), random_mat(4, 6, rng)};
  const ReadQuery zero = generate_read_query(Vec(6), w_n, w_e);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(zero.n0[i], 0.0);
  ASSERT_EQ(zero.e.size(), 3u);

  const Vec h = random_vec(6, rng);
  const ReadQuery base = generate_read_query(h, w_n, w_e);
  w_e[1](2, 2) += 0.5;  // hop 2 only
  const ReadQuery bumped = generate_read_query(h, w_n, w_e);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(base.e[0][i], bumped.e[0][i]);
    EXPECT_EQ(base.e[2][i], bumped.e[2][i]);
  }
  bool changed = false;
  for (int i = 0; i < 4; ++i) changed |= base.e[1][i] != bumped.e[1][i];
  EXPECT_TRUE(changed);
}

TEST(FwmCell, ReadFromZeroMemoryIsZero) {
  Rng rng(39);
  ReadQuery q;
  q.n0 = random_vec(4, rng);
  q.e = {random_vec(4, rng)};
  const Vec out = read_chain(Mat(4, 16), q, KeyMode::kTensor);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out[i], 0.0);
}

TEST(FwmCell, SingleStoredPairRetrievesValue) {
  Rng rng(40);
  const int d = 4;
  WriteCommand cmd;
  cmd.k1 = one_hot(d, 1);
  cmd.k2 = one_hot(d, 2);
  cmd.v = unit_vec(d, rng);
  cmd.beta = 1.0;
  const Mat f = fwm_update(Mat(d, d * d), cmd, KeyMode::kTensor);
  ReadQuery q;
  q.n0 = cmd.k1;
  q.e = {cmd.k2};
  const Vec got = read_chain(f, q, KeyMode::kTensor);
  EXPECT_NEAR(cosine(got, layer_norm(cmd.v)), 1.0, 1e-9);
}

// Two chained associations: (g, r1) -> m and (layer_norm(m), r2) -> w.
// Querying with n0 = g and hops (r1, r2) walks the chain to w.
TEST(FwmCell, TwoHopChainedRetrieval) {
  Rng rng(41);
  const int d = 4;
  const Vec g = one_hot(d, 0), r1 = one_hot(d, 1), r2 = one_hot(d, 2);
  const Vec m = unit_vec(d, rng);
  const Vec m_read = layer_norm(m);
  const Vec w = unit_vec(d, rng);

  Mat f(d, d * d);
  WriteCommand first{g, r1, m, 1.0};
  f = fwm_update(f, first, KeyMode::kTensor);
  WriteCommand second{m_read, r2, w, 1.0};
  f = fwm_update(f, second, KeyMode::kTensor);

  ReadQuery q;
  q.n0 = g;
  q.e = {r1, r2};
  std::vector<Vec> hops;
  const Vec got = read_chain(f, q, KeyMode::kTensor, &hops);
  ASSERT_EQ(hops.size(), 3u);
  EXPECT_NEAR(cosine(hops[1], m_read), 1.0, 1e-6);
  EXPECT_NEAR(cosine(got, layer_norm(w)), 1.0, 1e-6);
}

TEST(FwmCell, ReadChainOutputHasUnitPopulationStd) {
  Rng rng(42);
  const int d = 8;
  // Large-variance input so the epsilon floor is negligible.
  Mat f = random_mat(d, d * d, rng, -3.0, 3.0);
  ReadQuery q;
  q.n0 = random_vec(d, rng);
  q.e = {random_vec(d, rng), random_vec(d, rng)};
  const Vec out = read_chain(f, q, KeyMode::kTensor);
  double mean = 0.0;
  for (int i = 0; i < d; ++i) mean += out[i];
  mean /= d;
  double var = 0.0;
  for (int i = 0; i < d; ++i) var += (out[i] - mean) * (out[i] - mean);
  var /= d;
  EXPECT_NEAR(std::sqrt(var), 1.0, 1e-6);
}

TEST(FwmCell, ConcatModeShapesAndUpdate) {
  Rng rng(43);
  const int d = 4;
  FwmConfig cfg{d, 1, KeyMode::kConcat};
  EXPECT_EQ(cfg.key_dim(), 2 * d);
  WriteCommand cmd;
  cmd.k1 = random_vec(d, rng, -0.9, 0.9);
  cmd.k2 = random_vec(d, rng, -0.9, 0.9);
  cmd.v = random_vec(d, rng, -0.9, 0.9);
  cmd.beta = 1.0;
  const Mat f = fwm_update(Mat(d, 2 * d), cmd, KeyMode::kConcat);
  EXPECT_EQ(f.cols(), 2 * d);
  ASSERT_LE(frobenius_norm(f), 1.0 + 1e-9);
}

// Tensor-product keys: d one-hot factors give d^2 orthogonal key pairs, so a
// d x d^2 memory holds d^2 associations with noise-free retrieval.
TEST(FwmCell, TensorKeysStoreQuadraticallyManyAssociations) {
  Rng rng(44);
  const int d = 4;
  Mat f(d, d * d);
  std::vector<Vec> values;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      WriteCommand cmd{one_hot(d, i), one_hot(d, j), unit_vec(d, rng), 1.0};
      values.push_back(cmd.v);
      f = fwm_update(f, cmd, KeyMode::kTensor);
    }
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Vec got = matvec(f, outer_vec(one_hot(d, i), one_hot(d, j)));
      EXPECT_NEAR(cosine(got, values[static_cast<size_t>(k++)]), 1.0, 1e-9);
    }
}

// Concatenated keys span only 2d dimensions; storing more than 2d pairs must
// corrupt at least one retrieval.
TEST(FwmCell, ConcatKeysInterfereBeyondRankBound) {
  Rng rng(45);
  const int d = 4;
  Mat f(d, 2 * d);
  std::vector<std::pair<Vec, Vec>> keys;
  std::vector<Vec> values;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (static_cast<int>(keys.size()) >= 2 * d + 1) break;
      keys.emplace_back(one_hot(d, i), one_hot(d, j));
      values.push_back(unit_vec(d, rng));
    }
  for (size_t k = 0; k < keys.size(); ++k) {
    WriteCommand cmd{keys[k].first, keys[k].second, values[k], 1.0};
    f = fwm_update(f, cmd, KeyMode::kConcat);
  }
  double worst = 1.0;
  for (size_t k = 0; k < keys.size(); ++k) {
    const Vec got = matvec(f, concat(keys[k].first, keys[k].second));
    worst = std::min(worst, cosine(got, values[k]));
  }
  EXPECT_LT(worst, 0.999);
}

TEST(FwmCell, AlignmentOrthogonalMatchingAndFactorised) {
  Rng rng(46);
  const int d = 4;
  std::vector<WriteCommand> history;
  history.push_back({one_hot(d, 0), one_hot(d, 1), unit_vec(d, rng), 1.0});
  history.push_back({one_hot(d, 2), one_hot(d, 3), unit_vec(d, rng), 1.0});
  ReadQuery q;
  q.n0 = one_hot(d, 0);
  q.e = {one_hot(d, 1)};
  const std::vector<Vec> hops = {q.n0, Vec(d)};  // only hop 0 feeds the query
  const Mat align = write_read_alignment(history, q, hops, KeyMode::kTensor);
  ASSERT_EQ(align.rows(), 1);
  ASSERT_EQ(align.cols(), 2);
  EXPECT_NEAR(align(0, 0), 1.0, 1e-12);  // matching unit keys
  EXPECT_NEAR(align(0, 1), 0.0, 1e-12);  // orthogonal keys

  // Factorisation: entry = <k1, n> <k2, e> for arbitrary vectors.
  std::vector<WriteCommand> h2 = {{random_vec(d, rng), random_vec(d, rng), unit_vec(d, rng), 0.5}};
  ReadQuery q2;
  q2.n0 = random_vec(d, rng);
  q2.e = {random_vec(d, rng)};
  const Mat a2 = write_read_alignment(h2, q2, {q2.n0, Vec(d)}, KeyMode::kTensor);
  EXPECT_NEAR(a2(0, 0), dot(h2[0].k1, q2.n0) * dot(h2[0].k2, q2.e[0]), 1e-10);
}
