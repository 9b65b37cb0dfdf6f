#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "skp/diagnostics.hpp"
#include "skp/error.hpp"
#include "skp/localized.hpp"
#include "skp/predictor.hpp"
#include "skp_cli/cli.hpp"
#include "support/test_support.hpp"

namespace skp {
namespace {

using testing::random_instance;
using testing::random_query;

Coord at(double x) { return {x, 0.0, 0.0}; }

const CorrelationModel kTaperedGauss(BaseKind::gauss2, 0.5, 1.0);

// The approximate inverse written out with dense Eigen inverses and no spatial index.
Eigen::MatrixXd reference_approximate_inverse(const Eigen::MatrixXd& sigma, const std::vector<Coord>& locs,
                                              double delta) {
  const auto m = sigma.rows();
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<Eigen::Index> hood;
    for (Eigen::Index j = 0; j < m; ++j)
      if (distance(locs[i], locs[j]) < delta) hood.push_back(j);
    const auto n = static_cast<Eigen::Index>(hood.size());
    Eigen::MatrixXd sub(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = sigma(hood[a], hood[b]);
    const Eigen::MatrixXd inv = sub.inverse();
    const auto self = std::find(hood.begin(), hood.end(), i) - hood.begin();
    for (Eigen::Index b = 0; b < n; ++b) psi(i, hood[b]) = inv(self, b);
  }
  return 0.5 * (psi + psi.transpose());
}

TEST(ApproximateInverse, FullNeighborhoodsGiveExactInverse) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst = random_instance(rng, rep % 2 + 1, 30, false, true);
    const auto sigma = assemble(inst.obs, inst.model, inst.sigma2);
    const auto approx = approximate_inverse(sigma, inst.obs.anchors(), inst.obs.diameter() * 1.01 + 1e-9);
    const Eigen::MatrixXd exact = sigma.to_dense().inverse();
    EXPECT_LT((approx.to_dense() - exact).norm(), 1e-8) << rep;
  }
}

TEST(ApproximateInverse, SingletonsGiveIdentity) {
  std::mt19937_64 rng(2);
  const auto inst = random_instance(rng, 2, 25, false, true);
  const auto sigma = assemble(inst.obs, inst.model, inst.sigma2);
  NeighborhoodStats stats;
  const auto approx = approximate_inverse(sigma, inst.obs.anchors(), 1e-6, 1, &stats);
  // Every neighborhood is the center alone, so Psi is the inverse of diag(Sigma).
  for (std::size_t i = 0; i < 25; ++i) {
    for (std::size_t j = 0; j < 25; ++j) EXPECT_NEAR(approx.at(i, j), i == j ? 1.0 / sigma.at(i, i) : 0.0, 1e-15);
  }
  EXPECT_EQ(stats.min_size, 1u);
  EXPECT_EQ(stats.max_size, 1u);
  EXPECT_EQ(stats.mean_size, 1.0);
}

TEST(ApproximateInverse, MatchesHandAssembledPsi) {
  ObservationSet s(1);
  for (int i = 0; i < 5; ++i) s.add(Observation::point(at(0.4 * i), 0.0));
  const CorrelationModel m(BaseKind::matern52, 1.0, 1.0);
  const auto sigma = assemble(s, m, 1.0);
  const auto anchors = s.anchors();
  const auto approx = approximate_inverse(sigma, anchors, 1.0);
  const Eigen::MatrixXd expected = reference_approximate_inverse(sigma.to_dense(), anchors, 1.0);
  EXPECT_LT((approx.to_dense() - expected).cwiseAbs().maxCoeff(), 1e-13);
  // 0 and 3 are 1.2 apart, outside every shared neighborhood.
  EXPECT_EQ(approx.at(0, 3), 0.0);
}

TEST(ApproximateInverse, SymmetricAndRespectsCutoff) {
  std::mt19937_64 rng(3);
  const auto inst = random_instance(rng, 2, 40, false, true);
  const auto sigma = assemble(inst.obs, inst.model, inst.sigma2);
  const auto anchors = inst.obs.anchors();
  const double delta = 1.5 * *inst.model.taper_range();
  const Eigen::MatrixXd psi = approximate_inverse(sigma, anchors, delta).to_dense();
  EXPECT_EQ(psi, psi.transpose());
  for (Eigen::Index i = 0; i < psi.rows(); ++i)
    for (Eigen::Index j = 0; j < psi.cols(); ++j)
      if (distance(anchors[i], anchors[j]) >= delta) {
        EXPECT_EQ(psi(i, j), 0.0);
      }
  EXPECT_LT((psi - reference_approximate_inverse(sigma.to_dense(), anchors, delta)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ApproximateInverse, ErrorNamesCenter) {
  // Rows 1 and 2 form an indefinite block; every neighborhood containing both fails and the
  // lowest such center is 1.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
  a(1, 2) = a(2, 1) = 1.5;
  const std::vector<Coord> locs{at(0), at(5), at(5.5), at(20)};
  try {
    approximate_inverse(SparseSymmetric::from_dense(a), locs, 1.0, 2);
    FAIL() << "expected FactorizationError";
  } catch (const FactorizationError& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
  EXPECT_THROW(approximate_inverse(SparseSymmetric::from_dense(a), locs, 0.0), InvalidArgument);
}

TEST(ApproximateInverse, ErrorShrinksWithRange) {
  // Dense 1D set so that neighborhoods grow visibly with k.
  ObservationSet s(1);
  for (int i = 0; i < 60; ++i) s.add(Observation::point(at(0.15 * i), 0.0));
  const CorrelationModel m(BaseKind::matern52, 0.5, 0.6);
  const auto sigma = assemble(s, m, 1.0);
  const Eigen::MatrixXd exact = sigma.to_dense().inverse();
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {0.6, 1.2, 2.4, 100.0}) {
    const double err = (approximate_inverse(sigma, s.anchors(), delta).to_dense() - exact).norm();
    EXPECT_LE(err, prev) << delta;
    prev = err;
  }
  EXPECT_LT(prev, 1e-8);
}

TEST(ApproximateInverse, DeterministicAcrossWorkers) {
  const auto obs = cli::synthesize(600, {{0.0, 8.0}, {0.0, 6.0}}, 4);
  const auto sigma = assemble(obs, kTaperedGauss, 1.0);
  const auto one = approximate_inverse(sigma, obs.anchors(), 2.0, 1);
  for (int w : {2, 3, 8}) EXPECT_EQ(approximate_inverse(sigma, obs.anchors(), 2.0, w), one) << w;
}

TEST(LocalizedFit, ExactLimitEqualsGlobal) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 6; ++rep) {
    auto inst = random_instance(rng, rep % 2 + 1, 25, rep % 2 == 0, true);
    // Estimation needs exact observations, so drop errors for this comparison.
    std::vector<Observation> exact;
    for (auto o : inst.obs.observations()) {
      o.error_var = 0.0;
      exact.push_back(o);
    }
    const ObservationSet obs(inst.obs.dim(), exact);
    const int k = static_cast<int>(std::ceil(obs.diameter() / *inst.model.taper_range())) + 1;
    const auto f = LocalizedFit::fit(obs, inst.model, k);
    const auto g = KernelPredictor::fit(obs, inst.model, f.mu(), f.sigma2());
    EXPECT_LT((f.weights() - g.weights()).cwiseAbs().maxCoeff(), 1e-8);
    for (int q = 0; q < 100; ++q) {
      const Coord x = random_query(rng, obs);
      ASSERT_NEAR(f.predict(x), g.predict(x), 1e-8);
      ASSERT_NEAR(f.variance(x), g.predict_variance(x), 1e-8 * f.sigma2());
    }
    EXPECT_LT(f.deviation_var(), 1e-16 * f.sigma2());
  }
}

TEST(LocalizedFit, SingleObservation) {
  ObservationSet s(2);
  s.add(Observation::point({1, 1, 0}, 4.0));
  LocalizedFit::Options fixed;
  fixed.mu = 1.5;
  fixed.sigma2 = 2.0;
  for (int k : {1, 3}) {
    const auto f = LocalizedFit::fit(s, kTaperedGauss, k, fixed);
    EXPECT_NEAR(f.weights()[0], 4.0 - 1.5, 1e-15);
    EXPECT_NEAR(f.predict({1, 1, 0}), 4.0, 1e-14);
    EXPECT_EQ(f.deviation_var(), 0.0);
  }
  LocalizedFit::Options mu_only;
  mu_only.mu = 1.0;
  const auto f = LocalizedFit::fit(s, kTaperedGauss, 2, mu_only);
  EXPECT_NEAR(f.sigma2(), 9.0, 1e-14);
  EXPECT_NEAR(f.weights()[0], 3.0, 1e-15);
}

TEST(LocalizedFit, EmptySet) {
  LocalizedFit::Options o;
  o.mu = 2.0;
  o.sigma2 = 3.0;
  const auto f = LocalizedFit::fit(ObservationSet(2), kTaperedGauss, 2, o);
  EXPECT_EQ(f.predict({0, 0, 0}), 2.0);
  EXPECT_EQ(f.variance({0, 0, 0}), 3.0);
  EXPECT_EQ(f.adjusted_variance({0, 0, 0}), 3.0);
  EXPECT_EQ(f.deviation_var(), 0.0);
}

TEST(LocalizedFit, ConfigurationErrors) {
  ObservationSet s(1);
  s.add(Observation::point(at(0), 1.0));
  s.add(Observation::point(at(0.3), 2.0));
  EXPECT_THROW(LocalizedFit::fit(s, CorrelationModel(BaseKind::gauss2, 0.5), 2), InvalidArgument);
  EXPECT_THROW(LocalizedFit::fit(s, kTaperedGauss, 0), InvalidArgument);
  ObservationSet noisy(1);
  noisy.add(Observation::point(at(0), 1.0, 0.2));
  EXPECT_THROW(LocalizedFit::fit(noisy, kTaperedGauss, 2), InvalidArgument);
}

TEST(LocalizedFit, FarPerturbationLeavesPredictionUnchanged) {
  const auto obs = cli::synthesize(400, {{0.0, 10.0}, {0.0, 4.0}}, 9);
  LocalizedFit::Options fixed;
  fixed.mu = 1000.0;
  fixed.sigma2 = 5000.0;
  const int k = 2;
  const auto f = LocalizedFit::fit(obs, kTaperedGauss, k, fixed);
  const Coord x{1.0, 2.0, 0.0};
  std::vector<double> values(obs.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    values[i] = obs[i].value;
    if (distance(obs[i].location, x) > (k + 1) * 1.0) {
      values[i] += 250.0;
      ++changed;
    }
  }
  ASSERT_GT(changed, 100u);
  const auto g = LocalizedFit::fit(obs.with_values(values), kTaperedGauss, k, fixed);
  EXPECT_EQ(f.predict(x), g.predict(x));
  EXPECT_NE(f.predict({9.0, 2.0, 0.0}), g.predict({9.0, 2.0, 0.0}));
}

TEST(LocalizedFit, AdjustedVariance) {
  const auto obs = cli::synthesize(500, {{0.0, 8.0}, {0.0, 6.0}}, 2);
  const auto f = LocalizedFit::fit(obs, kTaperedGauss, 1);
  ASSERT_GT(f.deviation_var(), 0.0);
  diagnostics::reset();
  for (std::size_t i = 0; i < obs.size(); i += 25) {
    const Coord x = obs[i].location;
    const double adj = f.adjusted_variance(x);
    EXPECT_EQ(adj, std::max(f.variance(x) + f.deviation_var(), 0.0));
    EXPECT_GE(adj, 0.0);
    EXPECT_NEAR(adj, f.deviation_var(), 1e-6 * f.sigma2());
  }
  EXPECT_EQ(deviation_variance(f), f.deviation_var());

  LocalizedFit::Options fixed;
  fixed.mu = 0.0;
  fixed.sigma2 = 1.0;
  ObservationSet s(1);
  s.add(Observation::point(at(0), 1.0));
  const auto single = LocalizedFit::fit(s, kTaperedGauss, 2, fixed);
  EXPECT_EQ(single.deviation_var(), 0.0);
  for (double x : {0.0, 0.4, 3.0}) EXPECT_EQ(single.adjusted_variance(at(x)), std::max(single.variance(at(x)), 0.0));
}

TEST(LocalizedFit, DeviationVarianceDecreasesWithK) {
  const auto obs = cli::synthesize(1330, {{0.0, 14.0}, {0.0, 10.0}}, 1);
  const auto k1 = LocalizedFit::fit(obs, kTaperedGauss, 1);
  const auto k2 = LocalizedFit::fit(obs, kTaperedGauss, 2);
  EXPECT_LE(k2.deviation_var(), k1.deviation_var());
  EXPECT_LT(k2.deviation_var() / k2.sigma2(), 1e-3);
  EXPECT_EQ(k2.delta(), 2.0);
  EXPECT_GE(k2.neighborhood_stats().max_size, k2.neighborhood_stats().min_size);
}

TEST(LocalizedFit, MixedKindsUsePointsForDeviation) {
  ObservationSet s(1);
  for (int i = 0; i < 12; ++i) s.add(Observation::point(at(0.3 * i), std::sin(0.3 * i)));
  s.add(Observation::interval_average(0.5, 1.1, 0.4));
  s.add(Observation::point(at(0.45), 0.2, 0.1));
  LocalizedFit::Options o;
  o.mu = 0.0;
  o.sigma2 = 1.0;
  const auto f = LocalizedFit::fit(s, CorrelationModel(BaseKind::matern52, 0.5, 0.7), 1, o);
  double sum = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double d = s[i].value - f.predict(s[i].location);
    sum += d * d;
  }
  EXPECT_NEAR(f.deviation_var(), sum / 12.0, 1e-15);
}

}  // namespace
}  // namespace skp
