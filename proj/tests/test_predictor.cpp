#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "skp/diagnostics.hpp"
#include "skp/error.hpp"
#include "skp/predictor.hpp"
#include "support/test_support.hpp"

namespace skp {
namespace {

using testing::central_difference;
using testing::random_instance;
using testing::random_query;
using testing::tanh_sinh;

Coord at(double x) { return {x, 0.0, 0.0}; }

ObservationSet example_a(double d1, double d2, double d3) {
  ObservationSet s(1);
  s.add(Observation::point(at(0), d1));
  s.add(Observation::derivative(at(-5), at(1), d2));
  s.add(Observation::interval_average(5.0, 6.0, d3));
  return s;
}

void expect_weights(const KernelPredictor& p, std::array<double, 3> expected, double tol) {
  ASSERT_EQ(p.weights().size(), 3);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p.weights()[i], expected[i], tol) << i;
}

TEST(KernelPredictor, ExampleAWeights) {
  expect_weights(KernelPredictor::fit(example_a(1, 0, 2), CorrelationModel(BaseKind::matern52, 1.0), 0.0, 1.0),
                 {0.9992, -0.00085, 2.23876}, 1e-3);
  expect_weights(KernelPredictor::fit(example_a(1, 0, 2), CorrelationModel(BaseKind::matern52, 3.0), 0.0, 1.0),
                 {0.7092, -0.4748, 1.9045}, 1e-3);
  expect_weights(KernelPredictor::fit(example_a(1, 10, 2), CorrelationModel(BaseKind::matern52, 3.0), 0.0, 1.0),
                 {-5.4759, 57.0169, 2.6231}, 2e-3);
}

TEST(KernelPredictor, EmptySetIsPriorOnly) {
  const auto p = KernelPredictor::fit(ObservationSet(1), CorrelationModel(BaseKind::gauss2, 1.0), 2.5, 4.0);
  EXPECT_EQ(p.weights().size(), 0);
  EXPECT_FALSE(p.factor().has_value());
  EXPECT_EQ(p.predict(at(3.0)), 2.5);
  EXPECT_EQ(p.predict_variance(at(3.0)), 4.0);
  EXPECT_EQ(p.predict_derivative(at(3.0), at(1)), 0.0);
  EXPECT_EQ(p.predict_average({0.0, 2.0}), 2.5);
  EXPECT_EQ(p.deviation_var(), 0.0);
}

TEST(KernelPredictor, RejectsBadLevels) {
  EXPECT_THROW(KernelPredictor::fit(example_a(1, 0, 2), CorrelationModel(BaseKind::matern52, 1.0), 0.0, 0.0),
               InvalidArgument);
  EXPECT_THROW(KernelPredictor::fit(example_a(1, 0, 2), CorrelationModel(BaseKind::matern52, 1.0),
                                    std::nan(""), 1.0),
               InvalidArgument);
}

TEST(KernelPredictor, ReproducesExactObservations) {
  std::mt19937_64 rng(2);
  for (int dim : {1, 2, 3}) {
    for (bool tapered : {false, true}) {
      const auto inst = random_instance(rng, dim, 30, dim == 1, tapered);
      const auto p = KernelPredictor::fit(inst.obs, inst.model, inst.mu, inst.sigma2);
      for (const auto& o : inst.obs.observations()) {
        if (!o.exact_point()) continue;
        EXPECT_NEAR(p.predict(o.location), o.value, 1e-8);
        EXPECT_LT(p.predict_variance(o.location), 1e-8 * inst.sigma2);
      }
      // Exact derivative observations are reproduced by the derivative prediction, and exact
      // integrals by the average prediction times the length.
      for (const auto& o : inst.obs.observations()) {
        if (o.error_var > 0.0) continue;
        if (o.kind == ObsKind::derivative) {
          EXPECT_NEAR(p.predict_derivative(o.location, o.direction), o.value, 1e-7);
        } else if (o.kind == ObsKind::interval_average) {
          EXPECT_NEAR(p.predict_average(o.interval) * o.interval.length(), o.value, 1e-7);
        }
      }
    }
  }
}

TEST(KernelPredictor, EqualsKrigingOracle) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const int dim = rep % 2 + 1;
    const auto inst = random_instance(rng, dim, 5 + rng() % 30, dim == 1, rep % 4 >= 2);
    const auto p = KernelPredictor::fit(inst.obs, inst.model, inst.mu, inst.sigma2);
    const KrigingOracle oracle(inst.obs, inst.model, inst.mu, inst.sigma2);
    for (int q = 0; q < 50; ++q) {
      const Coord x = random_query(rng, inst.obs);
      const auto k = oracle.at(x);
      ASSERT_NEAR(p.predict(x), k.prediction, 1e-8) << rep;
      ASSERT_NEAR(p.predict_variance(x), k.variance, 1e-8) << rep;
    }
  }
}

TEST(KrigingOracle, TrivialCases) {
  const CorrelationModel m(BaseKind::matern52, 1.0);
  const auto empty = kriging_predict(ObservationSet(2), m, 1.5, 2.0, {0, 0, 0});
  EXPECT_EQ(empty.prediction, 1.5);
  EXPECT_EQ(empty.variance, 2.0);
  ObservationSet one(2);
  one.add(Observation::point({0.3, 0.1, 0}, 7.0));
  const auto r = kriging_predict(one, m, 1.5, 2.0, {0.3, 0.1, 0});
  EXPECT_NEAR(r.prediction, 7.0, 1e-14);
  EXPECT_NEAR(r.variance, 0.0, 1e-14);
}

TEST(KernelPredictor, VarianceBounds) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 6; ++rep) {
    const auto inst = random_instance(rng, rep % 2 + 1, 25, rep % 2 == 0, rep >= 3);
    const auto p = KernelPredictor::fit(inst.obs, inst.model, inst.mu, inst.sigma2);
    for (int q = 0; q < 1000; ++q) {
      const double v = p.predict_variance(random_query(rng, inst.obs, 3.0));
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, inst.sigma2);
    }
  }
}

TEST(KernelPredictor, VarianceIndependentOfValues) {
  std::mt19937_64 rng(6);
  const auto inst = random_instance(rng, 1, 20, true, false);
  std::vector<double> other(inst.obs.size());
  for (auto& v : other) v = testing::uniform(rng, -100.0, 100.0);
  const auto p = KernelPredictor::fit(inst.obs, inst.model, inst.mu, inst.sigma2);
  const auto q = KernelPredictor::fit(inst.obs.with_values(other), inst.model, inst.mu, inst.sigma2);
  for (int i = 0; i < 200; ++i) {
    const Coord x = random_query(rng, inst.obs);
    ASSERT_EQ(p.predict_variance(x), q.predict_variance(x));
  }
}

TEST(KernelPredictor, LocalityUnderTaper) {
  const CorrelationModel m(BaseKind::gauss2, 0.5, 1.0);
  ObservationSet s(2);
  s.add(Observation::point({0, 0, 0}, 1.0));
  s.add(Observation::point({0.5, 0.2, 0}, 2.0));
  s.add(Observation::point({4.0, 4.0, 0}, 3.0));
  std::vector<double> changed{1.0, 2.0, -40.0};
  const auto p = KernelPredictor::fit(s, m, 0.5, 1.0);
  const auto q = KernelPredictor::fit(s.with_values(changed), m, 0.5, 1.0);
  // The far observation is isolated: only its own weight changes.
  EXPECT_EQ(p.weights()[0], q.weights()[0]);
  EXPECT_EQ(p.weights()[1], q.weights()[1]);
  EXPECT_NE(p.weights()[2], q.weights()[2]);
  for (const Coord x : {Coord{0.1, 0.1, 0}, Coord{-0.5, 0.3, 0}, Coord{1.2, 0.0, 0}}) EXPECT_EQ(p.predict(x), q.predict(x));
  EXPECT_NE(p.predict({4.2, 4.1, 0}), q.predict({4.2, 4.1, 0}));
  EXPECT_EQ(p.predict({10, 10, 0}), 0.5);
}

TEST(KernelPredictor, DerivativePredictionMatchesFiniteDifference) {
  for (double range : {1.0, 3.0}) {
    const auto p = KernelPredictor::fit(example_a(1, 0, 2), CorrelationModel(BaseKind::matern52, range), 0.0, 1.0);
    const auto f = [&](double t) { return p.predict(at(t)); };
    for (double x = -9.5; x <= 9.5; x += 0.37) {
      EXPECT_NEAR(p.predict_derivative(at(x), at(1)), central_difference(f, x, 1e-5), 1e-6) << x;
      EXPECT_EQ(p.predict_derivative(at(x), at(-1)), -p.predict_derivative(at(x), at(1)));
    }
  }
}

TEST(KernelPredictor, DerivativeAtSinglePointIsZero) {
  ObservationSet s(1);
  s.add(Observation::point(at(1.5), 4.0));
  const auto p = KernelPredictor::fit(s, CorrelationModel(BaseKind::gauss2, 1.0), 0.0, 1.0);
  EXPECT_EQ(p.predict_derivative(at(1.5), at(1)), 0.0);
  EXPECT_THROW(p.predict_derivative(at(1.5), at(2)), InvalidArgument);
}

TEST(KernelPredictor, AveragePredictionMatchesQuadrature) {
  for (double range : {1.0, 3.0}) {
    const auto p = KernelPredictor::fit(example_a(1, 0, 2), CorrelationModel(BaseKind::matern52, range), 0.7, 1.0);
    const auto f = [&](double t) { return p.predict(at(t)); };
    for (const Interval iv : {Interval{5, 6}, Interval{-6, -4}, Interval{-1, 0.5}, Interval{-10, 10}}) {
      const double oracle = tanh_sinh(f, iv.lower, iv.upper, {0.0, -5.0, 5.0, 6.0}) / iv.length();
      EXPECT_NEAR(p.predict_average(iv), oracle, 1e-8);
    }
    EXPECT_NEAR(p.predict_average({0.3, 0.3 + 1e-6}), p.predict(at(0.3 + 5e-7)), 1e-6);
    EXPECT_NEAR(p.predict_average({5, 6}), 2.0, 1e-8);
    EXPECT_THROW(p.predict_average({1.0, 1.0}), InvalidArgument);
  }
}

TEST(KernelPredictor, FromWeightsMatchesFit) {
  std::mt19937_64 rng(9);
  const auto inst = random_instance(rng, 2, 20, false, true);
  const auto p = KernelPredictor::fit(inst.obs, inst.model, inst.mu, inst.sigma2);
  const auto q = KernelPredictor::from_weights(inst.obs, inst.model, inst.mu, inst.sigma2, p.weights());
  for (int i = 0; i < 50; ++i) {
    const Coord x = random_query(rng, inst.obs);
    EXPECT_EQ(p.predict(x), q.predict(x));
    EXPECT_EQ(p.predict_variance(x), q.predict_variance(x));
  }
  EXPECT_THROW(KernelPredictor::from_weights(inst.obs, inst.model, 0, 1, Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST(KernelPredictor, WorkerCountDoesNotChangeFit) {
  std::mt19937_64 rng(10);
  const auto inst = random_instance(rng, 2, 40, false, true);
  const auto a = KernelPredictor::fit(inst.obs, inst.model, inst.mu, inst.sigma2, {1});
  const auto b = KernelPredictor::fit(inst.obs, inst.model, inst.mu, inst.sigma2, {4});
  EXPECT_EQ(a.weights(), b.weights());
}

TEST(ClampVariance, Policy) {
  diagnostics::reset();
  EXPECT_EQ(clamp_variance(0.5, 1.0), 0.5);
  EXPECT_EQ(clamp_variance(-1e-15, 1.0), 0.0);
  EXPECT_EQ(clamp_variance(1.0 + 1e-15, 1.0), 1.0);
  EXPECT_EQ(diagnostics::counters().variance_clamps.load(), 2u);
  EXPECT_EQ(diagnostics::counters().variance_violations.load(), 0u);
  EXPECT_EQ(clamp_variance(-0.1, 1.0), 0.0);
  EXPECT_EQ(diagnostics::counters().variance_violations.load(), 1u);
}

TEST(GridSpec, ParseAndOrder) {
  const auto g = GridSpec::parse("0,1,3;10,20,2");
  EXPECT_EQ(g.dim(), 2);
  EXPECT_EQ(g.node_count(), 6u);
  // first axis slowest
  EXPECT_EQ(g.node(0), (Coord{0.0, 10.0, 0.0}));
  EXPECT_EQ(g.node(1), (Coord{0.0, 20.0, 0.0}));
  EXPECT_EQ(g.node(2), (Coord{0.5, 10.0, 0.0}));
  EXPECT_EQ(g.node(5), (Coord{1.0, 20.0, 0.0}));
  EXPECT_EQ(GridSpec::parse("2,2,1").node(0), (Coord{2.0, 0.0, 0.0}));
  EXPECT_EQ(GridSpec::parse("-10,10,2001").node(1000)[0], 0.0);
}

TEST(GridSpec, RejectsMalformed) {
  for (const char* bad : {"", "0,1", "0,1,0", "1,0,3", "a,1,2", "0,1,2.5", "0,1,2;0,1,2;0,1,2;0,1,2", "0,1,-3"}) {
    EXPECT_THROW(GridSpec::parse(bad), InvalidArgument) << bad;
  }
}

TEST(Rasterize, Basics) {
  const auto p = KernelPredictor::fit(example_a(1, 0, 2), CorrelationModel(BaseKind::matern52, 1.0), 0.0, 1.0);
  const auto one = rasterize(p, GridSpec::parse("0.5,0.5,1"));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].prediction, p.predict(at(0.5)));
  EXPECT_EQ(one[0].variance, p.predict_variance(at(0.5)));

  const auto full = rasterize(p, GridSpec::parse("-10,10,2001"), 3);
  ASSERT_EQ(full.size(), 2001u);
  EXPECT_EQ(full[1000].node[0], 0.0);
  EXPECT_NEAR(full[1000].prediction, 1.0, 1e-8);
  EXPECT_LE(full[1000].variance, 1e-8);
  const auto serial = rasterize(p, GridSpec::parse("-10,10,2001"), 1);
  for (std::size_t i = 0; i < full.size(); ++i) {
    ASSERT_EQ(full[i].prediction, serial[i].prediction);
    ASSERT_EQ(full[i].variance, serial[i].variance);
  }

  const auto prior = KernelPredictor::fit(ObservationSet(2), CorrelationModel(BaseKind::gauss2, 1.0), 3.0, 2.0);
  for (const auto& row : rasterize(prior, GridSpec::parse("0,1,4;0,1,5"))) {
    EXPECT_EQ(row.prediction, 3.0);
    EXPECT_EQ(row.variance, 2.0);
  }
  EXPECT_THROW(rasterize(p, GridSpec::parse("0,1,2;0,1,2")), InvalidArgument);
}

}  // namespace
}  // namespace skp
