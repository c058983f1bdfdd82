#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scaleinv/adversary.hpp"
#include "scaleinv/bounds.hpp"
#include "scaleinv/experiment.hpp"
#include "scaleinv/fullinv.hpp"

using namespace scaleinv;

TEST(Penalty, Examples) {
  EXPECT_EQ(f_penalty(0.0, {2.0, 1.0}), 0.0);
  EXPECT_NEAR(f_penalty(1.0, {2.0, 1.0}), 1.48230380736751, 1e-13);
  EXPECT_NEAR(f_penalty(1e6, {1.0, 1.0}), 5256521.76975703, 1e-6);
  EXPECT_THROW(f_penalty(-1.0, {2.0, 1.0}), ParameterError);
  EXPECT_THROW(f_penalty(1.0, {0.0, 1.0}), ParameterError);
}

TEST(Penalty, FiniteAndAccurateAtExtremes) {
  const PenaltyParams p{1.5, 1e3};
  EXPECT_TRUE(std::isfinite(f_penalty(1e200, p)));
  const double tiny = 1e-150;
  // x sqrt(alpha * alpha beta^2 x^2) for small x
  EXPECT_NEAR(f_penalty(tiny, p) / (tiny * tiny * 1.5 * 1e3), 1.0, 1e-12);
}

TEST(Penalty, NondecreasingOnGrid) {
  for (const PenaltyParams p : {PenaltyParams{1.2, 0.5}, PenaltyParams{5.0, 10.0}}) {
    double prev = 0.0;
    for (int k = 0; k <= 2000; ++k) {
      const double x = std::pow(10.0, -6.0 + 12.0 * k / 2000.0);
      const double v = f_penalty(x, p);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(ConjugateBound, Examples) {
  EXPECT_DOUBLE_EQ(f_conj_bound(0.0, {2.0, 4.0}), 0.25);
  EXPECT_NEAR(f_conj_bound(2.0, {2.0, 1.0}), std::exp(1.0), 1e-15);
  EXPECT_THROW(f_conj_bound(-1.0, {2.0, 1.0}), ParameterError);
}

TEST(ConjugateBound, DominatesBruteForceSupremum) {
  for (double alpha : {1.2, 2.0, 5.0}) {
    for (double beta : {0.5, 1.0, 10.0}) {
      for (int k = 1; k <= 50; ++k) {
        const double theta = 0.1 * k;
        const PenaltyParams p{alpha, beta};
        EXPECT_LE(oracle::conjugate_brute_force(theta, p), f_conj_bound(theta, p) + 1e-9)
            << theta << " " << alpha << " " << beta;
      }
    }
  }
}

TEST(Kappa, Examples) {
  EXPECT_NEAR(kappa(13.0 / 8.0), std::exp(1.0), 1e-15);
  EXPECT_LT(kappa(100.0), 1.01);
  EXPECT_GT(kappa(100.0), 1.0);
  EXPECT_NEAR(kappa(1.25), 54.5981500331442, 1e-12);
  EXPECT_THROW(kappa(1.125), ParameterError);
  for (double a = 1.2; a < 50.0; a *= 1.3) EXPECT_GT(kappa(a), kappa(a * 1.3));
}

TEST(CoordwiseBound, Examples) {
  const double k = kappa(1.5);
  EXPECT_NEAR(regret_bound_coordwise(Vector::Zero(3), Vector::Ones(3), 1.5, 10, 3), k * (1.0 + std::log(10.0)), 1e-12);
  EXPECT_NEAR(regret_bound_coordwise(Vector::Ones(1), Vector::Ones(1), 1.5, 1, 1), 4.96603136128013, 1e-12);
  EXPECT_NEAR(std::sqrt(1.5 * std::log(2.5)), 1.17236346659696, 1e-13);
  EXPECT_THROW(regret_bound_coordwise(Vector::Ones(2), Vector::Ones(3), 1.5, 1, 3), DimensionError);
}

TEST(CoordwiseBound, MonotoneInEachCoordinate) {
  const Vector s = Vector::LinSpaced(3, 0.5, 5.0);
  Vector u = Vector::Zero(3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    double prev = regret_bound_coordwise(u, s, 1.5, 100, 3);
    for (double a : {0.01, 0.1, 1.0, 10.0}) {
      u(i) = -a;
      const double b = regret_bound_coordwise(u, s, 1.5, 100, 3);
      EXPECT_GE(b, prev);
      prev = b;
    }
  }
}

TEST(FullBound, Examples) {
  EXPECT_EQ(regret_bound_full(0.0, 3.0, 1.5), 1.0);
  EXPECT_NEAR(regret_bound_full(1.0, 0.0, std::exp(1.0)), 2.88939550682017, 1e-13);
  double prev = 0.0;
  for (double g = 0.0; g < 100.0; g += 7.0) {
    const double b = regret_bound_full(2.0, g, 1.5);
    EXPECT_GE(b, prev);
    prev = b;
  }
  EXPECT_THROW(regret_bound_full(-1.0, 0.0, 1.5), ParameterError);
}

TEST(GammaBound, Examples) {
  EXPECT_EQ(gamma_bound(3, 0.5, 0.0), 3.0);
  EXPECT_NEAR(gamma_bound(1, 1.0, 3.0), 2.38629436111989, 1e-13);
  double prev = 0.0;
  for (double s = 0.0; s < 1e6; s = s * 3 + 1) {
    const double b = gamma_bound(2, 0.1, s);
    EXPECT_GE(b, prev);
    prev = b;
  }
  EXPECT_THROW(gamma_bound(0, 1.0, 1.0), ParameterError);
  EXPECT_THROW(gamma_bound(1, 0.0, 1.0), ParameterError);
}

TEST(GammaBound, UnitScalarStream) {
  FullInvLearner l(1.5, 1);
  for (double g : {1.0, -1.0, 1.0}) {
    l.predict(Vector::Ones(1));
    l.update(g, Vector::Ones(1));
  }
  EXPECT_NEAR(l.gamma(), 1.0 + 0.5 + 1.0 / 3.0, 1e-14);
  EXPECT_LE(l.gamma(), gamma_bound(1, 1.0, 3.0));
}

TEST(CoreInequality, Examples) {
  const InequalityCheck zero = check_core_inequality(0.0);
  EXPECT_EQ(zero.lhs, 1.0);
  EXPECT_EQ(zero.rhs, 1.0);
  EXPECT_TRUE(zero.holds);
  const InequalityCheck one = check_core_inequality(1.0);
  EXPECT_NEAR(one.lhs, 1.36787944117144, 1e-13);
  EXPECT_NEAR(one.rhs, 1.75505465696030, 1e-13);
  EXPECT_TRUE(one.holds);
  const InequalityCheck m3 = check_core_inequality(-3.0);
  EXPECT_NEAR(m3.lhs, 17.0855369231877, 1e-12);
  EXPECT_NEAR(m3.rhs, 157.984985495187, 1e-10);
  EXPECT_TRUE(m3.holds);
}

TEST(CoreInequality, HoldsBeyondTheDoubleRange) {
  for (double x : {-60.0, -1e3, -1e150, 60.0, 1e3, 1e150}) EXPECT_TRUE(check_core_inequality(x).holds) << x;
}

TEST(CoreInequality, DenseGrid) {
  int failures = 0;
  for (long k = -500000; k <= 500000; ++k) failures += !check_core_inequality(k * 1e-4).holds;
  EXPECT_EQ(failures, 0);
}

TEST(IntervalTable, AllRowsPositiveAndMatchTheTable) {
  for (const IntervalBoundRow& row : kIntervalTable) {
    const double b = interval_lower_bound(row.u, row.v);
    EXPECT_GT(b, 0.0) << row.u << " " << row.v;
    EXPECT_TRUE(matches_table_value(b, row.bound)) << row.u << " " << row.v << " " << b;
  }
  EXPECT_NEAR(interval_lower_bound(1.24, 16.0 / 9.0), 0.017, 5e-4);
  EXPECT_THROW(interval_lower_bound(0.5, 0.5), ParameterError);
  EXPECT_THROW(interval_lower_bound(0.0, 0.5), ParameterError);
}

TEST(IntervalTable, RowsCoverTheInterval) {
  double lo = 16.0 / 9.0;
  for (const IntervalBoundRow& row : kIntervalTable) {
    EXPECT_GE(row.v, lo - 0.01);
    lo = row.u;
  }
  EXPECT_DOUBLE_EQ(lo, 0.34);
}

TEST(IntervalTable, AgreementRule) {
  EXPECT_TRUE(matches_table_value(0.0011, 0.0007));
  EXPECT_TRUE(matches_table_value(0.03, 0.017));
  EXPECT_FALSE(matches_table_value(0.04, 0.017));
  EXPECT_FALSE(matches_table_value(-0.01, 0.003));
}

TEST(SeminormConjugate, MatchesOneDimensionalConjugate) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  const PenaltyParams p{1.5, 1.0};
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index d = 2 + trial % 4;
    const Eigen::Index r = trial % 3 == 0 ? d - 1 : d;
    Matrix X(d, r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < d; ++i) X(i, j) = normal(rng);
    const Matrix A = X * X.transpose();
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
    Vector y = A * z;
    const double raw = std::sqrt(quad_form(oracle::pinv_reference(A, r), y));
    y *= (0.5 + 0.25 * trial) / raw;
    const double theta = std::sqrt(quad_form(oracle::pinv_reference(A, r), y));
    const double expected = oracle::conjugate_brute_force(theta, p);
    const double got = oracle::seminorm_conjugate_brute_force(A, y, p, rng);
    EXPECT_NEAR(got, expected, 1e-3 * std::abs(expected)) << "d=" << d << " rank=" << r;
  }
}

TEST(ZeroPredictorBound, HoldsOnRandomRuns) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    StreamSpec spec;
    spec.d = 4;
    spec.T = 100;
    spec.seed = seed;
    spec.scale_min = 1e-2;
    spec.scale_max = 1e2;
    const SyntheticStream s = random_stream(spec);
    for (const Loss& loss : {Loss::logistic(), Loss::hinge()}) {
      const RunResult run = run_learner({LearnerKind::Zero, 1.5, 1.0}, s.examples, loss, 4);
      for (const Certificate& c : certify(run, make_comparators(run.log, ComparatorSpec{}, seed))) {
        EXPECT_LE(c.true_regret, c.norm_S * std::sqrt(100.0) + 1e-9) << c.comparator;
      }
    }
  }
}
