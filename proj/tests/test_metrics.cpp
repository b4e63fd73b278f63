#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <updrop/metrics.hpp>

#include "oracles.hpp"

using namespace updrop;

TEST_CASE("f1_score on textbook counts") {
  // TP=2, FP=1, FN=1 -> P = R = F1 = 2/3.
  std::vector<std::size_t> pred{2, 2, 2, 1, 1};
  std::vector<std::size_t> truth{2, 2, 1, 2, 1};
  EvalReport r = f1_score(pred, truth, 2);
  REQUIRE(r.tp == 2);
  REQUIRE(r.fp == 1);
  REQUIRE(r.fn == 1);
  REQUIRE(r.tn == 1);
  REQUIRE(r.precision == Catch::Approx(2.0 / 3.0).margin(1e-15));
  REQUIRE(r.recall == Catch::Approx(2.0 / 3.0).margin(1e-15));
  REQUIRE(r.f1 == Catch::Approx(2.0 / 3.0).margin(1e-15));
}

TEST_CASE("f1_score conventions and guards") {
  std::vector<std::size_t> perfect{1, 2, 1, 2};
  REQUIRE(f1_score(perfect, perfect, 2).f1 == 1.0);

  // No positive predictions and no positive labels: all ratios are 0/0 -> 0.
  std::vector<std::size_t> negatives{1, 1, 1};
  EvalReport r = f1_score(negatives, negatives, 2);
  REQUIRE(r.precision == 0.0);
  REQUIRE(r.recall == 0.0);
  REQUIRE(r.f1 == 0.0);

  REQUIRE_THROWS_AS(f1_score({1, 2}, {1}, 2), UsageError);
}

TEST_CASE("f1_score matches an independent confusion-matrix oracle") {
  std::mt19937_64 rng(8675309);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t n = 1 + rng() % 40;
    std::vector<std::size_t> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = 1 + rng() % 2;
      truth[i] = 1 + rng() % 2;
    }
    EvalReport r = f1_score(pred, truth, 2);
    oracles::RefConfusion ref = oracles::ref_f1(pred, truth, 2);
    REQUIRE(r.tp == ref.tp);
    REQUIRE(r.fp == ref.fp);
    REQUIRE(r.fn == ref.fn);
    REQUIRE(r.tn == ref.tn);
    REQUIRE(r.f1 == ref.f1);
  }
}

TEST_CASE("paired t-test on differences [1,1,1,1,-1]") {
  std::vector<double> a{2, 3, 4, 5, 0};
  std::vector<double> b{1, 2, 3, 4, 1};
  TTestResult r = paired_t_test(a, b);
  REQUIRE(r.df == 4);
  REQUIRE(r.t == Catch::Approx(1.5).margin(1e-12));
  // Reference value computed with an independent statistics package.
  REQUIRE(r.p == Catch::Approx(0.20799999999999982).margin(1e-8));
}

TEST_CASE("paired t-test fixed-vector references") {
  {
    std::vector<double> a{0.71, 0.68, 0.74, 0.69, 0.72, 0.70};
    std::vector<double> b{0.65, 0.66, 0.70, 0.64, 0.71, 0.67};
    TTestResult r = paired_t_test(a, b);
    REQUIRE(r.t == Catch::Approx(4.582575694955843).margin(1e-6));
    REQUIRE(r.p == Catch::Approx(0.005933544517592237).margin(1e-6));
  }
  {
    std::vector<double> a{0.50, 0.52, 0.49, 0.51};
    std::vector<double> b{0.52, 0.50, 0.50, 0.52};
    TTestResult r = paired_t_test(a, b);
    REQUIRE(r.t == Catch::Approx(-0.5773502691896258).margin(1e-6));
    REQUIRE(r.p == Catch::Approx(0.604181303590592).margin(1e-6));
  }
  {
    std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    std::vector<double> b{0.5, 2.2, 2.4, 4.4, 4.0, 6.6, 6.2, 8.8};
    TTestResult r = paired_t_test(a, b);
    REQUIRE(r.t == Catch::Approx(0.4600501457647205).margin(1e-6));
    REQUIRE(r.p == Catch::Approx(0.6594287686479787).margin(1e-6));
  }
}

TEST_CASE("paired t-test guards") {
  std::vector<double> a{1.0, 2.0, 3.0};
  REQUIRE_THROWS_AS(paired_t_test(a, a), UndefinedTestError);  // zero variance
  std::vector<double> one{1.0};
  REQUIRE_THROWS_AS(paired_t_test(one, one), UndefinedTestError);  // n < 2
  std::vector<double> b{1.0, 2.0};
  REQUIRE_THROWS_AS(paired_t_test(a, b), UsageError);  // length mismatch
  // Constant nonzero difference also has zero variance.
  std::vector<double> c{2.0, 3.0, 4.0};
  REQUIRE_THROWS_AS(paired_t_test(c, a), UndefinedTestError);
}

TEST_CASE("swapping the samples negates t and preserves p") {
  std::vector<double> a{0.7, 0.72, 0.69, 0.75, 0.71};
  std::vector<double> b{0.68, 0.73, 0.66, 0.70, 0.69};
  TTestResult ab = paired_t_test(a, b);
  TTestResult ba = paired_t_test(b, a);
  REQUIRE(ab.t == -ba.t);
  REQUIRE(ab.p == ba.p);
}

TEST_CASE("student t CDF matches independent references to 1e-8") {
  struct Case {
    double t;
    std::size_t df;
    double cdf;
  };
  // Reference values computed with an independent statistics package.
  const Case cases[] = {
      {1.5, 4, 0.896},
      {0.0, 7, 0.5},
      {2.776, 4, 0.9749886108400118},
      {10.0, 2, 0.9950737714883371},
      {0.3, 1, 0.5927735790777423},
      {3.2, 29, 0.9983407787682591},
      {1.0, 999, 0.8412236699117936},
  };
  for (const Case& c : cases) {
    REQUIRE(student_t_cdf(c.t, c.df) == Catch::Approx(c.cdf).margin(1e-8));
    REQUIRE(student_t_cdf(-c.t, c.df) == Catch::Approx(1.0 - c.cdf).margin(1e-8));
  }
}

TEST_CASE("incomplete beta edge cases") {
  REQUIRE(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  REQUIRE(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) is the identity.
  REQUIRE(regularized_incomplete_beta(1.0, 1.0, 0.37) == Catch::Approx(0.37).margin(1e-12));
  REQUIRE_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), UsageError);
  REQUIRE_THROWS_AS(regularized_incomplete_beta(1.0, 1.0, 1.5), UsageError);
}
