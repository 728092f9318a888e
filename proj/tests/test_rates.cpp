#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ulrates/rates.hpp"

using namespace ulrates;

TEST_SUITE("rates") {

TEST_CASE("reference point m=1, gamma=1: lambda = log(5/4)") {
  const RateResult r = main_rate({1.0, 1.0, 0.0, 1.0});
  CHECK(r.lambda == doctest::Approx(std::log(1.25)).epsilon(1e-15));
  CHECK(r.regime.regime == RegimeR::Regime::Convex);
  CHECK(r.has_universal_prefactor);
  CHECK(r.inputs.m == 1.0);
  CHECK(r.inputs.gamma == 1.0);

  // Same point through the closed form at the optimal friction.
  CHECK(r.lambda == rate_at_optimal_gamma(1.0, 1.0).lambda);
}

TEST_CASE("closed form at gamma = sqrt(m) matches the general formula") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> logu(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double m = std::pow(10.0, logu(rng));
    const double c0 = std::pow(10.0, logu(rng));
    const double g = optimal_gamma(m);
    const double general = main_rate({m, g, 0.0, c0}).lambda;
    const double closed = rate_at_optimal_gamma(m, c0).lambda;
    CHECK(std::abs(general - closed) <= 1e-14 * std::abs(closed));
  }
}

TEST_CASE("optimal_gamma is sqrt(m)") {
  CHECK(optimal_gamma(1.0) == 1.0);
  CHECK(optimal_gamma(0.04) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(optimal_gamma(4.0) == 2.0);
  CHECK_THROWS_AS(optimal_gamma(0.0), invalid_parameter_error);
  CHECK_THROWS_AS(optimal_gamma(-2.0), invalid_parameter_error);
}

TEST_CASE("optimal rate scales like sqrt(m)") {
  for (double m : {0.25, 1.0, 7.0}) {
    const double r1 = rate_at_optimal_gamma(m, 1.0).lambda;
    const double r4 = rate_at_optimal_gamma(4.0 * m, 1.0).lambda;
    CHECK(r4 / r1 == doctest::Approx(2.0).epsilon(1e-15));
  }
}

TEST_CASE("overdamped rate and the small-m speedup") {
  CHECK(overdamped_rate(1.0) == 1.0);
  CHECK(overdamped_rate(0.01) == 0.01);
  CHECK_THROWS_AS(overdamped_rate(0.0), invalid_parameter_error);

  // Underdamped beats overdamped by a factor log(5/4)/sqrt(m): a factor 100
  // in m buys exactly a factor 10 in the speedup.
  auto speedup = [](double m) {
    return rate_at_optimal_gamma(m, 1.0).lambda / overdamped_rate(m);
  };
  double prev = std::numeric_limits<double>::infinity();
  for (double m : {1e-4, 1e-2, 1.0, 100.0}) {
    const double s = speedup(m);
    CHECK(s < prev);
    prev = s;
  }
  CHECK(speedup(1e-4) / speedup(1e-2) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(speedup(1e-4) > 20.0);  // log(5/4)*100 ~ 22.3 per unit rate
}

TEST_CASE("main_rate validates its inputs") {
  CHECK_THROWS_AS(main_rate({0.0, 1.0, 0.0, 1.0}), invalid_parameter_error);
  CHECK_THROWS_AS(main_rate({1.0, 0.0, 0.0, 1.0}), invalid_parameter_error);
  CHECK_THROWS_AS(main_rate({1.0, -1.0, 0.0, 1.0}), invalid_parameter_error);
  CHECK_THROWS_AS(main_rate({1.0, 1.0, -0.5, 1.0}), invalid_parameter_error);
  CHECK_THROWS_AS(main_rate({1.0, 1.0, 0.0, 0.0}), invalid_parameter_error);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(main_rate({nan, 1.0, 0.0, 1.0}), invalid_parameter_error);
}

TEST_CASE("rate is monotone in each input the right way") {
  // Decreasing in R.
  double prev = std::numeric_limits<double>::infinity();
  for (double R : {0.0, 1.0, 2.0, 5.0}) {
    const double l = main_rate({1.0, 1.0, R, 1.0}).lambda;
    CHECK(l < prev);
    prev = l;
    if (R > 0.0)
      CHECK(main_rate({1.0, 1.0, R, 1.0}).regime.regime ==
            RegimeR::Regime::HessianLB);
  }
  // Decreasing in c0.
  prev = std::numeric_limits<double>::infinity();
  for (double c0 : {0.5, 1.0, 2.0, 4.0}) {
    const double l = main_rate({1.0, 1.0, 0.0, c0}).lambda;
    CHECK(l < prev);
    prev = l;
  }
  // Increasing in m at fixed friction.
  prev = 0.0;
  for (double m : {0.25, 1.0, 4.0, 16.0, 100.0}) {
    const double l = main_rate({m, 1.0, 0.0, 1.0}).lambda;
    CHECK(l > prev);
    prev = l;
  }
  // Unimodal in gamma with the peak at sqrt(m) + R.
  const std::vector<double> gammas = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> ls;
  for (double g : gammas) ls.push_back(main_rate({1.0, g, 0.0, 1.0}).lambda);
  CHECK(ls[0] < ls[1]);
  CHECK(ls[1] < ls[2]);
  CHECK(ls[2] > ls[3]);
  CHECK(ls[3] > ls[4]);
  // The symmetric points gamma and m/gamma give the same rate when R=0.
  CHECK(ls[1] == doctest::Approx(ls[3]).epsilon(1e-14));
  CHECK(ls[0] == doctest::Approx(ls[4]).epsilon(1e-14));
}

TEST_CASE("friction maximizer sits at sqrt(m) + R for random inputs") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> logu(-2.0, 2.0);
  for (int i = 0; i < 5; ++i) {
    const double m = std::pow(10.0, logu(rng));
    const double R = (i % 2 == 0) ? 0.0 : std::pow(10.0, logu(rng));
    const double c0 = std::pow(10.0, logu(rng));
    const double gstar = std::sqrt(m) + R;
    const double peak = main_rate({m, gstar, R, c0}).lambda;
    for (double delta : {1e-4, 1e-2, 0.1, 0.5}) {
      CHECK(peak >= main_rate({m, gstar * (1.0 + delta), R, c0}).lambda);
      CHECK(peak >= main_rate({m, gstar * (1.0 - delta), R, c0}).lambda);
    }
  }
}

TEST_CASE("small and large friction asymptotics") {
  // d lambda / d gamma -> 1 at gamma -> 0 when m = c0 = 1, R = 0.
  const double g = 1e-6;
  const double slope = main_rate({1.0, g, 0.0, 1.0}).lambda / g;
  CHECK(std::abs(slope - 1.0) <= 1e-5);

  // lambda * gamma -> m / c0 as gamma -> infinity.
  const double lg1 = main_rate({1.0, 1e6, 0.0, 1.0}).lambda * 1e6;
  CHECK(std::abs(lg1 - 1.0) <= 1e-5);
  const double lg2 = main_rate({4.0, 1e6, 0.0, 0.5}).lambda * 1e6;
  CHECK(std::abs(lg2 - 8.0) <= 8.0 * 1e-4);
}

TEST_CASE("huge friction does not overflow") {
  const RateResult r = main_rate({1.0, 1e12, 0.0, 1.0});
  CHECK(std::isfinite(r.lambda));
  CHECK(r.lambda > 0.0);
  CHECK(r.lambda * 1e12 == doctest::Approx(1.0).epsilon(1e-5));
  // The factored quotients survive even when gamma^2 itself would overflow.
  const RateResult extreme = main_rate({1.0, 1e300, 0.0, 1.0});
  CHECK(std::isfinite(extreme.lambda));
  CHECK(extreme.lambda > 0.0);
}

TEST_CASE("gamma_sweep preserves grid order and matches pointwise rates") {
  const auto single = gamma_sweep(1.0, 0.0, 1.0, {1.0});
  REQUIRE(single.size() == 1);
  CHECK(single[0].first == 1.0);
  CHECK(single[0].second == main_rate({1.0, 1.0, 0.0, 1.0}).lambda);

  const std::vector<double> grid = {3.0, 1.0, 2.0};
  const auto swept = gamma_sweep(0.5, 1.0, 2.0, grid);
  REQUIRE(swept.size() == 3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(swept[i].first == grid[i]);
    CHECK(swept[i].second == main_rate({0.5, grid[i], 1.0, 2.0}).lambda);
  }
  CHECK_THROWS_AS(gamma_sweep(1.0, 0.0, 1.0, {}), invalid_parameter_error);
}

TEST_CASE("chi-square bounds on KL and TV") {
  const auto zero = divergence_bounds(0.0);
  CHECK(zero.first == 0.0);
  CHECK(zero.second == 0.0);

  const auto one = divergence_bounds(1.0);
  CHECK(one.first == 1.0);
  CHECK(one.second == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  // TV saturates at 2.
  CHECK(divergence_bounds(2.0).second == 2.0);
  CHECK(divergence_bounds(8.0).second == 2.0);

  // Below saturation, KL is linear in chi2 and TV is a square root: a
  // chi-square decay rate 2*lambda shows up as TV decay rate lambda.
  const double a = 0.02;
  CHECK(divergence_bounds(4.0 * a).first ==
        doctest::Approx(4.0 * divergence_bounds(a).first).epsilon(1e-15));
  CHECK(divergence_bounds(4.0 * a).second ==
        doctest::Approx(2.0 * divergence_bounds(a).second).epsilon(1e-14));

  CHECK_THROWS_AS(divergence_bounds(-1e-9), invalid_parameter_error);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(divergence_bounds(nan), invalid_parameter_error);
}

}  // TEST_SUITE("rates")
