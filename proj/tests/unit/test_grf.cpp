#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <complex>
#include <numbers>

#include "subfield/field.hpp"
#include "subfield/grf.hpp"
#include "subfield/special.hpp"
#include "subfield/stats.hpp"

using namespace subfield;
using Catch::Approx;

TEST_CASE("bessel_k agrees with an independent implementation", "[special]") {
  for (double nu : {0.0, 0.3, 0.5, 1.0, 1.5, 2.0, 2.5, 3.7, 7.25})
    for (double x : {1e-3, 0.05, 0.5, 1.0, 1.999, 2.0, 2.001, 5.0, 20.0, 80.0}) {
      const double ref = boost::math::cyl_bessel_k(nu, x);
      INFO("nu=" << nu << " x=" << x);
      REQUIRE(bessel_k(nu, x) == Approx(ref).epsilon(1e-10));
    }
  REQUIRE_THROWS_AS(bessel_k(-1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(bessel_k(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("Matern half-integer closed forms match the Bessel route", "[special]") {
  for (double s : {1e-6, 0.01, 0.3, 1.0, 2.7, 10.0}) {
    const double u15 = 2.0 * s * std::sqrt(1.5) / 0.7;
    const double closed = 3.0 * (1.0 + u15) * std::exp(-u15);
    REQUIRE(matern_rho_bessel(s, 1.5, 0.7, 3.0) == Approx(closed).epsilon(1e-10));
    REQUIRE(matern_rho(s, 1.5, 0.7, 3.0) == Approx(closed).epsilon(1e-14));
    REQUIRE(matern_rho(s, 0.5, 0.7, 3.0) == Approx(matern_rho_bessel(s, 0.5, 0.7, 3.0)).epsilon(1e-10));
    REQUIRE(matern_rho(s, 2.5, 0.7, 3.0) == Approx(matern_rho_bessel(s, 2.5, 0.7, 3.0)).epsilon(1e-10));
  }
  // small-argument limit approaches sigma2 continuously
  REQUIRE(matern_rho_bessel(1e-9, 1.2, 1.0, 2.0) == Approx(2.0).epsilon(1e-6));
}

TEST_CASE("cov_eval examples", "[grf]") {
  const auto m = CovarianceModel::matern(2, 1.5, 1.0, 4.0);
  REQUIRE(cov_eval(m, Point{0.3, 0.4}, Point{0.3, 0.4}) == 4.0);
  const auto bs = CovarianceModel::brownian_sheet(2);
  REQUIRE(cov_eval(bs, Point{1, 1}, Point{2, 2}) == 1.0);
  REQUIRE(variance_fn(bs, Point{0.5, 3.0}) == 1.5);
  // sigma = 2, r = 1, s = 0.5 against a direct Bessel evaluation
  const double u = 2.0 * 0.5 * std::sqrt(1.5) / 1.0;
  const double ref = 4.0 * std::pow(2.0, 1.0 - 1.5) / std::tgamma(1.5) * std::pow(u, 1.5) * boost::math::cyl_bessel_k(1.5, u);
  REQUIRE(cov_eval(m, Point{0.0, 0.0}, Point{0.5, 0.0}) == Approx(ref).epsilon(1e-10));
  const auto sq = CovarianceModel::sqrt_scaled(2, 1.5, 1.0, 4.0);
  REQUIRE(variance_fn(sq, Point{1, 1}) == Approx(8.0));
  REQUIRE_THROWS_AS(cov_eval(m, Point{-1.0, 0.0}, Point{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("covariance symmetry, stationarity and PSD on random point sets", "[grf][property]") {
  RngStream r(31);
  const CovarianceModel models[] = {CovarianceModel::matern(2, 1.5, 0.5, 2.0), CovarianceModel::matern(2, 0.8, 2.0, 1.0),
                                    CovarianceModel::brownian_sheet(2), CovarianceModel::sqrt_scaled(2, 1.5, 1.0, 4.0)};
  for (const auto& m : models) {
    for (int set = 0; set < 100; ++set) {
      const std::size_t k = 1 + static_cast<std::size_t>(r.uniform() * 20);
      std::vector<Point> pts;
      for (std::size_t i = 0; i < k; ++i) pts.push_back({3.0 * r.uniform(), 3.0 * r.uniform()});
      const Matrix c = covariance_matrix(m, pts);
      for (std::size_t i = 0; i < k; ++i) {
        REQUIRE(c(i, i) >= 0.0);
        for (std::size_t j = 0; j < k; ++j) REQUIRE(cov_eval(m, pts[i], pts[j]) == cov_eval(m, pts[j], pts[i]));
      }
      REQUIRE_NOTHROW(mvn_factorize(c));
    }
  }
  const auto m = CovarianceModel::matern(2, 1.5, 0.5, 2.0);
  REQUIRE(cov_eval(m, Point{0.25, 0.5}, Point{1.0, 0.75}) == cov_eval(m, Point{1.25, 1.5}, Point{2.0, 1.75}));
}

TEST_CASE("grf_sample_at", "[grf]") {
  RngStream r(32);
  const auto m = CovarianceModel::matern(2, 1.5, 1.0, 4.0);
  SECTION("single point marginal") {
    std::vector<double> s(10000);
    for (auto& v : s) v = grf_sample_at(r, m, {{0.3, 0.2}})[0];
    REQUIRE_FALSE(ks_test(s, [](double z) { return normal_cdf(z / 2.0); }, 0.05).rejects());
  }
  SECTION("duplicate points coincide") {
    for (int i = 0; i < 100; ++i) {
      const auto v = grf_sample_at(r, m, {{0.5, 0.5}, {0.5, 0.5}});
      REQUIRE(std::fabs(v[0] - v[1]) <= 1e-4);
    }
  }
  SECTION("three-point sample covariance") {
    const auto unit = CovarianceModel::matern(2, 1.5, 1.0, 1.0);
    const std::vector<Point> pts{{0.0, 0.0}, {0.3, 0.1}, {1.0, 0.8}};
    const Matrix c = covariance_matrix(unit, pts);
    Matrix acc(3, 3);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto v = grf_sample_at(r, unit, pts);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) acc(a, b) += v[a] * v[b];
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) REQUIRE(acc(a, b) / n == Approx(c(a, b)).margin(0.02));
  }
  REQUIRE_THROWS_AS(grf_sample_at(r, m, {}), std::invalid_argument);
}

TEST_CASE("sqrt-scaled field has variance sigma^2 times the coordinate sum", "[grf]") {
  // -2 log(Re phi(xi)) / xi^2 recovers the variance from the empirical charfn.
  RngStream r(33);
  const auto m = CovarianceModel::sqrt_scaled(2, 1.5, 1.0, 4.0);
  const Point x{0.7, 0.5};
  const double xi = 0.5;
  double re = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) re += std::cos(xi * grf_sample_at(r, m, {x})[0]);
  re /= n;
  const double var_est = -2.0 * std::log(re) / (xi * xi);
  REQUIRE(var_est == Approx(4.0 * 1.2).epsilon(0.03));
}
