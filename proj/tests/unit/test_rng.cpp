#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "subfield/linalg.hpp"
#include "subfield/rng.hpp"
#include "subfield/special.hpp"
#include "subfield/stats.hpp"

using namespace subfield;
using Catch::Approx;

namespace {

std::vector<double> draws(std::size_t n, auto&& f) {
  std::vector<double> v(n);
  for (auto& x : v) x = f();
  return v;
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct", "[rng]") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
    differs_c |= x != c.next_u64();
    differs_d |= x != d.next_u64();
  }
  REQUIRE(differs_c);
  REQUIRE(differs_d);

  RngStream p(1, 0);
  const RngStream s1 = p.substream(3), s2 = p.substream(3);
  REQUIRE(s1.stream_id() == s2.stream_id());
  REQUIRE(p.substream(3).stream_id() != p.substream(4).stream_id());
}

TEST_CASE("uniform lies in the open unit interval", "[rng]") {
  RngStream r(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("substreams are uncorrelated", "[rng]") {
  RngStream root(2024);
  RngStream a = root.substream(0), b = root.substream(1);
  const std::size_t n = 100000;
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.normal(), y = b.normal();
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  const double dn = static_cast<double>(n);
  const double corr = (sxy / dn - sx * sy / (dn * dn)) /
                      std::sqrt((sxx / dn - sx * sx / (dn * dn)) * (syy / dn - sy * sy / (dn * dn)));
  REQUIRE(std::fabs(corr) < 0.01);
}

TEST_CASE("sample_normal", "[rng]") {
  RngStream r(11);
  REQUIRE(sample_normal(r, 0.0, 0.0) == 0.0);
  REQUIRE(sample_normal(r, 2.5, 0.0) == 2.5);
  REQUIRE_THROWS_AS(sample_normal(r, 0.0, -1.0), std::invalid_argument);
  const auto m = draws(1000000, [&] { return sample_normal(r, 3.0, 2.0); });
  REQUIRE(mean(m) == Approx(3.0).margin(0.01));
  const auto v = draws(1000000, [&] { return sample_normal(r, 0.0, 2.0); });
  REQUIRE(variance(v) == Approx(4.0).margin(0.05));
  SECTION("normal CDF agreement") {
    const auto s = draws(10000, [&] { return r.normal(); });
    REQUIRE_FALSE(ks_test(s, normal_cdf, 0.05).rejects());
  }
}

TEST_CASE("sample_gamma", "[rng]") {
  RngStream r(12);
  REQUIRE_THROWS_AS(sample_gamma(r, 0.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(sample_gamma(r, 1.0, -1.0), std::invalid_argument);
  const auto g = draws(1000000, [&] { return sample_gamma(r, 4.0, 12.0); });
  REQUIRE(mean(g) == Approx(1.0 / 3.0).margin(0.005));
  REQUIRE(variance(g) == Approx(4.0 / 144.0).margin(0.002));
  for (int i = 0; i < 100000; ++i) REQUIRE(sample_gamma(r, 0.5, 1.0) > 0.0);
  SECTION("small shape matches the Gamma cdf") {
    const auto s = draws(10000, [&] { return sample_gamma(r, 0.3, 2.0); });
    REQUIRE_FALSE(ks_test(s, [](double z) { return gamma_cdf(0.3, 2.0, z); }, 0.05).rejects());
  }
}

TEST_CASE("sample_poisson", "[rng]") {
  RngStream r(13);
  REQUIRE(sample_poisson(r, 0.0) == 0u);
  REQUIRE_THROWS_AS(sample_poisson(r, -1.0), std::invalid_argument);
  std::size_t zeros = 0;
  double s = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const auto k = sample_poisson(r, 3.0);
    s += static_cast<double>(k);
    zeros += k == 0;
  }
  REQUIRE(s / n == Approx(3.0).margin(0.01));
  REQUIRE(static_cast<double>(zeros) / n == Approx(std::exp(-3.0)).margin(0.002));
  SECTION("large intensity branch") {
    double t = 0.0, t2 = 0.0;
    for (int i = 0; i < 200000; ++i) {
      const double k = static_cast<double>(sample_poisson(r, 50.0));
      t += k;
      t2 += k * k;
    }
    const double m = t / 200000.0;
    REQUIRE(m == Approx(50.0).margin(0.1));
    REQUIRE(t2 / 200000.0 - m * m == Approx(50.0).margin(1.0));
  }
}

TEST_CASE("sample_student_t", "[rng]") {
  RngStream r(14);
  REQUIRE_THROWS_AS(sample_student_t(r, 0.0), std::invalid_argument);
  const auto t = draws(1000000, [&] { return sample_student_t(r, 3.0); });
  REQUIRE(median(t) == Approx(0.0).margin(0.01));
  REQUIRE(variance(t) == Approx(3.0).margin(0.2));
  std::size_t below = 0;
  for (double v : t) below += v <= 0.0;
  REQUIRE(static_cast<double>(below) / t.size() == Approx(0.5).margin(0.005));
  const std::span<const double> head(t.data(), 10000);
  REQUIRE_FALSE(ks_test(head, [](double z) { return student_t_cdf(3.0, z); }, 0.05).rejects());
}

TEST_CASE("mvn_factorize", "[mvn]") {
  SECTION("identity") {
    const auto f = mvn_factorize(Matrix::identity(3));
    REQUIRE(f.jitter_used == 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) REQUIRE(f.lower(i, j) == (i == j ? 1.0 : 0.0));
  }
  SECTION("diagonal") {
    Matrix c(2, 2);
    c(0, 0) = 4;
    c(1, 1) = 9;
    const auto f = mvn_factorize(c);
    REQUIRE(f.lower(0, 0) == 2.0);
    REQUIRE(f.lower(1, 1) == 3.0);
    REQUIRE(f.lower(1, 0) == 0.0);
  }
  SECTION("Matern-1.5 on collinear points recomposes") {
    const double xs[5] = {0.0, 0.1, 0.2, 0.3, 0.4};
    Matrix c(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) c(i, j) = matern_rho(std::fabs(xs[i] - xs[j]), 1.5, 1.0, 4.0);
    const auto f = mvn_factorize(c);
    Matrix diff(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        double s = 0.0;
        for (int k = 0; k < 5; ++k) s += f.lower(i, k) * f.lower(j, k);
        diff(i, j) = s - c(i, j) - (i == j ? f.jitter_used : 0.0);
      }
    REQUIRE(frobenius_norm(diff) / frobenius_norm(c) <= 1e-8);
    REQUIRE(f.jitter_used <= 1e-6 * 4.0);
  }
  SECTION("rank deficient needs jitter, indefinite fails") {
    Matrix c(2, 2, 1.0);
    const auto f = mvn_factorize(c);
    REQUIRE(f.jitter_used <= 1e-8);
    Matrix bad(2, 2);
    bad(0, 0) = 1;
    bad(1, 1) = 1;
    bad(0, 1) = bad(1, 0) = 2;
    REQUIRE_THROWS_AS(mvn_factorize(bad), FactorizationError);
  }
  SECTION("zero variance rows") {
    Matrix c(2, 2);
    c(1, 1) = 2.0;
    const auto f = mvn_factorize(c);
    REQUIRE(f.lower(0, 0) == 0.0);
    REQUIRE(f.lower(1, 1) == Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("mvn_sample", "[mvn]") {
  RngStream r(21);
  SECTION("zero standard deviation returns the mean") {
    Matrix c(2, 2);
    const auto f = mvn_factorize(c);
    const auto x = mvn_sample(r, {1.5, -2.0}, f);
    REQUIRE(x[0] == 1.5);
    REQUIRE(x[1] == -2.0);
  }
  SECTION("dimension mismatch") {
    const auto f = mvn_factorize(Matrix::identity(2));
    REQUIRE_THROWS_AS(mvn_sample(r, {0.0}, f), std::invalid_argument);
  }
  SECTION("one-dimensional case equals sample_normal") {
    Matrix c(1, 1);
    c(0, 0) = 4.0;
    const auto f = mvn_factorize(c);
    RngStream a(99), b(99);
    for (int i = 0; i < 10; ++i) REQUIRE(mvn_sample(a, {1.0}, f)[0] == sample_normal(b, 1.0, 2.0));
  }
  SECTION("sample covariance converges at root-n rate") {
    Matrix c(2, 2, 0.5);
    c(0, 0) = c(1, 1) = 1.0;
    const auto f = mvn_factorize(c);
    const std::vector<double> zero{0.0, 0.0};
    std::vector<double> ns, rmse;
    for (std::size_t n : {100u, 1000u, 10000u}) {
      double se = 0.0;
      for (int rep = 0; rep < 50; ++rep) {
        double s01 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto x = mvn_sample(r, zero, f);
          s01 += x[0] * x[1];
        }
        se += std::pow(s01 / static_cast<double>(n) - 0.5, 2);
      }
      ns.push_back(static_cast<double>(n));
      rmse.push_back(std::sqrt(se / 50.0));
    }
    const double slope = loglog_slope(ns, rmse);
    REQUIRE(slope > -0.65);
    REQUIRE(slope < -0.35);
    std::vector<double> a(100000), b(100000);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto x = mvn_sample(r, zero, f);
      a[i] = x[0];
      b[i] = x[1];
    }
    double s01 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s01 += a[i] * b[i];
    REQUIRE(variance(a) == Approx(1.0).margin(0.02));
    REQUIRE(variance(b) == Approx(1.0).margin(0.02));
    REQUIRE(s01 / 100000.0 == Approx(0.5).margin(0.02));
  }
}

TEST_CASE("compensated summation", "[rng]") {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  REQUIRE(compensated_sum(v) == 2.0);
}
