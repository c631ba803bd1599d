#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "subfield/special.hpp"
#include "subfield/stats.hpp"
#include "subfield/subordinator.hpp"

using namespace subfield;
using Catch::Approx;

namespace {

std::vector<double> marginals(RngStream& r, const SubordinatorModel& m, double t, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = marginal_sample(r, m, t);
  return v;
}

SubordinatorModel gamma_cpa(double a, double b, double eps) {
  return cpa_build([a, b](double y) { return a / y * std::exp(-b * y); }, 0.0, eps);
}

}  // namespace

TEST_CASE("marginal_sample examples", "[subordinator]") {
  RngStream r(41);
  const auto g = SubordinatorModel::gamma(4, 12);
  REQUIRE(marginal_sample(r, g, 0.0) == 0.0);
  REQUIRE(mean(marginals(r, g, 1.0, 1000000)) == Approx(1.0 / 3.0).margin(0.005));
  const auto p = SubordinatorModel::poisson(3);
  REQUIRE(mean(marginals(r, p, 2.0, 1000000)) == Approx(6.0).margin(0.02));
  const auto t = SubordinatorModel::student_t(3);
  REQUIRE_NOTHROW(marginal_sample(r, t, 1.0));
  REQUIRE_NOTHROW(marginal_sample(r, t, 2.0));
  REQUIRE_THROWS_AS(marginal_sample(r, t, 0.5), UnsupportedOperation);
  REQUIRE_THROWS_AS(SubordinatorModel::gamma(0, 1), std::invalid_argument);
}

TEST_CASE("path_sample", "[subordinator]") {
  RngStream r(42);
  const auto g = SubordinatorModel::gamma(4, 12);
  const auto single = path_sample(r, g, {0.0});
  REQUIRE(single.values == std::vector<double>{0.0});

  SECTION("endpoint of a two-step path matches the direct marginal") {
    std::vector<double> a(10000), b(10000);
    for (auto& v : a) v = path_sample(r, g, {0.0, 0.5, 1.0}).values.back();
    for (auto& v : b) v = marginal_sample(r, g, 1.0);
    REQUIRE_FALSE(ks_two_sample(a, b, 0.01).rejects());
  }
  SECTION("Poisson paths are integer and nondecreasing") {
    const auto p = SubordinatorModel::poisson(3);
    for (int i = 0; i < 100; ++i) {
      const auto path = path_sample(r, p, {0.1, 0.4, 0.9, 1.5, 3.0});
      for (std::size_t k = 0; k < path.values.size(); ++k) {
        REQUIRE(path.values[k] == std::round(path.values[k]));
        if (k > 0) REQUIRE(path.values[k] >= path.values[k - 1]);
      }
    }
  }
  SECTION("left-neighbour evaluation") {
    const auto path = path_sample(r, g, {0.2, 0.6, 1.0});
    REQUIRE(path.at(0.6) == path.values[1]);
    REQUIRE(path.at(0.99) == path.values[1]);
    REQUIRE(path.at(5.0) == path.values[2]);
  }
  REQUIRE_THROWS_AS(path_sample(r, g, {0.5, 0.5}), std::invalid_argument);
  REQUIRE_THROWS_AS(path_sample(r, SubordinatorModel::student_t(3), {0.5, 1.0}), UnsupportedOperation);
}

TEST_CASE("monotone paths over random grids", "[subordinator][property]") {
  RngStream r(43);
  const SubordinatorModel models[] = {SubordinatorModel::gamma(4, 12), SubordinatorModel::gamma(0.5, 10),
                                      SubordinatorModel::poisson(3), gamma_cpa(2, 2, 1e-3)};
  for (int i = 0; i < 1000; ++i) {
    const auto& m = models[i % 4];
    std::vector<double> grid;
    double t = 0.0;
    const int n = 2 + static_cast<int>(r.uniform() * 20);
    for (int k = 0; k < n; ++k) grid.push_back(t += r.uniform());
    const auto path = path_sample(r, m, grid);
    REQUIRE(path.values.front() >= 0.0);
    for (std::size_t k = 1; k < path.values.size(); ++k) REQUIRE(path.values[k] >= path.values[k - 1]);
  }
}

TEST_CASE("stationary increments", "[subordinator][property]") {
  RngStream r(44);
  const auto g = SubordinatorModel::gamma(4, 12);
  // Five tests at 1% each: one chance rejection is allowed, two or more
  // happen with probability about 1e-3 under the null.
  int rejections = 0;
  for (int pair = 0; pair < 5; ++pair) {
    const double x = 2.0 * r.uniform(), xp = x + 0.05 + 2.0 * r.uniform();
    std::vector<double> inc(10000), direct(10000);
    for (auto& v : inc) {
      const auto path = path_sample(r, g, {x, xp});
      v = path.values[1] - path.values[0];
    }
    for (auto& v : direct) v = marginal_sample(r, g, xp - x);
    rejections += ks_two_sample(inc, direct, 0.01).rejects();
  }
  REQUIRE(rejections <= 1);
}

TEST_CASE("marginal_density", "[subordinator]") {
  const auto g = SubordinatorModel::gamma(4, 12);
  REQUIRE(marginal_density(g, 1.0, -0.5) == 0.0);
  // normalization by trapezoid on a fine grid
  for (double t : {0.5, 1.0, 2.0}) {
    const double hi = gamma_quantile(4 * t, 12, 1 - 1e-12);
    const int n = 200000;
    const double h = hi / n;
    double s = 0.5 * (marginal_density(g, t, 0.0) + marginal_density(g, t, hi));
    for (int i = 1; i < n; ++i) s += marginal_density(g, t, i * h);
    REQUIRE(s * h == Approx(1.0).margin(1e-6));
  }
  const auto tdist = SubordinatorModel::student_t(3);
  const double ft0 = std::tgamma(2.0) / (std::sqrt(3.0 * M_PI) * std::tgamma(1.5));
  REQUIRE(marginal_density(tdist, 1.0, 0.0) == Approx(ft0).epsilon(1e-12));
  REQUIRE(ft0 == Approx(0.36755).margin(1e-5));
  REQUIRE(marginal_density(tdist, 1.0, 2.0) == Approx(ft0 * std::pow(1.0 + 4.0 / 3.0, -2.0)).epsilon(1e-12));
  const auto p = SubordinatorModel::poisson(3);
  REQUIRE(marginal_density(p, 1.0, 2.0) == Approx(4.5 * std::exp(-3.0)));
  REQUIRE(marginal_density(p, 1.0, 2.5) == 0.0);
  REQUIRE_THROWS_AS(marginal_density(gamma_cpa(4, 12, 1e-3), 1.0, 0.3), UnsupportedOperation);
}

TEST_CASE("density consistency of the samplers", "[subordinator]") {
  RngStream r(45);
  for (double t : {0.5, 1.0, 2.0}) {
    const auto s = marginals(r, SubordinatorModel::gamma(4, 12), t, 10000);
    REQUIRE_FALSE(ks_test(s, [t](double z) { return gamma_cdf(4 * t, 12, z); }, 0.05).rejects());
  }
  const auto s = marginals(r, SubordinatorModel::student_t(3), 1.0, 10000);
  REQUIRE_FALSE(ks_test(s, [](double z) { return student_t_cdf(3, z); }, 0.05).rejects());
}

TEST_CASE("laplace_exponent", "[subordinator]") {
  RngStream r(46);
  const auto g = SubordinatorModel::gamma(4, 12);
  const auto p = SubordinatorModel::poisson(3);
  const auto c = gamma_cpa(4, 12, 1e-4);
  REQUIRE(laplace_exponent(g, 0.0) == 0.0);
  REQUIRE(laplace_exponent(p, 0.0) == 0.0);
  REQUIRE(laplace_exponent(c, 0.0) == 0.0);
  REQUIRE(std::exp(-laplace_exponent(g, 6.0)) == Approx(16.0 / 81.0).epsilon(1e-14));
  REQUIRE(laplace_exponent(p, 800.0) == Approx(3.0).epsilon(1e-14));
  REQUIRE_THROWS_AS(laplace_exponent(SubordinatorModel::student_t(3), 1.0), UnsupportedOperation);
  // MC oracle for u = 6
  double acc = 0.0;
  for (int i = 0; i < 1000000; ++i) acc += std::exp(-6.0 * marginal_sample(r, g, 1.0));
  REQUIRE(acc / 1e6 == Approx(16.0 / 81.0).margin(0.003));

  SECTION("Laplace consistency over models, u and t") {
    for (const auto* m : {&g, &p, &c})
      for (double u : {0.1, 1.0, 10.0})
        for (double t : {0.5, 1.0, 2.0}) {
          const int n = 20000;
          double s = 0.0, s2 = 0.0;
          for (int i = 0; i < n; ++i) {
            const double e = std::exp(-u * marginal_sample(r, *m, t));
            s += e;
            s2 += e * e;
          }
          const double mu = s / n;
          const double se = std::sqrt(std::max(s2 / n - mu * mu, 1e-300) / n);
          INFO(m->describe() << " u=" << u << " t=" << t);
          REQUIRE(std::fabs(mu - std::exp(-t * laplace_exponent(*m, u))) <= 3.0 * se + 1e-12);
        }
  }
}

TEST_CASE("compound Poisson approximation", "[subordinator][cpa]") {
  RngStream r(47);
  SECTION("large eps leaves a pure drift") {
    const auto c = gamma_cpa(4, 12, 1e3);
    REQUIRE(c.cpa->intensity == 0.0);
    REQUIRE(c.drift == Approx(4.0 / 12.0).epsilon(1e-8));
    REQUIRE(marginal_sample(r, c, 2.0) == Approx(2.0 * c.drift).epsilon(1e-15));
  }
  SECTION("zero measure and drift gives the zero process") {
    const auto z = cpa_build([](double) { return 0.0; }, 0.0, 1e-3);
    REQUIRE(marginal_sample(r, z, 1.0) == 0.0);
  }
  SECTION("Gamma Levy measure reproduces the Gamma marginal") {
    const auto c = gamma_cpa(4, 12, 1e-4);
    const auto a = marginals(r, c, 1.0, 10000);
    const auto b = marginals(r, SubordinatorModel::gamma(4, 12), 1.0, 10000);
    REQUIRE(ks_two_sample_statistic(a, b) <= 0.03);
    REQUIRE(mean(marginals(r, c, 1.0, 200000)) == Approx(1.0 / 3.0).margin(0.01));
    REQUIRE(marginal_mean(c, 1.0) == Approx(1.0 / 3.0).epsilon(1e-6));
  }
  SECTION("non-integrable tail is rejected") {
    REQUIRE_THROWS_AS(cpa_build([](double y) { return 1.0 / y; }, 0.0, 1e-3), std::invalid_argument);
  }
}
