#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "subfield/fit.hpp"

using namespace subfield;
using Catch::Approx;

namespace {

const FitParams kTrue{3, 10, 3, 10, 2};

std::vector<CharFn> true_targets() {
  std::vector<CharFn> out;
  // same evaluation path as the model, so the true parameters give exactly 0
  for (const auto& p : default_fit_points()) out.push_back(fit_model_charfn(kTrue, p));
  return out;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

ResidualFn bind(const FitProblem& pr) {
  return [&pr](const FitParams& th) { return residual(th, pr); };
}

}  // namespace

TEST_CASE("fit model charfn", "[fit]") {
  const FitParams th{2, 12, 4, 9, 1};
  for (const auto& p : default_fit_points()) {
    const auto a = fit_model_charfn(th, p), b = charfn_levy_khinchin(fit_field_model(th), p);
    for (double xi = -15; xi <= 15; xi += 0.37) REQUIRE(a(xi).real() == Approx(b(xi).real()).margin(1e-14));
  }
  SECTION("boundary conventions") {
    const Point x{0.5, 0.5};
    REQUIRE(fit_model_charfn({0, 0, 0, 0, 1}, x)(3.0).real() == 1.0);
    REQUIRE(fit_model_charfn({0, 5, 0, 7, 2}, x)(3.0).real() == 1.0);
    REQUIRE(fit_model_charfn({1, 0, 0, 0, 1}, x)(3.0).real() == 0.0);
    REQUIRE(fit_model_charfn({1, 0, 0, 0, 1}, x)(0.0).real() == 1.0);
    REQUIRE(fit_model_charfn({3, 10, 3, 10, 0}, x)(3.0).real() == 1.0);
    // one axis frozen: only the other contributes
    const double one_axis = std::pow(1.0 + 4.0 * 9.0 / 20.0, -1.5);
    REQUIRE(fit_model_charfn({3, 10, 0, 0, 2}, x)(3.0).real() == Approx(one_axis).epsilon(1e-14));
  }
}

TEST_CASE("fit problems and residuals", "[fit]") {
  const auto pts = default_fit_points();
  const auto tg = true_targets();
  const auto cp = make_charfn_problem(pts, tg, {2, 12, 4, 9, 1});
  REQUIRE(cp.grids.size() == 4);
  REQUIRE(cp.grids[0].size() == 64);
  REQUIRE(cp.grids[0].back() == 20.0);
  REQUIRE(norm2(residual(kTrue, cp)) == 0.0);
  REQUIRE(norm2(residual({3, 10, 3, 10, 4}, cp)) > norm2(residual({3, 10, 3, 10, 2.5}, cp)));
  REQUIRE(norm2(residual({3, 10, 3, 10, 2.5}, cp)) > 0.0);
  // phi depends on sigma^2 / b only
  REQUIRE(norm2(residual({3, 40, 3, 40, 4}, cp)) < 1e-14);

  const auto dp = make_density_problem(pts, tg, {2, 12, 4, 9, 1});
  REQUIRE(dp.grids[3].size() == 128);
  std::size_t heavy = 0;
  REQUIRE(norm2(residual_density(kTrue, dp, &heavy)) < 1e-12);
  // at P1 the shapes sum to 0.6, the density has an integrable spike at 0 and
  // the charfn decays like |xi|^-1.2: the only slow-decay inversion
  REQUIRE(heavy == 1);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const auto f = sum_representation_density(fit_field_model(kTrue), pts[j], dp.grids[j]);
    for (std::size_t k = 0; k < f.size(); ++k) REQUIRE(f[k] == Approx(dp.targets[j][k]).margin(1e-12));
  }
  // the grid spans the bulk of the law: density small at both ends
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double peak = *std::max_element(dp.targets[j].begin(), dp.targets[j].end());
    REQUIRE(dp.targets[j].front() < 0.01 * peak);
    REQUIRE(dp.targets[j].back() < 0.01 * peak);
  }

  FitProblem bad = cp;
  bad.grids.pop_back();
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(make_charfn_problem(pts, tg, {-1, 1, 1, 1, 1}), std::invalid_argument);
  REQUIRE_THROWS_AS(residual_density(kTrue, cp), std::invalid_argument);
}

TEST_CASE("lm_minimize mechanics", "[fit]") {
  const auto pts = default_fit_points();
  const auto cp = make_charfn_problem(pts, true_targets(), {2, 12, 4, 9, 1});

  SECTION("zero residual at the start takes no step") {
    // sqrt(10)^2 != 10 in floating point, so the start carries a rounding
    // residual that no step can improve on
    const auto r = lm_minimize(bind(cp), kTrue, 50);
    REQUIRE(r.converged);
    REQUIRE(r.trajectory.size() == 1);
    REQUIRE(r.theta_hat[1] == Approx(10.0).epsilon(1e-15));
    // exact squares reproduce theta0 bit for bit: no iteration at all
    const FitParams sq{4, 9, 1, 16, 1};
    std::vector<CharFn> tg;
    for (const auto& p : pts) tg.push_back(fit_model_charfn(sq, p));
    const auto ps = make_charfn_problem(pts, tg, sq);
    const auto z = lm_minimize(bind(ps), sq, 50);
    REQUIRE(z.n_iterations == 0);
    REQUIRE(z.stop_reason == "zero residual");
    REQUIRE(z.theta_hat == sq);
  }
  SECTION("trajectory is nonincreasing and parameters stay nonnegative") {
    const auto r = lm_minimize(bind(cp), {1, 24, 28, 1, 1}, 50);
    REQUIRE(r.trajectory.size() >= 2);
    for (std::size_t k = 1; k < r.trajectory.size(); ++k) REQUIRE(r.trajectory[k] <= r.trajectory[k - 1]);
    for (double t : r.theta_hat) REQUIRE(t >= 0.0);
    REQUIRE(r.residual_norm == Approx(r.trajectory.back()).margin(1e-15));
  }
  SECTION("forward differences agree with central differences") {
    const FitParams u{std::sqrt(2.0), std::sqrt(12.0), 2.0, 3.0, 1.0};
    FitParams th;
    for (int i = 0; i < 5; ++i) th[i] = u[i] * u[i];
    const auto fn = bind(cp);
    const auto j = forward_jacobian(fn, u, fn(th));
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double h = 1e-4;
      FitParams up = u, dn = u;
      up[i] += h;
      dn[i] -= h;
      FitParams tu, td;
      for (int k = 0; k < 5; ++k) {
        tu[k] = up[k] * up[k];
        td[k] = dn[k] * dn[k];
      }
      const auto ru = fn(tu), rd = fn(td);
      for (std::size_t k = 0; k < ru.size(); ++k) {
        const double c = (ru[k] - rd[k]) / (2 * h);
        worst = std::max(worst, std::fabs(j(k, i) - c));
        scale = std::max(scale, std::fabs(c));
      }
    }
    REQUIRE(worst <= 1e-4 * scale);
  }
  SECTION("sign of u0 does not matter") {
    const FitParams u{std::sqrt(2.0), std::sqrt(12.0), 2.0, 3.0, 1.0};
    const FitParams flipped{-u[0], u[1], -u[2], -u[3], -u[4]};
    const auto a = lm_minimize_u(bind(cp), u, 50), b = lm_minimize_u(bind(cp), flipped, 50);
    REQUIRE(sup_error(a.theta_hat, cp) <= 1e-3);
    REQUIRE(sup_error(b.theta_hat, cp) <= 1e-3);
    for (double t : b.theta_hat) REQUIRE(t >= 0.0);
  }
  SECTION("non-finite residual at the start aborts") {
    const ResidualFn nan_fn = [](const FitParams&) {
      return std::vector<double>{std::numeric_limits<double>::quiet_NaN()};
    };
    REQUIRE_THROWS_AS(lm_minimize(nan_fn, kTrue, 5), std::runtime_error);
  }
  SECTION("linear least squares converges to the exact solution") {
    // r = theta - c, minimised at theta = c
    const ResidualFn lin = [](const FitParams& th) {
      return std::vector<double>{th[0] - 1, th[1] - 4, th[2] - 9, th[3] - 0.25, th[4] - 2};
    };
    const auto r = lm_minimize(lin, {2, 2, 2, 2, 2}, 200);
    REQUIRE(r.converged);
    REQUIRE(r.residual_norm < 1e-8);
  }
}

TEST_CASE("charfn fits from the reference initializations", "[fit]") {
  const auto pts = default_fit_points();
  const auto tg = true_targets();
  for (const FitParams& t0 : {FitParams{2, 12, 4, 9, 1}, FitParams{1, 24, 28, 1, 1}}) {
    const auto pr = make_charfn_problem(pts, tg, t0);
    const auto r = lm_minimize(bind(pr), t0, 50);
    REQUIRE(sup_error(r.theta_hat, pr) <= 1e-3);
    // the identifiable combinations a_k and b_k / sigma^2 are recovered
    REQUIRE(r.theta_hat[0] == Approx(3.0).epsilon(1e-3));
    REQUIRE(r.theta_hat[2] == Approx(3.0).epsilon(1e-3));
    REQUIRE(r.theta_hat[1] / (r.theta_hat[4] * r.theta_hat[4]) == Approx(2.5).epsilon(1e-3));
  }
  SECTION("u = 0 in the Gamma pairs is a stationary point") {
    const FitParams t0{0, 0, 0, 0, 1};
    const auto pr = make_charfn_problem(pts, tg, t0);
    const auto r = lm_minimize(bind(pr), t0, 50);
    REQUIRE(sup_error(r.theta_hat, pr) > 0.5);
    REQUIRE(r.theta_hat[1] == 0.0);
    REQUIRE(r.theta_hat[3] == 0.0);
  }
}

TEST_CASE("density fits over five iterations", "[fit][slow]") {
  const auto pts = default_fit_points();
  const auto tg = true_targets();
  const FitParams near{2, 12, 4, 9, 1}, far{1, 24, 28, 1, 1};
  const auto pn = make_density_problem(pts, tg, near);
  REQUIRE(sup_error(lm_minimize(bind(pn), near, 5).theta_hat, pn) <= 5e-2);
  const auto pf = make_density_problem(pts, tg, far);
  REQUIRE(sup_error(lm_minimize(bind(pf), far, 5).theta_hat, pf) > 0.1);
}
