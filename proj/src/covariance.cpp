#include "subfield/covariance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "subfield/special.hpp"
#include "subfield/stats.hpp"

namespace subfield {

void QuadratureSpec::validate() const {
  if (nodes_per_axis < 16) throw std::invalid_argument("QuadratureSpec: need at least 16 nodes per axis");
  if (!(truncation_quantile >= 1.0 - 1e-6 && truncation_quantile < 1.0))
    throw std::invalid_argument("QuadratureSpec: truncation quantile must lie in [1-1e-6, 1)");
}

MarginalRule marginal_rule(const SubordinatorModel& model, double t, const QuadratureSpec& spec) {
  spec.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("marginal_rule: negative time");
  if (t == 0.0) return {{0.0}, {1.0}};

  switch (model.kind) {
    case SubordinatorKind::Gamma: {
      const double k = model.gamma_shape * t, b = model.gamma_rate;
      // s = v^m with m*k >= 4, so the density in v behaves like v^(mk-1):
      // it and its first derivative vanish at the origin even when the
      // s-density is singular there, which keeps the trapezoid at O(h^4).
      const double m = std::max(1.0, 4.0 / k);
      const double vmax = std::pow(gamma_quantile(k, b, spec.truncation_quantile), 1.0 / m);
      const std::size_t n = spec.nodes_per_axis;
      const double h = vmax / static_cast<double>(n - 1);
      MarginalRule r;
      r.nodes.resize(n);
      r.weights.resize(n);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = h * static_cast<double>(i);
        const double s = std::pow(v, m);
        double w = 0.0;
        if (i > 0) {
          // log of f(v^m) m v^(m-1), kept in log v so tiny shapes (s
          // underflowing to 0) still get finite weights.
          const double lv = std::log(v);
          w = std::exp(k * std::log(b) - std::lgamma(k) + std::log(m) + (m * k - 1.0) * lv - b * s);
          if (i + 1 == n) w *= 0.5;
        }
        r.nodes[i] = s;
        r.weights[i] = w;
        total += w;
      }
      for (auto& w : r.weights) w /= total;
      return r;
    }
    case SubordinatorKind::Poisson: {
      const double lam = model.poisson_lambda * t;
      const unsigned long kmax = poisson_quantile(lam, 1.0 - 1e-10);
      MarginalRule r;
      double total = 0.0;
      for (unsigned long k = 0; k <= kmax; ++k) {
        r.nodes.push_back(static_cast<double>(k));
        r.weights.push_back(poisson_pmf(lam, k));
        total += r.weights.back();
      }
      for (auto& w : r.weights) w /= total;
      return r;
    }
    case SubordinatorKind::CompoundPoissonApprox:
      if (model.cpa && model.cpa->intensity > 0.0)
        throw UnsupportedOperation("marginal_rule: compound Poisson approximation with jumps has no tabulated law");
      return {{model.drift * t}, {1.0}};
    case SubordinatorKind::StudentTUnitTime:
      break;
  }
  throw UnsupportedOperation("marginal_rule: not a subordinator");
}

namespace {

void require_planar(const FieldModel& model, const Point& p, const Point& q) {
  model.validate();
  if (model.dim() != 2) throw std::invalid_argument("covariance formulas are implemented for d = 2");
  model.check_point(p);
  model.check_point(q);
}

// Per-axis list of (l(p_k), l(q_k)) value pairs with weights.
struct AxisPairs {
  std::vector<double> a, b, w;
};

AxisPairs axis_pairs(const SubordinatorModel& sub, double x, double xp, const QuadratureSpec& spec) {
  AxisPairs out;
  if (x == xp) {
    const auto r = marginal_rule(sub, x, spec);
    out.a = r.nodes;
    out.b = r.nodes;
    out.w = r.weights;
    return out;
  }
  const auto base = marginal_rule(sub, std::min(x, xp), spec);
  const auto inc = marginal_rule(sub, std::fabs(x - xp), spec);
  const bool p_first = x < xp;
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    if (base.weights[i] == 0.0) continue;
    for (std::size_t j = 0; j < inc.nodes.size(); ++j) {
      if (inc.weights[j] == 0.0) continue;
      const double lo = base.nodes[i], hi = base.nodes[i] + inc.nodes[j];
      out.a.push_back(p_first ? lo : hi);
      out.b.push_back(p_first ? hi : lo);
      out.w.push_back(base.weights[i] * inc.weights[j]);
    }
  }
  return out;
}

}  // namespace

double cov_stationary_analytic(const FieldModel& model, const Point& p, const Point& q, const QuadratureSpec& spec) {
  require_planar(model, p, q);
  if (!model.cov.stationary()) throw std::invalid_argument("cov_stationary_analytic: covariance is not stationary");
  const std::array<double, 2> origin{0.0, 0.0};
  if (p == q) return cov_eval(model.cov, origin, origin);

  const auto r1 = marginal_rule(model.subs[0], std::fabs(p[0] - q[0]), spec);
  const auto r2 = marginal_rule(model.subs[1], std::fabs(p[1] - q[1]), spec);
  KahanAccumulator acc;
  for (std::size_t i = 0; i < r1.nodes.size(); ++i) {
    if (r1.weights[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < r2.nodes.size(); ++j) {
      const std::array<double, 2> u{r1.nodes[i], r2.nodes[j]};
      row += r2.weights[j] * cov_eval(model.cov, origin, u);
    }
    acc.add(r1.weights[i] * row);
  }
  return acc.value();
}

double joint_increment_density(const SubordinatorModel& model, double x, double xp, double s, double t) {
  if (x == xp) throw std::invalid_argument("joint_increment_density: x == xp, use the marginal density");
  if (!(x > 0.0 && xp > 0.0)) throw std::invalid_argument("joint_increment_density: times must be positive");
  if (!model.is_subordinator()) throw UnsupportedOperation("joint_increment_density: not a subordinator");
  if (t < s) return 0.0;
  return marginal_density(model, std::min(x, xp), s) * marginal_density(model, std::fabs(xp - x), t - s);
}

double cov_nonstationary_analytic(const FieldModel& model, const Point& p, const Point& q, const QuadratureSpec& spec) {
  require_planar(model, p, q);
  const auto ax = axis_pairs(model.subs[0], p[0], q[0], spec);
  const auto ay = axis_pairs(model.subs[1], p[1], q[1], spec);
  KahanAccumulator acc;
  for (std::size_t i = 0; i < ax.w.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ay.w.size(); ++j) {
      const std::array<double, 2> u{ax.a[i], ay.a[j]};
      const std::array<double, 2> v{ax.b[i], ay.b[j]};
      row += ay.w[j] * cov_eval(model.cov, u, v);
    }
    acc.add(ax.w[i] * row);
  }
  return acc.value();
}

double cov_analytic(const FieldModel& model, const Point& p, const Point& q) {
  return model.cov.stationary() ? cov_stationary_analytic(model, p, q) : cov_nonstationary_analytic(model, p, q);
}

double cov_mc_estimate(RngStream& rng, const FieldModel& model, const Point& p, const Point& q, std::size_t M) {
  if (M == 0) throw std::invalid_argument("cov_mc_estimate: M must be positive");
  FieldSampler sampler(model, {p, q});
  std::vector<double> v;
  KahanAccumulator acc;
  for (std::size_t i = 0; i < M; ++i) {
    sampler.draw(rng, v);
    acc.add(v[0] * v[1]);
  }
  return acc.value() / static_cast<double>(M);
}

ConvergenceStudy rmse_convergence_study(const RngStream& rng, const FieldModel& model, const Point& p, const Point& q,
                                        const std::vector<std::size_t>& sizes, std::size_t n_repeats) {
  if (sizes.empty() || n_repeats == 0) throw std::invalid_argument("rmse_convergence_study: empty design");
  for (std::size_t m = 1; m < sizes.size(); ++m)
    if (sizes[m] <= sizes[m - 1]) throw std::invalid_argument("rmse_convergence_study: sizes must increase");

  ConvergenceStudy study;
  study.sample_sizes = sizes;
  study.n_repeats = n_repeats;
  study.reference = cov_analytic(model, p, q);
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    double sq = 0.0;
    for (std::size_t r = 0; r < n_repeats; ++r) {
      RngStream sub = rng.substream(r * sizes.size() + m);
      const double e = cov_mc_estimate(sub, model, p, q, sizes[m]) - study.reference;
      sq += e * e;
    }
    study.rmse.push_back(std::sqrt(sq / static_cast<double>(n_repeats)));
  }
  const bool all_positive = std::all_of(study.rmse.begin(), study.rmse.end(), [](double e) { return e > 0.0; });
  if (n_repeats > 1 && sizes.size() > 1 && all_positive) {
    std::vector<double> ms(sizes.begin(), sizes.end());
    study.slope = loglog_slope(ms, study.rmse);
  }
  return study;
}

}  // namespace subfield
