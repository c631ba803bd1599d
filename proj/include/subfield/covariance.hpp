#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "subfield/field.hpp"

namespace subfield {

struct QuadratureSpec {
  std::size_t nodes_per_axis = 256;
  double truncation_quantile = 1.0 - 1e-6;

  void validate() const;
};

// Discrete rule approximating E g(l(t)): sum_i weights[i] * g(nodes[i]).
// Weights sum to 1.
struct MarginalRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gamma: trapezoid in v = s^(1/m) on [0, Q(truncation)^(1/m)] with m chosen
// so the transformed density is flat at 0, weights self-normalized. For
// shapes far below 1 the top nodes thin out and accuracy drops to percent
// level at 64 nodes.
// Poisson: atoms up to the 1 - 1e-10 quantile. Degenerate CPA (no jumps):
// single atom at drift * t. t = 0: atom at 0.
MarginalRule marginal_rule(const SubordinatorModel& model, double t, const QuadratureSpec& spec);

// Stationary 2-D fields: integrates q~(|l_1 increment|, |l_2 increment|)
// over the increment laws. p == q returns q~(0, 0) without quadrature.
double cov_stationary_analytic(const FieldModel& model, const Point& p, const Point& q, const QuadratureSpec& spec = {});

// Density of (l(min(x, xp)), l(max(x, xp))) at (s, t) for a Gamma subordinator.
double joint_increment_density(const SubordinatorModel& model, double x, double xp, double s, double t);

// General 2-D covariance q_L(p, q) = E q_W(l(p), l(q)) with the increment
// substitution: each axis contributes independent (l(min), increment) pairs.
double cov_nonstationary_analytic(const FieldModel& model, const Point& p, const Point& q,
                                  const QuadratureSpec& spec = {64, 1.0 - 1e-6});

// Dispatches on stationarity.
double cov_analytic(const FieldModel& model, const Point& p, const Point& q);

// (1/M) sum of L(p) L(q) over M joint draws.
double cov_mc_estimate(RngStream& rng, const FieldModel& model, const Point& p, const Point& q, std::size_t M);

struct ConvergenceStudy {
  std::vector<std::size_t> sample_sizes;
  std::vector<double> rmse;
  std::size_t n_repeats = 0;
  double reference = 0.0;
  std::optional<double> slope;  // log-log slope; absent for a single repeat
};

// Repeat r at size index m uses rng.substream(r * sizes.size() + m), so the
// result does not depend on evaluation order.
ConvergenceStudy rmse_convergence_study(const RngStream& rng, const FieldModel& model, const Point& p, const Point& q,
                                        const std::vector<std::size_t>& sizes, std::size_t n_repeats);

}  // namespace subfield
