#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "subfield/linalg.hpp"
#include "subfield/spectral.hpp"

namespace subfield {

// (a_1, b_1, a_2, b_2, sigma) of a sqrt-scaled Matern-1.5 field (unit
// correlation length) subordinated by Gamma(a_1, b_1) x Gamma(a_2, b_2).
using FitParams = std::array<double, 5>;

enum class FitMode { CharFnFit, DensityFit };

struct FitProblem {
  std::vector<Point> points;
  FitMode mode = FitMode::CharFnFit;
  std::vector<std::vector<double>> grids;    // per point: xi nodes or z nodes
  std::vector<std::vector<double>> targets;  // per point: Re phi or density on the grid
  FitParams theta0{};

  void validate() const;
};

// The points P1..P4 used by the fitting experiments.
std::vector<Point> default_fit_points();

// Closed-form charfn for the parameter vector, continuous up to the boundary:
// a_k = 0 freezes axis k at 0 whatever b_k is; a_k > 0 with b_k = 0 sends
// the factor to 0 for xi != 0.
CharFn fit_model_charfn(const FitParams& theta, const Point& x);
FieldModel fit_field_model(const FitParams& theta);  // needs all a_k, b_k > 0

// Target Re phi on 64 uniform xi nodes in [0, 20].
FitProblem make_charfn_problem(const std::vector<Point>& points, const std::vector<CharFn>& targets,
                               const FitParams& theta0);
// Target densities on 128 nodes spanning the [1e-4, 1 - 1e-4] quantiles of
// each target law.
FitProblem make_density_problem(const std::vector<Point>& points, const std::vector<CharFn>& targets,
                                const FitParams& theta0);

std::vector<double> residual_charfn(const FitParams& theta, const FitProblem& problem);
// Each evaluation runs one Fourier inversion per point, which is roughly 50
// times the cost of a charfn residual. Counts heavy-tail inversions when
// heavy_tail_count is given.
std::vector<double> residual_density(const FitParams& theta, const FitProblem& problem,
                                     std::size_t* heavy_tail_count = nullptr);
std::vector<double> residual(const FitParams& theta, const FitProblem& problem);

struct FitResult {
  FitParams theta_hat{};
  double residual_norm = 0.0;
  std::size_t n_iterations = 0;
  bool converged = false;
  std::vector<double> trajectory;  // residual norm at theta0, then after each iteration
  std::string stop_reason;
};

using ResidualFn = std::function<std::vector<double>(const FitParams&)>;

// Levenberg-Marquardt in u with theta = u^2 componentwise. Forward-difference
// Jacobian with h_i = 1e-6 (1 + |u_i|). The damping term is lambda times the
// largest diagonal entry of J^T J on every coordinate; per-coordinate
// (Marquardt) scaling lets the (2,12,4,9,1) charfn fit run off to a ~ b ~ 1e7.
// lambda starts at 1e-3, grows by 10 on a rejected step and shrinks by 10 on
// an accepted one; a trial step with a non-finite residual counts as
// rejected. A non-finite residual at the start throws std::runtime_error.
// Stops at max_iter, a relative decrease below 1e-10, or a
// step below 1e-12.
//
// u = 0 in any (a_k, b_k) pair is a stationary point: a_k and b_k only enter
// through a_k log(1 + q / b_k), so probing either coordinate alone from
// (0, 0) moves nothing or jumps to the b_k = 0 limit.
FitResult lm_minimize(const ResidualFn& residual_fn, const FitParams& theta0, std::size_t max_iter);
// Same iteration started from u0 directly (lm_minimize uses u0 = sqrt(theta0)).
FitResult lm_minimize_u(const ResidualFn& residual_fn, const FitParams& u0, std::size_t max_iter);

// d r(u^2) / du by forward differences, r0 = r(u^2). Falls back to a backward
// difference when the forward probe is non-finite; throws std::runtime_error
// when both are.
Matrix forward_jacobian(const ResidualFn& residual_fn, const FitParams& u, const std::vector<double>& r0);

// max over points and grid nodes of |residual|.
double sup_error(const FitParams& theta, const FitProblem& problem);

}  // namespace subfield
