#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "subfield/field.hpp"
#include "subfield/stats.hpp"

namespace subfield {

// E|Z|^p for Z ~ N(0, sigma^2): C_p sigma^p with C_p = 2^(p/2) Gamma((p+1)/2) / sqrt(pi).
double gaussian_abs_moment(double p, double sigma);

constexpr double kNoTailBound = std::numeric_limits<double>::infinity();

// sigma_W(x) <= sum_j c_j x^alpha_j and f_i(z) <= C |z|^-eta_i for z >= K.
// The tail threshold K and constant C do not enter the bound.
struct MomentBoundInput {
  std::vector<std::vector<double>> alphas;  // N rows of d exponents
  std::vector<double> etas;                 // d decay rates, kNoTailBound for superpolynomial decay
  std::vector<double> coefficients;         // c_j
};

// min over alpha_i^(j) != 0 of (eta_i - 1) / alpha_i^(j); +inf when no
// exponent is nonzero or every relevant eta is unbounded.
double moment_bound(const MomentBoundInput& input);

// Brownian sheet: one term with alpha = (1/2, ..., 1/2). Sqrt-scaled fields:
// d terms alpha_j = e_j / 2. Stationary fields: no nonzero exponent.
// Gamma, Poisson and CPA decay faster than any power; Student-t with nu
// degrees of freedom has eta = nu + 1.
MomentBoundInput moment_bound_input(const FieldModel& model);

struct MomentTrace {
  double p = 0.0;
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> estimates;  // [run][size index]: mean of |L(x)|^p over the first sizes[k] draws
};

// One sample stream per run (rng.substream(run)) shared by every p.
std::vector<MomentTrace> moment_traces(const RngStream& rng, const FieldModel& model, const Point& x,
                                       const std::vector<double>& ps, const std::vector<std::size_t>& sizes,
                                       std::size_t n_runs);
MomentTrace moment_trace(const RngStream& rng, const FieldModel& model, const Point& x, double p,
                         const std::vector<std::size_t>& sizes, std::size_t n_runs);

// max/min - 1 of the final estimates across runs.
double trace_spread(const MomentTrace& trace);

struct BootstrapConfig {
  double subsample_exponent = 0.9;  // m = floor(n^beta)
  std::size_t n_resamples = 1000;
  double alpha_s = 0.01;

  void validate(std::size_t n) const;
  std::size_t subsample_size(std::size_t n) const;
};

// m-out-of-n bootstrap test of H0: E|X|^p < inf. With Y = |X|^(p/2),
// E|X|^p < inf is E Y^2 < inf, the condition under which studentized
// subsample means T_b = sqrt(m) (mean*_b - mean_n) / sd*_b are
// asymptotically standard normal. The statistic is the KS distance of the
// B values T_b to N(0,1); H0 is rejected when it exceeds c(alpha_s)/sqrt(B).
// More than 1% of resamples with zero spread gives Inconclusive.
TestReport bootstrap_moment_test(RngStream& rng, const std::vector<double>& samples, double p,
                                 const BootstrapConfig& cfg);

// Same test for several p on one set of resample indices.
std::vector<TestReport> bootstrap_moment_tests(RngStream& rng, const std::vector<double>& samples,
                                               const std::vector<double>& ps, const BootstrapConfig& cfg);

}  // namespace subfield
