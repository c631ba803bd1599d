#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "subfield/rng.hpp"

namespace subfield {

enum class SubordinatorKind { Gamma, Poisson, CompoundPoissonApprox, StudentTUnitTime };

class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using LevyDensity = std::function<double(double)>;

// Truncated jump law of a compound-Poisson approximation. Nodes are
// log-spaced on [eps, y_max]; cdf[i] is the normalized jump-law mass below
// nodes[i]; log_density_mass[i] = y nu(y) at nodes[i] (the density of nu in
// s = log y), kept for quadratures against the truncated measure.
struct CpaTable {
  double eps = 0.0;
  double y_max = 0.0;
  double intensity = 0.0;      // nu([eps, inf))
  double small_jump_mean = 0.0;  // int_0^eps y nu(dy)
  std::vector<double> log_nodes;
  std::vector<double> cdf;
  std::vector<double> log_density_mass;
  LevyDensity base;
};

struct SubordinatorModel {
  SubordinatorKind kind = SubordinatorKind::Gamma;
  double gamma_shape = 1.0;  // a_G
  double gamma_rate = 1.0;   // b_G
  double poisson_lambda = 1.0;
  // Drift gamma of the triplet. For CPA this is the compensated drift
  // gamma + int_0^eps y nu(dy) actually used by the sampler.
  double drift = 0.0;
  double cpa_eps = 0.0;
  double t_dof = 3.0;
  std::shared_ptr<const CpaTable> cpa;

  static SubordinatorModel gamma(double shape, double rate);
  static SubordinatorModel poisson(double lambda);
  static SubordinatorModel student_t(double dof);

  // True for the monotone families (everything except StudentTUnitTime).
  bool is_subordinator() const { return kind != SubordinatorKind::StudentTUnitTime; }
  std::string describe() const;
};

// Compound-Poisson approximation of the subordinator with drift gamma and
// Levy density `base`: jumps >= eps kept exactly, smaller jumps replaced by
// their mean.
SubordinatorModel cpa_build(LevyDensity base, double gamma, double eps);

// Levy density of nu for the Gamma family (a y^-1 e^{-b y}); for CPA the
// truncated base density. Poisson has an atom, not a density.
double levy_density(const SubordinatorModel& model, double y);

double marginal_sample(RngStream& rng, const SubordinatorModel& model, double t);
double marginal_density(const SubordinatorModel& model, double t, double z);
double marginal_mean(const SubordinatorModel& model, double t);
double laplace_exponent(const SubordinatorModel& model, double u);

struct SubordinatorPath {
  std::vector<double> grid;
  std::vector<double> values;
  // Value at the largest grid time <= t (left neighbour of the skeleton).
  double at(double t) const;
};

SubordinatorPath path_sample(RngStream& rng, const SubordinatorModel& model, const std::vector<double>& grid);

}  // namespace subfield
