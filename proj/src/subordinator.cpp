#include "subfield/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "subfield/special.hpp"

namespace subfield {

namespace {

constexpr std::size_t kCpaNodes = 2048;
constexpr int kSubsteps = 8;

// Integral of g(s) over [s0, s1] by composite trapezoid with n panels.
double trap(const std::function<double(double)>& g, double s0, double s1, int n) {
  const double h = (s1 - s0) / n;
  double acc = 0.5 * (g(s0) + g(s1));
  for (int i = 1; i < n; ++i) acc += g(s0 + i * h);
  return acc * h;
}

bool is_integer_time(double t) { return std::fabs(t - std::round(t)) <= 1e-12 * std::max(1.0, t); }

double student_t_time(RngStream& rng, double dof, double t) {
  if (t == 0.0) return 0.0;
  if (!is_integer_time(t))
    throw UnsupportedOperation("Student-t process is only defined at integer times");
  const long n = std::lround(t);
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += sample_student_t(rng, dof);
  return s;
}

double cpa_sample(RngStream& rng, const SubordinatorModel& m, double t) {
  const CpaTable& tab = *m.cpa;
  double v = m.drift * t;
  if (tab.intensity <= 0.0) return v;
  const std::uint64_t n = sample_poisson(rng, tab.intensity * t);
  for (std::uint64_t k = 0; k < n; ++k) {
    const double u = rng.uniform();
    const auto it = std::lower_bound(tab.cdf.begin(), tab.cdf.end(), u);
    std::size_t i = static_cast<std::size_t>(it - tab.cdf.begin());
    if (i == 0) i = 1;
    if (i >= tab.cdf.size()) i = tab.cdf.size() - 1;
    const double c0 = tab.cdf[i - 1], c1 = tab.cdf[i];
    const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    v += std::exp(tab.log_nodes[i - 1] + w * (tab.log_nodes[i] - tab.log_nodes[i - 1]));
  }
  return v;
}

}  // namespace

SubordinatorModel SubordinatorModel::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("Gamma subordinator: shape and rate must be > 0");
  SubordinatorModel m;
  m.kind = SubordinatorKind::Gamma;
  m.gamma_shape = shape;
  m.gamma_rate = rate;
  return m;
}

SubordinatorModel SubordinatorModel::poisson(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("Poisson subordinator: intensity must be > 0");
  SubordinatorModel m;
  m.kind = SubordinatorKind::Poisson;
  m.poisson_lambda = lambda;
  return m;
}

SubordinatorModel SubordinatorModel::student_t(double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("Student-t process: dof must be > 0");
  SubordinatorModel m;
  m.kind = SubordinatorKind::StudentTUnitTime;
  m.t_dof = dof;
  return m;
}

std::string SubordinatorModel::describe() const {
  std::ostringstream os;
  switch (kind) {
    case SubordinatorKind::Gamma: os << "Gamma(" << gamma_shape << ", " << gamma_rate << ")"; break;
    case SubordinatorKind::Poisson: os << "Poisson(" << poisson_lambda << ")"; break;
    case SubordinatorKind::CompoundPoissonApprox:
      os << "CPA(eps=" << cpa_eps << ", intensity=" << (cpa ? cpa->intensity : 0.0) << ", drift=" << drift << ")";
      break;
    case SubordinatorKind::StudentTUnitTime: os << "StudentT(" << t_dof << ")"; break;
  }
  return os.str();
}

SubordinatorModel cpa_build(LevyDensity base, double gamma, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("cpa_build: eps must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("cpa_build: drift must be >= 0");
  // Work in s = log y where the measure has density g(s) = y nu(y).
  auto g = [&](double s) {
    const double y = std::exp(s);
    const double v = base(y);
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("cpa_build: Levy density must be finite and >= 0");
    return y * v;
  };
  const double s_eps = std::log(eps);

  // Grow the upper limit one unit of log-scale at a time until the remaining
  // mass is negligible.
  double mass = 0.0;
  double s_hi = s_eps;
  int quiet = 0;
  for (int chunk = 0;; ++chunk) {
    if (chunk > 200) throw std::invalid_argument("cpa_build: Levy measure tail is not integrable");
    const double piece = trap(g, s_hi, s_hi + 1.0, 64);
    mass += piece;
    s_hi += 1.0;
    if (piece <= 1e-13 * mass) {
      if (++quiet >= 2) break;
    } else {
      quiet = 0;
    }
  }

  // Small-jump mean int_0^eps y nu(dy) = int y g(s) ds below s_eps.
  double small = 0.0;
  double s_lo = s_eps;
  quiet = 0;
  for (int chunk = 0;; ++chunk) {
    if (chunk > 800) throw std::invalid_argument("cpa_build: small-jump mean is not finite");
    const double piece = trap([&](double s) { return std::exp(s) * g(s); }, s_lo - 1.0, s_lo, 64);
    small += piece;
    s_lo -= 1.0;
    if (piece <= 1e-15 * small || (piece == 0.0 && small == 0.0 && chunk > 40)) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
  }

  auto tab = std::make_shared<CpaTable>();
  tab->eps = eps;
  tab->base = base;
  tab->small_jump_mean = small;
  tab->log_nodes.resize(kCpaNodes);
  tab->cdf.resize(kCpaNodes);
  tab->log_density_mass.resize(kCpaNodes);
  const double ds = (s_hi - s_eps) / static_cast<double>(kCpaNodes - 1);
  double cum = 0.0;
  for (std::size_t i = 0; i < kCpaNodes; ++i) {
    const double s = s_eps + ds * static_cast<double>(i);
    tab->log_nodes[i] = s;
    tab->log_density_mass[i] = g(s);
    if (i > 0) cum += trap(g, s - ds, s, kSubsteps);
    tab->cdf[i] = cum;
  }
  tab->intensity = cum;
  tab->y_max = std::exp(s_hi);
  if (cum > 0.0)
    for (auto& c : tab->cdf) c /= cum;

  SubordinatorModel m;
  m.kind = SubordinatorKind::CompoundPoissonApprox;
  m.cpa_eps = eps;
  m.drift = gamma + small;
  m.cpa = std::move(tab);
  return m;
}

double levy_density(const SubordinatorModel& m, double y) {
  if (y <= 0.0) return 0.0;
  switch (m.kind) {
    case SubordinatorKind::Gamma: return m.gamma_shape / y * std::exp(-m.gamma_rate * y);
    case SubordinatorKind::CompoundPoissonApprox: return y >= m.cpa_eps ? m.cpa->base(y) : 0.0;
    default: throw UnsupportedOperation("levy_density: model has no Levy density");
  }
}

double marginal_sample(RngStream& rng, const SubordinatorModel& m, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("marginal_sample: t must be >= 0");
  if (t == 0.0) return 0.0;
  switch (m.kind) {
    case SubordinatorKind::Gamma: return sample_gamma(rng, m.gamma_shape * t, m.gamma_rate);
    case SubordinatorKind::Poisson: return static_cast<double>(sample_poisson(rng, m.poisson_lambda * t));
    case SubordinatorKind::CompoundPoissonApprox: return cpa_sample(rng, m, t);
    case SubordinatorKind::StudentTUnitTime: return student_t_time(rng, m.t_dof, t);
  }
  return 0.0;
}

double marginal_density(const SubordinatorModel& m, double t, double z) {
  if (!(t > 0.0)) throw std::invalid_argument("marginal_density: t must be > 0");
  switch (m.kind) {
    case SubordinatorKind::Gamma: return gamma_pdf(m.gamma_shape * t, m.gamma_rate, z);
    case SubordinatorKind::Poisson: {
      if (z < 0.0 || std::fabs(z - std::round(z)) > 1e-12) return 0.0;
      return poisson_pmf(m.poisson_lambda * t, static_cast<unsigned long>(std::lround(z)));
    }
    case SubordinatorKind::CompoundPoissonApprox:
      throw UnsupportedOperation("marginal_density: compound-Poisson approximation has no closed density");
    case SubordinatorKind::StudentTUnitTime:
      if (t != 1.0) throw UnsupportedOperation("marginal_density: Student-t density only at t = 1");
      return student_t_pdf(m.t_dof, z);
  }
  return 0.0;
}

double marginal_mean(const SubordinatorModel& m, double t) {
  switch (m.kind) {
    case SubordinatorKind::Gamma: return m.gamma_shape * t / m.gamma_rate;
    case SubordinatorKind::Poisson: return m.poisson_lambda * t;
    case SubordinatorKind::CompoundPoissonApprox: {
      const CpaTable& tab = *m.cpa;
      if (tab.intensity <= 0.0) return m.drift * t;
      const auto& s = tab.log_nodes;
      double jump_mean = 0.0;
      for (std::size_t i = 1; i < s.size(); ++i)
        jump_mean += 0.5 * (s[i] - s[i - 1]) *
                     (std::exp(s[i]) * tab.log_density_mass[i] + std::exp(s[i - 1]) * tab.log_density_mass[i - 1]);
      return (m.drift + jump_mean) * t;
    }
    case SubordinatorKind::StudentTUnitTime: return 0.0;
  }
  return 0.0;
}

double laplace_exponent(const SubordinatorModel& m, double u) {
  if (!(u >= 0.0)) throw std::invalid_argument("laplace_exponent: u must be >= 0");
  switch (m.kind) {
    case SubordinatorKind::Gamma: return m.gamma_shape * std::log1p(u / m.gamma_rate);
    case SubordinatorKind::Poisson: return -m.poisson_lambda * std::expm1(-u);
    case SubordinatorKind::CompoundPoissonApprox: {
      const CpaTable& tab = *m.cpa;
      double jumps = 0.0;
      const auto& s = tab.log_nodes;
      auto f = [&](std::size_t i) { return -std::expm1(-u * std::exp(s[i])) * tab.log_density_mass[i]; };
      for (std::size_t i = 1; i < s.size(); ++i) jumps += 0.5 * (s[i] - s[i - 1]) * (f(i) + f(i - 1));
      return m.drift * u + jumps;
    }
    case SubordinatorKind::StudentTUnitTime:
      throw UnsupportedOperation("laplace_exponent: the Student-t process is not a subordinator");
  }
  return 0.0;
}

double SubordinatorPath::at(double t) const {
  if (grid.empty()) throw std::logic_error("SubordinatorPath::at: empty path");
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return t >= 0.0 ? 0.0 : values.front();
  return values[static_cast<std::size_t>(it - grid.begin()) - 1];
}

SubordinatorPath path_sample(RngStream& rng, const SubordinatorModel& m, const std::vector<double>& grid) {
  SubordinatorPath p;
  p.grid = grid;
  p.values.resize(grid.size());
  double prev_t = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (!(t >= 0.0)) throw std::invalid_argument("path_sample: grid times must be >= 0");
    if (i > 0 && !(t > prev_t)) throw std::invalid_argument("path_sample: grid must be strictly increasing");
    acc += marginal_sample(rng, m, t - prev_t);
    p.values[i] = acc;
    prev_t = t;
  }
  return p;
}

}  // namespace subfield
