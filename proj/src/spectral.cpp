#include "subfield/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "subfield/special.hpp"

namespace subfield {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper tail of the standard normal.
double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// P(a <= s Z <= b) for s > 0, without cancellation when [a, b] is far out in
// one tail.
double normal_interval(double a, double b, double s) {
  if (a >= 0.0) return normal_sf(a / s) - normal_sf(b / s);
  if (b <= 0.0) return normal_sf(-b / s) - normal_sf(-a / s);
  return 1.0 - normal_sf(-a / s) - normal_sf(b / s);
}

// Largest jump scale that matters for the source measure.
double levy_upper_time(const SubordinatorModel& m) {
  switch (m.kind) {
    case SubordinatorKind::Gamma: return 45.0 / m.gamma_rate;
    case SubordinatorKind::Poisson: return 1.0;
    case SubordinatorKind::CompoundPoissonApprox: return std::max(m.cpa->y_max, m.cpa_eps);
    case SubordinatorKind::StudentTUnitTime: break;
  }
  throw UnsupportedOperation("nu#: source must be a subordinator");
}

// int h(t) nu(dt). Continuous measures are integrated in s = log t over
// [t_lo, upper time]; callers pick t_lo where h is negligible.
double integrate_levy(const SubordinatorModel& m, const std::function<double(double)>& h, double t_lo) {
  switch (m.kind) {
    case SubordinatorKind::Gamma: {
      const double t_hi = levy_upper_time(m);
      if (!(t_lo < t_hi)) return 0.0;
      const double s0 = std::log(t_lo), s1 = std::log(t_hi);
      const int n = std::max(400, static_cast<int>(std::ceil((s1 - s0) / 0.05)));
      const double ds = (s1 - s0) / n;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double t = std::exp(s0 + i * ds);
        const double v = h(t) * m.gamma_shape * std::exp(-m.gamma_rate * t);
        acc += (i == 0 || i == n) ? 0.5 * v : v;
      }
      return acc * ds;
    }
    case SubordinatorKind::Poisson: return m.poisson_lambda * h(1.0);
    case SubordinatorKind::CompoundPoissonApprox: {
      const CpaTable& tab = *m.cpa;
      if (tab.intensity <= 0.0) return 0.0;
      const auto& s = tab.log_nodes;
      double acc = 0.0;
      double prev = h(std::exp(s[0])) * tab.log_density_mass[0];
      for (std::size_t i = 1; i < s.size(); ++i) {
        const double cur = h(std::exp(s[i])) * tab.log_density_mass[i];
        acc += 0.5 * (s[i] - s[i - 1]) * (prev + cur);
        prev = cur;
      }
      return acc;
    }
    case SubordinatorKind::StudentTUnitTime: break;
  }
  throw UnsupportedOperation("nu#: source must be a subordinator");
}

bool has_infinite_mass(const SubordinatorModel& m) { return m.kind == SubordinatorKind::Gamma; }

double gaussian_drift(const SubordinatorModel& m) {
  return m.kind == SubordinatorKind::CompoundPoissonApprox ? m.drift : 0.0;
}

// Log-spaced quadrature of the positive half of nu#: nodes z_j and weights
// w_j with int_0^inf f(z) nu#(dz) ~ sum_j w_j f(z_j).
struct HalfLineRule {
  std::vector<double> z, w;
};

HalfLineRule nusharp_rule(const NuSharp& ns, std::size_t n, double z_lo_rel) {
  const double z_hi = 45.0 * std::sqrt(ns.sigma2 * levy_upper_time(ns.source));
  const double s0 = std::log(z_hi * z_lo_rel), s1 = std::log(z_hi);
  const double ds = (s1 - s0) / static_cast<double>(n - 1);
  HalfLineRule r;
  r.z.resize(n);
  r.w.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double z = std::exp(s0 + ds * static_cast<double>(j));
    r.z[j] = z;
    r.w[j] = ds * z * nu_sharp_density(ns, z) * ((j == 0 || j == n - 1) ? 0.5 : 1.0);
  }
  return r;
}

void require_sqrt_scaled_or_matern(const FieldModel& model, const char* who) {
  model.validate();
  if (model.cov.kind == CovarianceKind::BrownianSheet)
    throw UnsupportedOperation(std::string(who) + ": closed form needs a stationary or sqrt-scaled covariance");
}

}  // namespace

const char* provenance_name(CharFnProvenance p) {
  switch (p) {
    case CharFnProvenance::ClosedForm: return "closed-form";
    case CharFnProvenance::MixtureQuadrature: return "mixture";
    case CharFnProvenance::Empirical: return "empirical";
  }
  return "?";
}

CharFn charfn_levy_khinchin(const FieldModel& model, const Point& x) {
  require_sqrt_scaled_or_matern(model, "charfn_levy_khinchin");
  model.check_point(x);
  const double s2 = model.cov.matern_sigma2;
  CharFn cf;
  cf.point = x;
  cf.provenance = CharFnProvenance::ClosedForm;
  if (model.cov.kind == CovarianceKind::MaternStationary) {
    cf.eval = [s2](double xi) { return std::complex<double>(std::exp(-0.5 * s2 * xi * xi), 0.0); };
    return cf;
  }
  for (const auto& s : model.subs)
    if (!s.is_subordinator()) throw UnsupportedOperation("charfn_levy_khinchin: needs subordinators on every axis");
  cf.eval = [subs = model.subs, x, s2](double xi) {
    const double u = 0.5 * s2 * xi * xi;
    double e = 0.0;
    for (std::size_t k = 0; k < subs.size(); ++k)
      if (x[k] > 0.0) e += x[k] * laplace_exponent(subs[k], u);
    return std::complex<double>(std::exp(-e), 0.0);
  };
  return cf;
}

CharFn charfn_mixture(const FieldModel& model, const Point& x, std::size_t n_mc, RngStream& rng) {
  model.validate();
  model.check_point(x);
  if (n_mc == 0) throw std::invalid_argument("charfn_mixture: need n_mc >= 1");
  auto var = std::make_shared<std::vector<double>>(n_mc);
  Point tp(x.size());
  for (auto& v : *var) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double l = marginal_sample(rng, model.subs[k], x[k]);
      tp[k] = model.abs_mode ? std::fabs(l) : l;
    }
    v = variance_fn(model.cov, tp);
  }
  CharFn cf;
  cf.point = x;
  cf.provenance = CharFnProvenance::MixtureQuadrature;
  cf.eval = [var](double xi) {
    KahanAccumulator acc;
    const double c = -0.5 * xi * xi;
    for (double v : *var) acc.add(std::exp(c * v));
    return std::complex<double>(acc.value() / static_cast<double>(var->size()), 0.0);
  };
  return cf;
}

CharFn charfn_empirical(std::vector<double> samples, Point x) {
  if (samples.empty()) throw std::invalid_argument("charfn_empirical: empty sample");
  auto data = std::make_shared<std::vector<double>>(std::move(samples));
  CharFn cf;
  cf.point = std::move(x);
  cf.provenance = CharFnProvenance::Empirical;
  cf.eval = [data](double xi) {
    KahanAccumulator re, im;
    for (double v : *data) {
      re.add(std::cos(xi * v));
      im.add(std::sin(xi * v));
    }
    const double n = static_cast<double>(data->size());
    return std::complex<double>(re.value() / n, im.value() / n);
  };
  return cf;
}

double nu_sharp_density(const NuSharp& ns, double z) {
  if (!(ns.sigma2 > 0.0)) throw std::invalid_argument("nu#: sigma2 must be > 0");
  const double az = std::fabs(z);
  if (az == 0.0 && has_infinite_mass(ns.source)) return kInf;
  const double s2 = ns.sigma2;
  auto kernel = [az, s2](double t) {
    return std::exp(-az * az / (2.0 * s2 * t)) / std::sqrt(2.0 * std::numbers::pi * s2 * t);
  };
  const double t_lo = az > 0.0 ? az * az / (1400.0 * s2) : 0.0;
  return integrate_levy(ns.source, kernel, t_lo);
}

double nu_sharp_mass(const NuSharp& ns, double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("nu_sharp_mass: need a <= b");
  if (!(ns.sigma2 > 0.0)) throw std::invalid_argument("nu#: sigma2 must be > 0");
  if (a == b) return 0.0;
  const bool contains_zero = a <= 0.0 && b >= 0.0;
  if (contains_zero && has_infinite_mass(ns.source)) return kInf;
  const double s = std::sqrt(ns.sigma2);
  auto mass = [a, b, s](double t) { return normal_interval(a, b, s * std::sqrt(t)); };
  double t_lo = 0.0;
  if (!contains_zero) {
    const double m = std::min(std::fabs(a), std::fabs(b));
    t_lo = m * m / (1400.0 * ns.sigma2);
  }
  return integrate_levy(ns.source, mass, t_lo);
}

CharFn charfn_from_nusharp(const FieldModel& model, const Point& x) {
  require_sqrt_scaled_or_matern(model, "charfn_from_nusharp");
  model.check_point(x);
  if (model.cov.kind == CovarianceKind::MaternStationary) return charfn_levy_khinchin(model, x);
  const double s2 = model.cov.matern_sigma2;
  struct Axis {
    double weight;  // x_k
    double drift;
    HalfLineRule rule;
  };
  auto axes = std::make_shared<std::vector<Axis>>();
  for (std::size_t k = 0; k < model.dim(); ++k) {
    if (x[k] == 0.0) continue;
    const NuSharp ns{model.subs[k], s2};
    axes->push_back({x[k], gaussian_drift(model.subs[k]), nusharp_rule(ns, 8192, 1e-9)});
  }
  CharFn cf;
  cf.point = x;
  cf.provenance = CharFnProvenance::ClosedForm;
  cf.eval = [axes, s2](double xi) {
    double e = 0.0;
    for (const auto& ax : *axes) {
      // 1 - cos(xi z) integrated against the symmetric nu#: twice the
      // half-line integral; the odd part of the exponent cancels.
      KahanAccumulator acc;
      for (std::size_t j = 0; j < ax.rule.z.size(); ++j) {
        const double sn = std::sin(0.5 * xi * ax.rule.z[j]);
        acc.add(ax.rule.w[j] * 2.0 * sn * sn);
      }
      e += ax.weight * (0.5 * s2 * xi * xi * ax.drift + 2.0 * acc.value());
    }
    return std::complex<double>(std::exp(-e), 0.0);
  };
  return cf;
}

SymmetricCpa symmetric_cpa_build(const NuSharp& ns, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("symmetric_cpa_build: eps must be > 0");
  constexpr std::size_t n = 2048;
  const double z_hi = 45.0 * std::sqrt(ns.sigma2 * levy_upper_time(ns.source));
  SymmetricCpa c;
  c.eps = eps;
  c.gaussian_rate = ns.sigma2 * gaussian_drift(ns.source);
  if (eps >= z_hi) return c;
  const double s0 = std::log(eps), s1 = std::log(z_hi);
  const double ds = (s1 - s0) / static_cast<double>(n - 1);
  c.log_nodes.resize(n);
  c.cdf.resize(n);
  double prev = 0.0, cum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double s = s0 + ds * static_cast<double>(j);
    const double g = std::exp(s) * nu_sharp_density(ns, std::exp(s));
    if (j > 0) cum += 0.5 * ds * (prev + g);
    c.log_nodes[j] = s;
    c.cdf[j] = cum;
    prev = g;
  }
  c.intensity = 2.0 * cum;  // both signs
  if (cum > 0.0)
    for (auto& v : c.cdf) v /= cum;
  return c;
}

double symmetric_cpa_sample(RngStream& rng, const SymmetricCpa& c, double t) {
  double v = c.gaussian_rate > 0.0 ? std::sqrt(c.gaussian_rate * t) * rng.normal() : 0.0;
  if (c.intensity <= 0.0 || t == 0.0) return v;
  const std::uint64_t n = sample_poisson(rng, c.intensity * t);
  for (std::uint64_t k = 0; k < n; ++k) {
    const double u = rng.uniform();
    const auto it = std::lower_bound(c.cdf.begin(), c.cdf.end(), u);
    std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - c.cdf.begin()), 1, c.cdf.size() - 1);
    const double c0 = c.cdf[i - 1], c1 = c.cdf[i];
    const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    const double size = std::exp(c.log_nodes[i - 1] + w * (c.log_nodes[i] - c.log_nodes[i - 1]));
    v += rng.uniform() < 0.5 ? -size : size;
  }
  return v;
}

FourierInverter::FourierInverter(const CharFn& cf, InversionOptions opt) {
  if (opt.nodes < 16) throw std::invalid_argument("FourierInverter: too few nodes");
  auto mod = [&](double xi) { return std::abs(cf(xi)); };
  double lo = 0.0, hi = 1.0;
  if (mod(hi) < opt.tail_tol) {
    while (hi > 1e-12 && mod(0.5 * hi) < opt.tail_tol) hi *= 0.5;
    lo = 0.5 * hi;
  } else {
    while (hi < opt.xi_cap && mod(hi) >= opt.tail_tol) {
      lo = hi;
      hi *= 2.0;
    }
    hi = std::min(hi, opt.xi_cap);
  }
  if (mod(hi) < opt.tail_tol) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mod(mid) < opt.tail_tol ? hi : lo) = mid;
    }
  }
  xi_max_ = hi;
  tail_modulus_ = mod(xi_max_);
  heavy_tail_ = tail_modulus_ > opt.heavy_tail_level;
  const std::size_t n = opt.nodes;
  h_ = xi_max_ / static_cast<double>(n);
  phi_.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) phi_[j] = cf(h_ * static_cast<double>(j));
  const double delta = 1e-3 * h_;
  first_moment_ = cf(delta).imag() / delta;
}

double FourierInverter::pdf(double z) const {
  const std::complex<double> step = std::polar(1.0, -h_ * z);
  std::complex<double> rot = 1.0;
  const std::size_t n = phi_.size() - 1;
  double acc = 0.5 * phi_[0].real();
  for (std::size_t j = 1; j <= n; ++j) {
    rot *= step;
    const double v = (rot * phi_[j]).real();
    acc += j == n ? 0.5 * v : v;
  }
  return std::max(0.0, acc * h_ / std::numbers::pi);
}

double FourierInverter::cdf(double z) const {
  const std::complex<double> step = std::polar(1.0, -h_ * z);
  std::complex<double> rot = 1.0;
  const std::size_t n = phi_.size() - 1;
  double acc = 0.5 * (first_moment_ - z);
  for (std::size_t j = 1; j <= n; ++j) {
    rot *= step;
    const double v = (rot * phi_[j]).imag() / (h_ * static_cast<double>(j));
    acc += j == n ? 0.5 * v : v;
  }
  return std::clamp(0.5 - acc * h_ / std::numbers::pi, 0.0, 1.0);
}

double gil_pelaez_pdf(const CharFn& cf, double z) { return FourierInverter(cf).pdf(z); }
double gil_pelaez_cdf(const CharFn& cf, double z) { return FourierInverter(cf).cdf(z); }

TabulatedCdf::TabulatedCdf(const FourierInverter& inv, std::size_t nodes, double tail) {
  if (nodes < 2) throw std::invalid_argument("TabulatedCdf: need >= 2 nodes");
  auto find = [&](double p, double dir) {
    double near = 0.0, far = dir;
    for (int i = 0; i < 80; ++i) {
      const double f = inv.cdf(far);
      if (dir < 0 ? f <= p : f >= 1.0 - p) break;
      near = far;
      far *= 2.0;
    }
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (near + far);
      const double f = inv.cdf(mid);
      ((dir < 0 ? f <= p : f >= 1.0 - p) ? far : near) = mid;
    }
    return far;
  };
  const double lo = find(tail, -1.0), hi = find(tail, 1.0);
  z_.resize(nodes);
  f_.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    z_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nodes - 1);
    f_[i] = inv.cdf(z_[i]);
    if (i > 0) f_[i] = std::max(f_[i], f_[i - 1]);
  }
}

double TabulatedCdf::operator()(double z) const {
  if (z <= z_.front()) return z < z_.front() ? 0.0 : f_.front();
  if (z >= z_.back()) return 1.0;
  const auto it = std::upper_bound(z_.begin(), z_.end(), z);
  const std::size_t i = static_cast<std::size_t>(it - z_.begin());
  const double w = (z - z_[i - 1]) / (z_[i] - z_[i - 1]);
  return f_[i - 1] + w * (f_[i] - f_[i - 1]);
}

double TabulatedCdf::quantile(double p) const {
  if (p <= f_.front()) return z_.front();
  if (p >= f_.back()) return z_.back();
  const auto it = std::lower_bound(f_.begin(), f_.end(), p);
  const std::size_t i = static_cast<std::size_t>(it - f_.begin());
  const double df = f_[i] - f_[i - 1];
  const double w = df > 0.0 ? (p - f_[i - 1]) / df : 0.0;
  return z_[i - 1] + w * (z_[i] - z_[i - 1]);
}

std::vector<double> sum_representation_density(const FieldModel& model, const Point& x, const std::vector<double>& grid) {
  if (model.cov.kind != CovarianceKind::SqrtScaledStationary)
    throw UnsupportedOperation("sum_representation_density: needs a sqrt-scaled covariance");
  const FourierInverter inv(charfn_levy_khinchin(model, x));
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = inv.pdf(grid[i]);
  return out;
}

}  // namespace subfield
