#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "subfield/field.hpp"
#include "subfield/stats.hpp"

namespace subfield {

enum class CharFnProvenance { ClosedForm, MixtureQuadrature, Empirical };
const char* provenance_name(CharFnProvenance p);

// Pointwise characteristic function xi -> E exp(i xi L(x)).
struct CharFn {
  std::function<std::complex<double>(double)> eval;
  Point point;
  CharFnProvenance provenance = CharFnProvenance::ClosedForm;

  std::complex<double> operator()(double xi) const { return eval(xi); }
};

// exp(-sum_k x_k psi_k(sigma^2 xi^2 / 2)) for sqrt-scaled fields, and
// exp(-sigma^2 xi^2 / 2) for stationary Matern fields.
CharFn charfn_levy_khinchin(const FieldModel& model, const Point& x);

// Mixture over n_mc subordinator draws of exp(-xi^2 var(transformed x) / 2).
// Works for every covariance kind.
CharFn charfn_mixture(const FieldModel& model, const Point& x, std::size_t n_mc, RngStream& rng);

// Plain sample average of exp(i xi X).
CharFn charfn_empirical(std::vector<double> samples, Point x);

// Gaussian-smeared image of a subordinator's Levy measure:
// nu#(dz) = int_0^inf N(0, sigma2 t)(dz) nu(dt).
struct NuSharp {
  SubordinatorModel source;
  double sigma2 = 1.0;
};

// nu#([a, b]); +inf when the interval contains 0 and nu has infinite mass.
double nu_sharp_mass(const NuSharp& ns, double a, double b);
// Density of nu# at z != 0 (Poisson: the single Gaussian kernel scaled by
// the intensity).
double nu_sharp_density(const NuSharp& ns, double z);

// Evaluates the Levy-Khinchin exponent with the drift and nu# jump parts by
// quadrature over the nu# densities, independently of the Laplace exponent.
CharFn charfn_from_nusharp(const FieldModel& model, const Point& x);

// Compound-Poisson approximation of the symmetric process with Gaussian
// coefficient sigma2 * drift and jump measure nu#: jumps with |z| >= eps are
// simulated (sign drawn symmetrically, size by inverse CDF of a log-spaced
// table), smaller jumps are dropped. Their compensator vanishes by symmetry.
struct SymmetricCpa {
  double eps = 0.0;
  double intensity = 0.0;     // nu#(|z| >= eps)
  double gaussian_rate = 0.0;  // variance per unit time of the Gaussian part
  std::vector<double> log_nodes;
  std::vector<double> cdf;
};
SymmetricCpa symmetric_cpa_build(const NuSharp& ns, double eps);
double symmetric_cpa_sample(RngStream& rng, const SymmetricCpa& cpa, double t);

struct InversionOptions {
  std::size_t nodes = std::size_t{1} << 14;
  double tail_tol = 1e-8;
  double xi_cap = 1e4;
  double heavy_tail_level = 1e-6;
};

// Gil-Pelaez inversion by the trapezoid rule on [0, xi_max], xi_max the
// first xi with |cf| < tail_tol (capped). cf is evaluated once per node at
// construction; pdf/cdf evaluations reuse the cached values.
class FourierInverter {
 public:
  explicit FourierInverter(const CharFn& cf, InversionOptions opt = {});

  double pdf(double z) const;
  double cdf(double z) const;
  double xi_max() const { return xi_max_; }
  // |cf(xi_max)| exceeded the heavy-tail level, so the truncation is coarse.
  bool heavy_tail() const { return heavy_tail_; }
  double tail_modulus() const { return tail_modulus_; }

 private:
  double h_ = 0.0;
  double xi_max_ = 0.0;
  double tail_modulus_ = 0.0;
  bool heavy_tail_ = false;
  double first_moment_ = 0.0;  // Im cf'(0), the xi -> 0 limit term of the cdf integrand
  std::vector<std::complex<double>> phi_;  // phi_[j] = cf(j h), j = 0..N
};

double gil_pelaez_pdf(const CharFn& cf, double z);
double gil_pelaez_cdf(const CharFn& cf, double z);

// CDF tabulated on 4096 equispaced points between the 1e-6 and 1 - 1e-6
// quantiles, linear interpolation in between, monotone by construction.
class TabulatedCdf {
 public:
  explicit TabulatedCdf(const FourierInverter& inv, std::size_t nodes = 4096, double tail = 1e-6);
  double operator()(double z) const;
  double quantile(double p) const;
  double lo() const { return z_.front(); }
  double hi() const { return z_.back(); }

 private:
  std::vector<double> z_;
  std::vector<double> f_;
};

// Density of L(x) for a sqrt-scaled field via inversion of the closed-form
// characteristic function.
std::vector<double> sum_representation_density(const FieldModel& model, const Point& x, const std::vector<double>& grid);

}  // namespace subfield
