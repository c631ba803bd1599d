#include "subfield/special.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace subfield {

namespace {

constexpr double kEps = 1e-16;

// gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2.
// Near mu = 0 the difference cancels, so a short Taylor series of 1/Gamma is
// used there.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
  if (std::fabs(mu) < 1e-3) {
    constexpr double c2 = 0.5772156649015328606;
    constexpr double c3 = -0.6558780715202538811;
    constexpr double c4 = -0.0420026350340952355;
    constexpr double c5 = 0.1665386113822914895;
    constexpr double c6 = -0.0421977345555443367;
    const double m2 = mu * mu;
    gam1 = -(c2 + c4 * m2 + c6 * m2 * m2);
    gam2 = 1.0 + c3 * m2 + c5 * m2 * m2;
    gampl = gam2 - mu * gam1;
    gammi = gam2 + mu * gam1;
    return;
  }
  gampl = 1.0 / std::tgamma(1.0 + mu);
  gammi = 1.0 / std::tgamma(1.0 - mu);
  gam1 = (gammi - gampl) / (2.0 * mu);
  gam2 = 0.5 * (gammi + gampl);
}

}  // namespace

double bessel_k(double nu, double x) {
  if (!(nu >= 0.0) || !(x > 0.0)) throw std::invalid_argument("bessel_k: need nu >= 0 and x > 0");
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  double rkmu, rk1;
  if (x <= 2.0) {
    double gam1, gam2, gampl, gammi;
    temme_gammas(mu, gam1, gam2, gampl, gammi);
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::fabs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::fabs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i < 500; ++i) {
      ff = (i * ff + p + q) / (i * i - mu2);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    rkmu = sum;
    rk1 = sum1 * xi2;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1, c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 10000; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::fabs(dels / s) < kEps) break;
    }
    h = a1 * h;
    rkmu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    rk1 = rkmu * (mu + x + 0.5 - h) * xi;
  }
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * xi2 * rk1 + rkmu;
    rkmu = rk1;
    rk1 = next;
  }
  return rkmu;
}

double matern_rho_bessel(double s, double nu, double r, double sigma2) {
  if (s == 0.0) return sigma2;
  const double u = 2.0 * s * std::sqrt(nu) / r;
  if (u > 700.0) return 0.0;
  const double log_pref = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(u);
  return sigma2 * std::exp(log_pref) * bessel_k(nu, u);
}

double matern_rho(double s, double nu, double r, double sigma2) {
  if (s == 0.0) return sigma2;
  const double u = 2.0 * s * std::sqrt(nu) / r;
  if (nu == 0.5) return sigma2 * std::exp(-u);
  if (nu == 1.5) return sigma2 * (1.0 + u) * std::exp(-u);
  if (nu == 2.5) return sigma2 * (1.0 + u + u * u / 3.0) * std::exp(-u);
  return matern_rho_bessel(s, nu, r, sigma2);
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double gamma_pdf(double shape, double rate, double z) {
  if (z < 0.0) return 0.0;
  if (z == 0.0) {
    if (shape < 1.0) return std::numeric_limits<double>::infinity();
    return shape == 1.0 ? rate : 0.0;
  }
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(z) - rate * z - std::lgamma(shape));
}

double gamma_cdf(double shape, double rate, double z) {
  if (z <= 0.0) return 0.0;
  return boost::math::gamma_p(shape, rate * z);
}

double gamma_quantile(double shape, double rate, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::gamma_p_inv(shape, p) / rate;
}

double poisson_pmf(double lambda, unsigned long k) {
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0));
}

unsigned long poisson_quantile(double lambda, double p) {
  double cdf = 0.0;
  unsigned long k = 0;
  while (true) {
    cdf += poisson_pmf(lambda, k);
    if (cdf >= p || k > 100000) return k;
    ++k;
  }
}

double student_t_pdf(double dof, double z) {
  const double logc = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) - 0.5 * std::log(dof * std::numbers::pi);
  return std::exp(logc - 0.5 * (dof + 1.0) * std::log1p(z * z / dof));
}

double student_t_cdf(double dof, double z) {
  const double x = dof / (dof + z * z);
  const double tail = 0.5 * boost::math::ibeta(0.5 * dof, 0.5, x);
  return z >= 0.0 ? 1.0 - tail : tail;
}

}  // namespace subfield
