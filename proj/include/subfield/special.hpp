#pragma once

namespace subfield {

// Modified Bessel function of the second kind K_nu(x) for real nu >= 0 and
// x > 0. Temme's series for x <= 2, Steed's continued fraction beyond, then
// forward recurrence in the order. Relative error target 1e-10.
double bessel_k(double nu, double x);

// Matern covariance in the parameterization rho(s) = sigma2 2^(1-nu)/Gamma(nu)
// u^nu K_nu(u) with u = 2 s sqrt(nu) / r. Half-integer orders 1/2, 3/2, 5/2
// use their exact elementary forms; all other orders go through bessel_k.
double matern_rho(double s, double nu, double r, double sigma2);
double matern_rho_bessel(double s, double nu, double r, double sigma2);

double normal_pdf(double z);
double normal_cdf(double z);

double gamma_pdf(double shape, double rate, double z);
double gamma_cdf(double shape, double rate, double z);
double gamma_quantile(double shape, double rate, double p);

double poisson_pmf(double lambda, unsigned long k);
// Smallest k with P(N <= k) >= p.
unsigned long poisson_quantile(double lambda, double p);

double student_t_pdf(double dof, double z);
double student_t_cdf(double dof, double z);

}  // namespace subfield
