#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "subfield/linalg.hpp"
#include "subfield/rng.hpp"

namespace subfield {

using Point = std::vector<double>;

enum class CovarianceKind { MaternStationary, BrownianSheet, SqrtScaledStationary };

// Centered Gaussian field on R_+^d.
//   MaternStationary      q(x,y) = rho(|x-y|)
//   BrownianSheet         q(x,y) = prod_i min(x_i, y_i)
//   SqrtScaledStationary  q(x,y) = sqrt(sum x) sqrt(sum y) rho(|x-y|)
// rho is the Matern function with rho(0) = sigma2 (see matern_rho).
struct CovarianceModel {
  CovarianceKind kind = CovarianceKind::MaternStationary;
  double matern_nu = 1.5;
  double matern_r = 1.0;
  double matern_sigma2 = 1.0;
  std::size_t dim = 2;

  static CovarianceModel matern(std::size_t dim, double nu, double r, double sigma2);
  static CovarianceModel brownian_sheet(std::size_t dim);
  static CovarianceModel sqrt_scaled(std::size_t dim, double nu, double r, double sigma2);

  bool stationary() const { return kind == CovarianceKind::MaternStationary; }
  void validate() const;
};

double cov_eval(const CovarianceModel& model, std::span<const double> x, std::span<const double> y);
double variance_fn(const CovarianceModel& model, std::span<const double> x);

// Covariance matrix of the model on the given points (row-major point list,
// each of model.dim coordinates).
Matrix covariance_matrix(const CovarianceModel& model, const std::vector<Point>& points);

std::vector<double> grf_sample_at(RngStream& rng, const CovarianceModel& model, const std::vector<Point>& points);

}  // namespace subfield
