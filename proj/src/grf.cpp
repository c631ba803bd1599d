#include "subfield/grf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "subfield/special.hpp"

namespace subfield {

namespace {

void check_point(const CovarianceModel& m, std::span<const double> x) {
  if (x.size() != m.dim) throw std::invalid_argument("cov_eval: point dimension does not match model");
  for (double v : x)
    if (!(v >= 0.0)) throw std::invalid_argument("cov_eval: coordinates must be nonnegative");
}

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

double coord_sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

}  // namespace

CovarianceModel CovarianceModel::matern(std::size_t dim, double nu, double r, double sigma2) {
  CovarianceModel m{CovarianceKind::MaternStationary, nu, r, sigma2, dim};
  m.validate();
  return m;
}

CovarianceModel CovarianceModel::brownian_sheet(std::size_t dim) {
  CovarianceModel m;
  m.kind = CovarianceKind::BrownianSheet;
  m.dim = dim;
  m.validate();
  return m;
}

CovarianceModel CovarianceModel::sqrt_scaled(std::size_t dim, double nu, double r, double sigma2) {
  CovarianceModel m{CovarianceKind::SqrtScaledStationary, nu, r, sigma2, dim};
  m.validate();
  return m;
}

void CovarianceModel::validate() const {
  if (dim < 1) throw std::invalid_argument("CovarianceModel: dim must be >= 1");
  if (kind != CovarianceKind::BrownianSheet) {
    if (!(matern_nu > 0.0) || !(matern_r > 0.0) || !(matern_sigma2 > 0.0))
      throw std::invalid_argument("CovarianceModel: Matern nu, r, sigma2 must be > 0");
  }
}

double cov_eval(const CovarianceModel& model, std::span<const double> x, std::span<const double> y) {
  check_point(model, x);
  check_point(model, y);
  switch (model.kind) {
    case CovarianceKind::MaternStationary:
      return matern_rho(distance(x, y), model.matern_nu, model.matern_r, model.matern_sigma2);
    case CovarianceKind::BrownianSheet: {
      double p = 1.0;
      for (std::size_t i = 0; i < x.size(); ++i) p *= std::min(x[i], y[i]);
      return p;
    }
    case CovarianceKind::SqrtScaledStationary:
      return std::sqrt(coord_sum(x)) * std::sqrt(coord_sum(y)) *
             matern_rho(distance(x, y), model.matern_nu, model.matern_r, model.matern_sigma2);
  }
  return 0.0;
}

double variance_fn(const CovarianceModel& model, std::span<const double> x) { return cov_eval(model, x, x); }

Matrix covariance_matrix(const CovarianceModel& model, const std::vector<Point>& points) {
  const std::size_t n = points.size();
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = cov_eval(model, points[i], points[j]);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

std::vector<double> grf_sample_at(RngStream& rng, const CovarianceModel& model, const std::vector<Point>& points) {
  if (points.empty()) throw std::invalid_argument("grf_sample_at: empty point list");
  const MvnFactor f = mvn_factorize(covariance_matrix(model, points));
  return mvn_sample(rng, std::vector<double>(points.size(), 0.0), f);
}

}  // namespace subfield
