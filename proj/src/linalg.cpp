#include "subfield/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace subfield {

namespace {

// In-place lower Cholesky of cov + jitter*I. Returns false on a nonpositive
// pivot.
bool try_cholesky(const Matrix& cov, double jitter, Matrix& lower) {
  const std::size_t n = cov.rows();
  lower = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double* li = lower.row(i);
    const bool zero_row = cov(i, i) == 0.0 && jitter == 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      const double* lj = lower.row(j);
      double s = cov(i, j) + (i == j ? jitter : 0.0);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      if (i == j) {
        if (zero_row) {
          li[i] = 0.0;
        } else {
          if (!(s > 0.0)) return false;
          li[i] = std::sqrt(s);
        }
      } else if (zero_row) {
        if (cov(i, j) != 0.0) return false;
        li[j] = 0.0;
      } else {
        li[j] = lj[j] == 0.0 ? 0.0 : s / lj[j];
      }
    }
  }
  return true;
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

MvnFactor mvn_factorize(const Matrix& cov) {
  const std::size_t n = cov.rows();
  if (n == 0 || cov.cols() != n) throw std::invalid_argument("mvn_factorize: covariance must be square and nonempty");
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(cov(i, i)) || cov(i, i) < 0.0) throw FactorizationError("mvn_factorize: invalid diagonal entry");
    trace += cov(i, i);
    for (std::size_t j = 0; j < i; ++j)
      if (cov(i, j) != cov(j, i)) throw std::invalid_argument("mvn_factorize: covariance not symmetric");
  }
  const double mean_diag = trace / static_cast<double>(n);
  MvnFactor f;
  f.dim = n;
  for (double rel : {0.0, 1e-12, 1e-10, 1e-8}) {
    const double jitter = rel * mean_diag;
    if (rel > 0.0 && jitter == 0.0) break;
    if (try_cholesky(cov, jitter, f.lower)) {
      f.jitter_used = jitter;
      return f;
    }
  }
  throw FactorizationError("mvn_factorize: jitter ladder exhausted");
}

std::vector<double> mvn_sample(RngStream& rng, const std::vector<double>& mean, const MvnFactor& factor) {
  const std::size_t n = factor.dim;
  if (mean.size() != n || factor.lower.rows() != n) throw std::invalid_argument("mvn_sample: dimension mismatch");
  std::vector<double> z(n);
  for (auto& v : z) v = rng.normal();
  std::vector<double> out(mean);
  for (std::size_t i = 0; i < n; ++i) {
    const double* li = factor.lower.row(i);
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += li[k] * z[k];
    out[i] += s;
  }
  return out;
}

bool cholesky_solve(const Matrix& a, const std::vector<double>& b, std::vector<double>& x) {
  const std::size_t n = a.rows();
  Matrix l;
  if (!try_cholesky(a, 0.0, l)) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (l(i, i) == 0.0) return false;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return true;
}

}  // namespace subfield
