#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "subfield/rng.hpp"

namespace subfield {

// Dense row-major square-or-rectangular matrix; only what the samplers and
// the LM solver need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  double* row(std::size_t i) { return data_.data() + i * cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double frobenius_norm(const Matrix& a);

struct MvnFactor {
  std::size_t dim = 0;
  Matrix lower;
  double jitter_used = 0.0;
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cholesky with the jitter ladder {0, 1e-12, 1e-10, 1e-8} x mean diagonal.
// Rows whose diagonal is exactly zero (a point with zero variance) are
// factored as zero rows provided their off-diagonal entries are zero too.
MvnFactor mvn_factorize(const Matrix& cov);

std::vector<double> mvn_sample(RngStream& rng, const std::vector<double>& mean, const MvnFactor& factor);

// Solves (A) x = b for symmetric positive definite A; returns false when A is
// not numerically positive definite.
bool cholesky_solve(const Matrix& a, const std::vector<double>& b, std::vector<double>& x);

}  // namespace subfield
