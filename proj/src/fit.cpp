#include "subfield/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "subfield/linalg.hpp"

namespace subfield {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

FitParams squared(const FitParams& u) {
  FitParams t;
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = u[i] * u[i];
  return t;
}

}  // namespace

void FitProblem::validate() const {
  if (points.empty()) throw std::invalid_argument("FitProblem: no points");
  if (grids.size() != points.size() || targets.size() != points.size())
    throw std::invalid_argument("FitProblem: one grid and one target per point");
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (points[j].size() != 2) throw std::invalid_argument("FitProblem: points must be planar");
    if (grids[j].size() != targets[j].size() || grids[j].empty())
      throw std::invalid_argument("FitProblem: grid and target sizes differ");
    for (std::size_t k = 1; k < grids[j].size(); ++k)
      if (!(grids[j][k] > grids[j][k - 1])) throw std::invalid_argument("FitProblem: grid must increase strictly");
  }
  for (double t : theta0)
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("FitProblem: theta0 must be finite and >= 0");
}

std::vector<Point> default_fit_points() { return {{0.1, 0.1}, {0.1, 0.8}, {0.7, 0.2}, {1.0, 1.0}}; }

CharFn fit_model_charfn(const FitParams& theta, const Point& x) {
  const double a1 = theta[0] * x[0], b1 = theta[1], a2 = theta[2] * x[1], b2 = theta[3];
  const double half_s2 = 0.5 * theta[4] * theta[4];
  auto eval = [=](double xi) -> std::complex<double> {
    const double q = half_s2 * xi * xi;
    if (q == 0.0) return {1.0, 0.0};
    double log_phi = 0.0;
    for (auto [a, b] : {std::pair{a1, b1}, std::pair{a2, b2}}) {
      if (a == 0.0) continue;
      if (b == 0.0) return {0.0, 0.0};
      log_phi -= a * std::log1p(q / b);
    }
    return {std::exp(log_phi), 0.0};
  };
  return CharFn{eval, x, CharFnProvenance::ClosedForm};
}

FieldModel fit_field_model(const FitParams& theta) {
  return FieldModel{CovarianceModel::sqrt_scaled(2, 1.5, 1.0, theta[4] * theta[4]),
                    {SubordinatorModel::gamma(theta[0], theta[1]), SubordinatorModel::gamma(theta[2], theta[3])},
                    {1.0, 1.0},
                    false};
}

FitProblem make_charfn_problem(const std::vector<Point>& points, const std::vector<CharFn>& targets,
                               const FitParams& theta0) {
  if (targets.size() != points.size()) throw std::invalid_argument("make_charfn_problem: one target per point");
  FitProblem pr;
  pr.points = points;
  pr.mode = FitMode::CharFnFit;
  pr.theta0 = theta0;
  std::vector<double> xi(64);
  for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = 20.0 * static_cast<double>(k) / 63.0;
  for (const auto& cf : targets) {
    pr.grids.push_back(xi);
    std::vector<double> t(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) t[k] = cf(xi[k]).real();
    pr.targets.push_back(std::move(t));
  }
  pr.validate();
  return pr;
}

FitProblem make_density_problem(const std::vector<Point>& points, const std::vector<CharFn>& targets,
                                const FitParams& theta0) {
  if (targets.size() != points.size()) throw std::invalid_argument("make_density_problem: one target per point");
  FitProblem pr;
  pr.points = points;
  pr.mode = FitMode::DensityFit;
  pr.theta0 = theta0;
  for (const auto& cf : targets) {
    const FourierInverter inv(cf);
    const TabulatedCdf tab(inv);
    const double lo = tab.quantile(1e-4), hi = tab.quantile(1.0 - 1e-4);
    std::vector<double> z(128), f(128);
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = lo + (hi - lo) * static_cast<double>(k) / 127.0;
      f[k] = inv.pdf(z[k]);
    }
    pr.grids.push_back(std::move(z));
    pr.targets.push_back(std::move(f));
  }
  pr.validate();
  return pr;
}

std::vector<double> residual_charfn(const FitParams& theta, const FitProblem& problem) {
  if (problem.mode != FitMode::CharFnFit) throw std::invalid_argument("residual_charfn: not a charfn problem");
  std::vector<double> r;
  for (std::size_t j = 0; j < problem.points.size(); ++j) {
    const auto cf = fit_model_charfn(theta, problem.points[j]);
    for (std::size_t k = 0; k < problem.grids[j].size(); ++k)
      r.push_back(cf(problem.grids[j][k]).real() - problem.targets[j][k]);
  }
  return r;
}

std::vector<double> residual_density(const FitParams& theta, const FitProblem& problem, std::size_t* heavy_tail_count) {
  if (problem.mode != FitMode::DensityFit) throw std::invalid_argument("residual_density: not a density problem");
  std::vector<double> r;
  for (std::size_t j = 0; j < problem.points.size(); ++j) {
    const FourierInverter inv(fit_model_charfn(theta, problem.points[j]));
    if (heavy_tail_count && inv.heavy_tail()) ++*heavy_tail_count;
    for (std::size_t k = 0; k < problem.grids[j].size(); ++k)
      r.push_back(inv.pdf(problem.grids[j][k]) - problem.targets[j][k]);
  }
  return r;
}

std::vector<double> residual(const FitParams& theta, const FitProblem& problem) {
  return problem.mode == FitMode::CharFnFit ? residual_charfn(theta, problem) : residual_density(theta, problem);
}

Matrix forward_jacobian(const ResidualFn& residual_fn, const FitParams& u, const std::vector<double>& r0) {
  const std::size_t nr = r0.size();
  Matrix jac(nr, u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    FitParams up = u;
    double h = 1e-6 * (1.0 + std::fabs(u[i]));
    up[i] += h;
    auto rp = residual_fn(squared(up));
    if (!all_finite(rp)) {
      up[i] = u[i] - h;
      h = -h;
      rp = residual_fn(squared(up));
      if (!all_finite(rp)) throw std::runtime_error("lm_minimize: non-finite residual while differencing");
    }
    if (rp.size() != nr) throw std::runtime_error("lm_minimize: residual length changed");
    for (std::size_t k = 0; k < nr; ++k) jac(k, i) = (rp[k] - r0[k]) / h;
  }
  return jac;
}

FitResult lm_minimize(const ResidualFn& residual_fn, const FitParams& theta0, std::size_t max_iter) {
  FitParams u0;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    if (!std::isfinite(theta0[i])) throw std::invalid_argument("lm_minimize: theta0 must be finite");
    u0[i] = std::sqrt(std::fabs(theta0[i]));
  }
  return lm_minimize_u(residual_fn, u0, max_iter);
}

FitResult lm_minimize_u(const ResidualFn& residual_fn, const FitParams& u0, std::size_t max_iter) {
  constexpr std::size_t np = 5;
  for (double v : u0)
    if (!std::isfinite(v)) throw std::invalid_argument("lm_minimize: u0 must be finite");
  FitParams u = u0;
  std::vector<double> r = residual_fn(squared(u));
  if (!all_finite(r)) throw std::runtime_error("lm_minimize: non-finite residual at the initial parameters");
  double norm = norm2(r);

  FitResult res;
  res.trajectory.push_back(norm);
  res.stop_reason = "max_iter";
  double lambda = 1e-3;
  const std::size_t nr = r.size();

  if (norm == 0.0) {
    res.converged = true;
    res.stop_reason = "zero residual";
  }
  for (std::size_t iter = 0; iter < max_iter && !res.converged; ++iter) {
    res.n_iterations = iter + 1;
    const Matrix jac = forward_jacobian(residual_fn, u, r);
    Matrix a(np, np);
    std::vector<double> g(np, 0.0);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      for (std::size_t k = 0; k < nr; ++k) g[i] += jac(k, i) * r[k];
      for (std::size_t j = 0; j < np; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < nr; ++k) s += jac(k, i) * jac(k, j);
        a(i, j) = s;
      }
      max_diag = std::max(max_diag, a(i, i));
    }
    if (max_diag == 0.0) {
      res.converged = true;
      res.stop_reason = "zero Jacobian";
      break;
    }

    bool accepted = false;
    std::vector<double> delta(np), neg_g(np);
    for (std::size_t i = 0; i < np; ++i) neg_g[i] = -g[i];
    FitParams u_new{};
    std::vector<double> r_new;
    double norm_new = norm;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Matrix m = a;
      for (std::size_t i = 0; i < np; ++i) m(i, i) += lambda * max_diag;
      if (cholesky_solve(m, neg_g, delta)) {
        for (std::size_t i = 0; i < np; ++i) u_new[i] = u[i] + delta[i];
        r_new = residual_fn(squared(u_new));
        if (all_finite(r_new)) {
          norm_new = norm2(r_new);
          accepted = norm_new < norm;
        }
      }
      if (accepted)
        lambda = std::max(lambda / 10.0, 1e-15);
      else
        lambda *= 10.0;
    }
    if (!accepted) {
      res.converged = true;
      res.stop_reason = "no descent step";
      break;
    }
    double step = 0.0;
    for (double d : delta) step += d * d;
    step = std::sqrt(step);
    const double rel = (norm - norm_new) / norm;
    u = u_new;
    r = std::move(r_new);
    norm = norm_new;
    res.trajectory.push_back(norm);
    if (norm == 0.0 || rel < 1e-10) {
      res.converged = true;
      res.stop_reason = "relative decrease";
    } else if (step < 1e-12) {
      res.converged = true;
      res.stop_reason = "small step";
    }
  }
  res.theta_hat = squared(u);
  res.residual_norm = norm2(residual_fn(res.theta_hat));
  return res;
}

double sup_error(const FitParams& theta, const FitProblem& problem) {
  double s = 0.0;
  for (double v : residual(theta, problem)) s = std::max(s, std::fabs(v));
  return s;
}

}  // namespace subfield
