#include "subfield/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace subfield {

void FieldModel::validate() const {
  cov.validate();
  if (subs.size() < 2) throw std::invalid_argument("FieldModel: need d >= 2 subordinators");
  if (subs.size() != cov.dim || horizon.size() != cov.dim)
    throw std::invalid_argument("FieldModel: subordinator count, horizon length and covariance dimension differ");
  for (double t : horizon)
    if (!(t > 0.0)) throw std::invalid_argument("FieldModel: horizon entries must be > 0");
  for (const auto& s : subs)
    if (!s.is_subordinator() && !abs_mode)
      throw std::invalid_argument("FieldModel: a Student-t process requires abs_mode");
}

void FieldModel::check_point(const Point& x) const {
  if (x.size() != dim()) throw std::invalid_argument("FieldModel: point dimension mismatch");
  for (std::size_t k = 0; k < x.size(); ++k)
    if (!(x[k] >= 0.0 && x[k] <= horizon[k])) throw std::invalid_argument("FieldModel: point outside [0, T]");
}

FieldSampler::FieldSampler(FieldModel model, std::vector<Point> points) : model_(std::move(model)), points_(std::move(points)) {
  model_.validate();
  if (points_.empty()) throw std::invalid_argument("FieldSampler: empty point list");
  for (const auto& p : points_) model_.check_point(p);
  const std::size_t d = model_.dim();
  const std::size_t n = points_.size();
  axis_coords_.resize(d);
  axis_index_.assign(d, std::vector<std::size_t>(n));
  for (std::size_t k = 0; k < d; ++k) {
    auto& c = axis_coords_[k];
    for (const auto& p : points_) c.push_back(p[k]);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (std::size_t i = 0; i < n; ++i)
      axis_index_[k][i] = static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), points_[i][k]) - c.begin());
  }
  transformed_.assign(n, Point(d));
  order_.resize(n);
  unique_of_.resize(n);
}

void FieldSampler::draw(RngStream& rng, std::vector<double>& out) {
  const std::size_t d = model_.dim();
  const std::size_t n = points_.size();
  for (std::size_t k = 0; k < d; ++k) {
    const SubordinatorPath path = path_sample(rng, model_.subs[k], axis_coords_[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = path.values[axis_index_[k][i]];
      transformed_[i][k] = model_.abs_mode ? std::fabs(v) : v;
    }
  }
  out.resize(n);
  if (n == 1) {
    const double var = variance_fn(model_.cov, transformed_[0]);
    last_jitter_ = 0.0;
    out[0] = std::sqrt(var) * rng.normal();
    return;
  }
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return transformed_[a] < transformed_[b]; });
  unique_pts_.clear();
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i = order_[j];
    if (unique_pts_.empty() || unique_pts_.back() != transformed_[i]) unique_pts_.push_back(transformed_[i]);
    unique_of_[i] = unique_pts_.size() - 1;
  }
  const MvnFactor f = mvn_factorize(covariance_matrix(model_.cov, unique_pts_));
  last_jitter_ = f.jitter_used;
  const std::vector<double> w = mvn_sample(rng, std::vector<double>(unique_pts_.size(), 0.0), f);
  for (std::size_t i = 0; i < n; ++i) out[i] = w[unique_of_[i]];
}

std::vector<double> FieldSampler::draw(RngStream& rng) {
  std::vector<double> out;
  draw(rng, out);
  return out;
}

std::vector<double> sample_at_points(RngStream& rng, const FieldModel& model, const std::vector<Point>& points) {
  FieldSampler s(model, points);
  return s.draw(rng);
}

std::vector<double> grid_axis(double horizon, std::size_t n) {
  if (n == 0) throw std::invalid_argument("grid_axis: need at least one node");
  if (n == 1) return {horizon};
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = horizon * static_cast<double>(i) / static_cast<double>(n - 1);
  c.back() = horizon;
  return c;
}

GridSample sample_grid(RngStream& rng, const FieldModel& model, const std::vector<std::size_t>& n_per_axis) {
  model.validate();
  if (n_per_axis.size() != model.dim()) throw std::invalid_argument("sample_grid: one count per axis required");
  std::size_t total = 1;
  for (std::size_t n : n_per_axis) {
    if (n == 0) throw std::invalid_argument("sample_grid: counts must be >= 1");
    if (total > kMaxGridPoints / n) throw std::invalid_argument("sample_grid: grid too large (more than 10^4 points)");
    total *= n;
  }
  GridSample g;
  for (std::size_t k = 0; k < model.dim(); ++k) g.axes.push_back(grid_axis(model.horizon[k], n_per_axis[k]));
  std::vector<Point> pts;
  pts.reserve(total);
  std::vector<std::size_t> idx(model.dim(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point p(model.dim());
    for (std::size_t k = 0; k < model.dim(); ++k) p[k] = g.axes[k][idx[k]];
    pts.push_back(std::move(p));
    for (std::size_t k = model.dim(); k-- > 0;) {
      if (++idx[k] < n_per_axis[k]) break;
      idx[k] = 0;
    }
  }
  FieldSampler sampler(model, pts);
  sampler.draw(rng, g.values);
  // Points on a common axis coordinate must see one subordinator value.
  const auto& tr = sampler.last_transformed();
  std::size_t stride = total;
  for (std::size_t k = 0; k < model.dim(); ++k) {
    stride /= n_per_axis[k];
    std::vector<double> seen(n_per_axis[k], std::nan(""));
    for (std::size_t i = 0; i < total; ++i) {
      const std::size_t c = (i / stride) % n_per_axis[k];
      if (std::isnan(seen[c]))
        seen[c] = tr[i][k];
      else if (seen[c] != tr[i][k])
        throw std::logic_error("sample_grid: shared coordinate mapped to distinct subordinator values");
    }
  }
  return g;
}

}  // namespace subfield
