#pragma once

#include <cstddef>
#include <vector>

#include "subfield/grf.hpp"
#include "subfield/subordinator.hpp"

namespace subfield {

// L(x) = W(l_1(x_1), ..., l_d(x_d)), or W(|l_1(x_1)|, ...) in abs_mode.
struct FieldModel {
  CovarianceModel cov;
  std::vector<SubordinatorModel> subs;
  std::vector<double> horizon;
  bool abs_mode = false;

  std::size_t dim() const { return subs.size(); }
  void validate() const;
  // Box check for a spatial point.
  void check_point(const Point& x) const;
};

// Repeated joint draws at a fixed point set. The per-axis coordinate sets are
// computed once; every draw samples one subordinator skeleton per axis on
// the sorted distinct coordinates, maps points to their transformed
// locations, merges exactly coincident locations and draws W there.
class FieldSampler {
 public:
  FieldSampler(FieldModel model, std::vector<Point> points);

  void draw(RngStream& rng, std::vector<double>& out);
  std::vector<double> draw(RngStream& rng);

  const FieldModel& model() const { return model_; }
  const std::vector<Point>& points() const { return points_; }
  // Transformed locations and jitter of the most recent draw.
  const std::vector<Point>& last_transformed() const { return transformed_; }
  double last_jitter() const { return last_jitter_; }

 private:
  FieldModel model_;
  std::vector<Point> points_;
  std::vector<std::vector<double>> axis_coords_;
  std::vector<std::vector<std::size_t>> axis_index_;  // [axis][point]
  std::vector<Point> transformed_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> unique_of_;
  std::vector<Point> unique_pts_;
  double last_jitter_ = 0.0;
};

std::vector<double> sample_at_points(RngStream& rng, const FieldModel& model, const std::vector<Point>& points);

constexpr std::size_t kMaxGridPoints = 10000;

struct GridSample {
  std::vector<std::vector<double>> axes;  // coordinates per axis
  std::vector<double> values;             // row-major, first axis slowest
};

// Axis k carries n_k equispaced coordinates i*T_k/(n_k-1); n_k = 1 places the
// single coordinate at T_k.
std::vector<double> grid_axis(double horizon, std::size_t n);
GridSample sample_grid(RngStream& rng, const FieldModel& model, const std::vector<std::size_t>& n_per_axis);

}  // namespace subfield
