#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "llab/datasets.hpp"
#include "llab/eval.hpp"
#include "llab/network.hpp"

namespace llab::landscape {

struct SegmentPoint {
  double lambda = 0.0;
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

// Metrics along w(lambda) = lambda*w_m + (1-lambda)*w_n on a uniform grid
// that contains both endpoints (lambda=0 is w_n, lambda=1 is w_m).
struct SegmentReport {
  std::vector<SegmentPoint> points;
};

SegmentReport segment_eval(const NetworkSpec& spec, const ParamVector& w_m,
                           const ParamVector& w_n, std::size_t n_points, const Dataset& data,
                           std::size_t threads = 1);

struct BarrierResult {
  bool has_barrier = false;
  double height = 0.0;  // max interior loss minus max endpoint loss, when positive
  double lambda = 0.0;  // grid location of the interior maximum
};

// Grid-resolution barrier test on the train-loss profile: the reported
// height is a lower bound on the true barrier along the segment.
BarrierResult barrier_check(const SegmentReport& report);
BarrierResult barrier_check(const std::vector<double>& lambdas, const std::vector<double>& losses);

// Orthogonal 2-D frame for the plane through three parameter vectors:
// origin w_a, u = w_b - w_a, v = component of (theta - w_a) orthogonal to u.
// Plane coordinates are Euclidean distances along the unit directions.
struct PlaneBasis {
  ParamVector origin;
  ParamVector u;  // unnormalized
  ParamVector v;  // unnormalized, orthogonal to u
  double u_norm = 0.0;
  double v_norm = 0.0;
  std::array<double, 2> coord_a{}, coord_b{}, coord_theta{};
};

PlaneBasis plane_basis(const ParamVector& w_a, const ParamVector& w_b, const ParamVector& theta);

ParamVector plane_point(const PlaneBasis& basis, double x, double y);

struct ProjectionResult {
  std::array<double, 3> lambda{};  // coefficients over (w_a, w_b, theta)
  std::array<double, 2> coords{};  // plane coordinates of the projection
  ParamVector projected;
  double residual_norm = 0.0;
};

// Nearest point of the plane (affine hull of the three generators); the
// recovered lambda coefficients sum to 1.
ProjectionResult project_to_plane(const PlaneBasis& basis, const ParamVector& w_n);

// Unconstrained 3-coefficient least squares over span{w_a, w_b, theta}; the
// coefficients need not sum to 1. Matches the affine projection whenever the
// span contains the affine hull.
ProjectionResult project_to_span(const ParamVector& w_a, const ParamVector& w_b,
                                 const ParamVector& theta, const ParamVector& w_n);

enum class Metric { TrainLoss, ValLoss, TrainAcc, ValAcc };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);

struct GridBounds {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
};

struct LossGrid {
  GridBounds bounds;
  std::size_t nx = 0, ny = 0;
  std::vector<double> values;          // row-major [iy*nx + ix]
  std::vector<std::uint8_t> overflow;  // non-finite metric at this node
  Metric metric = Metric::TrainLoss;
  struct IteratePoint {
    std::string label;
    double x = 0.0, y = 0.0, residual = 0.0;
  };
  std::vector<IteratePoint> iterates;

  double value_at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
};

// Default window: generator triangle plus margin.
GridBounds default_bounds(const PlaneBasis& basis, double margin = 0.25);

// Generic node evaluation: the callback maps a plane point to a scalar.
// Non-finite results (returned or thrown as OverflowError) mark the cell as
// overflow; the rest of the grid is still produced.
using MetricFn = std::function<double(const ParamVector&)>;
LossGrid grid_eval(const PlaneBasis& basis, const GridBounds& bounds, std::size_t nx,
                   std::size_t ny, Metric metric, const MetricFn& fn, std::size_t threads = 1);

LossGrid grid_eval(const PlaneBasis& basis, const NetworkSpec& spec, const GridBounds& bounds,
                   std::size_t nx, std::size_t ny, Metric metric, const Dataset& data,
                   std::size_t threads = 1);

}  // namespace llab::landscape
