#include "llab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "llab/errors.hpp"

namespace llab::landscape {

SegmentReport segment_eval(const NetworkSpec& spec, const ParamVector& w_m,
                           const ParamVector& w_n, std::size_t n_points, const Dataset& data,
                           std::size_t threads) {
  if (n_points < 3) throw std::invalid_argument("segment evaluation needs n_points >= 3");
  SegmentReport report;
  report.points.resize(n_points);
  const auto eval_one = [&](std::size_t k) {
    const double lambda = static_cast<double>(k) / static_cast<double>(n_points - 1);
    const ParamVector p = lincomb(lambda, w_m, 1.0 - lambda, w_n);
    const EvalMetrics m = evaluate_params(spec, p, data);
    report.points[k] = {lambda, m.train.loss, m.train.accuracy, m.val.loss, m.val.accuracy};
  };
  if (threads <= 1) {
    for (std::size_t k = 0; k < n_points; ++k) eval_one(k);
  } else {
    std::vector<std::thread> pool;
    const std::size_t stride = std::min(threads, n_points);
    for (std::size_t w = 0; w < stride; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < n_points; k += stride) eval_one(k);
      });
    }
    for (auto& th : pool) th.join();
  }
  return report;
}

BarrierResult barrier_check(const std::vector<double>& lambdas, const std::vector<double>& losses) {
  if (losses.size() < 3 || lambdas.size() != losses.size()) {
    throw std::invalid_argument("barrier check needs >= 3 profile points");
  }
  const double endpoint_max = std::max(losses.front(), losses.back());
  BarrierResult r;
  double interior_max = -1.0;
  for (std::size_t i = 1; i + 1 < losses.size(); ++i) {
    if (losses[i] > interior_max) {
      interior_max = losses[i];
      r.lambda = lambdas[i];
    }
  }
  if (interior_max > endpoint_max) {
    r.has_barrier = true;
    r.height = interior_max - endpoint_max;
  } else {
    r.lambda = 0.0;
  }
  return r;
}

BarrierResult barrier_check(const SegmentReport& report) {
  std::vector<double> lambdas, losses;
  lambdas.reserve(report.points.size());
  losses.reserve(report.points.size());
  for (const auto& p : report.points) {
    lambdas.push_back(p.lambda);
    losses.push_back(p.train_loss);
  }
  return barrier_check(lambdas, losses);
}

PlaneBasis plane_basis(const ParamVector& w_a, const ParamVector& w_b, const ParamVector& theta) {
  PlaneBasis basis;
  basis.origin = w_a;
  basis.u = lincomb(1.0, w_b, -1.0, w_a);
  ParamVector raw_v = lincomb(1.0, theta, -1.0, w_a);

  basis.u_norm = norm(basis.u);
  const double raw_v_norm = norm(raw_v);
  if (basis.u_norm == 0.0 || raw_v_norm == 0.0) {
    throw std::invalid_argument("degenerate plane: generator points coincide");
  }
  const double along = dot(raw_v, basis.u) / (basis.u_norm * basis.u_norm);
  basis.v = raw_v;
  axpy(-along, basis.u, basis.v);
  basis.v_norm = norm(basis.v);
  if (basis.v_norm <= 1e-12 * raw_v_norm) {
    throw std::invalid_argument("degenerate plane: the three generator points are collinear");
  }
  basis.coord_a = {0.0, 0.0};
  basis.coord_b = {basis.u_norm, 0.0};
  basis.coord_theta = {along * basis.u_norm, basis.v_norm};
  return basis;
}

ParamVector plane_point(const PlaneBasis& basis, double x, double y) {
  ParamVector p = basis.origin;
  axpy(x / basis.u_norm, basis.u, p);
  axpy(y / basis.v_norm, basis.v, p);
  return p;
}

ProjectionResult project_to_plane(const PlaneBasis& basis, const ParamVector& w_n) {
  ParamVector rel = lincomb(1.0, w_n, -1.0, basis.origin);
  const double x = dot(rel, basis.u) / basis.u_norm;
  const double y = dot(rel, basis.v) / basis.v_norm;

  ProjectionResult r;
  r.coords = {x, y};
  r.projected = plane_point(basis, x, y);
  ParamVector residual = lincomb(1.0, w_n, -1.0, r.projected);
  r.residual_norm = norm(residual);

  // Back out barycentric-style coefficients over (w_a, w_b, theta).
  const double l_theta = y / basis.coord_theta[1];
  const double l_b = (x - l_theta * basis.coord_theta[0]) / basis.coord_b[0];
  r.lambda = {1.0 - l_b - l_theta, l_b, l_theta};
  return r;
}

ProjectionResult project_to_span(const ParamVector& w_a, const ParamVector& w_b,
                                 const ParamVector& theta, const ParamVector& w_n) {
  // Normal equations G c = rhs for the 3 generators.
  const ParamVector* gen[3] = {&w_a, &w_b, &theta};
  double g[3][3];
  double rhs[3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) g[i][j] = dot(*gen[i], *gen[j]);
    rhs[i] = dot(*gen[i], w_n);
  }
  // Gaussian elimination with partial pivoting on the 3x3 system.
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::fabs(g[perm[row]][col]) > std::fabs(g[perm[pivot]][col])) pivot = row;
    }
    std::swap(perm[col], perm[pivot]);
    const double d = g[perm[col]][col];
    if (std::fabs(d) < 1e-300) {
      throw std::invalid_argument("span projection: generators are linearly dependent");
    }
    for (int row = col + 1; row < 3; ++row) {
      const double f = g[perm[row]][col] / d;
      for (int k = col; k < 3; ++k) g[perm[row]][k] -= f * g[perm[col]][k];
      rhs[perm[row]] -= f * rhs[perm[col]];
    }
  }
  double c[3];
  for (int col = 2; col >= 0; --col) {
    double acc = rhs[perm[col]];
    for (int k = col + 1; k < 3; ++k) acc -= g[perm[col]][k] * c[k];
    c[col] = acc / g[perm[col]][col];
  }

  ProjectionResult r;
  r.lambda = {c[0], c[1], c[2]};
  r.projected = zeros_like(w_n);
  axpy(c[0], w_a, r.projected);
  axpy(c[1], w_b, r.projected);
  axpy(c[2], theta, r.projected);
  ParamVector residual = lincomb(1.0, w_n, -1.0, r.projected);
  r.residual_norm = norm(residual);

  const PlaneBasis basis = plane_basis(w_a, w_b, theta);
  ParamVector rel = lincomb(1.0, r.projected, -1.0, basis.origin);
  r.coords = {dot(rel, basis.u) / basis.u_norm, dot(rel, basis.v) / basis.v_norm};
  return r;
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::TrainLoss: return "train-loss";
    case Metric::ValLoss: return "val-loss";
    case Metric::TrainAcc: return "train-acc";
    case Metric::ValAcc: return "val-acc";
  }
  return "?";
}

Metric metric_from_name(const std::string& name) {
  if (name == "train-loss") return Metric::TrainLoss;
  if (name == "val-loss") return Metric::ValLoss;
  if (name == "train-acc") return Metric::TrainAcc;
  if (name == "val-acc") return Metric::ValAcc;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

GridBounds default_bounds(const PlaneBasis& basis, double margin) {
  GridBounds b;
  const double xs[3] = {basis.coord_a[0], basis.coord_b[0], basis.coord_theta[0]};
  const double ys[3] = {basis.coord_a[1], basis.coord_b[1], basis.coord_theta[1]};
  b.x_min = *std::min_element(xs, xs + 3);
  b.x_max = *std::max_element(xs, xs + 3);
  b.y_min = *std::min_element(ys, ys + 3);
  b.y_max = *std::max_element(ys, ys + 3);
  const double dx = (b.x_max - b.x_min) * margin;
  const double dy = (b.y_max - b.y_min) * margin;
  b.x_min -= dx;
  b.x_max += dx;
  b.y_min -= dy;
  b.y_max += dy;
  return b;
}

LossGrid grid_eval(const PlaneBasis& basis, const GridBounds& bounds, std::size_t nx,
                   std::size_t ny, Metric metric, const MetricFn& fn, std::size_t threads) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("grid resolution must be >= 2 per axis");
  LossGrid grid;
  grid.bounds = bounds;
  grid.nx = nx;
  grid.ny = ny;
  grid.metric = metric;
  grid.values.assign(nx * ny, 0.0);
  grid.overflow.assign(nx * ny, 0);

  const auto eval_node = [&](std::size_t idx) {
    const std::size_t ix = idx % nx, iy = idx / nx;
    const double x =
        bounds.x_min + (bounds.x_max - bounds.x_min) * static_cast<double>(ix) /
                           static_cast<double>(nx - 1);
    const double y =
        bounds.y_min + (bounds.y_max - bounds.y_min) * static_cast<double>(iy) /
                           static_cast<double>(ny - 1);
    double value = 0.0;
    try {
      value = fn(plane_point(basis, x, y));
    } catch (const OverflowError&) {
      value = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(value)) {
      grid.overflow[idx] = 1;
      grid.values[idx] = std::numeric_limits<double>::quiet_NaN();
    } else {
      grid.values[idx] = value;
    }
  };

  const std::size_t total = nx * ny;
  if (threads <= 1) {
    for (std::size_t i = 0; i < total; ++i) eval_node(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t stride = std::min(threads, total);
    for (std::size_t w = 0; w < stride; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < total; i += stride) eval_node(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return grid;
}

LossGrid grid_eval(const PlaneBasis& basis, const NetworkSpec& spec, const GridBounds& bounds,
                   std::size_t nx, std::size_t ny, Metric metric, const Dataset& data,
                   std::size_t threads) {
  const MetricFn fn = [&](const ParamVector& p) {
    switch (metric) {
      case Metric::TrainLoss: return evaluate_split(spec, p, data.train_x, data.train_y).loss;
      case Metric::ValLoss: return evaluate_split(spec, p, data.val_x, data.val_y).loss;
      case Metric::TrainAcc: return evaluate_split(spec, p, data.train_x, data.train_y).accuracy;
      case Metric::ValAcc: return evaluate_split(spec, p, data.val_x, data.val_y).accuracy;
    }
    return 0.0;
  };
  return grid_eval(basis, bounds, nx, ny, metric, fn, threads);
}

}  // namespace llab::landscape
