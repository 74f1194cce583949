#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <memory>

#include "llab/harness.hpp"
#include "llab/landscape.hpp"
#include "llab/rng.hpp"
#include "oracles.hpp"

using namespace llab;
using namespace llab::landscape;

namespace {

ParamVector vec(std::vector<double> v) {
  auto layout = std::make_shared<ParamLayout>();
  layout->total = v.size();
  return unflatten(std::move(v), layout);
}

// Brute-force barrier on a continuous profile, sampled at 10x the coarse
// resolution on a strict superset of the coarse grid.
BarrierResult brute_force_barrier(const std::function<double(double)>& profile,
                                  std::size_t coarse_points) {
  const std::size_t n = (coarse_points - 1) * 10 + 1;
  std::vector<double> lambdas(n), losses(n);
  for (std::size_t i = 0; i < n; ++i) {
    lambdas[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    losses[i] = profile(lambdas[i]);
  }
  return barrier_check(lambdas, losses);
}

}  // namespace

TEST_CASE("segment report: constant pair and endpoint consistency") {
  const Dataset data = make_two_moons(120, 0.1, 2);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector wm = init_params(spec, 10);
  const ParamVector wn = init_params(spec, 20);

  const SegmentReport constant = segment_eval(spec, wm, wm, 5, data);
  for (const auto& p : constant.points) {
    CHECK(p.train_loss == constant.points[0].train_loss);
  }

  const SegmentReport seg = segment_eval(spec, wm, wn, 5, data);
  CHECK(seg.points.front().lambda == 0.0);
  CHECK(seg.points.back().lambda == 1.0);
  const EvalMetrics at_n = evaluate_params(spec, wn, data);
  const EvalMetrics at_m = evaluate_params(spec, wm, data);
  CHECK(seg.points.front().train_loss == at_n.train.loss);  // lambda=0 -> w_n
  CHECK(seg.points.back().train_loss == at_m.train.loss);   // lambda=1 -> w_m
}

TEST_CASE("double-well profile peaks at the midpoint with height 1") {
  // L(w) = (w^2 - 1)^2 along w(lambda) = lambda*1 + (1-lambda)*(-1) = 2*lambda - 1.
  const auto profile = [](double lambda) {
    const double w = 2.0 * lambda - 1.0;
    return (w * w - 1.0) * (w * w - 1.0);
  };
  std::vector<double> lambdas(25), losses(25);
  for (std::size_t i = 0; i < 25; ++i) {
    lambdas[i] = static_cast<double>(i) / 24.0;
    losses[i] = profile(lambdas[i]);
  }
  const BarrierResult r = barrier_check(lambdas, losses);
  CHECK(r.has_barrier);
  CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.height == doctest::Approx(1.0).epsilon(1e-12));  // L(0) = 1, endpoints 0
}

TEST_CASE("monotone profiles have no barrier") {
  std::vector<double> lambdas(11), losses(11);
  for (std::size_t i = 0; i < 11; ++i) {
    lambdas[i] = i / 10.0;
    losses[i] = 3.0 - 2.0 * lambdas[i];
  }
  const BarrierResult r = barrier_check(lambdas, losses);
  CHECK(!r.has_barrier);
  CHECK(r.height == 0.0);
}

TEST_CASE("barrier detection agrees with 10x-resolution brute force") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    // Random smooth profile: a few cosine bumps on a linear ramp.
    const double a = rng.uniform(-1.0, 1.0);
    const double b1 = rng.uniform(0.0, 2.0), f1 = rng.uniform(0.5, 3.0);
    const double b2 = rng.uniform(0.0, 1.0), f2 = rng.uniform(0.5, 6.0);
    const auto profile = [&](double x) {
      return 2.0 + a * x + b1 * std::sin(f1 * 3.14159 * x) * std::sin(f1 * 3.14159 * x) +
             b2 * std::cos(f2 * x);
    };
    const std::size_t coarse = 25;
    std::vector<double> lambdas(coarse), losses(coarse);
    for (std::size_t i = 0; i < coarse; ++i) {
      lambdas[i] = static_cast<double>(i) / static_cast<double>(coarse - 1);
      losses[i] = profile(lambdas[i]);
    }
    const BarrierResult got = barrier_check(lambdas, losses);
    const BarrierResult dense = brute_force_barrier(profile, coarse);
    if (dense.has_barrier && dense.height > 0.05) {
      CHECK(got.has_barrier);  // well-resolved barriers are found at coarse resolution
      CHECK(got.height <= dense.height + 1e-12);  // coarse height is a lower bound
    }
    if (!dense.has_barrier) CHECK(!got.has_barrier);
  }
}

TEST_CASE("barrier check is invariant to segment orientation") {
  Rng rng(4);
  std::vector<double> lambdas(15), losses(15);
  for (std::size_t i = 0; i < 15; ++i) {
    lambdas[i] = i / 14.0;
    losses[i] = rng.uniform(0.0, 2.0);
  }
  std::vector<double> rev_losses(losses.rbegin(), losses.rend());
  const BarrierResult fwd = barrier_check(lambdas, losses);
  const BarrierResult rev = barrier_check(lambdas, rev_losses);
  CHECK(fwd.has_barrier == rev.has_barrier);
  CHECK(fwd.height == doctest::Approx(rev.height).epsilon(1e-15));
}

TEST_CASE("plane basis reproduces hand Gram-Schmidt on 3-d unit vectors") {
  const ParamVector e1 = vec({1.0, 0.0, 0.0});
  const ParamVector e2 = vec({0.0, 1.0, 0.0});
  const ParamVector e3 = vec({0.0, 0.0, 1.0});
  const PlaneBasis basis = plane_basis(e1, e2, e3);

  // u = e2 - e1; raw v = e3 - e1; v = raw - (raw.u/|u|^2) u = (-1/2, -1/2, 1).
  CHECK(basis.u.values == std::vector<double>{-1.0, 1.0, 0.0});
  CHECK(basis.u_norm == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(basis.v.values[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(basis.v.values[1] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(basis.v.values[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dot(basis.u, basis.v) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(basis.coord_a[0] == 0.0);
  CHECK(basis.coord_b[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(basis.coord_b[1] == 0.0);
  // theta coordinate along u: (raw_v . u)/|u| = 1/sqrt(2); along v: |v| = sqrt(3/2).
  CHECK(basis.coord_theta[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(basis.coord_theta[1] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-12));
}

TEST_CASE("collinear generators are a degenerate plane") {
  const ParamVector a = vec({0.0, 0.0});
  const ParamVector b = vec({1.0, 1.0});
  const ParamVector mid = vec({0.5, 0.5});
  CHECK_THROWS_AS(plane_basis(a, b, mid), std::invalid_argument);
  CHECK_THROWS_AS(plane_basis(a, a, b), std::invalid_argument);
}

TEST_CASE("plane basis orthogonality on random high-dimensional generators") {
  Rng rng(8);
  std::vector<double> av(100), bv(100), tv(100);
  for (std::size_t i = 0; i < 100; ++i) {
    av[i] = rng.normal();
    bv[i] = rng.normal();
    tv[i] = rng.normal();
  }
  const PlaneBasis basis = plane_basis(vec(av), vec(bv), vec(tv));
  CHECK(std::abs(dot(basis.u, basis.v)) <= 1e-9 * basis.u_norm * basis.v_norm);
}

TEST_CASE("projection: in-plane idempotence and generator coefficients") {
  Rng rng(21);
  std::vector<double> av(40), bv(40), tv(40);
  for (std::size_t i = 0; i < 40; ++i) {
    av[i] = rng.normal();
    bv[i] = rng.normal();
    tv[i] = rng.normal();
  }
  const ParamVector wa = vec(av), wb = vec(bv), th = vec(tv);
  const PlaneBasis basis = plane_basis(wa, wb, th);

  // A point already in the plane projects to itself.
  ParamVector in_plane = zeros_like(wa);
  axpy(0.2, wa, in_plane);
  axpy(0.3, wb, in_plane);
  axpy(0.5, th, in_plane);
  const ProjectionResult p = project_to_plane(basis, in_plane);
  CHECK(p.residual_norm <= 1e-9 * norm(in_plane));
  CHECK(p.lambda[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(p.lambda[1] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(p.lambda[2] == doctest::Approx(0.5).epsilon(1e-9));

  // The generator theta maps to (0, 0, 1).
  const ProjectionResult pt = project_to_plane(basis, th);
  CHECK(pt.lambda[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pt.lambda[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pt.lambda[2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(pt.coords[0] - basis.coord_theta[0]) < 1e-9);
  CHECK(std::abs(pt.coords[1] - basis.coord_theta[1]) < 1e-9);
}

TEST_CASE("projection matches the normal-equations oracle on random 5-d cases") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> av(5), bv(5), tv(5), wv(5);
    for (std::size_t i = 0; i < 5; ++i) {
      av[i] = rng.normal();
      bv[i] = rng.normal();
      tv[i] = rng.normal();
      wv[i] = rng.normal();
    }
    const ParamVector wa = vec(av), wb = vec(bv), th = vec(tv), wn = vec(wv);
    const PlaneBasis basis = plane_basis(wa, wb, th);
    const ProjectionResult got = project_to_plane(basis, wn);
    const std::vector<double> expect = oracles::normal_equations_projection(av, bv, tv, wv);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(std::abs(got.projected.values[i] - expect[i]) <= 1e-9);
    }
    // Residual orthogonal to both basis directions.
    const ParamVector residual = lincomb(1.0, wn, -1.0, got.projected);
    CHECK(std::abs(dot(residual, basis.u)) <= 1e-9 * basis.u_norm * (norm(residual) + 1.0));
    CHECK(std::abs(dot(residual, basis.v)) <= 1e-9 * basis.v_norm * (norm(residual) + 1.0));
    // Affine coefficients sum to one.
    CHECK(got.lambda[0] + got.lambda[1] + got.lambda[2] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("span projection agrees with the affine one when the span contains the hull") {
  // Generators whose span contains the affine hull: make w_a, w_b, theta
  // linearly independent; project a vector lying in the affine hull plus a
  // normal component.
  Rng rng(41);
  std::vector<double> av(6), bv(6), tv(6);
  for (std::size_t i = 0; i < 6; ++i) {
    av[i] = rng.normal();
    bv[i] = rng.normal();
    tv[i] = rng.normal();
  }
  const ParamVector wa = vec(av), wb = vec(bv), th = vec(tv);
  ParamVector probe = zeros_like(wa);
  axpy(0.7, wa, probe);
  axpy(0.2, wb, probe);
  axpy(0.1, th, probe);
  const ProjectionResult span = project_to_span(wa, wb, th, probe);
  CHECK(span.residual_norm <= 1e-9);
  CHECK(span.lambda[0] == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(span.lambda[1] == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(span.lambda[2] == doctest::Approx(0.1).epsilon(1e-8));
}

TEST_CASE("grid evaluation reproduces an analytic paraboloid") {
  const ParamVector wa = vec({1.0, 0.0, 0.0});
  const ParamVector wb = vec({0.0, 1.0, 0.0});
  const ParamVector th = vec({0.0, 0.0, 1.0});
  const PlaneBasis basis = plane_basis(wa, wb, th);

  GridBounds bounds{-0.5, 2.0, -0.5, 2.0};
  const MetricFn paraboloid = [](const ParamVector& p) { return dot(p, p); };
  const LossGrid grid = grid_eval(basis, bounds, 7, 6, Metric::TrainLoss, paraboloid);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const double x = bounds.x_min + (bounds.x_max - bounds.x_min) * ix / 6.0;
      const double y = bounds.y_min + (bounds.y_max - bounds.y_min) * iy / 5.0;
      const ParamVector p = plane_point(basis, x, y);
      CHECK(grid.value_at(ix, iy) == doctest::Approx(dot(p, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-finite metric values mark overflow cells without killing the grid") {
  const PlaneBasis basis = plane_basis(vec({1.0, 0.0, 0.0}), vec({0.0, 1.0, 0.0}),
                                       vec({0.0, 0.0, 1.0}));
  GridBounds bounds{0.0, 1.0, 0.0, 1.0};
  int node = 0;
  const MetricFn spiky = [&node](const ParamVector&) -> double {
    return (node++ % 5 == 2) ? std::numeric_limits<double>::infinity() : 1.0;
  };
  const LossGrid grid = grid_eval(basis, bounds, 4, 4, Metric::TrainLoss, spiky);
  std::size_t overflow_count = 0;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (grid.overflow[i]) {
      ++overflow_count;
      CHECK(std::isnan(grid.values[i]));
    } else {
      CHECK(grid.values[i] == 1.0);
    }
  }
  CHECK(overflow_count > 0);
}

TEST_CASE("grid node at a generator matches direct evaluation bit for bit") {
  const Dataset data = make_two_moons(80, 0.1, 3);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector wa = init_params(spec, 1);
  const ParamVector wb = init_params(spec, 2);
  const ParamVector th = init_params(spec, 3);
  const PlaneBasis basis = plane_basis(wa, wb, th);

  GridBounds bounds;
  bounds.x_min = 0.0;
  bounds.x_max = basis.coord_b[0];
  bounds.y_min = 0.0;
  bounds.y_max = basis.coord_theta[1];
  const LossGrid grid = grid_eval(basis, spec, bounds, 3, 3, Metric::TrainLoss, data);
  const double direct = evaluate_params(spec, wa, data).train.loss;
  CHECK(grid.value_at(0, 0) == direct);

  // And the full grid is finite here.
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    CHECK(grid.overflow[i] == 0);
    CHECK(std::isfinite(grid.values[i]));
  }
  CHECK_THROWS_AS(grid_eval(basis, spec, bounds, 1, 3, Metric::TrainLoss, data),
                  std::invalid_argument);
}

TEST_CASE("parallel grid evaluation matches single-threaded") {
  const Dataset data = make_two_moons(80, 0.1, 5);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const PlaneBasis basis =
      plane_basis(init_params(spec, 1), init_params(spec, 2), init_params(spec, 3));
  const GridBounds bounds = default_bounds(basis);
  const LossGrid serial = grid_eval(basis, spec, bounds, 5, 4, Metric::ValLoss, data, 1);
  const LossGrid parallel = grid_eval(basis, spec, bounds, 5, 4, Metric::ValLoss, data, 4);
  CHECK(serial.values == parallel.values);
}
