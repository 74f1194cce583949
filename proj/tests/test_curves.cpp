#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "llab/curves.hpp"
#include "llab/errors.hpp"
#include "llab/harness.hpp"
#include "llab/landscape.hpp"

using namespace llab;
using curves::CurveModel;

namespace {

std::shared_ptr<const ParamLayout> bare_layout(std::size_t n) {
  auto layout = std::make_shared<ParamLayout>();
  layout->total = n;
  return layout;
}

ParamVector vec(std::vector<double> v) {
  auto layout = bare_layout(v.size());
  return unflatten(std::move(v), layout);
}

// Dense-grid approximation of the training objective E_t L(phi(t)).
double grid_objective(const CurveModel& curve, const std::function<double(double)>& loss_of_w,
                      std::size_t n = 2001) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    acc += loss_of_w(curves::curve_point(curve, t).values[0]);
  }
  return acc / static_cast<double>(n);
}

}  // namespace

TEST_CASE("curve point algebra: endpoints, bend, quarter point") {
  const ParamVector a = vec({1.0, 2.0, 3.0});
  const ParamVector b = vec({-1.0, 0.5, 4.0});
  CurveModel c = curves::init_curve(a, b);
  c.bend = vec({10.0, -2.0, 0.0});

  CHECK(curves::curve_point(c, 0.0).values == a.values);
  CHECK(curves::curve_point(c, 1.0).values == b.values);
  CHECK(curves::curve_point(c, 0.5).values == c.bend.values);

  const ParamVector quarter = curves::curve_point(c, 0.25);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(quarter.values[i] ==
          doctest::Approx(0.5 * (a.values[i] + c.bend.values[i])).epsilon(1e-15));
  }
  CHECK_THROWS_AS(curves::curve_point(c, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(curves::curve_point(c, 1.01), std::invalid_argument);
}

TEST_CASE("the chain is continuous at the bend") {
  Rng rng(3);
  std::vector<double> av(20), bv(20), tv(20);
  for (std::size_t i = 0; i < 20; ++i) {
    av[i] = rng.normal();
    bv[i] = rng.normal();
    tv[i] = rng.normal();
  }
  CurveModel c = curves::init_curve(vec(av), vec(bv));
  c.bend = vec(tv);
  double prev_gap = 1e9;
  for (double eps : {1e-3, 1e-5, 1e-7}) {
    const ParamVector lo = curves::curve_point(c, 0.5 - eps);
    const ParamVector hi = curves::curve_point(c, 0.5 + eps);
    const double gap = norm(lincomb(1.0, lo, -1.0, hi));
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-5);
}

TEST_CASE("init_curve starts at the midpoint; a degenerate pair is constant") {
  const ParamVector a = vec({2.0, -4.0});
  const ParamVector b = vec({6.0, 8.0});
  const CurveModel c = curves::init_curve(a, b);
  CHECK(c.bend.values == std::vector<double>{4.0, 2.0});

  const CurveModel degenerate = curves::init_curve(a, a);
  for (double t : {0.0, 0.3, 0.5, 0.77, 1.0}) {
    CHECK(curves::curve_point(degenerate, t).values == a.values);
  }
}

TEST_CASE("zero training iterations leave the bend untouched") {
  const CurveModel c = curves::init_curve(vec({-1.0}), vec({1.0}));
  curves::CurveTrainConfig cfg;
  cfg.iterations = 0;
  const auto r = curves::train_curve(
      c,
      [](const ParamVector& p, std::size_t) {
        LossGradResult lg;
        lg.loss = p.values[0] * p.values[0];
        lg.grad = p;
        scale(2.0, lg.grad);
        return lg;
      },
      cfg);
  CHECK(r.curve.bend.values == c.bend.values);
}

TEST_CASE("1-d quadratic: the trained bend recovers the grid-search optimum") {
  const auto quadratic = [](const ParamVector& p, std::size_t) {
    LossGradResult lg;
    lg.loss = p.values[0] * p.values[0];
    lg.grad = p;
    scale(2.0, lg.grad);
    return lg;
  };
  CurveModel c = curves::init_curve(vec({-1.0}), vec({1.0}));
  c.bend = vec({0.8});  // push the bend off the optimum first

  // Grid search over the bend confirms theta* = 0 for this objective.
  double best_theta = -2.0, best_obj = 1e18;
  for (double theta = -2.0; theta <= 2.0; theta += 0.001) {
    CurveModel probe = c;
    probe.bend = vec({theta});
    const double obj = grid_objective(probe, [](double w) { return w * w; });
    if (obj < best_obj) {
      best_obj = obj;
      best_theta = theta;
    }
  }
  CHECK(std::abs(best_theta) < 1e-9);

  curves::CurveTrainConfig cfg;
  cfg.iterations = 3000000;
  // Robbins-Monro rate with plain SGD: the t-sampling noise never vanishes,
  // so a 1/t decay is what actually drives the bend onto the optimum.
  cfg.optimizer.momentum = 0.0;
  cfg.lr_schedule = [](std::size_t it) { return 1.5 / (static_cast<double>(it) + 10.0); };
  cfg.seed = 7;
  const auto r = curves::train_curve(c, quadratic, cfg);
  CHECK(std::abs(r.curve.bend.values[0]) < 1e-3);
  CHECK(r.curve.endpoint_a.values == std::vector<double>{-1.0});
  CHECK(r.curve.endpoint_b.values == std::vector<double>{1.0});
}

TEST_CASE("training aborts on overflow and keeps the last good bend") {
  CurveModel c = curves::init_curve(vec({-1.0}), vec({1.0}));
  int calls = 0;
  const auto exploding = [&calls](const ParamVector& p, std::size_t) -> LossGradResult {
    if (++calls > 3) throw OverflowError("loss overflow");
    LossGradResult lg;
    lg.loss = 1.0;
    lg.grad = zeros_like(p);
    return lg;
  };
  curves::CurveTrainConfig cfg;
  cfg.iterations = 100;
  const auto r = curves::train_curve(c, exploding, cfg);
  CHECK(r.aborted);
  CHECK(r.loss_history.size() == 3);
  CHECK(r.curve.bend.values == c.bend.values);  // zero gradients never moved it
}

TEST_CASE("endpoints stay bitwise fixed through dataset curve training") {
  const Dataset data = make_two_moons(200, 0.12, 5);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector wa = init_params(spec, 1);
  const ParamVector wb = init_params(spec, 2);
  curves::CurveTrainConfig cfg;
  cfg.iterations = 200;
  cfg.batch_size = 32;
  cfg.seed = 3;
  const auto r = curves::train_curve(curves::init_curve(wa, wb), spec, data, cfg);
  CHECK(flatten(r.curve.endpoint_a) == flatten(wa));
  CHECK(flatten(r.curve.endpoint_b) == flatten(wb));
  CHECK(r.curve.bend.values != lincomb(0.5, wa, 0.5, wb).values);  // it did train
}

TEST_CASE("evaluate_curve: constant curve, endpoint consistency, grid shape") {
  const Dataset data = make_two_moons(120, 0.1, 9);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector w = init_params(spec, 4);
  const CurveModel constant = curves::init_curve(w, w);
  const auto report = curves::evaluate_curve(constant, spec, data, 5);
  REQUIRE(report.points.size() == 5);
  CHECK(report.points.front().t == 0.0);
  CHECK(report.points[2].t == 0.5);
  CHECK(report.points.back().t == 1.0);
  for (const auto& p : report.points) {
    CHECK(p.train_loss == report.points[0].train_loss);
    CHECK(p.val_acc == report.points[0].val_acc);
  }
  const EvalMetrics direct = evaluate_params(spec, w, data);
  CHECK(report.points[0].train_loss == direct.train.loss);
  CHECK(report.points[0].val_loss == direct.val.loss);

  // Even grid sizes are bumped to keep 0.5 on the grid.
  CHECK(curves::evaluate_curve(constant, spec, data, 4).points.size() == 5);
  CHECK_THROWS_AS(curves::evaluate_curve(constant, spec, data, 2), std::invalid_argument);
}

TEST_CASE("initial curve metrics equal straight-segment interpolation") {
  const Dataset data = make_two_moons(160, 0.12, 11);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  const ParamVector wa = init_params(spec, 6);
  const ParamVector wb = init_params(spec, 7);
  const CurveModel c = curves::init_curve(wa, wb);

  const auto curve_report = curves::evaluate_curve(c, spec, data, 9);
  // segment_eval orientation: lambda = 0 is its second argument.
  const auto seg = landscape::segment_eval(spec, wb, wa, 9, data);
  REQUIRE(curve_report.points.size() == seg.points.size());
  for (std::size_t i = 0; i < seg.points.size(); ++i) {
    CHECK(curve_report.points[i].train_loss ==
          doctest::Approx(seg.points[i].train_loss).epsilon(1e-12));
    CHECK(curve_report.points[i].val_loss ==
          doctest::Approx(seg.points[i].val_loss).epsilon(1e-12));
  }
}

TEST_CASE("parallel curve evaluation matches single-threaded") {
  const Dataset data = make_two_moons(160, 0.12, 13);
  const NetworkSpec spec = harness::named_architecture("two-moons-mlp", data);
  CurveModel c = curves::init_curve(init_params(spec, 1), init_params(spec, 2));
  c.bend = init_params(spec, 3);
  const auto serial = curves::evaluate_curve(c, spec, data, 9, 1);
  const auto parallel = curves::evaluate_curve(c, spec, data, 9, 4);
  for (std::size_t i = 0; i < serial.points.size(); ++i) {
    CHECK(serial.points[i].train_loss == parallel.points[i].train_loss);
    CHECK(serial.points[i].val_acc == parallel.points[i].val_acc);
  }
}

TEST_CASE("dense-grid objective matches the monte-carlo estimate") {
  const auto loss_of_w = [](double w) { return (w - 0.3) * (w - 0.3) + 0.1 * w * w * w * w; };
  CurveModel c = curves::init_curve(vec({-1.2}), vec({0.9}));
  c.bend = vec({0.4});

  const double dense = grid_objective(c, loss_of_w, 20001);
  Rng rng(99);
  const std::size_t k = 20000;
  double mc = 0.0, mc2 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double v = loss_of_w(curves::curve_point(c, rng.uniform()).values[0]);
    mc += v;
    mc2 += v * v;
  }
  mc /= static_cast<double>(k);
  const double stddev = std::sqrt(mc2 / static_cast<double>(k) - mc * mc);
  CHECK(std::abs(mc - dense) < 4.0 * stddev / std::sqrt(static_cast<double>(k)));
}
