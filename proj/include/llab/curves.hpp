#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "llab/datasets.hpp"
#include "llab/eval.hpp"
#include "llab/network.hpp"
#include "llab/optimizer.hpp"

namespace llab::curves {

// Polygonal chain with a single trainable bend between two fixed endpoints.
// phi(0) and phi(1) are the endpoints and are never touched by training.
struct CurveModel {
  ParamVector endpoint_a;
  ParamVector endpoint_b;
  ParamVector bend;
};

// Bend starts at the midpoint, so the initial curve is the straight segment.
CurveModel init_curve(const ParamVector& a, const ParamVector& b);

ParamVector curve_point(const CurveModel& curve, double t);

// d(phi)/d(bend) along the chain: 2t on the first leg, 2(1-t) on the second.
double bend_factor(double t);

struct CurveTrainConfig {
  std::size_t iterations = 2000;
  std::size_t batch_size = 64;
  double lr = 0.05;
  // Optional per-iteration rate; overrides `lr` when set. Lets callers decay
  // the step size so the bend settles instead of hovering in the noise ball.
  std::function<double(std::size_t)> lr_schedule;
  OptimizerConfig optimizer;  // defaults: SGD, momentum 0.9
  std::uint64_t seed = 0;
};

struct CurveTrainResult {
  CurveModel curve;
  std::vector<double> loss_history;
  bool aborted = false;  // loss went non-finite; bend is the last good state
};

// Loss (and gradient at the evaluated point) for one training iteration.
// Throws OverflowError on non-finite values.
using CurveObjective = std::function<LossGradResult(const ParamVector& point, std::size_t iter)>;

// Minimizes the expected objective along the curve: per iteration draw
// t ~ U[0,1], evaluate at phi(t), and step the bend along the chain-rule
// gradient. Endpoints are never touched.
CurveTrainResult train_curve(const CurveModel& curve, const CurveObjective& objective,
                             const CurveTrainConfig& cfg);

// Dataset flavor: the objective is hard cross-entropy on one fresh minibatch
// per iteration (one shared t across the batch).
CurveTrainResult train_curve(const CurveModel& curve, const NetworkSpec& spec,
                             const Dataset& data, const CurveTrainConfig& cfg);

struct CurveEvalPoint {
  double t = 0.0;
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

struct CurveEvalReport {
  std::vector<CurveEvalPoint> points;
  double max_train_loss() const;
};

// Metrics on a uniform t grid. n_points is rounded up to the next odd count
// so the grid always contains t = 0, 0.5 and 1 exactly.
CurveEvalReport evaluate_curve(const CurveModel& curve, const NetworkSpec& spec,
                               const Dataset& data, std::size_t n_points,
                               std::size_t threads = 1);

}  // namespace llab::curves
