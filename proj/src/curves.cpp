#include "llab/curves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "llab/errors.hpp"

namespace llab::curves {

CurveModel init_curve(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("curve endpoints have different parameter counts");
  }
  CurveModel c;
  c.endpoint_a = a;
  c.endpoint_b = b;
  c.bend = lincomb(0.5, a, 0.5, b);
  return c;
}

ParamVector curve_point(const CurveModel& curve, double t) {
  if (t < 0.0 || t > 1.0) {
    throw std::invalid_argument("curve parameter t must lie in [0, 1], got " + std::to_string(t));
  }
  if (t <= 0.5) {
    return lincomb(2.0 * t, curve.bend, 2.0 * (0.5 - t), curve.endpoint_a);
  }
  return lincomb(2.0 * (t - 0.5), curve.endpoint_b, 2.0 * (1.0 - t), curve.bend);
}

double bend_factor(double t) { return t <= 0.5 ? 2.0 * t : 2.0 * (1.0 - t); }

CurveTrainResult train_curve(const CurveModel& curve, const CurveObjective& objective,
                             const CurveTrainConfig& cfg) {
  CurveTrainResult result;
  result.curve = curve;

  Rng t_rng(mix_seed(cfg.seed, 1));
  OptimizerState opt = OptimizerState::make(cfg.optimizer, curve.bend.dim());
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double t = t_rng.uniform();
    const ParamVector point = curve_point(result.curve, t);
    try {
      LossGradResult lg = objective(point, it);
      result.loss_history.push_back(lg.loss);
      scale(bend_factor(t), lg.grad);
      const double lr = cfg.lr_schedule ? cfg.lr_schedule(it) : cfg.lr;
      optimizer_step(opt, result.curve.bend, lg.grad, lr);
    } catch (const OverflowError&) {
      result.aborted = true;  // keep the last good bend
      break;
    }
  }
  return result;
}

CurveTrainResult train_curve(const CurveModel& curve, const NetworkSpec& spec,
                             const Dataset& data, const CurveTrainConfig& cfg) {
  const std::size_t n_train = data.train_x.dim(0);
  const std::size_t batch = std::min(cfg.batch_size, n_train);

  // Epoch-style sampling: reshuffle whenever the deck runs out.
  auto batch_rng = std::make_shared<Rng>(mix_seed(cfg.seed, 2));
  auto order = std::make_shared<std::vector<std::size_t>>(n_train);
  for (std::size_t i = 0; i < n_train; ++i) (*order)[i] = i;
  auto cursor = std::make_shared<std::size_t>(n_train);

  const LossSpec loss_spec;  // hard cross-entropy along the curve
  const CurveObjective objective = [&, batch_rng, order, cursor](const ParamVector& point,
                                                                 std::size_t) {
    if (*cursor + batch > n_train) {
      batch_rng->shuffle(*order);
      *cursor = 0;
    }
    const std::vector<std::size_t> idx(order->begin() + *cursor, order->begin() + *cursor + batch);
    *cursor += batch;
    Batch b;
    b.x = gather_batch(data.train_x, idx);
    b.labels.reserve(batch);
    for (std::size_t i : idx) b.labels.push_back(data.train_y[i]);
    return loss_and_grad(spec, point, b, loss_spec);
  };
  return train_curve(curve, objective, cfg);
}

double CurveEvalReport::max_train_loss() const {
  double m = 0.0;
  for (const auto& p : points) m = std::max(m, p.train_loss);
  return m;
}

CurveEvalReport evaluate_curve(const CurveModel& curve, const NetworkSpec& spec,
                               const Dataset& data, std::size_t n_points, std::size_t threads) {
  if (n_points < 3) throw std::invalid_argument("curve evaluation needs n_points >= 3");
  if (n_points % 2 == 0) ++n_points;  // keep t = 0.5 on the grid

  CurveEvalReport report;
  report.points.resize(n_points);
  const auto eval_one = [&](std::size_t k) {
    const double t = static_cast<double>(k) / static_cast<double>(n_points - 1);
    const ParamVector p = curve_point(curve, t);
    const EvalMetrics m = evaluate_params(spec, p, data);
    report.points[k] = {t, m.train.loss, m.train.accuracy, m.val.loss, m.val.accuracy};
  };

  if (threads <= 1) {
    for (std::size_t k = 0; k < n_points; ++k) eval_one(k);
  } else {
    std::vector<std::thread> pool;
    std::size_t stride = std::min(threads, n_points);
    for (std::size_t w = 0; w < stride; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < n_points; k += stride) eval_one(k);
      });
    }
    for (auto& th : pool) th.join();
  }
  return report;
}

}  // namespace llab::curves
