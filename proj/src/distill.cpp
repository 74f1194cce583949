#include "llab/distill.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "llab/errors.hpp"
#include "llab/eval.hpp"

namespace llab::distill {

Tensor soften(const Tensor& logits, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  return softmax_rows(logits, temperature);
}

double kd_loss(const Tensor& student_logits, const Tensor& teacher_logits, double temperature) {
  if (student_logits.shape != teacher_logits.shape) {
    throw std::invalid_argument("student logits " + student_logits.shape_str() +
                                " do not match teacher logits " + teacher_logits.shape_str());
  }
  const Tensor targets = soften(teacher_logits, temperature);
  return soft_cross_entropy_rows(student_logits, targets, temperature);
}

nlohmann::json DistillReport::to_json() const {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& row : log) {
    epochs.push_back({{"epoch", row.epoch},
                      {"distilled_train_loss", row.distilled_train_loss},
                      {"distilled_val_acc", row.distilled_val_acc},
                      {"baseline_train_loss", row.baseline_train_loss},
                      {"baseline_val_acc", row.baseline_val_acc}});
  }
  return {{"epochs", std::move(epochs)},
          {"distilled_val_kl", distilled_val_kl},
          {"baseline_val_kl", baseline_val_kl}};
}

double kl_to_teacher(const NetworkSpec& teacher_spec, const ParamVector& teacher_params,
                     const NetworkSpec& student_spec, const ParamVector& student_params,
                     const Tensor& x, std::size_t batch_cap) {
  const std::size_t n = x.dim(0);
  double total = 0.0;
  for (std::size_t begin = 0; begin < n; begin += batch_cap) {
    const std::size_t end = std::min(n, begin + batch_cap);
    const Tensor chunk = (begin == 0 && end == n) ? x : slice_batch(x, begin, end);
    const Tensor tl = forward(teacher_spec, teacher_params, chunk).logits;
    const Tensor sl = forward(student_spec, student_params, chunk).logits;
    const Tensor tp = softmax_rows(tl);
    const Tensor sp = softmax_rows(sl);
    const std::size_t c = tp.dim(1);
    for (std::size_t s = 0; s < end - begin; ++s) {
      for (std::size_t j = 0; j < c; ++j) {
        const double p = tp.values[s * c + j];
        if (p > 0.0) total += p * (std::log(p) - std::log(std::max(sp.values[s * c + j], 1e-300)));
      }
    }
  }
  return total / static_cast<double>(n);
}

DistillOutcome distill_train(const DistillConfig& cfg, const Dataset& data) {
  cfg.teacher_spec.validate();
  cfg.student_spec.validate();
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (cfg.teacher_spec.classes() != cfg.student_spec.classes()) {
    throw std::invalid_argument("teacher has " + std::to_string(cfg.teacher_spec.classes()) +
                                " classes but student has " +
                                std::to_string(cfg.student_spec.classes()));
  }

  DistillOutcome out;
  out.distilled = init_params(cfg.student_spec, mix_seed(cfg.seed, 3));
  out.baseline = out.distilled;  // same init, only the target signal differs

  OptimizerState opt_d = OptimizerState::make(cfg.optimizer, out.distilled.dim());
  OptimizerState opt_b = OptimizerState::make(cfg.optimizer, out.baseline.dim());

  const std::size_t n_train = data.train_x.dim(0);
  const std::size_t batch = std::min(cfg.batch_size, n_train);
  const std::size_t ipe = n_train / batch;
  schedules::ScheduleSpec schedule = cfg.schedule.with_iters_per_epoch(ipe);

  Rng batch_rng(mix_seed(cfg.seed, 4));
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  LossSpec soft_loss{LossKind::SoftTarget, cfg.temperature};
  LossSpec hard_loss{LossKind::CrossEntropyHard, 1.0};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    batch_rng.shuffle(order);
    double d_loss_sum = 0.0, b_loss_sum = 0.0;
    for (std::size_t it = 0; it < ipe; ++it) {
      const std::vector<std::size_t> idx(order.begin() + it * batch,
                                         order.begin() + (it + 1) * batch);
      Batch b;
      b.x = gather_batch(data.train_x, idx);
      for (std::size_t i : idx) b.labels.push_back(data.train_y[i]);
      // Teacher targets computed on the fly; the teacher itself never moves.
      const Tensor teacher_logits = forward(cfg.teacher_spec, cfg.teacher_params, b.x).logits;
      b.soft_targets = soften(teacher_logits, cfg.temperature);

      const double lr = schedules::lr_at(schedule, epoch, it);
      LossGradResult d = loss_and_grad(cfg.student_spec, out.distilled, b, soft_loss);
      optimizer_step(opt_d, out.distilled, d.grad, lr);
      LossGradResult h = loss_and_grad(cfg.student_spec, out.baseline, b, hard_loss);
      optimizer_step(opt_b, out.baseline, h.grad, lr);
      d_loss_sum += d.loss;
      b_loss_sum += h.loss;
    }
    DistillReport::EpochRow row;
    row.epoch = epoch + 1;
    row.distilled_train_loss = d_loss_sum / static_cast<double>(ipe);
    row.baseline_train_loss = b_loss_sum / static_cast<double>(ipe);
    row.distilled_val_acc =
        evaluate_split(cfg.student_spec, out.distilled, data.val_x, data.val_y).accuracy;
    row.baseline_val_acc =
        evaluate_split(cfg.student_spec, out.baseline, data.val_x, data.val_y).accuracy;
    out.report.log.push_back(row);
  }

  out.report.distilled_val_kl = kl_to_teacher(cfg.teacher_spec, cfg.teacher_params,
                                              cfg.student_spec, out.distilled, data.val_x);
  out.report.baseline_val_kl = kl_to_teacher(cfg.teacher_spec, cfg.teacher_params,
                                             cfg.student_spec, out.baseline, data.val_x);
  return out;
}

}  // namespace llab::distill
