#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace llab::schedules {

enum class ScheduleKind { Constant, StepDecay, LinearDecay, CosineRestarts };

struct WarmupPhase {
  double peak = 0.0;
  std::size_t warmup_iters = 0;  // global iterations of linear ramp from 0
};

// Declarative learning-rate policy. lr_at is a pure function of
// (spec, epoch, iteration); the iteration index is within-epoch and the
// time base is `iters_per_epoch`.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Constant;

  double eta0 = 0.1;                     // constant / step / linear start
  double factor = 5.0;                   // step: divide by this at each milestone
  std::vector<std::size_t> milestones;   // step: strictly increasing epochs
  double eta_end = 0.0;                  // linear: final rate
  std::size_t total_epochs = 1;          // linear: span of the decay
  double eta_min = 0.0, eta_max = 0.1;   // cosine restarts
  std::size_t t0 = 10;                   // cosine: first period, epochs
  std::size_t t_mult = 2;                // cosine: period growth factor

  std::optional<WarmupPhase> warmup;     // optional linear ramp before the tail
  std::size_t iters_per_epoch = 1;

  void validate() const;

  static ScheduleSpec constant(double eta);
  static ScheduleSpec step(double eta0, double factor, std::vector<std::size_t> milestones);
  static ScheduleSpec linear(double eta0, double eta_end, std::size_t total_epochs);
  static ScheduleSpec cosine_restarts(double eta_min, double eta_max, std::size_t t0,
                                      std::size_t t_mult);
  ScheduleSpec with_warmup(double peak, std::size_t warmup_iters) const;
  ScheduleSpec with_iters_per_epoch(std::size_t ipe) const;
};

// Closed form of the cosine annealing curve for one period.
double cosine_lr(double eta_min, double eta_max, double t_cur, double t_i);

double lr_at(const ScheduleSpec& spec, std::size_t epoch, std::size_t iteration);

// Epoch counts (completed epochs) at which a warm restart fires, cumulative,
// strictly below total_epochs. Errors for non-cosine schedules.
std::vector<std::size_t> restart_epochs(const ScheduleSpec& spec, std::size_t total_epochs);

// Linear scaling rule: lr grows proportionally with the batch size.
double scale_lr_for_batch(double base_lr, std::size_t base_batch, std::size_t new_batch);

nlohmann::json to_json(const ScheduleSpec& spec);
ScheduleSpec from_json(const nlohmann::json& j);

}  // namespace llab::schedules
