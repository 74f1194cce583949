#pragma once

#include <cstdint>

#include "json.hpp"
#include "llab/datasets.hpp"
#include "llab/network.hpp"
#include "llab/optimizer.hpp"
#include "llab/schedules.hpp"

namespace llab::distill {

// softmax(logits / T); T > 0.
Tensor soften(const Tensor& logits, double temperature);

// Cross-entropy of the softened student distribution against the softened
// teacher distribution, batch mean. Pure soft targets: no hard-label term.
double kd_loss(const Tensor& student_logits, const Tensor& teacher_logits, double temperature);

struct DistillConfig {
  NetworkSpec teacher_spec;
  ParamVector teacher_params;
  NetworkSpec student_spec;
  double temperature = 5.0;
  OptimizerConfig optimizer;
  schedules::ScheduleSpec schedule = schedules::ScheduleSpec::constant(0.05);
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
};

struct DistillReport {
  struct EpochRow {
    std::size_t epoch = 0;
    double distilled_train_loss = 0.0, distilled_val_acc = 0.0;
    double baseline_train_loss = 0.0, baseline_val_acc = 0.0;
  };
  std::vector<EpochRow> log;
  // KL(teacher || student) at T=1 over the validation split.
  double distilled_val_kl = 0.0;
  double baseline_val_kl = 0.0;

  nlohmann::json to_json() const;
};

struct DistillOutcome {
  ParamVector distilled;
  ParamVector baseline;
  DistillReport report;
};

// Trains the student against the frozen teacher's softened outputs, and a
// baseline student on hard labels with the identical seed and batch order,
// so any representational difference is attributable to the target signal.
DistillOutcome distill_train(const DistillConfig& cfg, const Dataset& data);

// Mean KL(teacher || student) at temperature 1 over a split.
double kl_to_teacher(const NetworkSpec& teacher_spec, const ParamVector& teacher_params,
                     const NetworkSpec& student_spec, const ParamVector& student_params,
                     const Tensor& x, std::size_t batch_cap = 256);

}  // namespace llab::distill
