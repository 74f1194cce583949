#include "llab/schedules.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace llab::schedules {

void ScheduleSpec::validate() const {
  if (iters_per_epoch == 0) throw std::invalid_argument("iters_per_epoch must be >= 1");
  switch (kind) {
    case ScheduleKind::Constant:
      if (eta0 < 0.0) throw std::invalid_argument("learning rate must be >= 0");
      break;
    case ScheduleKind::StepDecay: {
      if (eta0 < 0.0) throw std::invalid_argument("learning rate must be >= 0");
      if (!(factor > 0.0)) throw std::invalid_argument("step factor must be positive");
      for (std::size_t i = 1; i < milestones.size(); ++i) {
        if (milestones[i] <= milestones[i - 1]) {
          throw std::invalid_argument("step milestones must be strictly increasing");
        }
      }
      break;
    }
    case ScheduleKind::LinearDecay:
      if (eta0 < 0.0 || eta_end < 0.0) throw std::invalid_argument("learning rates must be >= 0");
      if (total_epochs == 0) throw std::invalid_argument("linear decay needs total_epochs >= 1");
      break;
    case ScheduleKind::CosineRestarts:
      if (eta_min < 0.0 || eta_max < 0.0) throw std::invalid_argument("learning rates must be >= 0");
      if (eta_min > eta_max) throw std::invalid_argument("eta_min must be <= eta_max");
      if (t0 < 1) throw std::invalid_argument("cosine T_0 must be >= 1");
      if (t_mult < 1) throw std::invalid_argument("cosine T_mult must be >= 1");
      break;
  }
  if (warmup) {
    if (warmup->peak < 0.0) throw std::invalid_argument("warmup peak must be >= 0");
    if (warmup->warmup_iters == 0) throw std::invalid_argument("warmup needs >= 1 iteration");
  }
}

ScheduleSpec ScheduleSpec::constant(double eta) {
  ScheduleSpec s;
  s.kind = ScheduleKind::Constant;
  s.eta0 = eta;
  return s;
}

ScheduleSpec ScheduleSpec::step(double eta0, double factor, std::vector<std::size_t> milestones) {
  ScheduleSpec s;
  s.kind = ScheduleKind::StepDecay;
  s.eta0 = eta0;
  s.factor = factor;
  s.milestones = std::move(milestones);
  return s;
}

ScheduleSpec ScheduleSpec::linear(double eta0, double eta_end, std::size_t total_epochs) {
  ScheduleSpec s;
  s.kind = ScheduleKind::LinearDecay;
  s.eta0 = eta0;
  s.eta_end = eta_end;
  s.total_epochs = total_epochs;
  return s;
}

ScheduleSpec ScheduleSpec::cosine_restarts(double eta_min, double eta_max, std::size_t t0,
                                           std::size_t t_mult) {
  ScheduleSpec s;
  s.kind = ScheduleKind::CosineRestarts;
  s.eta_min = eta_min;
  s.eta_max = eta_max;
  s.t0 = t0;
  s.t_mult = t_mult;
  return s;
}

ScheduleSpec ScheduleSpec::with_warmup(double peak, std::size_t warmup_iters) const {
  ScheduleSpec s = *this;
  s.warmup = WarmupPhase{peak, warmup_iters};
  return s;
}

ScheduleSpec ScheduleSpec::with_iters_per_epoch(std::size_t ipe) const {
  ScheduleSpec s = *this;
  s.iters_per_epoch = ipe;
  return s;
}

double cosine_lr(double eta_min, double eta_max, double t_cur, double t_i) {
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(std::numbers::pi * t_cur / t_i));
}

double lr_at(const ScheduleSpec& spec, std::size_t epoch, std::size_t iteration) {
  spec.validate();
  const std::size_t global_iter = epoch * spec.iters_per_epoch + iteration;
  if (spec.warmup && global_iter < spec.warmup->warmup_iters) {
    return spec.warmup->peak * static_cast<double>(global_iter) /
           static_cast<double>(spec.warmup->warmup_iters);
  }
  // Fractional epochs: the tail advances per iteration, not per epoch.
  const double t = static_cast<double>(epoch) +
                   static_cast<double>(iteration) / static_cast<double>(spec.iters_per_epoch);
  switch (spec.kind) {
    case ScheduleKind::Constant:
      return spec.eta0;
    case ScheduleKind::StepDecay: {
      double lr = spec.eta0;
      for (std::size_t m : spec.milestones) {
        if (epoch >= m) lr /= spec.factor;
      }
      return lr;
    }
    case ScheduleKind::LinearDecay: {
      const double f = std::min(t / static_cast<double>(spec.total_epochs), 1.0);
      return spec.eta0 + (spec.eta_end - spec.eta0) * f;
    }
    case ScheduleKind::CosineRestarts: {
      double t_rel = t;
      double t_i = static_cast<double>(spec.t0);
      while (t_rel >= t_i) {
        t_rel -= t_i;
        t_i *= static_cast<double>(spec.t_mult);
      }
      return cosine_lr(spec.eta_min, spec.eta_max, t_rel, t_i);
    }
  }
  return 0.0;
}

std::vector<std::size_t> restart_epochs(const ScheduleSpec& spec, std::size_t total_epochs) {
  if (spec.kind != ScheduleKind::CosineRestarts) {
    throw std::invalid_argument("restart epochs are only defined for cosine-restart schedules");
  }
  spec.validate();
  std::vector<std::size_t> out;
  std::size_t period = spec.t0;
  std::size_t boundary = period;
  while (boundary < total_epochs) {
    out.push_back(boundary);
    period *= spec.t_mult;
    boundary += period;
  }
  return out;
}

double scale_lr_for_batch(double base_lr, std::size_t base_batch, std::size_t new_batch) {
  if (base_batch == 0 || new_batch == 0) {
    throw std::invalid_argument("batch sizes must be positive");
  }
  return base_lr * static_cast<double>(new_batch) / static_cast<double>(base_batch);
}

nlohmann::json to_json(const ScheduleSpec& spec) {
  nlohmann::json j;
  switch (spec.kind) {
    case ScheduleKind::Constant:
      j["kind"] = "constant";
      j["eta"] = spec.eta0;
      break;
    case ScheduleKind::StepDecay:
      j["kind"] = "step";
      j["eta0"] = spec.eta0;
      j["factor"] = spec.factor;
      j["milestones"] = spec.milestones;
      break;
    case ScheduleKind::LinearDecay:
      j["kind"] = "linear";
      j["eta0"] = spec.eta0;
      j["eta_end"] = spec.eta_end;
      j["total_epochs"] = spec.total_epochs;
      break;
    case ScheduleKind::CosineRestarts:
      j["kind"] = "cosine-restarts";
      j["eta_min"] = spec.eta_min;
      j["eta_max"] = spec.eta_max;
      j["t0"] = spec.t0;
      j["t_mult"] = spec.t_mult;
      break;
  }
  if (spec.warmup) {
    j["warmup"] = {{"peak", spec.warmup->peak}, {"iters", spec.warmup->warmup_iters}};
  }
  j["iters_per_epoch"] = spec.iters_per_epoch;
  return j;
}

ScheduleSpec from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  ScheduleSpec s;
  if (kind == "constant") {
    s = ScheduleSpec::constant(j.at("eta"));
  } else if (kind == "step") {
    s = ScheduleSpec::step(j.at("eta0"), j.at("factor"),
                           j.at("milestones").get<std::vector<std::size_t>>());
  } else if (kind == "linear") {
    s = ScheduleSpec::linear(j.at("eta0"), j.at("eta_end"), j.at("total_epochs"));
  } else if (kind == "cosine-restarts") {
    s = ScheduleSpec::cosine_restarts(j.at("eta_min"), j.at("eta_max"), j.at("t0"),
                                      j.at("t_mult"));
  } else {
    throw std::invalid_argument("unknown schedule kind '" + kind + "'");
  }
  if (j.contains("warmup")) {
    s.warmup = WarmupPhase{j["warmup"].at("peak"), j["warmup"].at("iters")};
  }
  s.iters_per_epoch = j.value("iters_per_epoch", std::size_t{1});
  s.validate();
  return s;
}

}  // namespace llab::schedules
