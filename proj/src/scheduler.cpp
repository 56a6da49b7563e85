#include "dts/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dts {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_positive_temperature(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument(std::string(what) + " must be finite and > 0");
}

}  // namespace

Progress::Progress(double value) {
  if (std::isnan(value)) throw std::invalid_argument("progress is NaN");
  value_ = std::clamp(value, 0.0, 1.0);
}

Progress Progress::at_batch(int epoch, int batch, int num_batches, int total_epochs) {
  if (num_batches < 1 || total_epochs < 1) throw std::invalid_argument("progress needs num_batches, total_epochs >= 1");
  const double within = static_cast<double>(batch) / static_cast<double>(num_batches);
  return Progress((static_cast<double>(epoch) + within) / static_cast<double>(total_epochs));
}

void ScheduleParams::validate() const {
  require_positive_temperature(t_min, "t_min");
  require_positive_temperature(t_init, "t_init");
  require_positive_temperature(t_max, "t_max");
  if (!(t_min <= t_init && t_init <= t_max)) {
    throw std::invalid_argument("schedule requires t_min <= t_init <= t_max, got " + std::to_string(t_min) + ", " +
                                std::to_string(t_init) + ", " + std::to_string(t_max));
  }
  if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("momentum mu must lie in [0, 1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and > 0");
  require_finite(lambda, "lambda");
  if (total_epochs < 1) throw std::invalid_argument("total_epochs must be >= 1");
  if (!(alpha_ceiling > 0.0) || !std::isfinite(alpha_ceiling)) {
    throw std::invalid_argument("alpha_ceiling must be finite and > 0");
  }
  if (!(loss_smoothing >= 0.0 && loss_smoothing < 1.0)) throw std::invalid_argument("loss_smoothing must lie in [0, 1)");
}

double cosine_schedule(Progress p, double lambda) {
  return lambda * (1.0 + std::cos(std::numbers::pi * p.value()));
}

double loss_divergence(double teacher_ce, double student_ce) {
  require_finite(teacher_ce, "teacher CE");
  require_finite(student_ce, "student CE");
  return teacher_ce - student_ce;
}

double adaptive_alpha(double d_loss, double beta, double ceiling) {
  require_finite(d_loss, "d_loss");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  const double denom = d_loss + 1.0 + beta;
  if (std::abs(denom) < 1e-12) return d_loss < 0.0 ? -ceiling : ceiling;
  return d_loss / denom;
}

DtsScheduler::DtsScheduler(ScheduleParams params, bool amplification)
    : params_(params), amplification_(amplification), t_current_(params.t_init), last_target_(params.t_init) {
  params_.validate();
}

double DtsScheduler::update(Progress p, double teacher_ce, double student_ce) {
  require_finite(teacher_ce, "teacher CE");
  require_finite(student_ce, "student CE");
  if (params_.loss_smoothing > 0.0 && step_count_ > 0) {
    const double s = params_.loss_smoothing;
    smoothed_teacher_ = s * smoothed_teacher_ + (1.0 - s) * teacher_ce;
    smoothed_student_ = s * smoothed_student_ + (1.0 - s) * student_ce;
  } else {
    smoothed_teacher_ = teacher_ce;
    smoothed_student_ = student_ce;
  }

  const bool literal = params_.variant == DtsVariant::literal;
  const double schedule = cosine_schedule(p, params_.lambda);
  const double d_loss = literal ? loss_divergence(smoothed_student_, smoothed_teacher_)
                                : loss_divergence(smoothed_teacher_, smoothed_student_);
  const double alpha = amplification_ ? adaptive_alpha(d_loss, params_.beta, params_.alpha_ceiling) : 0.0;
  const double base = literal ? params_.t_init * (params_.t_init * schedule) : params_.t_init * schedule;

  double target = alpha > 1.0 ? base * alpha : base;
  target = std::clamp(target, params_.t_min, params_.t_max);
  t_current_ = params_.mu * t_current_ + (1.0 - params_.mu) * target;
  // the blend can land one ulp outside the range
  t_current_ = std::clamp(t_current_, params_.t_min, params_.t_max);

  last_target_ = target;
  last_alpha_ = alpha;
  last_d_loss_ = d_loss;
  ++step_count_;
  return t_current_;
}

StaticSchedule::StaticSchedule(double temperature) : temperature_(temperature) {
  require_positive_temperature(temperature, "static temperature");
}

LinearDecaySchedule::LinearDecaySchedule(double t_start, double t_end, int total_epochs)
    : t_start_(t_start), t_end_(t_end), total_epochs_(total_epochs) {
  require_positive_temperature(t_start, "t_start");
  require_positive_temperature(t_end, "t_end");
  if (total_epochs < 1) throw std::invalid_argument("total_epochs must be >= 1");
}

double LinearDecaySchedule::update(Progress p, double, double) const {
  return t_start_ + (t_end_ - t_start_) * p.value();
}

DtsScheduler dts_schedule(const ScheduleParams& params) { return DtsScheduler(params, true); }
DtsScheduler cosine_only_schedule(const ScheduleParams& params) { return DtsScheduler(params, false); }
StaticSchedule static_schedule(double temperature) { return StaticSchedule(temperature); }
LinearDecaySchedule linear_decay_schedule(double t_start, double t_end, int total_epochs) {
  return LinearDecaySchedule(t_start, t_end, total_epochs);
}

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::static_t: return "static";
    case SchedulerKind::cosine_only: return "cosine_only";
    case SchedulerKind::linear_decay: return "linear";
    case SchedulerKind::dts: return "dts";
  }
  return "unknown";
}

SchedulerKind scheduler_kind_from_string(std::string_view name) {
  if (name == "static") return SchedulerKind::static_t;
  if (name == "cosine_only") return SchedulerKind::cosine_only;
  if (name == "linear") return SchedulerKind::linear_decay;
  if (name == "dts") return SchedulerKind::dts;
  throw std::invalid_argument("unknown scheduler kind '" + std::string(name) +
                              "' (expected static, cosine_only, linear or dts)");
}

void SchedulerSpec::validate() const {
  switch (kind) {
    case SchedulerKind::static_t: require_positive_temperature(static_t, "static temperature"); break;
    case SchedulerKind::linear_decay:
      require_positive_temperature(linear_start, "linear start temperature");
      require_positive_temperature(linear_end, "linear end temperature");
      break;
    case SchedulerKind::cosine_only:
    case SchedulerKind::dts: params.validate(); break;
  }
}

Scheduler Scheduler::from_spec(const SchedulerSpec& spec, int total_epochs) {
  spec.validate();
  switch (spec.kind) {
    case SchedulerKind::static_t: return Scheduler(static_schedule(spec.static_t));
    case SchedulerKind::linear_decay:
      return Scheduler(linear_decay_schedule(spec.linear_start, spec.linear_end, total_epochs));
    case SchedulerKind::cosine_only:
    case SchedulerKind::dts: {
      ScheduleParams params = spec.params;
      params.total_epochs = total_epochs;
      return Scheduler(spec.kind == SchedulerKind::dts ? dts_schedule(params) : cosine_only_schedule(params));
    }
  }
  throw std::logic_error("unhandled scheduler kind");
}

double Scheduler::update(Progress p, double teacher_ce, double student_ce) {
  std::visit(
      [&](auto& s) {
        const double t = s.update(p, teacher_ce, student_ce);
        telemetry_.temperature = t;
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DtsScheduler>) {
          telemetry_.target = s.last_target();
          telemetry_.alpha = s.last_alpha();
          telemetry_.d_loss = s.last_d_loss();
        } else {
          telemetry_.target = t;
          telemetry_.alpha = 0.0;
          telemetry_.d_loss = loss_divergence(teacher_ce, student_ce);
        }
      },
      impl_);
  return telemetry_.temperature;
}

}  // namespace dts
