#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace dts {

/// Fraction of training completed, clamped to [0, 1].
class Progress {
 public:
  Progress() = default;
  explicit Progress(double value);

  /// (epoch + batch / num_batches) / total_epochs, the per-batch progress used by distillation.
  static Progress at_batch(int epoch, int batch, int num_batches, int total_epochs);

  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Which reading of the scheduler update to run.
enum class DtsVariant {
  /// d = L_t - L_s and target = t_init * S(p) [* alpha].
  resolved,
  /// The algorithm listing taken literally: d = L_s - L_t and target = t_init * (t_init * S(p)) [* alpha].
  literal,
};

struct ScheduleParams {
  double t_init = 8.0;
  double t_min = 4.0;
  double t_max = 8.0;
  double mu = 0.9;
  double beta = 1e-8;
  double lambda = 0.5;
  int total_epochs = 1;
  /// Magnitude returned by adaptive_alpha when the denominator hits its pole.
  double alpha_ceiling = 10.0;
  DtsVariant variant = DtsVariant::resolved;
  /// Exponential averaging of the observed CE losses before the divergence is taken; 0 disables.
  double loss_smoothing = 0.0;

  /// Throws std::invalid_argument when any invariant is broken.
  void validate() const;

  friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

/// lambda * (1 + cos(pi * p)); falls from 1 at p = 0 to 0 at p = 1 for lambda = 0.5.
double cosine_schedule(Progress p, double lambda = 0.5);

/// teacher_ce - student_ce. Negative while the student lags the teacher.
double loss_divergence(double teacher_ce, double student_ce);

/// alpha = d / (d + 1 + beta). At the pole the magnitude is capped at `ceiling`
/// and the sign follows d.
double adaptive_alpha(double d_loss, double beta, double ceiling = 10.0);

/// Telemetry for the latest update. Baselines report alpha = 0 and target = temperature.
struct SchedulerTelemetry {
  double temperature = 0.0;
  double target = 0.0;
  double alpha = 0.0;
  double d_loss = 0.0;
};

/// The dynamic scheduler: cosine curriculum, loss-divergence amplification,
/// clamping to [t_min, t_max] and momentum smoothing of consecutive outputs.
class DtsScheduler {
 public:
  explicit DtsScheduler(ScheduleParams params, bool amplification = true);

  double update(Progress p, double teacher_ce, double student_ce);

  const ScheduleParams& params() const { return params_; }
  double current() const { return t_current_; }
  double last_target() const { return last_target_; }
  double last_alpha() const { return last_alpha_; }
  double last_d_loss() const { return last_d_loss_; }
  long step_count() const { return step_count_; }
  bool amplification() const { return amplification_; }

 private:
  ScheduleParams params_;
  bool amplification_;
  double t_current_;
  double last_target_;
  double last_alpha_ = 0.0;
  double last_d_loss_ = 0.0;
  double smoothed_teacher_ = 0.0;
  double smoothed_student_ = 0.0;
  long step_count_ = 0;
};

/// Fixed temperature, the classical baseline.
class StaticSchedule {
 public:
  explicit StaticSchedule(double temperature);
  double update(Progress, double, double) const { return temperature_; }
  double temperature() const { return temperature_; }

 private:
  double temperature_;
};

/// t_start + (t_end - t_start) * p, no smoothing.
class LinearDecaySchedule {
 public:
  LinearDecaySchedule(double t_start, double t_end, int total_epochs);
  double update(Progress p, double, double) const;

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  int total_epochs() const { return total_epochs_; }

 private:
  double t_start_;
  double t_end_;
  int total_epochs_;
};

DtsScheduler dts_schedule(const ScheduleParams& params);
/// DTS with the alpha branch disabled (alpha treated as 0).
DtsScheduler cosine_only_schedule(const ScheduleParams& params);
StaticSchedule static_schedule(double temperature);
LinearDecaySchedule linear_decay_schedule(double t_start, double t_end, int total_epochs);

enum class SchedulerKind { static_t, cosine_only, linear_decay, dts };

std::string_view to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(std::string_view name);

/// Scheduler selection as it appears in experiment configs.
struct SchedulerSpec {
  SchedulerKind kind = SchedulerKind::dts;
  ScheduleParams params;       // cosine_only, dts
  double static_t = 4.0;       // static_t
  double linear_start = 8.0;   // linear_decay
  double linear_end = 4.0;     // linear_decay

  void validate() const;
  friend bool operator==(const SchedulerSpec&, const SchedulerSpec&) = default;
};

/// Value-semantic holder for any scheduler kind, with a uniform update/telemetry surface.
class Scheduler {
 public:
  using Impl = std::variant<StaticSchedule, LinearDecaySchedule, DtsScheduler>;

  explicit Scheduler(Impl impl) : impl_(std::move(impl)) {}
  static Scheduler from_spec(const SchedulerSpec& spec, int total_epochs);

  /// Consumes one (progress, L_t, L_s) observation and returns the temperature to use.
  double update(Progress p, double teacher_ce, double student_ce);
  const SchedulerTelemetry& telemetry() const { return telemetry_; }
  const Impl& impl() const { return impl_; }

 private:
  Impl impl_;
  SchedulerTelemetry telemetry_;
};

}  // namespace dts
