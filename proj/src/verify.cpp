#include "dts/verify.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dts::verify {

FdResult finite_diff(const std::function<double(const Eigen::VectorXd&)>& loss, const Eigen::VectorXd& point,
                     const FdSpec& spec) {
  if (!(spec.step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  FdResult result;
  result.gradient = Eigen::VectorXd::Zero(point.size());
  Eigen::VectorXd probe = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + spec.step;
    const double up = loss(probe);
    probe[i] = point[i] - spec.step;
    const double down = loss(probe);
    probe[i] = point[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      result.nonfinite.push_back(i);
      result.gradient[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    result.gradient[i] = (up - down) / (2.0 * spec.step);
  }
  return result;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: size mismatch");
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

double kl_reference(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("kl_reference: p and q must be non-empty and equal length");
  double sum_p = 0.0;
  double sum_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(q[i] > 0.0)) throw std::invalid_argument("kl_reference: q must be strictly positive");
    if (p[i] < 0.0) throw std::invalid_argument("kl_reference: p must be non-negative");
    sum_p += p[i];
    sum_q += q[i];
  }
  if (std::abs(sum_p - 1.0) > 1e-9 || std::abs(sum_q - 1.0) > 1e-9) {
    throw std::invalid_argument("kl_reference: inputs must be normalized");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

std::vector<double> replay_scheduler(const ScheduleParams& params, std::span<const ReplayStep> trace,
                                     bool amplification) {
  if (params.variant != DtsVariant::resolved || params.loss_smoothing != 0.0) {
    throw std::invalid_argument("replay_scheduler covers the resolved variant without loss smoothing");
  }
  if (!(params.t_min <= params.t_init && params.t_init <= params.t_max) || !(params.beta > 0.0)) {
    throw std::invalid_argument("replay_scheduler: invalid schedule parameters");
  }
  std::vector<double> temperatures;
  temperatures.reserve(trace.size());
  double t = params.t_init;
  for (const ReplayStep& step : trace) {
    if (!std::isfinite(step.progress) || !std::isfinite(step.teacher_ce) || !std::isfinite(step.student_ce)) {
      throw std::invalid_argument("replay_scheduler: non-finite trace entry");
    }
    double p = step.progress;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    const double s = params.lambda * (1.0 + std::cos(std::numbers::pi * p));
    const double d = step.teacher_ce - step.student_ce;
    double a = 0.0;
    if (amplification) {
      const double denom = d + 1.0 + params.beta;
      if (std::abs(denom) < 1e-12) {
        a = d < 0.0 ? -params.alpha_ceiling : params.alpha_ceiling;
      } else {
        a = d / denom;
      }
    }
    double target = params.t_init * s;
    if (a > 1.0) target = target * a;
    if (target < params.t_min) {
      target = params.t_min;
    } else if (target > params.t_max) {
      target = params.t_max;
    }
    t = params.mu * t + (1.0 - params.mu) * target;
    if (t < params.t_min) {
      t = params.t_min;
    } else if (t > params.t_max) {
      t = params.t_max;
    }
    temperatures.push_back(t);
  }
  return temperatures;
}

}  // namespace dts::verify
