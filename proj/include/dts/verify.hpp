#pragma once

// Independent oracles for the test suite and the grad-check command. Nothing
// here calls into the numerics or scheduler code it is used to check.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dts/scheduler.hpp"

namespace dts::verify {

struct FdSpec {
  double step = 1e-5;
  double logit_tolerance = 1e-6;
  double parameter_tolerance = 1e-5;
};

struct FdResult {
  Eigen::VectorXd gradient;
  /// Coordinates where either probe evaluated to NaN/Inf.
  std::vector<Eigen::Index> nonfinite;
};

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
FdResult finite_diff(const std::function<double(const Eigen::VectorXd&)>& loss, const Eigen::VectorXd& point,
                     const FdSpec& spec = {});

/// ||a - b|| / max(||a||, ||b||), or 0 when both are exactly zero.
double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// sum_i p_i log(p_i / q_i) with 0 log 0 = 0. Requires q > 0 and both normalized within 1e-9.
double kl_reference(std::span<const double> p, std::span<const double> q);

struct ReplayStep {
  double progress = 0.0;
  double teacher_ce = 0.0;
  double student_ce = 0.0;
};

/// Straight-line re-execution of the dynamic temperature update over a logged
/// trace. Supports the resolved variant without loss smoothing only.
std::vector<double> replay_scheduler(const ScheduleParams& params, std::span<const ReplayStep> trace,
                                     bool amplification = true);

/// One line of the gradient-check report.
struct CheckReport {
  std::string name;
  int instances = 0;
  double worst_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Finite-difference suites for the CE and KD logit gradients and the full
/// CE+KD model gradient. `perturb` corrupts the analytic gradients (negative control).
std::vector<CheckReport> run_gradient_suite(std::uint64_t seed, int instances = 100, bool perturb = false,
                                            const FdSpec& spec = {});

}  // namespace dts::verify
