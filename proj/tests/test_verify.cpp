#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "dts/numerics.hpp"
#include "dts/scheduler.hpp"
#include "dts/verify.hpp"

namespace verify = dts::verify;
using dts::ScheduleParams;

namespace {

ScheduleParams params_8_to_4() {
  ScheduleParams p;
  p.t_init = 8.0;
  p.t_min = 4.0;
  p.t_max = 8.0;
  p.mu = 0.9;
  p.total_epochs = 10;
  return p;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("finite_diff: quadratic is exact") {
  const auto r = verify::finite_diff([](const Eigen::VectorXd& x) { return x(0) * x(0); }, vec({3.0}));
  CHECK(std::abs(r.gradient(0) - 6.0) < 1e-9);
  CHECK(r.nonfinite.empty());
}

TEST_CASE("finite_diff: constant gives zero") {
  const auto r = verify::finite_diff([](const Eigen::VectorXd&) { return 4.2; }, vec({1.0, -2.0, 3.0}));
  CHECK(r.gradient.isZero());
}

TEST_CASE("finite_diff: non-finite probes reported per coordinate") {
  auto f = [](const Eigen::VectorXd& x) { return std::sqrt(x(0)) + x(1); };
  const auto r = verify::finite_diff(f, vec({0.0, 1.0}));
  REQUIRE(r.nonfinite.size() == 1);
  CHECK(r.nonfinite[0] == 0);
  CHECK(std::abs(r.gradient(1) - 1.0) < 1e-9);
}

TEST_CASE("finite_diff: step must be positive") {
  verify::FdSpec spec;
  spec.step = 0.0;
  CHECK_THROWS_AS(verify::finite_diff([](const Eigen::VectorXd&) { return 0.0; }, vec({1.0}), spec),
                  std::invalid_argument);
}

TEST_CASE("relative_error") {
  CHECK(verify::relative_error(vec({0.0, 0.0}), vec({0.0, 0.0})) == 0.0);
  CHECK(verify::relative_error(vec({1.0, 0.0}), vec({1.0, 0.0})) == 0.0);
  CHECK(verify::relative_error(vec({3.0, 4.0}), vec({0.0, 0.0})) == 1.0);
  CHECK(verify::relative_error(vec({2.0}), vec({1.0})) == doctest::Approx(0.5));
}

TEST_CASE("kl_reference: examples") {
  const std::vector<double> p{0.2, 0.3, 0.5};
  CHECK(verify::kl_reference(p, p) == 0.0);
  const std::vector<double> one_hot{1.0, 0.0};
  const std::vector<double> uniform{0.5, 0.5};
  CHECK(verify::kl_reference(one_hot, uniform) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(verify::kl_reference(one_hot, uniform) == doctest::Approx(0.693147).epsilon(1e-6));
}

TEST_CASE("kl_reference: errors") {
  const std::vector<double> p{0.5, 0.5};
  CHECK_THROWS_AS(verify::kl_reference(p, std::vector<double>{1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(verify::kl_reference(p, std::vector<double>{0.6, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(verify::kl_reference(std::vector<double>{0.5, 0.6}, p), std::invalid_argument);
  CHECK_THROWS_AS(verify::kl_reference(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("kl_reference: agrees with the softmax-based KD loss on random pairs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    dts::Matrix zt(1, 5), zs(1, 5);
    for (int j = 0; j < 5; ++j) {
      zt(0, j) = normal(rng);
      zs(0, j) = normal(rng);
    }
    const dts::Matrix pt = dts::softmax_t(zt, 1.0);
    const dts::Matrix ps = dts::softmax_t(zs, 1.0);
    const std::vector<double> p(pt.data(), pt.data() + 5);
    const std::vector<double> q(ps.data(), ps.data() + 5);
    CHECK(std::abs(verify::kl_reference(p, q) - dts::kd_loss(zt, zs, 1.0)) < 1e-12);
  }
}

TEST_CASE("replay_scheduler: hand-traced steps") {
  const auto p = params_8_to_4();
  const std::vector<verify::ReplayStep> a{{0.0, 2.3, 2.3}};
  const std::vector<verify::ReplayStep> b{{1.0, 2.3, 2.3}};
  const std::vector<verify::ReplayStep> c{{0.0, 1.0, 3.5}};
  CHECK(std::abs(verify::replay_scheduler(p, a)[0] - 8.0) < 1e-12);
  CHECK(std::abs(verify::replay_scheduler(p, b)[0] - 7.6) < 1e-12);
  CHECK(std::abs(verify::replay_scheduler(p, c)[0] - 8.0) < 1e-12);
}

TEST_CASE("replay_scheduler: matches the live scheduler bit for bit on random traces") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> loss(0.0, 6.0);
  std::uniform_real_distribution<double> mu(0.0, 0.99);
  for (int run = 0; run < 50; ++run) {
    auto params = params_8_to_4();
    params.mu = mu(rng);
    std::vector<verify::ReplayStep> trace;
    std::vector<double> live;
    auto s = dts::dts_schedule(params);
    for (int k = 0; k < 120; ++k) {
      const verify::ReplayStep step{k / 119.0, loss(rng), loss(rng)};
      trace.push_back(step);
      live.push_back(s.update(dts::Progress(step.progress), step.teacher_ce, step.student_ce));
    }
    CHECK(verify::replay_scheduler(params, trace) == live);
  }
}

TEST_CASE("replay_scheduler: equal losses follow the cosine-only recursion") {
  const auto params = params_8_to_4();
  std::vector<verify::ReplayStep> trace;
  for (int k = 0; k < 200; ++k) trace.push_back({k / 199.0, 1.7, 1.7});
  const auto replayed = verify::replay_scheduler(params, trace);

  auto cosine = dts::cosine_only_schedule(params);
  double t = params.t_init;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    CHECK(replayed[k] == cosine.update(dts::Progress(trace[k].progress), 1.7, 1.7));
    const double s = 0.5 * (1.0 + std::cos(std::numbers::pi * trace[k].progress));
    const double target = std::clamp(params.t_init * s, params.t_min, params.t_max);
    t = params.mu * t + (1.0 - params.mu) * target;
    CHECK(std::abs(replayed[k] - t) < 1e-12);
  }
  CHECK(verify::replay_scheduler(params, trace, false) == replayed);
}

TEST_CASE("replay_scheduler: rejects unsupported configurations and bad input") {
  auto params = params_8_to_4();
  const std::vector<verify::ReplayStep> trace{{0.5, 1.0, 1.0}};
  auto literal = params;
  literal.variant = dts::DtsVariant::literal;
  CHECK_THROWS_AS(verify::replay_scheduler(literal, trace), std::invalid_argument);
  auto smoothed = params;
  smoothed.loss_smoothing = 0.5;
  CHECK_THROWS_AS(verify::replay_scheduler(smoothed, trace), std::invalid_argument);
  const std::vector<verify::ReplayStep> bad{{0.5, std::numeric_limits<double>::quiet_NaN(), 1.0}};
  CHECK_THROWS_AS(verify::replay_scheduler(params, bad), std::invalid_argument);
}

TEST_CASE("gradient suite: passes on 100 instances") {
  const auto reports = verify::run_gradient_suite(2024, 100);
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) {
    INFO(r.name << " worst " << r.worst_relative_error);
    CHECK(r.passed);
    CHECK(r.instances == 100);
    CHECK(r.worst_relative_error < 1e-5);
  }
  CHECK(reports[0].tolerance == 1e-6);
  CHECK(reports[1].tolerance == 1e-6);
  CHECK(reports[2].tolerance == 1e-5);
}

TEST_CASE("gradient suite: a perturbed analytic gradient fails every check") {
  for (const auto& r : verify::run_gradient_suite(2024, 10, true)) CHECK_FALSE(r.passed);
}
