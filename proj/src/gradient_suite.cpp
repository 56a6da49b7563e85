#include <cmath>
#include <random>

#include "dts/model.hpp"
#include "dts/numerics.hpp"
#include "dts/random.hpp"
#include "dts/verify.hpp"

namespace dts::verify {

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

LabelVector random_labels(Rng& rng, Eigen::Index n, int classes) {
  std::uniform_int_distribution<int> u(0, classes - 1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = u(rng);
  return LabelVector(std::move(labels), classes);
}

Eigen::VectorXd as_vector(const Matrix& m) { return m.reshaped<Eigen::RowMajor>(); }

Matrix as_matrix(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return v.reshaped<Eigen::RowMajor>(rows, cols);
}

double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

void perturb_in_place(Eigen::VectorXd& g) {
  // Enough to break any sane tolerance, small enough to look plausible.
  g[0] += 1e-2 * (1.0 + std::abs(g[0]));
}

// Smallest |pre-activation| over hidden units; finite differences are unreliable near ReLU kinks.
double min_hidden_margin(const Mlp& model, const Matrix& x) {
  double margin = std::numeric_limits<double>::infinity();
  Matrix act = x;
  for (std::size_t l = 0; l + 1 < model.num_layers(); ++l) {
    Matrix z = act * model.layers()[l].weights;
    z.rowwise() += model.layers()[l].bias;
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    act = z.cwiseMax(0.0);
  }
  return margin;
}

}  // namespace

std::vector<CheckReport> run_gradient_suite(std::uint64_t seed, int instances, bool perturb, const FdSpec& spec) {
  Rng rng(seed);
  std::uniform_int_distribution<int> rows_dist(1, 5);
  std::uniform_int_distribution<int> cols_dist(2, 6);

  CheckReport ce{"cross_entropy_grad", instances, 0.0, spec.logit_tolerance, true};
  CheckReport kd{"kd_loss_grad", instances, 0.0, spec.logit_tolerance, true};
  CheckReport full{"model_ce_kd_param_grad", instances, 0.0, spec.parameter_tolerance, true};

  for (int i = 0; i < instances; ++i) {
    const Eigen::Index n = rows_dist(rng);
    const Eigen::Index c = cols_dist(rng);
    const Matrix logits = random_matrix(rng, n, c, 3.0);
    const LabelVector labels = random_labels(rng, n, static_cast<int>(c));

    Eigen::VectorXd analytic = as_vector(cross_entropy_grad(logits, labels));
    if (perturb) perturb_in_place(analytic);
    const auto numeric = finite_diff(
        [&](const Eigen::VectorXd& v) { return cross_entropy(as_matrix(v, n, c), labels); }, as_vector(logits), spec);
    ce.worst_relative_error = std::max(ce.worst_relative_error, relative_error(analytic, numeric.gradient));
    if (!numeric.nonfinite.empty()) ce.passed = false;

    const Matrix teacher = random_matrix(rng, n, c, 3.0);
    const double temperature = log_uniform(rng, 0.5, 10.0);
    Eigen::VectorXd kd_analytic = as_vector(kd_loss_grad(teacher, logits, temperature));
    if (perturb) perturb_in_place(kd_analytic);
    const auto kd_numeric = finite_diff(
        [&](const Eigen::VectorXd& v) { return kd_loss(teacher, as_matrix(v, n, c), temperature); }, as_vector(logits),
        spec);
    kd.worst_relative_error = std::max(kd.worst_relative_error, relative_error(kd_analytic, kd_numeric.gradient));
    if (!kd_numeric.nonfinite.empty()) kd.passed = false;
  }

  std::uniform_int_distribution<int> hidden_dist(3, 8);
  std::uniform_real_distribution<double> weight_dist(0.0, 1.0);
  for (int i = 0; i < instances; ++i) {
    const int in = 2;
    const int classes = 3;
    std::vector<int> sizes{in, hidden_dist(rng)};
    if (i % 2 == 1) sizes.push_back(hidden_dist(rng));
    sizes.push_back(classes);
    const Eigen::Index n = 4;

    Mlp model;
    Matrix x;
    do {
      model = init_model(sizes, rng());
      for (auto& layer : model.layers()) layer.bias = random_matrix(rng, 1, layer.bias.size(), 0.5);
      x = random_matrix(rng, n, in, 1.5);
    } while (min_hidden_margin(model, x) < 1e-3);

    const LabelVector labels = random_labels(rng, n, classes);
    const Matrix teacher = random_matrix(rng, n, classes, 3.0);
    const double temperature = log_uniform(rng, 0.5, 10.0);
    const double ce_w = weight_dist(rng);
    const double kd_w = 1.0 - ce_w;

    const Matrix logits = model.forward(x);
    const Matrix upstream =
        ce_w * cross_entropy_grad(logits, labels) + kd_w * kd_loss_grad(teacher, logits, temperature);
    Eigen::VectorXd analytic = Mlp::flatten(model.backward(upstream));
    if (perturb) perturb_in_place(analytic);

    Mlp probe = model;
    const auto numeric = finite_diff(
        [&](const Eigen::VectorXd& params) {
          probe.assign(params);
          const Matrix z = probe.predict(x);
          return ce_w * cross_entropy(z, labels) + kd_w * kd_loss(teacher, z, temperature);
        },
        model.flatten(), spec);
    full.worst_relative_error = std::max(full.worst_relative_error, relative_error(analytic, numeric.gradient));
    if (!numeric.nonfinite.empty()) full.passed = false;
  }

  std::vector<CheckReport> reports{ce, kd, full};
  for (auto& r : reports) r.passed = r.passed && r.worst_relative_error <= r.tolerance;
  return reports;
}

}  // namespace dts::verify
