#include <doctest.h>

#include <cmath>
#include <random>

#include "dts/numerics.hpp"
#include "dts/verify.hpp"

using dts::LabelVector;
using dts::Matrix;

namespace {

Matrix row(std::initializer_list<double> values) {
  Matrix m(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double v : values) m(0, i++) = v;
  return m;
}

Matrix random_logits(std::mt19937_64& rng, Eigen::Index n, Eigen::Index c, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(n, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace

TEST_CASE("softmax_t: examples") {
  const Matrix uniform = dts::softmax_t(row({0, 0, 0, 0}), 3.7);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(uniform(0, i) == doctest::Approx(0.25).epsilon(1e-15));

  // exp(1) / (exp(1) + 1), evaluated to 30 digits offline
  const Matrix two = dts::softmax_t(row({2, 0}), 2.0);
  CHECK(std::abs(two(0, 0) - 0.731058578630004879) < 1e-15);
  CHECK(std::abs(two(0, 1) - 0.268941421369995121) < 1e-15);

  const Matrix flat = dts::softmax_t(row({5, -5}), 1e6);
  CHECK(std::abs(flat(0, 0) - 0.5) < 1e-5);
  CHECK(std::abs(flat(0, 1) - 0.5) < 1e-5);
}

TEST_CASE("softmax_t: rejects bad temperatures and non-finite logits") {
  CHECK_THROWS_AS(dts::softmax_t(row({1, 2}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dts::softmax_t(row({1, 2}), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(dts::softmax_t(row({1, 2}), std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(dts::softmax_t(row({1, 2}), INFINITY), std::invalid_argument);
  CHECK_THROWS_AS(dts::softmax_t(row({1, NAN}), 1.0), std::invalid_argument);
}

TEST_CASE("softmax_t: no overflow at tiny temperatures") {
  const Matrix p = dts::softmax_t(row({1000, 999, -1000}), 0.01);
  CHECK(p.allFinite());
  CHECK(p(0, 0) == doctest::Approx(1.0));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("softmax_t: rows normalized over 1000 random (logits, T) pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> log_t(std::log(0.1), std::log(100.0));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Matrix z = random_logits(rng, 3, 7, 50.0);
    const Matrix p = dts::softmax_t(z, std::exp(log_t(rng)));
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
    worst = std::max(worst, (p.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("softmax_t: entries strictly inside (0, 1) in the non-saturated range") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const Matrix p = dts::softmax_t(random_logits(rng, 2, 5, 10.0), 1.0);
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.maxCoeff() < 1.0);
  }
}

TEST_CASE("softmax_t: uniform limit for T >= 1e4 * max|z|") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Matrix z = random_logits(rng, 4, 6, 20.0);
    const Matrix p = dts::softmax_t(z, 1e4 * z.cwiseAbs().maxCoeff());
    CHECK((p.array() - 1.0 / 6.0).abs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("softmax_t: sharpening as T decreases") {
  const Matrix z = row({2.0, 1.0, 0.5, -1.0});
  double previous = 0.0;
  for (const double t : {8.0, 4.0, 2.0, 1.0, 0.5}) {
    const double top = dts::softmax_t(z, t).maxCoeff();
    CHECK(top >= previous);
    previous = top;
  }
}

TEST_CASE("cross_entropy: examples") {
  CHECK(dts::cross_entropy(row({20, 0, 0}), LabelVector({0}, 3)) < 1e-8);
  CHECK(dts::cross_entropy(Matrix::Zero(1, 10), LabelVector({7}, 10)) == doctest::Approx(std::log(10.0)).epsilon(1e-14));

  Matrix two(2, 2);
  two << 2, 0, 0, 2;
  // ln(1 + e^-2) to 30 digits: 0.126928011042972496...
  CHECK(std::abs(dts::cross_entropy(two, LabelVector({0, 1}, 2)) - 0.126928011042972496) < 1e-15);
}

TEST_CASE("cross_entropy: errors") {
  CHECK_THROWS_AS(LabelVector({0, 3}, 3), std::invalid_argument);
  CHECK_THROWS_AS(LabelVector({-1}, 3), std::invalid_argument);
  CHECK_THROWS_AS(dts::cross_entropy(Matrix::Zero(2, 3), LabelVector({0}, 3)), std::invalid_argument);
  CHECK_THROWS_AS(dts::cross_entropy(Matrix::Zero(1, 3), LabelVector({0}, 4)), std::invalid_argument);
}

TEST_CASE("cross_entropy_grad: examples") {
  const Matrix g = dts::cross_entropy_grad(Matrix::Zero(1, 2), LabelVector({0}, 2));
  CHECK(g(0, 0) == doctest::Approx(-0.5));
  CHECK(g(0, 1) == doctest::Approx(0.5));

  const Matrix confident = dts::cross_entropy_grad(row({60, 0, 0}), LabelVector({0}, 3));
  CHECK(confident.cwiseAbs().maxCoeff() < 1e-20);
}

TEST_CASE("cross_entropy_grad: matches central differences on a random 3x4 instance") {
  std::mt19937_64 rng(14);
  const Matrix z = random_logits(rng, 3, 4, 2.0);
  const LabelVector labels({1, 3, 0}, 4);
  const Eigen::VectorXd analytic = dts::cross_entropy_grad(z, labels).reshaped<Eigen::RowMajor>();
  const auto fd = dts::verify::finite_diff(
      [&](const Eigen::VectorXd& v) { return dts::cross_entropy(Matrix(v.reshaped<Eigen::RowMajor>(3, 4)), labels); },
      z.reshaped<Eigen::RowMajor>());
  CHECK(dts::verify::relative_error(analytic, fd.gradient) < 1e-6);
}

TEST_CASE("kd_loss: examples") {
  const Matrix z = row({0.3, -1.2, 2.0});
  CHECK(dts::kd_loss(z, z, 3.0) == 0.0);

  // Brute-force KL with P_T = softmax([1, 0]) and P_S = [0.5, 0.5], 30-digit reference.
  CHECK(std::abs(dts::kd_loss(row({1, 0}), row({0, 0}), 1.0) - 0.110944071671727355) < 1e-14);
  // At T = 2 the softened KL is 0.0302998619807659109 and the T^2 factor makes it 4x.
  const double at_two = dts::kd_loss(row({1, 0}), row({0, 0}), 2.0);
  CHECK(std::abs(at_two - 0.121199447923063643) < 1e-14);
  CHECK(std::abs(at_two - 4.0 * 0.0302998619807659109) < 1e-14);
}

TEST_CASE("kd_loss: errors") {
  CHECK_THROWS_AS(dts::kd_loss(Matrix::Zero(2, 3), Matrix::Zero(2, 4), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dts::kd_loss(Matrix::Zero(2, 3), Matrix::Zero(3, 3), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dts::kd_loss(Matrix::Zero(2, 3), Matrix::Zero(2, 3), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dts::kd_loss_grad(Matrix::Zero(2, 3), Matrix::Zero(2, 4), 1.0), std::invalid_argument);
}

TEST_CASE("kd_loss: agrees with the reference KL on random rows") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> temp(0.5, 10.0);
  for (int i = 0; i < 200; ++i) {
    const Matrix t = random_logits(rng, 1, 5, 4.0);
    const Matrix s = random_logits(rng, 1, 5, 4.0);
    const double temperature = temp(rng);
    const Matrix pt = dts::softmax_t(t, temperature);
    const Matrix ps = dts::softmax_t(s, temperature);
    const double reference = dts::verify::kl_reference(std::span<const double>(pt.data(), 5),
                                                       std::span<const double>(ps.data(), 5));
    CHECK(std::abs(dts::kd_loss(t, s, temperature) / (temperature * temperature) - reference) < 1e-12);
  }
}

TEST_CASE("kd_loss: non-negative, zero exactly when softened rows coincide") {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 500; ++i) {
    const Matrix t = random_logits(rng, 3, 4, 5.0);
    const Matrix s = random_logits(rng, 3, 4, 5.0);
    CHECK(dts::kd_loss(t, s, 2.0) >= 0.0);
    // a per-row constant shift leaves the softened rows unchanged
    Matrix shifted = t;
    shifted.colwise() += Eigen::VectorXd::Constant(3, 1.75);
    CHECK(dts::kd_loss(t, shifted, 2.0) < 1e-12);
  }
}

TEST_CASE("kd_loss_grad: identical logits give a zero matrix") {
  const Matrix z = row({1.0, 2.0, -3.0});
  CHECK(dts::kd_loss_grad(z, z, 4.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kd_loss_grad: matches central differences over 100 random instances") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> temp(0.5, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Matrix t = random_logits(rng, 3, 5, 3.0);
    const Matrix s = random_logits(rng, 3, 5, 3.0);
    const double temperature = temp(rng);
    const Eigen::VectorXd analytic = dts::kd_loss_grad(t, s, temperature).reshaped<Eigen::RowMajor>();
    const auto fd = dts::verify::finite_diff(
        [&](const Eigen::VectorXd& v) {
          return dts::kd_loss(t, Matrix(v.reshaped<Eigen::RowMajor>(3, 5)), temperature);
        },
        s.reshaped<Eigen::RowMajor>());
    worst = std::max(worst, dts::verify::relative_error(analytic, fd.gradient));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("kd_loss_grad_unscaled: norm falls ~10x from T=10 to T=100 in the saturated regime") {
  // Logit gaps of ~1000 keep both softened rows one-hot at T=100, so only the 1/T factor moves.
  const Matrix teacher = row({1000.0, 0.0, -200.0});
  const Matrix student = row({0.0, 1000.0, -200.0});
  const double at_10 = dts::kd_loss_grad_unscaled(teacher, student, 10.0).norm();
  const double at_100 = dts::kd_loss_grad_unscaled(teacher, student, 100.0).norm();
  CHECK(at_10 / at_100 == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("kd gradient magnitude: explodes as T -> 0, vanishes as T -> infinity") {
  const Matrix teacher = row({2.0, 0.0, -1.0});
  const Matrix student = row({0.0, 1.5, -0.5});
  double previous = 0.0;
  for (const double t : {100.0, 30.0, 10.0, 3.0, 1.0, 0.3, 0.1, 0.03, 0.01}) {
    const double norm = dts::kd_loss_grad_unscaled(teacher, student, t).norm();
    CHECK(norm > previous);
    previous = norm;
  }
  CHECK(previous > 50.0);
  CHECK(dts::kd_loss_grad_unscaled(teacher, student, 1e4).norm() < 1e-7);
}

TEST_CASE("argmax_rows: ties go to the lowest index") {
  Matrix m(3, 3);
  m << 1, 1, 0, 0, 2, 2, 5, 5, 5;
  CHECK(dts::argmax_rows(m) == std::vector<int>{0, 1, 0});
}

TEST_CASE("float instantiation compiles and normalizes") {
  dts::MatrixX<float> z(1, 3);
  z << 1.0f, 2.0f, 3.0f;
  const auto p = dts::softmax_t(z, 2.0f);
  CHECK(p.sum() == doctest::Approx(1.0f));
}
