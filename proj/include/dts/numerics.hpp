#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dts {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;

/// Zero-based class indices together with the class count they index into.
class LabelVector {
 public:
  LabelVector() = default;
  LabelVector(std::vector<int> labels, int num_classes)
      : labels_(std::move(labels)), num_classes_(num_classes) {
    if (num_classes_ < 1) throw std::invalid_argument("LabelVector: num_classes must be >= 1");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] < 0 || labels_[i] >= num_classes_) {
        throw std::invalid_argument("LabelVector: label " + std::to_string(labels_[i]) + " at index " +
                                    std::to_string(i) + " outside [0, " + std::to_string(num_classes_) + ")");
      }
    }
  }

  int num_classes() const { return num_classes_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(labels_.size()); }
  int operator[](Eigen::Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  std::span<const int> values() const { return labels_; }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<int> labels_;
  int num_classes_ = 1;
};

namespace detail {

template <typename Scalar>
void require_temperature(Scalar temperature) {
  if (!(temperature > Scalar(0)) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be finite and > 0");
  }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " contains non-finite entries");
}

template <typename DerivedA, typename DerivedB>
void require_same_shape(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("shape mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

template <typename Derived>
void require_labels(const Eigen::MatrixBase<Derived>& logits, const LabelVector& labels) {
  if (logits.rows() != labels.size()) {
    throw std::invalid_argument("label count " + std::to_string(labels.size()) + " does not match " +
                                std::to_string(logits.rows()) + " logit rows");
  }
  if (logits.cols() != labels.num_classes()) {
    throw std::invalid_argument("logit width " + std::to_string(logits.cols()) + " does not match class count " +
                                std::to_string(labels.num_classes()));
  }
  if (logits.rows() == 0) throw std::invalid_argument("empty batch");
}

}  // namespace detail

/// Row-wise log of softmax(logits / temperature), via per-row max subtraction.
template <typename Derived>
MatrixX<typename Derived::Scalar> log_softmax_t(const Eigen::MatrixBase<Derived>& logits,
                                                typename Derived::Scalar temperature) {
  using Scalar = typename Derived::Scalar;
  detail::require_temperature(temperature);
  detail::require_finite(logits, "logits");
  MatrixX<Scalar> shifted = logits / temperature;
  shifted.colwise() -= shifted.rowwise().maxCoeff();
  const auto log_norm = shifted.array().exp().rowwise().sum().log().matrix().eval();
  shifted.colwise() -= log_norm;
  return shifted;
}

/// Temperature-scaled softmax. Large temperatures flatten each row toward 1/C,
/// small ones concentrate it on the row maximum.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_t(const Eigen::MatrixBase<Derived>& logits,
                                            typename Derived::Scalar temperature) {
  using Scalar = typename Derived::Scalar;
  detail::require_temperature(temperature);
  detail::require_finite(logits, "logits");
  MatrixX<Scalar> out = logits / temperature;
  out.colwise() -= out.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

/// Mean over rows of -log softmax(logits)[row, label].
template <typename Derived>
typename Derived::Scalar cross_entropy(const Eigen::MatrixBase<Derived>& logits, const LabelVector& labels) {
  using Scalar = typename Derived::Scalar;
  detail::require_labels(logits, labels);
  const MatrixX<Scalar> log_probs = log_softmax_t(logits, Scalar(1));
  Scalar total = 0;
  for (Eigen::Index r = 0; r < log_probs.rows(); ++r) total -= log_probs(r, labels[r]);
  return total / static_cast<Scalar>(log_probs.rows());
}

/// (softmax(logits) - one_hot(labels)) / N
template <typename Derived>
MatrixX<typename Derived::Scalar> cross_entropy_grad(const Eigen::MatrixBase<Derived>& logits,
                                                     const LabelVector& labels) {
  using Scalar = typename Derived::Scalar;
  detail::require_labels(logits, labels);
  MatrixX<Scalar> grad = softmax_t(logits, Scalar(1));
  for (Eigen::Index r = 0; r < grad.rows(); ++r) grad(r, labels[r]) -= Scalar(1);
  grad /= static_cast<Scalar>(grad.rows());
  return grad;
}

/// T^2-scaled KL(P_teacher(T) || P_student(T)), averaged over rows.
template <typename DerivedT, typename DerivedS>
typename DerivedS::Scalar kd_loss(const Eigen::MatrixBase<DerivedT>& teacher_logits,
                                  const Eigen::MatrixBase<DerivedS>& student_logits,
                                  typename DerivedS::Scalar temperature) {
  using Scalar = typename DerivedS::Scalar;
  detail::require_same_shape(teacher_logits, student_logits);
  if (student_logits.rows() == 0) throw std::invalid_argument("empty batch");
  const MatrixX<Scalar> log_pt = log_softmax_t(teacher_logits, temperature);
  const MatrixX<Scalar> log_ps = log_softmax_t(student_logits, temperature);
  const Scalar kl_sum = (log_pt.array().exp() * (log_pt - log_ps).array()).sum();
  // Each row's KL is >= 0 mathematically; rounding can leave -1e-17 residue.
  const Scalar kl_mean = std::max(Scalar(0), kl_sum / static_cast<Scalar>(student_logits.rows()));
  return temperature * temperature * kl_mean;
}

/// Gradient of kd_loss w.r.t. the student logits: T * (P_S(T) - P_T(T)) / N.
template <typename DerivedT, typename DerivedS>
MatrixX<typename DerivedS::Scalar> kd_loss_grad(const Eigen::MatrixBase<DerivedT>& teacher_logits,
                                                const Eigen::MatrixBase<DerivedS>& student_logits,
                                                typename DerivedS::Scalar temperature) {
  using Scalar = typename DerivedS::Scalar;
  detail::require_same_shape(teacher_logits, student_logits);
  if (student_logits.rows() == 0) throw std::invalid_argument("empty batch");
  MatrixX<Scalar> grad = softmax_t(student_logits, temperature) - softmax_t(teacher_logits, temperature);
  grad *= temperature / static_cast<Scalar>(student_logits.rows());
  return grad;
}

/// Gradient of the plain (not T^2-compensated) KL term: (P_S(T) - P_T(T)) / (T N).
/// Shrinks like 1/T once both rows saturate toward uniform.
template <typename DerivedT, typename DerivedS>
MatrixX<typename DerivedS::Scalar> kd_loss_grad_unscaled(const Eigen::MatrixBase<DerivedT>& teacher_logits,
                                                         const Eigen::MatrixBase<DerivedS>& student_logits,
                                                         typename DerivedS::Scalar temperature) {
  MatrixX<typename DerivedS::Scalar> grad = kd_loss_grad(teacher_logits, student_logits, temperature);
  grad /= temperature * temperature;
  return grad;
}

/// Index of the largest entry in each row; ties go to the lowest index.
template <typename Derived>
std::vector<int> argmax_rows(const Eigen::MatrixBase<Derived>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace dts
