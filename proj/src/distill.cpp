#include "dts/distill.hpp"

#include <cmath>
#include <stdexcept>

namespace dts {

void DistillConfig::validate() const {
  if (!(kd_weight >= 0.0) || !(ce_weight >= 0.0) || !std::isfinite(kd_weight) || !std::isfinite(ce_weight)) {
    throw std::invalid_argument("kd_weight and ce_weight must be finite and >= 0");
  }
  if (kd_weight == 0.0 && ce_weight == 0.0) throw std::invalid_argument("kd_weight and ce_weight cannot both be 0");
  scheduler.validate();
  sgd.validate();
}

DistillResult distill(const Mlp& teacher, Mlp student, const Dataset& data, const DistillConfig& config) {
  config.validate();
  if (teacher.num_classes() != student.num_classes() || teacher.num_classes() != data.num_classes()) {
    throw std::invalid_argument("class count mismatch: teacher " + std::to_string(teacher.num_classes()) +
                                ", student " + std::to_string(student.num_classes()) + ", dataset " +
                                std::to_string(data.num_classes()));
  }
  if (teacher.input_dim() != student.input_dim() || teacher.input_dim() != data.dim()) {
    throw std::invalid_argument("input width mismatch between teacher, student and dataset");
  }

  const SgdConfig& sgd = config.sgd;
  Scheduler scheduler = Scheduler::from_spec(config.scheduler, std::max(sgd.epochs, 1));
  const int batches = sgd.num_batches(data.size());

  DistillResult result;
  result.metrics.reserve(static_cast<std::size_t>(batches) * static_cast<std::size_t>(sgd.epochs));
  for (int epoch = 0; epoch < sgd.epochs; ++epoch) {
    const double lr = sgd.lr_at_epoch(epoch);
    const auto order = epoch_order(data.size(), sgd.seed, epoch);
    const std::span<const Eigen::Index> all(order);
    for (int b = 0; b < batches; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * static_cast<std::size_t>(sgd.batch_size);
      const std::size_t count = std::min<std::size_t>(sgd.batch_size, all.size() - begin);
      const Dataset batch = data.subset(all.subspan(begin, count));

      const Matrix teacher_logits = teacher.predict(batch.features);
      const Matrix student_logits = student.forward(batch.features);
      const double teacher_ce = cross_entropy(teacher_logits, batch.labels);
      const double student_ce = cross_entropy(student_logits, batch.labels);

      const double temperature =
          scheduler.update(Progress::at_batch(epoch, b, batches, sgd.epochs), teacher_ce, student_ce);
      const double kd = kd_loss(teacher_logits, student_logits, temperature);
      const double total = config.ce_weight * student_ce + config.kd_weight * kd;

      const Matrix grad = config.ce_weight * cross_entropy_grad(student_logits, batch.labels) +
                          config.kd_weight * kd_loss_grad(teacher_logits, student_logits, temperature);
      sgd_step(student, student.backward(grad), lr);

      const auto& tel = scheduler.telemetry();
      result.metrics.push_back({epoch, b, temperature, tel.alpha, tel.d_loss, teacher_ce, student_ce, kd, total, lr});
    }
  }
  student.clear_cache();
  result.student = std::move(student);
  return result;
}

Evaluation evaluate(const Mlp& model, const Dataset& data) {
  if (data.size() < 1) throw std::invalid_argument("cannot evaluate on an empty dataset");
  const Matrix logits = model.predict(data.features);
  const auto predicted = argmax_rows(logits);
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    if (predicted[static_cast<std::size_t>(r)] == data.labels[r]) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(data.size()), cross_entropy(logits, data.labels)};
}

}  // namespace dts
