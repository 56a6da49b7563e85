#include "dts/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dts {

using nlohmann::json;

namespace {

/// Reads keys from one JSON object and rejects any it was not asked about.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

SgdConfig sgd_from_json(const json& j, const std::string& where, SgdConfig sgd) {
  ObjectReader r(j, where);
  r.get("learning_rate", sgd.learning_rate);
  r.get("milestones", sgd.milestones);
  r.get("decay_factor", sgd.decay_factor);
  r.get("epochs", sgd.epochs);
  r.get("batch_size", sgd.batch_size);
  r.finish();
  try {
    sgd.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return sgd;
}

std::vector<int> layers_from_json(ObjectReader& r, std::vector<int> fallback) {
  r.get("layers", fallback);
  if (fallback.size() < 2) throw ConfigError(r.where() + ".layers: need at least input and output sizes");
  for (const int s : fallback) {
    if (s < 1) throw ConfigError(r.where() + ".layers: sizes must be >= 1");
  }
  return fallback;
}

void read_scheduler_fields(ObjectReader& r, SchedulerSpec& spec) {
  std::string kind = std::string(to_string(spec.kind));
  r.get("kind", kind);
  try {
    spec.kind = scheduler_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.where() + ".kind: " + e.what());
  }
  switch (spec.kind) {
    case SchedulerKind::static_t: r.get("temperature", spec.static_t); break;
    case SchedulerKind::linear_decay:
      r.get("t_start", spec.linear_start);
      r.get("t_end", spec.linear_end);
      break;
    case SchedulerKind::cosine_only:
    case SchedulerKind::dts: {
      auto& p = spec.params;
      r.get("t_init", p.t_init);
      r.get("t_min", p.t_min);
      r.get("t_max", p.t_max);
      r.get("mu", p.mu);
      r.get("beta", p.beta);
      r.get("lambda", p.lambda);
      r.get("alpha_ceiling", p.alpha_ceiling);
      r.get("loss_smoothing", p.loss_smoothing);
      std::string variant = p.variant == DtsVariant::literal ? "literal" : "resolved";
      r.get("variant", variant);
      if (variant == "resolved") {
        p.variant = DtsVariant::resolved;
      } else if (variant == "literal") {
        p.variant = DtsVariant::literal;
      } else {
        throw ConfigError(r.where() + ".variant: expected 'resolved' or 'literal', got '" + variant + "'");
      }
      break;
    }
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.where() + ": " + e.what());
  }
}

}  // namespace

std::string TemperatureRange::label() const {
  const auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  return fmt(t_max) + "->" + fmt(t_min);
}

SchedulerSpec scheduler_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  SchedulerSpec spec;
  read_scheduler_fields(r, spec);
  r.finish();
  return spec;
}

json scheduler_to_json(const SchedulerSpec& spec) {
  json j;
  j["kind"] = std::string(to_string(spec.kind));
  switch (spec.kind) {
    case SchedulerKind::static_t: j["temperature"] = spec.static_t; break;
    case SchedulerKind::linear_decay:
      j["t_start"] = spec.linear_start;
      j["t_end"] = spec.linear_end;
      break;
    case SchedulerKind::cosine_only:
    case SchedulerKind::dts: {
      const auto& p = spec.params;
      j["t_init"] = p.t_init;
      j["t_min"] = p.t_min;
      j["t_max"] = p.t_max;
      j["mu"] = p.mu;
      j["beta"] = p.beta;
      j["lambda"] = p.lambda;
      j["alpha_ceiling"] = p.alpha_ceiling;
      j["loss_smoothing"] = p.loss_smoothing;
      j["variant"] = p.variant == DtsVariant::literal ? "literal" : "resolved";
      break;
    }
  }
  return j;
}

json sgd_to_json(const SgdConfig& sgd) {
  return json{{"learning_rate", sgd.learning_rate},
              {"milestones", sgd.milestones},
              {"decay_factor", sgd.decay_factor},
              {"epochs", sgd.epochs},
              {"batch_size", sgd.batch_size}};
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (name.empty()) throw ConfigError("name: must not be empty");
  if (distill_name.empty()) throw ConfigError("distill.name: must not be empty");
  if (dataset.num_classes < 1) throw ConfigError("dataset.num_classes: must be >= 1");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    throw ConfigError("dataset.train_fraction: must lie in (0, 1)");
  }
  if (dataset.source == DatasetSpec::Source::blobs) {
    if (dataset.samples_per_class < 1 || dataset.dim < 1) {
      throw ConfigError("dataset: samples_per_class and dim must be >= 1");
    }
    if (!(dataset.spread >= 0.0) || !std::isfinite(dataset.spread)) throw ConfigError("dataset.spread: must be >= 0");
    for (const auto* layers : {&teacher_layers, &student_layers}) {
      if (layers->front() != dataset.dim) throw ConfigError("model input size must equal dataset.dim");
    }
  } else if (dataset.path.empty()) {
    throw ConfigError("dataset.path: required when source is csv");
  }
  for (const auto* layers : {&teacher_layers, &student_layers}) {
    if (layers->back() != dataset.num_classes) throw ConfigError("model output size must equal dataset.num_classes");
  }
  if (teacher_layers.front() != student_layers.front()) {
    throw ConfigError("teacher and student must share the input size");
  }
  try {
    teacher_sgd.validate();
    distill.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::set<std::string> names;
  for (const auto& s : compare) {
    if (s.name.empty()) throw ConfigError("compare.schedulers: every entry needs a name");
    if (!names.insert(s.name).second) throw ConfigError("compare.schedulers: duplicate name '" + s.name + "'");
  }
  for (const auto& r : sweep) {
    if (!(r.t_min > 0.0 && r.t_min <= r.t_max && std::isfinite(r.t_max))) {
      throw ConfigError("sweep.ranges: need 0 < t_min <= t_max, got " + r.label());
    }
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg = reference_config();
  cfg.compare.clear();
  cfg.sweep.clear();
  ObjectReader root(j, "config");
  root.get("name", cfg.name);
  std::string out_dir = cfg.output_dir.string();
  root.get("output_dir", out_dir);
  cfg.output_dir = out_dir;
  root.get("seeds", cfg.seeds);

  if (root.has("dataset")) {
    ObjectReader r(root.child("dataset"), "dataset");
    auto& d = cfg.dataset;
    std::string source = "blobs";
    r.get("source", source);
    if (source == "blobs") {
      d.source = DatasetSpec::Source::blobs;
    } else if (source == "csv") {
      d.source = DatasetSpec::Source::csv;
    } else {
      throw ConfigError("dataset.source: expected 'blobs' or 'csv', got '" + source + "'");
    }
    r.get("num_classes", d.num_classes);
    r.get("train_fraction", d.train_fraction);
    r.get("split_seed", d.split_seed);
    if (d.source == DatasetSpec::Source::blobs) {
      r.get("samples_per_class", d.samples_per_class);
      r.get("dim", d.dim);
      r.get("spread", d.spread);
      r.get("seed", d.seed);
    } else {
      std::string path;
      r.get("path", path);
      d.path = path;
      r.get("skip_header", d.skip_header);
    }
    r.finish();
  }

  if (root.has("teacher")) {
    ObjectReader r(root.child("teacher"), "teacher");
    cfg.teacher_layers = layers_from_json(r, cfg.teacher_layers);
    if (r.has("sgd")) cfg.teacher_sgd = sgd_from_json(r.child("sgd"), "teacher.sgd", cfg.teacher_sgd);
    std::string checkpoint;
    r.get("checkpoint", checkpoint);
    cfg.teacher_checkpoint = checkpoint;
    r.finish();
  }

  if (root.has("student")) {
    ObjectReader r(root.child("student"), "student");
    cfg.student_layers = layers_from_json(r, cfg.student_layers);
    r.finish();
  }

  if (root.has("distill")) {
    ObjectReader r(root.child("distill"), "distill");
    r.get("name", cfg.distill_name);
    r.get("kd_weight", cfg.distill.kd_weight);
    r.get("ce_weight", cfg.distill.ce_weight);
    if (r.has("scheduler")) cfg.distill.scheduler = scheduler_from_json(r.child("scheduler"), "distill.scheduler");
    if (r.has("sgd")) cfg.distill.sgd = sgd_from_json(r.child("sgd"), "distill.sgd", cfg.distill.sgd);
    r.finish();
  }

  if (root.has("compare")) {
    ObjectReader r(root.child("compare"), "compare");
    r.get("student_baseline", cfg.compare_student_baseline);
    if (r.has("schedulers")) {
      const json& list = r.child("schedulers");
      if (!list.is_array()) throw ConfigError("compare.schedulers: expected an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "compare.schedulers[" + std::to_string(i) + "]";
        ObjectReader entry(list[i], where);
        NamedScheduler named;
        entry.get("name", named.name);
        read_scheduler_fields(entry, named.spec);
        entry.finish();
        cfg.compare.push_back(std::move(named));
      }
    }
    r.finish();
  }

  if (root.has("sweep")) {
    ObjectReader r(root.child("sweep"), "sweep");
    if (r.has("ranges")) {
      const json& list = r.child("ranges");
      if (!list.is_array()) throw ConfigError("sweep.ranges: expected an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        ObjectReader entry(list[i], "sweep.ranges[" + std::to_string(i) + "]");
        TemperatureRange range;
        entry.get("t_max", range.t_max);
        entry.get("t_min", range.t_min);
        entry.finish();
        cfg.sweep.push_back(range);
      }
    }
    r.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["output_dir"] = cfg.output_dir.string();
  j["seeds"] = cfg.seeds;

  const auto& d = cfg.dataset;
  json dataset{{"num_classes", d.num_classes}, {"train_fraction", d.train_fraction}, {"split_seed", d.split_seed}};
  if (d.source == DatasetSpec::Source::blobs) {
    dataset["source"] = "blobs";
    dataset["samples_per_class"] = d.samples_per_class;
    dataset["dim"] = d.dim;
    dataset["spread"] = d.spread;
    dataset["seed"] = d.seed;
  } else {
    dataset["source"] = "csv";
    dataset["path"] = d.path.string();
    dataset["skip_header"] = d.skip_header;
  }
  j["dataset"] = dataset;

  j["teacher"] = json{{"layers", cfg.teacher_layers},
                      {"sgd", sgd_to_json(cfg.teacher_sgd)},
                      {"checkpoint", cfg.teacher_checkpoint.string()}};
  j["student"] = json{{"layers", cfg.student_layers}};
  j["distill"] = json{{"name", cfg.distill_name},
                      {"kd_weight", cfg.distill.kd_weight},
                      {"ce_weight", cfg.distill.ce_weight},
                      {"scheduler", scheduler_to_json(cfg.distill.scheduler)},
                      {"sgd", sgd_to_json(cfg.distill.sgd)}};

  json schedulers = json::array();
  for (const auto& s : cfg.compare) {
    json entry = scheduler_to_json(s.spec);
    entry["name"] = s.name;
    schedulers.push_back(entry);
  }
  j["compare"] = json{{"schedulers", schedulers}, {"student_baseline", cfg.compare_student_baseline}};

  json ranges = json::array();
  for (const auto& r : cfg.sweep) ranges.push_back(json{{"t_max", r.t_max}, {"t_min", r.t_min}});
  j["sweep"] = json{{"ranges", ranges}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

std::string dump_config(const ExperimentConfig& config) { return config_to_json(config).dump(2) + "\n"; }

ExperimentConfig reference_config() {
  ExperimentConfig cfg;
  cfg.teacher_sgd = SgdConfig{0.05, {36, 48}, 0.1, 60, 64, 0};
  cfg.distill.sgd = SgdConfig{0.05, {36, 48}, 0.1, 60, 64, 0};
  cfg.distill.scheduler.kind = SchedulerKind::dts;
  cfg.distill.scheduler.params = ScheduleParams{};
  cfg.compare = reference_compare_schedulers();
  cfg.sweep = reference_sweep_ranges();
  cfg.seeds = {1, 2, 3, 4, 5};
  return cfg;
}

std::vector<TemperatureRange> reference_sweep_ranges() {
  return {{3.0, 1.0}, {4.0, 2.0}, {6.0, 4.0}, {8.0, 4.0}, {11.0, 9.0}};
}

std::vector<NamedScheduler> reference_compare_schedulers() {
  SchedulerSpec fixed;
  fixed.kind = SchedulerKind::static_t;
  fixed.static_t = 4.0;
  SchedulerSpec cosine;
  cosine.kind = SchedulerKind::cosine_only;
  SchedulerSpec linear;
  linear.kind = SchedulerKind::linear_decay;
  linear.linear_start = 8.0;
  linear.linear_end = 4.0;
  SchedulerSpec dynamic;
  dynamic.kind = SchedulerKind::dts;
  return {{"static_4", fixed}, {"cosine_only_8to4", cosine}, {"linear_8to4", linear}, {"dts_8to4", dynamic}};
}

}  // namespace dts
