#include "dts/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "dts/distill.hpp"
#include "dts/random.hpp"
#include "dts/verify.hpp"

#ifndef DTSLAB_VERSION
#define DTSLAB_VERSION "dev"
#endif

namespace dts::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string label_for_path(const TemperatureRange& r) {
  std::string s = shortest(r.t_max) + "to" + shortest(r.t_min);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

/// Collects per-run provenance and writes manifest.txt, the only file carrying timestamps.
class Manifest {
 public:
  Manifest(const ExperimentConfig& config, std::string command)
      : config_(config), command_(std::move(command)), started_(utc_now()) {}

  void add_run(const std::string& run, std::uint64_t seed, const json& scheduler, const SgdConfig& sgd) {
    json sgd_json = sgd_to_json(sgd);
    runs_.push_back("run=" + run + " seed=" + std::to_string(seed) + " scheduler=" + scheduler.dump() +
                    " optimizer=" + sgd_json.dump());
  }

  void write() const {
    fs::create_directories(config_.output_dir);
    std::ofstream out(config_.output_dir / "manifest.txt", std::ios::binary | std::ios::trunc);
    out << "dtslab " << DTSLAB_VERSION << "\n";
    out << "command: " << command_ << "\n";
    out << "started_utc: " << started_ << "\n";
    out << "finished_utc: " << utc_now() << "\n";
    out << "eigen: " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n";
    out << "seeds:";
    for (const auto s : config_.seeds) out << " " << s;
    out << "\nconfig:\n" << dump_config(config_) << "runs:\n";
    for (const auto& r : runs_) out << r << "\n";
  }

 private:
  const ExperimentConfig& config_;
  std::string command_;
  std::string started_;
  std::vector<std::string> runs_;
};

fs::path run_dir(const ExperimentConfig& config, const std::string& run) {
  fs::path dir = config.output_dir / "runs" / run;
  fs::create_directories(dir);
  return dir;
}

void write_result(const fs::path& dir, const RunOutcome& o) {
  std::ofstream out(dir / "result.csv", std::ios::binary | std::ios::trunc);
  out << "run,group,seed,test_accuracy,test_ce,train_accuracy\n";
  out << o.run << ',' << o.group << ',' << o.seed << ',' << shortest(o.test_accuracy) << ',' << shortest(o.test_ce)
      << ',' << shortest(o.train_accuracy) << '\n';
  if (!out) throw std::runtime_error("cannot write result.csv under '" + dir.string() + "'");
}

RunOutcome finish_run(const ExperimentConfig& config, const std::string& run, const std::string& group,
                      std::uint64_t seed, const Mlp& model, const std::vector<MetricsRecord>& metrics,
                      const Data& data) {
  const fs::path dir = run_dir(config, run);
  save_checkpoint(model, dir / "model.bin");
  write_metrics_csv(metrics, dir / "metrics.csv");
  RunOutcome o;
  o.run = run;
  o.group = group;
  o.seed = seed;
  o.ok = true;
  const Evaluation test = evaluate(model, data.test);
  o.test_accuracy = test.accuracy;
  o.test_ce = test.mean_ce;
  o.train_accuracy = evaluate(model, data.train).accuracy;
  write_result(dir, o);
  return o;
}

RunOutcome failed_run(const std::string& run, const std::string& group, std::uint64_t seed, const std::string& what) {
  RunOutcome o;
  o.run = run;
  o.group = group;
  o.seed = seed;
  o.ok = false;
  o.error = what;
  return o;
}

void print_run(std::ostream& log, const RunOutcome& o) {
  if (!o.ok) {
    log << "  " << std::left << std::setw(28) << o.run << " FAILED: " << o.error << "\n";
    return;
  }
  log << "  " << std::left << std::setw(28) << o.run << std::right << std::fixed << std::setprecision(2)
      << " train " << std::setw(6) << 100.0 * o.train_accuracy << "%  test " << std::setw(6)
      << 100.0 * o.test_accuracy << "%\n";
  log.unsetf(std::ios::floatfield);
}

SgdConfig seeded(SgdConfig sgd, std::uint64_t seed) {
  sgd.seed = seed;
  return sgd;
}

struct TeacherRun {
  Mlp model;
  RunOutcome outcome;
};

TeacherRun train_teacher(const ExperimentConfig& config, const Data& data, std::uint64_t seed, Manifest& manifest) {
  const std::string run = "teacher_seed" + std::to_string(seed);
  const SgdConfig sgd = seeded(config.teacher_sgd, teacher_seed(seed));
  TrainResult trained = train_supervised(init_model(config.teacher_layers, teacher_seed(seed)), data.train, sgd);
  manifest.add_run(run, seed, json{{"kind", "none"}}, sgd);
  RunOutcome o = finish_run(config, run, "teacher", seed, trained.model, trained.metrics, data);
  return {std::move(trained.model), std::move(o)};
}

RunOutcome distill_run(const ExperimentConfig& config, const Data& data, const Mlp& teacher, const std::string& run,
                       const std::string& group, std::uint64_t seed, const SchedulerSpec& scheduler,
                       Manifest& manifest) {
  DistillConfig dc = config.distill;
  dc.scheduler = scheduler;
  dc.sgd = seeded(config.distill.sgd, student_seed(seed));
  manifest.add_run(run, seed, scheduler_to_json(scheduler), dc.sgd);
  DistillResult result = distill(teacher, init_model(config.student_layers, student_seed(seed)), data.train, dc);
  return finish_run(config, run, group, seed, result.student, result.metrics, data);
}

RunOutcome student_only_run(const ExperimentConfig& config, const Data& data, std::uint64_t seed, Manifest& manifest) {
  const std::string run = "student_only_seed" + std::to_string(seed);
  const SgdConfig sgd = seeded(config.distill.sgd, student_seed(seed));
  manifest.add_run(run, seed, json{{"kind", "none"}}, sgd);
  TrainResult trained = train_supervised(init_model(config.student_layers, student_seed(seed)), data.train, sgd);
  return finish_run(config, run, "student_only", seed, trained.model, trained.metrics, data);
}

std::string format_table(const std::vector<GroupSummary>& rows, const std::string& first_column, bool ranked) {
  std::size_t width = first_column.size();
  for (const auto& r : rows) width = std::max(width, r.group.size());
  std::ostringstream os;
  if (ranked) os << std::left << std::setw(6) << "Rank";
  os << std::left << std::setw(static_cast<int>(width) + 2) << first_column << std::right << std::setw(14)
     << "Top-1 (%)" << std::setw(10) << "Std" << std::setw(7) << "Runs" << std::setw(8) << "Failed" << "\n";
  int rank = 1;
  for (const auto& r : rows) {
    if (ranked) os << std::left << std::setw(6) << rank++;
    os << std::left << std::setw(static_cast<int>(width) + 2) << r.group << std::right << std::fixed
       << std::setprecision(2) << std::setw(14) << r.mean_accuracy_pct << std::setw(10) << r.std_accuracy_pct
       << std::setw(7) << r.runs << std::setw(8) << r.failed << "\n";
  }
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

}  // namespace

std::uint64_t teacher_seed(std::uint64_t run_seed) { return mix_seed(run_seed, seed_tag::teacher); }
std::uint64_t student_seed(std::uint64_t run_seed) { return mix_seed(run_seed, seed_tag::student); }

std::vector<GroupSummary> summarize(const std::vector<RunOutcome>& outcomes) {
  std::vector<GroupSummary> rows;
  std::map<std::string, std::vector<double>> values;
  for (const auto& o : outcomes) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const GroupSummary& g) { return g.group == o.group; });
    if (it == rows.end()) {
      rows.push_back({o.group, 0.0, 0.0, 0, 0});
      it = std::prev(rows.end());
    }
    if (o.ok) {
      ++it->runs;
      values[o.group].push_back(100.0 * o.test_accuracy);
    } else {
      ++it->failed;
    }
  }
  for (auto& row : rows) {
    const auto& v = values[row.group];
    if (v.empty()) {
      row.mean_accuracy_pct = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (const double x : v) sum += x;
    row.mean_accuracy_pct = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (const double x : v) ss += (x - row.mean_accuracy_pct) * (x - row.mean_accuracy_pct);
      row.std_accuracy_pct = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
  }
  return rows;
}

Data load_data(const ExperimentConfig& config) {
  const auto& d = config.dataset;
  Dataset all = d.source == DatasetSpec::Source::blobs
                    ? make_blobs(d.num_classes, d.samples_per_class, d.dim, d.spread, d.seed)
                    : load_csv(d.path, d.num_classes, d.skip_header);
  if (all.dim() != config.teacher_layers.front()) {
    throw ConfigError("dataset has " + std::to_string(all.dim()) + " features but the models expect " +
                      std::to_string(config.teacher_layers.front()));
  }
  auto [train, test] = split(all, d.train_fraction, d.split_seed);
  return {std::move(train), std::move(test)};
}

fs::path cmd_generate_data(const ExperimentConfig& config, bool zero_spread, std::ostream& log) {
  ExperimentConfig cfg = config;
  if (cfg.dataset.source != DatasetSpec::Source::blobs) throw ConfigError("generate-data needs dataset.source = blobs");
  if (zero_spread) cfg.dataset.spread = 0.0;
  const auto& d = cfg.dataset;
  const Dataset data = make_blobs(d.num_classes, d.samples_per_class, d.dim, d.spread, d.seed);
  fs::create_directories(cfg.output_dir);
  const fs::path path = cfg.output_dir / "dataset.csv";
  save_csv(data, path);
  Manifest manifest(cfg, "generate-data");
  manifest.write();
  log << "wrote " << path.string() << ": " << data.size() << " rows, " << data.dim() << " features, "
      << data.num_classes() << " classes (" << d.samples_per_class << " per class, spread " << d.spread << ")\n";
  return path;
}

std::vector<RunOutcome> cmd_train_teacher(const ExperimentConfig& config, std::ostream& log) {
  const Data data = load_data(config);
  Manifest manifest(config, "train-teacher");
  std::vector<RunOutcome> outcomes;
  for (const auto seed : config.seeds) {
    outcomes.push_back(train_teacher(config, data, seed, manifest).outcome);
    print_run(log, outcomes.back());
  }
  manifest.write();
  return outcomes;
}

std::vector<RunOutcome> cmd_distill(const ExperimentConfig& config, std::ostream& log) {
  const Data data = load_data(config);
  Manifest manifest(config, "distill");
  std::vector<RunOutcome> outcomes;
  for (const auto seed : config.seeds) {
    const fs::path checkpoint = config.teacher_checkpoint.empty()
                                    ? config.output_dir / "runs" / ("teacher_seed" + std::to_string(seed)) / "model.bin"
                                    : config.teacher_checkpoint;
    const Mlp teacher = load_checkpoint(checkpoint);
    const std::string run = config.distill_name + "_seed" + std::to_string(seed);
    outcomes.push_back(
        distill_run(config, data, teacher, run, config.distill_name, seed, config.distill.scheduler, manifest));
    print_run(log, outcomes.back());
  }
  manifest.write();
  return outcomes;
}

CompareResult cmd_compare(const ExperimentConfig& config, std::ostream& log) {
  if (config.compare.empty()) throw ConfigError("compare.schedulers: at least one scheduler is required");
  const Data data = load_data(config);
  Manifest manifest(config, "compare");
  CompareResult result;
  for (const auto seed : config.seeds) {
    std::optional<Mlp> teacher;
    std::string teacher_error;
    try {
      TeacherRun t = train_teacher(config, data, seed, manifest);
      print_run(log, t.outcome);
      teacher = std::move(t.model);
    } catch (const std::exception& e) {
      teacher_error = std::string("teacher: ") + e.what();
    }
    for (const auto& named : config.compare) {
      const std::string run = named.name + "_seed" + std::to_string(seed);
      try {
        if (!teacher) throw std::runtime_error(teacher_error);
        result.runs.push_back(distill_run(config, data, *teacher, run, named.name, seed, named.spec, manifest));
      } catch (const std::exception& e) {
        result.runs.push_back(failed_run(run, named.name, seed, e.what()));
      }
      print_run(log, result.runs.back());
    }
    if (config.compare_student_baseline) {
      const std::string run = "student_only_seed" + std::to_string(seed);
      try {
        result.runs.push_back(student_only_run(config, data, seed, manifest));
      } catch (const std::exception& e) {
        result.runs.push_back(failed_run(run, "student_only", seed, e.what()));
      }
      print_run(log, result.runs.back());
    }
  }

  result.ranked = summarize(result.runs);
  std::stable_sort(result.ranked.begin(), result.ranked.end(), [](const GroupSummary& a, const GroupSummary& b) {
    const bool a_nan = std::isnan(a.mean_accuracy_pct);
    const bool b_nan = std::isnan(b.mean_accuracy_pct);
    if (a_nan != b_nan) return b_nan;
    return a.mean_accuracy_pct > b.mean_accuracy_pct;
  });

  std::ostringstream csv;
  csv << "rank,scheduler,mean_accuracy_pct,std_accuracy_pct,runs,failed\n";
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const auto& r = result.ranked[i];
    csv << i + 1 << ',' << r.group << ',' << shortest(r.mean_accuracy_pct) << ',' << shortest(r.std_accuracy_pct)
        << ',' << r.runs << ',' << r.failed << '\n';
  }
  write_text(config.output_dir / "summary.csv", csv.str());
  const std::string table = format_table(result.ranked, "Scheduler", true);
  write_text(config.output_dir / "summary.txt", table);
  manifest.write();
  log << "\n" << table;
  return result;
}

SweepResult cmd_sweep(const ExperimentConfig& config, std::ostream& log) {
  if (config.sweep.empty()) throw ConfigError("sweep.ranges: at least one range is required");
  const Data data = load_data(config);
  Manifest manifest(config, "sweep");
  SweepResult result;
  for (const auto seed : config.seeds) {
    std::optional<Mlp> teacher;
    std::string teacher_error;
    try {
      TeacherRun t = train_teacher(config, data, seed, manifest);
      print_run(log, t.outcome);
      teacher = std::move(t.model);
    } catch (const std::exception& e) {
      teacher_error = std::string("teacher: ") + e.what();
    }
    for (const auto& range : config.sweep) {
      const std::string run = "sweep_" + label_for_path(range) + "_seed" + std::to_string(seed);
      SchedulerSpec spec;
      spec.kind = SchedulerKind::dts;
      if (config.distill.scheduler.kind == SchedulerKind::dts) spec.params = config.distill.scheduler.params;
      spec.params.t_init = range.t_max;
      spec.params.t_max = range.t_max;
      spec.params.t_min = range.t_min;
      try {
        if (!teacher) throw std::runtime_error(teacher_error);
        result.runs.push_back(distill_run(config, data, *teacher, run, range.label(), seed, spec, manifest));
      } catch (const std::exception& e) {
        result.runs.push_back(failed_run(run, range.label(), seed, e.what()));
      }
      print_run(log, result.runs.back());
    }
  }
  result.rows = summarize(result.runs);

  std::ostringstream csv;
  csv << "range,mean_accuracy_pct\n";
  for (const auto& r : result.rows) csv << r.group << ',' << shortest(r.mean_accuracy_pct) << '\n';
  write_text(config.output_dir / "sweep.csv", csv.str());
  const std::string table = format_table(result.rows, "Range", false);
  write_text(config.output_dir / "sweep_table.txt", table);
  manifest.write();
  log << "\n" << table;
  return result;
}

int cmd_grad_check(std::uint64_t seed, int instances, bool perturb, std::ostream& log) {
  const auto reports = verify::run_gradient_suite(seed, instances, perturb);
  bool all = true;
  for (const auto& r : reports) {
    log << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(24) << r.name << std::right
        << " instances=" << r.instances << " worst_rel_err=" << std::scientific << std::setprecision(3)
        << r.worst_relative_error << " tol=" << r.tolerance << "\n";
    log.unsetf(std::ios::floatfield);
    all = all && r.passed;
  }
  return all ? kSuccess : kVerificationFailure;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic temperature scheduling for knowledge distillation: experiment harness", "dtslab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(DTSLAB_VERSION));

  std::string config_path;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
  bool zero_spread = false;
  bool perturb = false;
  int instances = 100;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON); defaults to the reference task")
        ->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "Override output_dir");
    auto* seed = sub->add_option("--seed", seeds, "Override the seed list with a single seed")->expected(1);
    sub->add_option("--seeds", seeds, "Override the seed list")->delimiter(',')->excludes(seed);
  };

  auto* gen = app.add_subcommand("generate-data", "Write the configured synthetic dataset as CSV");
  common(gen);
  gen->add_flag("--zero-spread", zero_spread, "Emit the noiseless dataset (every sample at its class mean)");
  auto* teach = app.add_subcommand("train-teacher", "Train one teacher per seed");
  common(teach);
  auto* dist = app.add_subcommand("distill", "Distill a student from a trained teacher per seed");
  common(dist);
  auto* cmp = app.add_subcommand("compare", "Compare schedulers across seeds");
  common(cmp);
  auto* swp = app.add_subcommand("sweep", "DTS over a list of temperature ranges");
  common(swp);
  auto* grad = app.add_subcommand("grad-check", "Finite-difference verification of all analytic gradients");
  common(grad);
  grad->add_option("--instances", instances, "Random instances per check")->check(CLI::Range(1, 100000));
  grad->add_flag("--perturb", perturb, "Corrupt the analytic gradients (negative control)")->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  ExperimentConfig config;
  try {
    config = config_path.empty() ? reference_config() : load_config(config_path);
    if (!output_dir.empty()) config.output_dir = output_dir;
    if (!seeds.empty()) config.seeds = seeds;
    config.validate();
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (gen->parsed()) {
      cmd_generate_data(config, zero_spread, out);
    } else if (teach->parsed()) {
      cmd_train_teacher(config, out);
    } else if (dist->parsed()) {
      cmd_distill(config, out);
    } else if (cmp->parsed()) {
      cmd_compare(config, out);
    } else if (swp->parsed()) {
      cmd_sweep(config, out);
    } else if (grad->parsed()) {
      return cmd_grad_check(config.seeds.front(), instances, perturb, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kSuccess;
}

}  // namespace dts::harness
