#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "dts/config.hpp"
#include "dts/data.hpp"
#include "dts/distill.hpp"
#include "dts/model.hpp"
#include "dts/random.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "dtslab_test_data";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto path = scratch(name);
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

}  // namespace

TEST_CASE("Dataset: constructor validates") {
  CHECK_THROWS_AS(dts::Dataset(dts::Matrix(0, 2), dts::LabelVector({}, 2)), std::invalid_argument);
  CHECK_THROWS_AS(dts::Dataset(dts::Matrix::Zero(2, 2), dts::LabelVector({0}, 2)), std::invalid_argument);
  dts::Matrix bad = dts::Matrix::Zero(1, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dts::Dataset(bad, dts::LabelVector({0}, 2)), std::invalid_argument);
}

TEST_CASE("make_blobs: shape, balance and class-major order") {
  const auto ds = dts::make_blobs(4, 25, 3, 0.5, 1);
  CHECK(ds.size() == 100);
  CHECK(ds.dim() == 3);
  CHECK(ds.num_classes() == 4);
  std::vector<int> counts(4, 0);
  for (std::size_t i = 0; i < ds.labels.size(); ++i) ++counts[static_cast<std::size_t>(ds.labels[i])];
  CHECK(counts == std::vector<int>{25, 25, 25, 25});
  CHECK(ds.labels[0] == 0);
  CHECK(ds.labels[99] == 3);
}

TEST_CASE("make_blobs: deterministic in seed") {
  CHECK(dts::make_blobs(3, 10, 5, 0.35, 9) == dts::make_blobs(3, 10, 5, 0.35, 9));
  CHECK_FALSE(dts::make_blobs(3, 10, 5, 0.35, 9) == dts::make_blobs(3, 10, 5, 0.35, 10));
}

TEST_CASE("make_blobs: zero spread puts every sample on its unit-norm class mean") {
  const auto ds = dts::make_blobs(5, 8, 6, 0.0, 4);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    CHECK(ds.features.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::Index first = static_cast<Eigen::Index>(ds.labels[static_cast<std::size_t>(i)]) * 8;
    CHECK(ds.features.row(i) == ds.features.row(first));
  }
}

TEST_CASE("make_blobs: the noiseless set is fully learnable") {
  const auto ds = dts::make_blobs(5, 20, 6, 0.0, 4);
  dts::SgdConfig c;
  c.learning_rate = 0.1;
  c.epochs = 60;
  c.batch_size = 10;
  c.seed = 1;
  const auto trained = dts::train_supervised(dts::init_model({6, 16, 5}, 2), ds, c);
  CHECK(dts::evaluate(trained.model, ds).accuracy == 1.0);
}

TEST_CASE("make_blobs: degenerate parameters rejected") {
  CHECK_THROWS_AS(dts::make_blobs(0, 10, 2, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(dts::make_blobs(2, 0, 2, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(dts::make_blobs(2, 10, 0, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(dts::make_blobs(2, 10, 2, -0.1, 1), std::invalid_argument);
}

TEST_CASE("load_csv: well-formed file") {
  const auto path = write_file("two.csv", "0.5,-1.25,1\n3,4e-2,0\n");
  const auto ds = dts::load_csv(path, 2);
  CHECK(ds.size() == 2);
  CHECK(ds.dim() == 2);
  CHECK(ds.features(0, 1) == -1.25);
  CHECK(ds.features(1, 1) == 0.04);
  CHECK(ds.labels == dts::LabelVector({1, 0}, 2));
}

TEST_CASE("load_csv: CRLF, header and trailing blank lines") {
  const auto path = write_file("crlf.csv", "x,y,label\r\n1,2,0\r\n3,4,2\r\n\r\n");
  const auto ds = dts::load_csv(path, 3, true);
  CHECK(ds.size() == 2);
  CHECK(ds.features(1, 0) == 3.0);
  CHECK(ds.labels[1] == 2);
  CHECK_THROWS_AS(dts::load_csv(path, 3, false), dts::ParseError);
}

TEST_CASE("load_csv: label out of range names the line") {
  const auto path = write_file("label.csv", "1,2,0\n1,2,1\n1,2,2\n");
  try {
    dts::load_csv(path, 2);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("load_csv: malformed and ragged rows report the line") {
  SUBCASE("malformed cell") {
    const auto path = write_file("malformed.csv", "1,2,0\n1,abc,1\n");
    try {
      dts::load_csv(path, 2);
      FAIL("expected a parse error");
    } catch (const dts::ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("ragged row") {
    const auto path = write_file("ragged.csv", "1,2,0\n1,2,3,1\n");
    try {
      dts::load_csv(path, 2);
      FAIL("expected a parse error");
    } catch (const dts::ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("non-integer label") {
    const auto path = write_file("float_label.csv", "1,2,0.5\n");
    CHECK_THROWS_AS(dts::load_csv(path, 2), dts::ParseError);
  }
  SUBCASE("empty file") {
    const auto path = write_file("empty.csv", "");
    CHECK_THROWS(dts::load_csv(path, 2));
  }
  SUBCASE("missing file") {
    CHECK_THROWS(dts::load_csv(scratch("does_not_exist.csv"), 2));
  }
}

TEST_CASE("save_csv/load_csv: exact round-trip on 100 random datasets") {
  dts::Rng rng(77);
  std::uniform_int_distribution<int> small(1, 6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> exponent(-30.0, 30.0);
  const auto path = scratch("roundtrip.csv");
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = small(rng) * 3;
    const int cols = small(rng);
    const int classes = small(rng) + 1;
    dts::Matrix x(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = normal(rng) * std::pow(10.0, exponent(rng));
    std::vector<int> labels(static_cast<std::size_t>(rows));
    std::uniform_int_distribution<int> pick(0, classes - 1);
    for (auto& l : labels) l = pick(rng);
    const dts::Dataset ds(x, dts::LabelVector(labels, classes));
    dts::save_csv(ds, path);
    CHECK(dts::load_csv(path, classes) == ds);
  }
}

TEST_CASE("split: 800/200, disjoint, exhaustive, deterministic") {
  dts::Matrix x(1000, 1);
  for (Eigen::Index i = 0; i < 1000; ++i) x(i, 0) = static_cast<double>(i);
  const dts::Dataset ds(x, dts::LabelVector(std::vector<int>(1000, 0), 1));
  const auto [train, test] = dts::split(ds, 0.8, 3);
  CHECK(train.size() == 800);
  CHECK(test.size() == 200);
  std::set<double> seen;
  for (Eigen::Index i = 0; i < train.size(); ++i) seen.insert(train.features(i, 0));
  for (Eigen::Index i = 0; i < test.size(); ++i) seen.insert(test.features(i, 0));
  CHECK(seen.size() == 1000);

  const auto again = dts::split(ds, 0.8, 3);
  CHECK(again.first == train);
  CHECK(again.second == test);
  CHECK_FALSE(dts::split(ds, 0.8, 4).first == train);
}

TEST_CASE("split: fractions producing an empty side rejected") {
  const auto ds = dts::make_blobs(2, 2, 2, 0.1, 1);
  CHECK_THROWS_AS(dts::split(ds, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(dts::split(ds, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(dts::split(ds, 0.01, 1), std::invalid_argument);
  CHECK_THROWS_AS(dts::split(ds, 0.99, 1), std::invalid_argument);
}

TEST_CASE("subset: selected rows in order") {
  const auto ds = dts::make_blobs(2, 3, 2, 0.1, 1);
  const std::vector<Eigen::Index> idx{5, 0};
  const auto sub = ds.subset(idx);
  CHECK(sub.size() == 2);
  CHECK(sub.features.row(0) == ds.features.row(5));
  CHECK(sub.labels[0] == 1);
  CHECK(sub.labels[1] == 0);
}

TEST_CASE("reference dataset: teacher above 90% train, lone student strictly lower") {
  const auto blobs = dts::make_blobs(10, 200, 16, 0.35, 15);
  const auto [train, test] = dts::split(blobs, 0.8, 7);
  dts::SgdConfig teacher_sgd = dts::reference_config().teacher_sgd;
  teacher_sgd.seed = dts::mix_seed(1, dts::seed_tag::shuffle);
  const auto teacher = dts::train_supervised(dts::init_model({16, 64, 64, 10}, 1), train, teacher_sgd);

  dts::SgdConfig student_sgd = teacher_sgd;
  student_sgd.milestones = {36, 48};
  student_sgd.epochs = 60;
  const auto student = dts::train_supervised(dts::init_model({16, 16, 10}, 2), train, student_sgd);

  const double teacher_acc = dts::evaluate(teacher.model, train).accuracy;
  const double student_acc = dts::evaluate(student.model, train).accuracy;
  CHECK(teacher_acc >= 0.90);
  CHECK(student_acc < teacher_acc);
}
