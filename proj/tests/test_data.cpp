#include <doctest.h>

#include "helpers.hpp"
#include "plaft/data.hpp"
#include "plaft/error.hpp"

#include <cmath>
#include <fstream>

using namespace plaft;
using plaft::test::TempDir;

namespace {

std::filesystem::path write_file(const TempDir& dir, const std::string& name, const std::string& text) {
  const auto p = dir.path() / name;
  std::ofstream(p) << text;
  return p;
}

CsvSchema schema(std::vector<std::string> clinical = {}, std::vector<std::string> features = {}) {
  CsvSchema s;
  s.time_col = "time";
  s.status_col = "status";
  s.clinical_cols = std::move(clinical);
  s.feature_cols = std::move(features);
  return s;
}

}  // namespace

TEST_CASE("load_csv takes the log of e-powers") {
  TempDir dir("data");
  const double e = std::exp(1.0);
  const auto p = write_file(dir, "a.csv",
                            "time,status\n1,1\n" + std::to_string(e) + ",0\n" + std::to_string(e * e) + ",1\n");
  const Dataset ds = load_csv(p, schema());
  REQUIRE(ds.n() == 3);
  CHECK(ds.log_time()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ds.log_time()(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ds.log_time()(2) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(ds.event()(0));
  CHECK_FALSE(ds.event()(1));
  CHECK(ds.event()(2));
}

TEST_CASE("load_csv names the row with a nonpositive time") {
  TempDir dir("data");
  const auto p = write_file(dir, "a.csv", "time,status\n1,1\n0,1\n2,0\n");
  try {
    load_csv(p, schema());
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.row() == 2);
    CHECK(std::string(err.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("load_csv rejects bad status, ragged rows and non-numeric values") {
  TempDir dir("data");
  CHECK_THROWS_AS(load_csv(write_file(dir, "s.csv", "time,status\n1,2\n"), schema()), ParseError);
  CHECK_THROWS_AS(load_csv(write_file(dir, "r.csv", "time,status,x\n1,1,3\n2,0\n"), schema({"x"})),
                  ParseError);
  CHECK_THROWS_AS(load_csv(write_file(dir, "n.csv", "time,status,x\n1,1,abc\n"), schema({"x"})), ParseError);
  CHECK_THROWS_AS(load_csv(write_file(dir, "m.csv", "time,status,x\n1,1,\n"), schema({"x"})), ParseError);
  CHECK_THROWS_AS(load_csv(dir.path() / "missing.csv", schema()), ParseError);
}

TEST_CASE("load_csv keeps column order and accepts ranges") {
  TempDir dir("data");
  const auto p = write_file(dir, "a.csv", "id,time,status,age,g1,g2,g3\na,1,1,50,0.1,0.2,0.3\nb,2,0,60,1.1,1.2,1.3\n");
  const Dataset ds = load_csv(p, schema({"age"}, {"g3", "g1:g2"}));
  CHECK(ds.q() == 1);
  CHECK(ds.d() == 3);
  CHECK(ds.features()(1, 0) == 1.3);
  CHECK(ds.features()(1, 1) == 1.1);
  CHECK(ds.feature_names() == std::vector<std::string>{"g3", "g1", "g2"});
  const Dataset by_pos = load_csv(p, schema({"4"}, {"5-7"}));
  CHECK(by_pos.features()(0, 2) == 0.3);
  CHECK(by_pos.clinical()(1, 0) == 60.0);
}

TEST_CASE("load_csv reads many feature columns") {
  TempDir dir("data");
  std::string text = "time,status,c1,c2";
  for (int j = 0; j < 1536; ++j) text += ",f" + std::to_string(j);
  text += "\n";
  for (int i = 0; i < 78; ++i) {
    text += std::to_string(i + 1) + "," + std::to_string(i % 2) + ",1," + std::to_string(i);
    for (int j = 0; j < 1536; ++j) text += "," + std::to_string((i * 7 + j) % 13);
    text += "\n";
  }
  const Dataset ds = load_csv(write_file(dir, "big.csv", text), schema({"c1:c2"}, {"f0:f1535"}));
  CHECK(ds.n() == 78);
  CHECK(ds.q() == 2);
  CHECK(ds.d() == 1536);
}

TEST_CASE("pre-logged times and replicate averaging") {
  TempDir dir("data");
  const auto p = write_file(dir, "a.csv", "id,time,status,g\ns1,0.5,1,1\ns1,0.5,1,3\ns2,-1,0,5\n");
  CsvSchema s = schema({}, {"g"});
  s.time_is_log = true;
  s.id_col = "id";
  const Dataset ds = load_csv(p, s);
  REQUIRE(ds.n() == 2);
  CHECK(ds.log_time()(0) == 0.5);
  CHECK(ds.log_time()(1) == -1.0);
  CHECK(ds.features()(0, 0) == 2.0);
}

TEST_CASE("write then load round-trips bitwise") {
  TempDir dir("data");
  const Dataset ds = test::random_dataset(3, 25, 2, 4);
  const auto p = dir.path() / "rt.csv";
  write_csv(ds, p);
  CsvSchema s = schema();
  s.time_col = "log_time";
  s.time_is_log = true;
  s.clinical_cols = ds.clinical_names().empty() ? std::vector<std::string>{"3-4"} : ds.clinical_names();
  s.feature_cols = {"5-8"};
  const Dataset back = load_csv(p, s);
  CHECK(back.log_time() == ds.log_time());
  CHECK(back.event() == ds.event());
  CHECK(back.clinical() == ds.clinical());
  CHECK(back.features() == ds.features());
}

TEST_CASE("standardize_features: symmetric three-point column") {
  Eigen::MatrixXd z(3, 1);
  z << 1, 2, 3;
  const Dataset ds(Eigen::VectorXd::LinSpaced(3, 0, 2), EventVector::Constant(3, true), Eigen::MatrixXd(3, 0), z);
  const auto [out, rec] = standardize_features(ds);
  CHECK(rec.means(0) == doctest::Approx(2.0));
  CHECK(rec.sds(0) == doctest::Approx(1.0));
  CHECK(out.features()(0, 0) == doctest::Approx(-1.0));
  CHECK(out.features()(1, 0) == doctest::Approx(0.0));
  CHECK(out.features()(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("standardize_features: moments, idempotence and inversion") {
  const Dataset ds = test::random_dataset(11, 10, 0, 5);
  const auto [out, rec] = standardize_features(ds);
  const Eigen::MatrixXd& z = out.features();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double mean = z.col(j).mean();
    const double sd = std::sqrt((z.col(j).array() - mean).square().sum() / (z.rows() - 1));
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(sd - 1.0) < 1e-10);
  }
  const auto [again, rec2] = standardize_features(out);
  CHECK((again.features() - z).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd back = rec.invert(z);
  CHECK(((back - ds.features()).cwiseAbs().array() / (1.0 + ds.features().cwiseAbs().array())).maxCoeff() <
        1e-12);
}

TEST_CASE("standardize_features rejects a constant column") {
  Eigen::MatrixXd z(4, 2);
  z << 1, 5, 2, 5, 3, 5, 4, 5;
  const Dataset ds(Eigen::VectorXd::LinSpaced(4, 0, 3), EventVector::Constant(4, true), Eigen::MatrixXd(4, 0), z);
  CHECK_THROWS_AS(standardize_features(ds), DegenerateDataError);
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset(Eigen::VectorXd::Zero(3), EventVector::Constant(2, true), Eigen::MatrixXd(3, 0),
                          Eigen::MatrixXd(3, 0)),
                  DimensionError);
  Eigen::VectorXd t(2);
  t << 0.0, std::nan("");
  CHECK_THROWS_AS(Dataset(t, EventVector::Constant(2, true), Eigen::MatrixXd(2, 0), Eigen::MatrixXd(2, 0)),
                  DegenerateDataError);
  EventVector e(3);
  e << true, false, false;
  const Dataset one_event(Eigen::VectorXd::LinSpaced(3, 0, 2), e, Eigen::MatrixXd(3, 0), Eigen::MatrixXd(3, 0));
  CHECK_THROWS_AS(one_event.require_events(2), DegenerateDataError);
}

TEST_CASE("subset and fingerprint") {
  const Dataset ds = test::random_dataset(5, 12, 1, 2);
  const Dataset sub = ds.subset({3, 1});
  CHECK(sub.n() == 2);
  CHECK(sub.log_time()(0) == ds.log_time()(3));
  CHECK(fingerprint(ds) == fingerprint(test::random_dataset(5, 12, 1, 2)));
  CHECK(fingerprint(ds) != fingerprint(sub));
}
