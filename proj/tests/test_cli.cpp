#include <doctest.h>

#include "helpers.hpp"
#include "plaft/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace plaft;
using plaft::test::TempDir;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PLAFT_CLI_PATH) + " --verbosity 0 " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Raw-time CSV with columns time, status, age, g1..gd.
std::filesystem::path write_raw(const TempDir& dir, const std::string& name, const Dataset& ds,
                                bool all_censored = false) {
  const auto p = dir.path() / name;
  std::ofstream out(p);
  out.precision(17);
  out << "time,status,age";
  for (Eigen::Index j = 0; j < ds.d(); ++j) out << ",g" << j + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << std::exp(ds.log_time()(i)) << ',' << ((ds.event()(i) && !all_censored) ? 1 : 0) << ','
        << ds.clinical()(i, 0);
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << ',' << ds.features()(i, j);
    out << '\n';
  }
  return p;
}

std::string data_flags(const std::filesystem::path& p, int d) {
  return "--data " + p.string() + " --clinical-cols age --feature-cols g1:g" + std::to_string(d);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TEST_CASE("simulate is deterministic for a fixed seed") {
  TempDir dir("cli");
  const auto a = dir.path() / "a", b = dir.path() / "b";
  const std::string args = "simulate --design estimation --replicates 2 --seed 3";
  REQUIRE(run("--out " + a.string() + " " + args) == 0);
  REQUIRE(run("--out " + b.string() + " " + args) == 0);
  CHECK(slurp(a / "replicates.csv") == slurp(b / "replicates.csv"));
  CHECK(slurp(a / "table.csv") == slurp(b / "table.csv"));
  CHECK(std::filesystem::exists(a / "manifest.json"));
}

TEST_CASE("a huge lambda selects no features") {
  TempDir dir("cli");
  const auto data = write_raw(dir, "d.csv", test::random_dataset(1, 40, 1, 5));
  const auto out = dir.path() / "fit";
  REQUIRE(run("--out " + out.string() + " fit " + data_flags(data, 5) + " --knots 2 --gamma 0 --lambda 1e6") == 0);
  const std::string selected = slurp(out / "selected.csv");
  CHECK(std::count(selected.begin(), selected.end(), '\n') == 1);
  const FitResult fr = load_fit(out / "fit.json");
  CHECK(fr.vartheta_hat.isZero(0.0));
  CHECK(std::filesystem::exists(out / "phi_curve.csv"));
}

TEST_CASE("fitting at the tuned point reproduces the tuned fit") {
  TempDir dir("cli");
  const auto data = write_raw(dir, "d.csv", test::random_dataset(2, 40, 1, 4));
  const std::string grid = " --knots 2 --grid-count 3 --grid-min 0.001 --grid-max 0.1";
  const auto t = dir.path() / "tune", f1 = dir.path() / "f1", f2 = dir.path() / "f2";
  REQUIRE(run("--out " + t.string() + " tune --criterion gcv " + data_flags(data, 4) + grid) == 0);
  const auto manifest = nlohmann::json::parse(slurp(t / "manifest.json"));
  const double gamma = manifest["chosen"]["gamma"].get<double>();
  const double lambda = manifest["chosen"]["lambda"].get<double>();
  REQUIRE(run("--out " + f1.string() + " fit --tune gcv " + data_flags(data, 4) + grid) == 0);
  REQUIRE(run("--out " + f2.string() + " fit " + data_flags(data, 4) + " --knots 2 --gamma " + num(gamma) +
              " --lambda " + num(lambda)) == 0);
  const FitResult a = load_fit(f1 / "fit.json");
  const FitResult b = load_fit(f2 / "fit.json");
  CHECK(a.gamma == gamma);
  CHECK(a.lambda == lambda);
  CHECK((a.theta() - b.theta()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("evaluate flags training data and handles undefined c") {
  TempDir dir("cli");
  const auto train = write_raw(dir, "train.csv", test::random_dataset(3, 40, 1, 3));
  const auto other = write_raw(dir, "other.csv", test::random_dataset(4, 40, 1, 3));
  const auto censored = write_raw(dir, "cens.csv", test::random_dataset(5, 20, 1, 3), true);
  const auto f = dir.path() / "fit";
  REQUIRE(run("--out " + f.string() + " fit " + data_flags(train, 3) + " --knots 2 --lambda 0.01") == 0);
  const std::string model = " --model " + (f / "fit.json").string();

  const auto e1 = dir.path() / "e1", e2 = dir.path() / "e2", e3 = dir.path() / "e3";
  REQUIRE(run("--out " + e1.string() + " evaluate " + data_flags(train, 3) + model) == 0);
  REQUIRE(run("--out " + e2.string() + " evaluate " + data_flags(other, 3) + model) == 0);
  const std::string m1 = slurp(e1 / "metrics.csv"), m2 = slurp(e2 / "metrics.csv");
  CHECK(m1.substr(m1.rfind(',') + 1, 1) == "1");
  CHECK(m2.substr(m2.rfind(',') + 1, 1) == "0");

  REQUIRE(run("--out " + e3.string() + " evaluate " + data_flags(censored, 3) + model) == 0);
  const std::string m3 = slurp(e3 / "metrics.csv");
  CHECK(m3.find("\nNA,0,") != std::string::npos);

  const auto e4 = dir.path() / "e4";
  REQUIRE(run("--out " + e4.string() + " evaluate " + data_flags(other, 3) + model +
              " --split 0.7 --stratify-status --repeats 3") == 0);
  const std::string reps = slurp(e4 / "repeats.csv");
  CHECK(std::count(reps.begin(), reps.end(), '\n') == 4);
}

TEST_CASE("predict writes one score per row") {
  TempDir dir("cli");
  const auto train = write_raw(dir, "train.csv", test::random_dataset(6, 30, 1, 2));
  const auto f = dir.path() / "fit", p = dir.path() / "pred";
  REQUIRE(run("--out " + f.string() + " fit " + data_flags(train, 2) + " --knots 2") == 0);
  REQUIRE(run("--out " + p.string() + " predict " + data_flags(train, 2) + " --model " +
              (f / "fit.json").string()) == 0);
  const std::string pred = slurp(p / "predictions.csv");
  CHECK(std::count(pred.begin(), pred.end(), '\n') == 31);
}

TEST_CASE("exit codes") {
  TempDir dir("cli");
  const auto out = " --out " + (dir.path() / "o").string() + " ";
  CHECK(run(out + "fit") == 2);
  CHECK(run(out + "frobnicate") == 2);

  const auto bad = dir.path() / "bad.csv";
  std::ofstream(bad) << "time,status,age,g1\n1,1,0,1\n-2,1,0,2\n";
  CHECK(run(out + "fit " + data_flags(bad, 1)) == 3);

  const auto train = write_raw(dir, "train.csv", test::random_dataset(7, 30, 1, 3));
  const auto narrow = write_raw(dir, "narrow.csv", test::random_dataset(8, 30, 1, 2));
  const auto f = dir.path() / "fit";
  REQUIRE(run("--out " + f.string() + " fit " + data_flags(train, 3) + " --knots 2") == 0);
  CHECK(run(out + "predict " + data_flags(narrow, 2) + " --model " + (f / "fit.json").string()) == 4);
  CHECK(run(out + "fit " + data_flags(train, 3) + " --nonlinear-cols nope") == 4);
}
