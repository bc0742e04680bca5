#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "plaft/data.hpp"

namespace plaft::test {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("plaft_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Small random censored dataset: q clinical columns, d features, log time
/// driven by the first clinical column and the first feature.
inline Dataset random_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index q, Eigen::Index d,
                              double censor_rate = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::bernoulli_distribution censor(censor_rate);
  Eigen::MatrixXd x(n, q), z(n, d);
  Eigen::VectorXd t(n);
  EventVector e(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) x(i, j) = unif(rng);
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = norm(rng);
    t(i) = (q > 0 ? 0.5 * x(i, 0) * x(i, 0) : 0.0) + (d > 0 ? z(i, 0) : 0.0) + 0.5 * norm(rng);
    e(i) = !censor(rng);
  }
  e(0) = true;
  e(1) = true;
  return Dataset(t, e, x, z);
}

}  // namespace plaft::test
