// Copyright 2026 The SAGE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAGE__TESTS_SUPPORT_HPP_
#define SAGE__TESTS_SUPPORT_HPP_

#include <Eigen/Core>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sage/core_data.hpp"
#include "sage/datagen.hpp"
#include "sage/util.hpp"
#include "sage/gates.hpp"

namespace sage::test
{

/// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string & name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("sage_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Matrix normal_matrix(std::size_t n, std::size_t d, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = z(rng);
    }
  }
  return m;
}

/// Rows of `m` as a dataset with ids r0, r1, ... and one label.
inline Dataset dataset_from(const Matrix & m, Label label = Label::kUnlabeled)
{
  Dataset data(static_cast<std::size_t>(m.cols()));
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = m(i, j);
    }
    data.add("r" + std::to_string(i), label, row);
  }
  return data;
}

/// Mean 0, scale 1 in every coordinate.
inline Standardizer identity_standardizer(std::size_t d)
{
  return {Vector::Zero(static_cast<Eigen::Index>(d)), Vector::Ones(static_cast<Eigen::Index>(d))};
}

/// Random symmetric positive definite matrix A A^T + d I.
inline Matrix random_spd(std::size_t d, std::uint64_t seed)
{
  const Matrix a = normal_matrix(d, d, seed);
  return a * a.transpose() + static_cast<double>(d) * Matrix::Identity(a.rows(), a.rows());
}

/// Mahalanobis gate with a prescribed centre and covariance.
inline MahalanobisGate mahalanobis_with(const Vector & mu, const Matrix & sigma)
{
  nlohmann::json j;
  j["name"] = "mahalanobis";
  j["tau"] = nullptr;
  j["margin_scale"] = 1.0;
  j["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    const Vector r = sigma.row(i).transpose();
    rows.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  }
  j["sigma_star"] = rows;
  j["rho"] = 0.0;
  return MahalanobisGate::from_json(j);
}

/// sqrt((x - mu)^T sigma^-1 (x - mu)) through an explicit inverse.
inline double explicit_mahalanobis(const Vector & mu, const Matrix & sigma, const Vector & x)
{
  const Matrix inv = sigma.inverse();
  const Vector y = x - mu;
  return std::sqrt(y.dot(inv * y));
}

/// k-th smallest Euclidean distance by sorting every distance.
inline double sorted_kth_distance(const Matrix & reference, const Vector & x, std::size_t k)
{
  std::vector<double> d;
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    d.push_back((reference.row(i).transpose() - x).norm());
  }
  std::sort(d.begin(), d.end());
  return d[k - 1];
}

/// Writes dataset.csv and truth.csv for a built-in scenario into `dir` and
/// returns a config document pointing at them.
inline nlohmann::json write_scenario(
  const std::filesystem::path & dir, const char * name, std::size_t n, std::uint64_t seed)
{
  const auto gen = generate(builtin_scenario(name, n, seed));
  save_dataset(gen.dataset, dir / "dataset.csv");
  write_file(dir / "truth.csv", gen.truth.format());
  return {
    {"dataset", (dir / "dataset.csv").string()},
    {"truth", (dir / "truth.csv").string()},
    {"dim", 8},
    {"out_dir", (dir / "out").string()},
  };
}

}  // namespace sage::test

#endif  // SAGE__TESTS_SUPPORT_HPP_
