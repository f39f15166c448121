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

#include "doctest.h"

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include "sage/simhash.hpp"
#include "support.hpp"

namespace sage
{
namespace
{

/// Independent bucketing: project, threshold at zero, keep the first b bits.
std::map<std::string, std::size_t> oracle_buckets(const Matrix & planes, const Matrix & x,
  std::size_t b)
{
  std::map<std::string, std::size_t> pops;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < b; ++k) {
      const double dot = planes.row(static_cast<Eigen::Index>(k)).dot(x.row(i));
      key += dot >= 0.0 ? '1' : '0';
    }
    ++pops[key];
  }
  return pops;
}

// Nonempty buckets for 10000 standard-normal rows (seed 2024), d=8, h=32,
// b=12, planes seed 7. Snapshot of the independent bucketing above.
constexpr std::size_t kFrozenNonempty = 1369;

}  // namespace

TEST_CASE("projection bank is reproducible")
{
  const auto a = ProjectionBank::build(8, 64, 42);
  const auto b = ProjectionBank::build(8, 64, 42);
  const auto c = ProjectionBank::build(8, 64, 43);
  CHECK(a.planes() == b.planes());
  CHECK(a.planes() != c.planes());
  const auto small = ProjectionBank::build(1, 4, 1);
  CHECK(small.planes().rows() == 4);
  CHECK(small.planes().cols() == 1);
}

TEST_CASE("signature conventions")
{
  const auto bank = ProjectionBank::build(5, 40, 3);
  const Vector zero = Vector::Zero(5);
  const auto s0 = signature(bank, zero);
  for (std::size_t i = 0; i < s0.size(); ++i) {
    CHECK(s0.test(i));
  }
  const Vector x = test::normal_matrix(1, 5, 8).row(0).transpose();
  const auto sx = signature(bank, x);
  const auto sn = signature(bank, Vector(-x));
  CHECK(sx.hamming(sn) == 40);
  CHECK(signature(bank, x) == sx);
  CHECK(sx.prefix(3) == sx.to_string().substr(0, 3));
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(sx.test(i) == (bank.planes().row(static_cast<Eigen::Index>(i)).dot(x) >= 0.0));
  }
}

TEST_CASE("stratify partitions the subset")
{
  const Matrix m = test::normal_matrix(300, 4, 11);
  auto data = test::dataset_from(m);
  data.add("f", Label::kFraud, std::vector<double>{1, 1, 1, 1});
  const auto std = test::identity_standardizer(4);
  const auto bank = ProjectionBank::build(4, 16, 5);

  const auto one = stratify(bank, data, std, LabelFilter::only(Label::kUnlabeled), 1);
  CHECK(one.nonempty() <= 2);
  CHECK(one.total() == 300);

  const auto t = stratify(bank, data, std, LabelFilter::only(Label::kUnlabeled), 8);
  std::set<std::size_t> seen;
  for (const auto & [key, rows] : t.buckets) {
    CHECK(key.size() == 8);
    CHECK_FALSE(rows.empty());
    for (auto r : rows) {
      CHECK(seen.insert(r).second);
      CHECK(signature(bank, data.row_vector(r)).prefix(8) == key);
    }
  }
  CHECK(seen.size() == 300);
  CHECK_FALSE(seen.count(300));
}

TEST_CASE("identical vectors share a bucket")
{
  Dataset data(3);
  data.add("a", Label::kUnlabeled, std::vector<double>{0.3, -1.2, 2.0});
  data.add("b", Label::kUnlabeled, std::vector<double>{0.3, -1.2, 2.0});
  const auto t = stratify(ProjectionBank::build(3, 32, 9), data, test::identity_standardizer(3),
    LabelFilter::all(), 20);
  CHECK(t.nonempty() == 1);
}

TEST_CASE("stratify is independent of thread count")
{
  const auto data = test::dataset_from(test::normal_matrix(2000, 6, 21));
  const auto bank = ProjectionBank::build(6, 64, 2);
  const auto std = test::identity_standardizer(6);
  const auto a = stratify(bank, data, std, LabelFilter::all(), 12, 1);
  const auto b = stratify(bank, data, std, LabelFilter::all(), 12, 8);
  CHECK(a.buckets == b.buckets);
  CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("nonempty bucket count snapshot")
{
  const Matrix x = test::normal_matrix(10000, 8, 2024);
  const auto bank = ProjectionBank::build(8, 32, 7);
  const auto t =
    stratify(bank, test::dataset_from(x), test::identity_standardizer(8), LabelFilter::all(), 12);
  const auto oracle = oracle_buckets(bank.planes(), x, 12);
  CHECK(t.nonempty() == oracle.size());
  for (const auto & [key, rows] : t.buckets) {
    CHECK(oracle.at(key) == rows.size());
  }
  CHECK(t.nonempty() == kFrozenNonempty);
}

TEST_CASE("bit agreement follows the angle")
{
  const double theta = std::numbers::pi / 3.0;
  const Vector u = Eigen::Vector3d(1, 0, 0);
  const Vector v = Eigen::Vector3d(std::cos(theta), std::sin(theta), 0);
  std::size_t agree = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto bank = ProjectionBank::build(3, 64, seed);
    agree += 64 - signature(bank, u).hamming(signature(bank, v));
    total += 64;
  }
  const double rate = static_cast<double>(agree) / static_cast<double>(total);
  CHECK(std::abs(rate - (1.0 - theta / std::numbers::pi)) < 0.02);
}

TEST_CASE("nearby points collide more often than distant ones")
{
  const Vector x = Eigen::Vector4d(1, 2, -1, 0.5);
  const Vector near = x + Eigen::Vector4d(0.01, -0.02, 0.0, 0.01);
  const Vector far = Eigen::Vector4d(-2, 0.5, 1, -1);
  std::size_t near_d = 0;
  std::size_t far_d = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto bank = ProjectionBank::build(4, 64, seed);
    near_d += signature(bank, x).hamming(signature(bank, near));
    far_d += signature(bank, x).hamming(signature(bank, far));
  }
  CHECK(near_d < far_d);
}

}  // namespace sage
