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

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <vector>

#include "sage/error.hpp"
#include "sage/gates.hpp"
#include "support.hpp"

namespace sage
{
namespace
{

Matrix centered(Matrix m)
{
  const Vector mean = m.colwise().mean().transpose();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m.row(i) -= mean.transpose();
  }
  return m;
}

Matrix points(std::initializer_list<std::vector<double>> rows)
{
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto & r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      m(i, static_cast<Eigen::Index>(j)) = r[j];
    }
    ++i;
  }
  return m;
}

/// Shrinkage intensity evaluated entry by entry from its definition.
double lw_oracle_rho(const Matrix & y)
{
  const auto n = static_cast<std::size_t>(y.rows());
  const auto d = static_cast<std::size_t>(y.cols());
  std::vector<std::vector<double>> s(d, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t i = 0; i < n; ++i) {
        s[a][b] += y(i, a) * y(i, b) / n;
      }
    }
  }
  double m = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    m += s[a][a] / d;
  }
  double d2 = 0.0;
  double b2 = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      const double t = s[a][b] - (a == b ? m : 0.0);
      d2 += t * t / d;
      for (std::size_t i = 0; i < n; ++i) {
        const double u = y(i, a) * y(i, b) - s[a][b];
        b2 += u * u / (static_cast<double>(n) * n * d);
      }
    }
  }
  return std::min(b2, d2) / d2;
}

}  // namespace

TEST_CASE("ledoit-wolf on a point mass fails the jitter ladder")
{
  const Matrix fraud = Matrix::Constant(10, 3, 2.5);
  const auto lw = ledoit_wolf(centered(fraud));
  CHECK(lw.rho == 0.0);
  CHECK(lw.target_scale == 0.0);
  CHECK(lw.sigma.norm() == 0.0);
  try {
    MahalanobisGate::fit(fraud);
    FAIL("degenerate fit accepted");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
}

TEST_CASE("ledoit-wolf converges at large n")
{
  Matrix x = test::normal_matrix(10000, 2, 3);
  x.col(0) *= 2.0;
  const auto lw = ledoit_wolf(centered(x));
  CHECK(lw.rho >= 0.0);
  CHECK(lw.rho < 0.05);
  CHECK((lw.sigma - Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix()).norm() < 0.15);
}

TEST_CASE("ledoit-wolf matches a direct evaluation when n << d")
{
  const Matrix y = centered(test::normal_matrix(3, 50, 4));
  const auto lw = ledoit_wolf(y);
  CHECK(lw.rho == doctest::Approx(lw_oracle_rho(y)).epsilon(1e-12));
  // 200 seeded draws of this shape give rho in [0.296, 0.347] with
  // scikit-learn's ledoit_wolf_shrinkage
  CHECK(lw.rho > 0.25);
  CHECK(lw.rho < 0.4);
  Eigen::SelfAdjointEigenSolver<Matrix> es(lw.sigma);
  const auto ev = es.eigenvalues();
  CHECK(ev.minCoeff() > 0.0);
  CHECK(ev.maxCoeff() / ev.minCoeff() < 1e6);
}

TEST_CASE("ledoit-wolf intensity stays in the unit interval")
{
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 2 + seed % 17;
    const std::size_t d = 1 + seed % 11;
    const auto lw = ledoit_wolf(centered(test::normal_matrix(n, d, seed)));
    CHECK(lw.rho >= 0.0);
    CHECK(lw.rho <= 1.0);
  }
}

TEST_CASE("mahalanobis score examples")
{
  const auto fraud = test::normal_matrix(20000, 3, 8);
  const auto g = MahalanobisGate::fit(fraud);
  CHECK(g.score(g.mean()) == 0.0);
  Vector step = g.mean();
  step(0) += 1.0;
  CHECK(g.score(step) == doctest::Approx(1.0).epsilon(0.03));

  const auto euclid = test::mahalanobis_with(Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK(euclid.score(Eigen::Vector2d(3, 4)) == doctest::Approx(5.0));
}

TEST_CASE("mahalanobis on a stretched cloud matches the explicit inverse")
{
  Matrix fraud = test::normal_matrix(5000, 2, 12);
  fraud.col(0) *= 2.0;
  const auto g = MahalanobisGate::fit(fraud);
  const Vector x = g.mean() + Eigen::Vector2d(2, 0);
  const double oracle = test::explicit_mahalanobis(g.mean(), g.covariance(), x);
  CHECK(g.score(x) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(g.score(x) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("mahalanobis matches the explicit inverse on random systems")
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix sigma = test::random_spd(4, 100 + seed);
    const Vector mu = test::normal_matrix(1, 4, 200 + seed).row(0).transpose();
    const Vector x = 3.0 * test::normal_matrix(1, 4, 300 + seed).row(0).transpose();
    const auto g = test::mahalanobis_with(mu, sigma);
    const double oracle = test::explicit_mahalanobis(mu, sigma, x);
    CHECK(std::abs(g.score(x) - oracle) <= 1e-8 * oracle);
  }
}

TEST_CASE("mahalanobis score is affine invariant")
{
  const Matrix fraud = test::normal_matrix(400, 3, 14);
  Matrix a = test::random_spd(3, 15);
  const Vector shift = Eigen::Vector3d(1, -2, 0.5);
  Matrix moved = fraud * a.transpose();
  for (Eigen::Index i = 0; i < moved.rows(); ++i) {
    moved.row(i) += shift.transpose();
  }
  // with no shrinkage target the score is invariant; keep the comparison to
  // the unshrunk covariance so the check is exact
  const auto g1 = test::mahalanobis_with(
    fraud.colwise().mean().transpose(), centered(fraud).transpose() * centered(fraud) / 400.0);
  const auto g2 = test::mahalanobis_with(
    moved.colwise().mean().transpose(), centered(moved).transpose() * centered(moved) / 400.0);
  const Vector q = Eigen::Vector3d(2, 1, -1);
  CHECK(g2.score(a * q + shift) == doctest::Approx(g1.score(q)).epsilon(1e-9));
}

TEST_CASE("knn examples")
{
  CHECK_THROWS_AS(KnnDensityGate::fit(test::normal_matrix(5, 2, 1), 6), Error);

  const auto ref = test::normal_matrix(10, 2, 2);
  const auto g1 = KnnDensityGate::fit(ref, 1);
  CHECK(g1.score(ref.row(3).transpose()) == 0.0);

  const auto line = KnnDensityGate::fit(points({{0.0}, {10.0}}), 1);
  CHECK(line.score(Vector::Constant(1, 4.0)) == doctest::Approx(4.0));

  const auto three = points({{0, 0}, {1, 0}, {5, 0}});
  CHECK(KnnDensityGate::fit(three, 2).score(Eigen::Vector2d(0, 0)) == doctest::Approx(1.0));
  CHECK(KnnDensityGate::fit(three, 3).score(Eigen::Vector2d(0, 0)) == doctest::Approx(5.0));
}

TEST_CASE("knn matches a full-sort oracle exactly")
{
  const Matrix ref = test::normal_matrix(200, 4, 20);
  const Matrix queries = test::normal_matrix(50, 4, 21);
  const auto g = KnnDensityGate::fit(ref, 5);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const Vector q = queries.row(i).transpose();
    CHECK(g.score(q) == test::sorted_kth_distance(ref, q, 5));
  }
}

TEST_CASE("gate decisions around the threshold")
{
  auto g = test::mahalanobis_with(Vector::Zero(2), Matrix::Identity(2, 2));
  CHECK_THROWS_AS(g.decide(Eigen::Vector2d(1, 0)), Error);
  g.set_threshold(5.0);
  const auto at = gate_pass(g, Eigen::Vector2d(3, 4));
  CHECK(at.pass);
  CHECK(at.margin == 0.0);
  const auto above = gate_pass(g, Eigen::Vector2d(6, 0));
  CHECK(above.margin == doctest::Approx(1.0 / g.margin_scale()));
  const auto below = gate_pass(g, Eigen::Vector2d(1, 0));
  CHECK_FALSE(below.pass);
  CHECK(below.margin < 0.0);

  const auto fitted = MahalanobisGate::fit(test::normal_matrix(300, 2, 5));
  auto copy = fitted.clone();
  copy->set_threshold(1.0 + fitted.margin_scale());
  const Vector x = fitted.mean() + Eigen::Vector2d(10, 0);
  const double s = copy->score(x);
  copy->set_threshold(s - fitted.margin_scale());
  CHECK(copy->decide(x).margin == doctest::Approx(1.0));
}

TEST_CASE("gate scores grow with distance from the fraud centre")
{
  const auto fraud = test::normal_matrix(500, 3, 30);
  const auto m = MahalanobisGate::fit(fraud);
  const auto k = KnnDensityGate::fit(fraud, 5);
  const Vector dir = Eigen::Vector3d(1, 2, -1).normalized();
  double last_m = -1.0;
  double last_k = -1.0;
  for (double t = 4.0; t <= 40.0; t += 4.0) {
    const Vector x = m.mean() + t * dir;
    CHECK(m.score(x) > last_m);
    CHECK(k.score(x) > last_k);
    last_m = m.score(x);
    last_k = k.score(x);
  }
}

TEST_CASE("gates survive a json round trip")
{
  const auto fraud = test::normal_matrix(100, 3, 40);
  auto m = MahalanobisGate::fit(fraud);
  auto k = KnnDensityGate::fit(fraud, 4);
  m.set_threshold(2.0);
  k.set_threshold(0.7);
  const auto m2 = gate_from_json(m.to_json());
  const auto k2 = gate_from_json(k.to_json());
  const Vector q = Eigen::Vector3d(0.5, -1, 2);
  CHECK(m2->score(q) == m.score(q));
  CHECK(k2->score(q) == k.score(q));
  CHECK(m2->threshold() == m.threshold());
  CHECK(k2->margin_scale() == k.margin_scale());
  CHECK_THROWS_AS(m.score(Eigen::Vector2d(1, 1)), Error);
}

}  // namespace sage
