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

#ifndef SAGE__GATES_HPP_
#define SAGE__GATES_HPP_

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sage/core_data.hpp"

namespace sage
{

struct GateDecision
{
  bool pass = false;
  double score = 0.0;
  double margin = 0.0;
};

/// A fitted statistical gate. Scores are oriented so that larger means
/// farther from the fraud distribution; a sample passes when
/// score >= threshold. Margins are (score - threshold) / margin_scale so that
/// margins from different gates live on comparable scales.
class GateModel
{
public:
  virtual ~GateModel() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double score(const Eigen::Ref<const Vector> & x) const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<GateModel> clone() const = 0;

  std::optional<double> threshold() const { return threshold_; }
  void set_threshold(double tau) { threshold_ = tau; }
  void clear_threshold() { threshold_.reset(); }
  double margin_scale() const { return margin_scale_; }

  /// Throws a validation error if the threshold has not been calibrated.
  GateDecision decide(const Eigen::Ref<const Vector> & x) const;

protected:
  void check_query(const Eigen::Ref<const Vector> & x) const;
  nlohmann::json common_json() const;
  void read_common_json(const nlohmann::json & j);

  std::optional<double> threshold_;
  double margin_scale_ = 1.0;
};

GateDecision gate_pass(const GateModel & gate, const Eigen::Ref<const Vector> & x);

struct ShrunkCovariance
{
  Matrix sigma;  // rho * m * I + (1 - rho) * S
  double rho = 0.0;
  double target_scale = 0.0;  // m = tr(S) / d
};

/// Ledoit-Wolf shrinkage towards a scaled identity. `centered` holds one
/// already-centered observation per row; n >= 2 rows are required. Sums run
/// in row order so repeated fits are bit-identical.
ShrunkCovariance ledoit_wolf(const Matrix & centered);

/// Default Cholesky jitter ladder, as multiples of m * I.
inline const std::vector<double> kDefaultJitterLadder = {1e-10, 1e-8, 1e-6};

/// Mahalanobis distance from the fraud mean under the shrunk covariance.
class MahalanobisGate final : public GateModel
{
public:
  /// `fraud` holds one standardized fraud vector per row (>= 2 rows).
  static MahalanobisGate fit(
    const Matrix & fraud, const std::vector<double> & jitter_ladder = kDefaultJitterLadder);

  static MahalanobisGate from_json(const nlohmann::json & j);

  std::string_view name() const override { return "mahalanobis"; }
  std::size_t dim() const override { return static_cast<std::size_t>(mean_.size()); }
  double score(const Eigen::Ref<const Vector> & x) const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<GateModel> clone() const override;

  const Vector & mean() const { return mean_; }
  const Matrix & covariance() const { return sigma_; }
  Matrix cholesky_factor() const { return llt_.matrixL(); }
  double rho() const { return rho_; }
  /// Jitter multiple that made Cholesky succeed (0 when none was needed).
  double jitter() const { return jitter_; }

private:
  MahalanobisGate() = default;
  void factorize(const std::vector<double> & jitter_ladder, double target_scale);

  Vector mean_;
  Matrix sigma_;
  Eigen::LLT<Matrix> llt_;
  double rho_ = 0.0;
  double jitter_ = 0.0;
};

/// Distance to the k-th nearest stored fraud point (exact brute-force scan).
class KnnDensityGate final : public GateModel
{
public:
  /// `fraud` holds one standardized fraud vector per row; 1 <= k <= rows.
  static KnnDensityGate fit(const Matrix & fraud, std::size_t k);

  static KnnDensityGate from_json(const nlohmann::json & j);

  std::string_view name() const override { return "knn"; }
  std::size_t dim() const override { return dim_; }
  double score(const Eigen::Ref<const Vector> & x) const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<GateModel> clone() const override;

  std::size_t k() const { return k_; }
  std::size_t reference_size() const { return reference_.size() / dim_; }

private:
  KnnDensityGate() = default;
  double kth_distance(const double * x, std::size_t skip) const;

  std::size_t dim_ = 0;
  std::size_t k_ = 1;
  std::vector<double> reference_;  // row-major
};

std::unique_ptr<GateModel> gate_from_json(const nlohmann::json & j);

}  // namespace sage

#endif  // SAGE__GATES_HPP_
