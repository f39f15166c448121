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

#ifndef SAGE__CALIBRATION_HPP_
#define SAGE__CALIBRATION_HPP_

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sage/core_data.hpp"
#include "sage/datagen.hpp"
#include "sage/gates.hpp"
#include "sage/harvester.hpp"
#include "sage/probe.hpp"

namespace sage
{

/// Validation and test fractions; the fit split gets the rest.
class SplitSpec
{
public:
  /// Throws a validation error unless both fractions are positive and sum
  /// to less than 1.
  SplitSpec(double validation, double test, std::uint64_t seed);

  double validation() const { return validation_; }
  double test() const { return test_; }
  std::uint64_t seed() const { return seed_; }

private:
  double validation_;
  double test_;
  std::uint64_t seed_;
};

/// Row indices per split, each sorted ascending.
struct Splits
{
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Label-stratified, disjoint, seeded split. Within each label group of size
/// m: round(m * validation) rows go to validation, round(m * test) to test and
/// the remainder to fit. Labels in `required` must end up with all three
/// parts non-empty.
Splits split(const Dataset & data, const SplitSpec & spec, const LabelFilter & required = {});

enum class ContaminationMethod
{
  kTrueLabel,
  kDistanceProbe,
  kRegressionProbe,
};

std::string_view to_string(ContaminationMethod method);
ContaminationMethod parse_contamination_method(std::string_view text);

struct ContaminationEstimate
{
  double rate = 0.0;
  std::size_t flagged = 0;  // accepted samples judged to be fraud
  std::size_t accepted = 0;
  bool empty = false;       // nothing accepted; rate is 0 by convention
};

/// Estimates the fraud share of an accepted set of candidates.
///  true-label:        planted truth from the synthetic sidecar
///  distance-probe:    Mahalanobis score below a radius taken as a quantile of
///                     the fraud set's own scores
///  regression-probe:  logistic probe (fraud vs labeled nonfraud) with
///                     probability > 0.5
class ContaminationEstimator
{
public:
  static ContaminationEstimator true_label(const TruthTable & truth);
  static ContaminationEstimator distance_probe(
    const MahalanobisGate & gate, const Matrix & fraud, double radius_quantile);
  static ContaminationEstimator regression_probe(
    const Matrix & fraud, const Matrix & nonfraud, const ProbeOptions & options = {});

  ContaminationMethod method() const { return method_; }

  bool is_contaminant(const std::string & id, const Eigen::Ref<const Vector> & x) const;

  ContaminationEstimate estimate(
    const Candidates & candidates, std::span<const std::size_t> accepted) const;

  nlohmann::json describe() const;

private:
  ContaminationMethod method_ = ContaminationMethod::kTrueLabel;
  const TruthTable * truth_ = nullptr;
  std::optional<MahalanobisGate> gate_;
  double radius_ = 0.0;
  double radius_quantile_ = 0.0;
  std::optional<LogisticProbe> probe_;
};

struct SweepRow
{
  double quantile = 0.0;
  double tau = 0.0;
  ContaminationEstimate contamination;
  std::size_t yield = 0;
};

struct GateSweep
{
  std::string gate;
  std::vector<SweepRow> rows;
};

struct ThresholdChoice
{
  std::string gate;
  double quantile = 0.0;
  double tau = 0.0;
  double contamination = 0.0;
  std::size_t yield = 0;
  bool constraint_met = true;
};

struct TestConfirmation
{
  ContaminationEstimate contamination;
  std::size_t scanned = 0;
  std::size_t yield = 0;
  bool passed = false;
};

struct CalibrationReport
{
  double max_contamination = 0.01;
  std::string estimator;
  std::vector<GateSweep> sweeps;
  std::vector<ThresholdChoice> chosen;
  std::optional<TestConfirmation> test;

  nlohmann::json to_json() const;
  /// gate,q,tau,contamination,yield
  std::string to_csv() const;
};

/// 19 quantiles, 0.05 .. 0.95.
std::vector<double> default_quantile_grid();

/// For each q, tau(q) is the q-quantile of gate scores over the validation
/// candidates; the accept set is {score >= tau(q)}.
GateSweep sweep_thresholds(const GateModel & gate, const Candidates & validation,
  std::span<const double> grid, const ContaminationEstimator & estimator, int threads = 1);

/// Per gate, the smallest tau whose contamination is within the constraint;
/// otherwise the least contaminated row (ties to the smaller tau), flagged.
std::vector<ThresholdChoice> select_thresholds(
  std::span<const GateSweep> sweeps, double max_contamination);

/// Runs the voting ensemble over the held-out test candidates. The ids of the
/// validation candidates are passed so disjointness is checked, not assumed.
TestConfirmation confirm_on_test(const GateRefs & gates, const VotingPolicy & policy,
  const Candidates & test, std::span<const std::string> validation_ids,
  const ContaminationEstimator & estimator, double max_contamination, int threads = 1);

}  // namespace sage

#endif  // SAGE__CALIBRATION_HPP_
