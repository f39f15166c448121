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

#include "sage/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

SplitSpec::SplitSpec(double validation, double test, std::uint64_t seed)
: validation_(validation), test_(test), seed_(seed)
{
  require(validation > 0.0 && test > 0.0 && validation + test < 1.0, ErrorKind::kValidation,
    "split fractions must be positive with validation + test < 1, got " + format_real(validation) +
      " and " + format_real(test));
}

Splits split(const Dataset & data, const SplitSpec & spec, const LabelFilter & required)
{
  Splits out;
  for (unsigned l = 0; l < 4; ++l) {
    const auto label = static_cast<Label>(l);
    auto rows = data.select(LabelFilter::only(label));
    std::mt19937_64 rng(spec.seed() ^ fnv1a64(to_string(label)));
    std::shuffle(rows.begin(), rows.end(), rng);

    const double m = static_cast<double>(rows.size());
    const auto n_val = static_cast<std::size_t>(std::llround(m * spec.validation()));
    const auto n_test =
      std::min(rows.size() - n_val, static_cast<std::size_t>(std::llround(m * spec.test())));
    const auto val_end = rows.begin() + static_cast<std::ptrdiff_t>(n_val);
    const auto test_end = val_end + static_cast<std::ptrdiff_t>(n_test);
    out.validation.insert(out.validation.end(), rows.begin(), val_end);
    out.test.insert(out.test.end(), val_end, test_end);
    out.fit.insert(out.fit.end(), test_end, rows.end());

    if (required.contains(label)) {
      require(n_val > 0 && n_test > 0 && rows.size() > n_val + n_test, ErrorKind::kValidation,
        "split leaves an empty part for label '" + std::string(to_string(label)) + "' (" +
          std::to_string(rows.size()) + " rows)");
    }
  }
  std::sort(out.fit.begin(), out.fit.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::string_view to_string(ContaminationMethod method)
{
  switch (method) {
    case ContaminationMethod::kTrueLabel:
      return "true-label";
    case ContaminationMethod::kDistanceProbe:
      return "distance-probe";
    case ContaminationMethod::kRegressionProbe:
      return "regression-probe";
  }
  return "?";
}

ContaminationMethod parse_contamination_method(std::string_view text)
{
  if (text == "true-label") {
    return ContaminationMethod::kTrueLabel;
  }
  if (text == "distance-probe") {
    return ContaminationMethod::kDistanceProbe;
  }
  if (text == "regression-probe") {
    return ContaminationMethod::kRegressionProbe;
  }
  fail(ErrorKind::kValidation, "unknown contamination method '" + std::string(text) + "'");
}

ContaminationEstimator ContaminationEstimator::true_label(const TruthTable & truth)
{
  ContaminationEstimator e;
  e.method_ = ContaminationMethod::kTrueLabel;
  e.truth_ = &truth;
  return e;
}

ContaminationEstimator ContaminationEstimator::distance_probe(
  const MahalanobisGate & gate, const Matrix & fraud, double radius_quantile)
{
  require(fraud.rows() >= 1, ErrorKind::kValidation, "distance probe needs fraud samples");
  require(radius_quantile > 0.0 && radius_quantile < 1.0, ErrorKind::kValidation,
    "distance probe radius quantile must lie in (0, 1)");
  std::vector<double> scores;
  for (Eigen::Index i = 0; i < fraud.rows(); ++i) {
    scores.push_back(gate.score(fraud.row(i).transpose()));
  }
  ContaminationEstimator e;
  e.method_ = ContaminationMethod::kDistanceProbe;
  e.gate_ = gate;
  e.radius_quantile_ = radius_quantile;
  e.radius_ = quantile(std::move(scores), radius_quantile);
  return e;
}

ContaminationEstimator ContaminationEstimator::regression_probe(
  const Matrix & fraud, const Matrix & nonfraud, const ProbeOptions & options)
{
  require(fraud.rows() >= 1 && nonfraud.rows() >= 1, ErrorKind::kValidation,
    "regression probe needs labeled fraud and labeled nonfraud samples");
  TrainingSet set;
  const auto n = fraud.rows() + nonfraud.rows();
  set.features.resize(n, fraud.cols());
  set.features << fraud, nonfraud;
  set.targets = Vector::Zero(n);
  set.targets.head(fraud.rows()).setOnes();
  set.weights = Vector::Ones(n);
  set.ids.resize(static_cast<std::size_t>(n));
  ContaminationEstimator e;
  e.method_ = ContaminationMethod::kRegressionProbe;
  e.probe_ = train_probe(set, options);
  return e;
}

bool ContaminationEstimator::is_contaminant(
  const std::string & id, const Eigen::Ref<const Vector> & x) const
{
  switch (method_) {
    case ContaminationMethod::kTrueLabel:
      return truth_->is_fraud(id);
    case ContaminationMethod::kDistanceProbe:
      return gate_->score(x) < radius_;
    case ContaminationMethod::kRegressionProbe:
      return probe_->probability(std::span<const double>(
               x.data(), static_cast<std::size_t>(x.size()))) > 0.5;
  }
  return false;
}

ContaminationEstimate ContaminationEstimator::estimate(
  const Candidates & candidates, std::span<const std::size_t> accepted) const
{
  ContaminationEstimate est;
  est.accepted = accepted.size();
  if (accepted.empty()) {
    est.empty = true;
    return est;
  }
  for (std::size_t i : accepted) {
    if (is_contaminant(candidates.ids[i],
          candidates.vectors.row(static_cast<Eigen::Index>(i)).transpose())) {
      ++est.flagged;
    }
  }
  est.rate = static_cast<double>(est.flagged) / static_cast<double>(est.accepted);
  return est;
}

nlohmann::json ContaminationEstimator::describe() const
{
  nlohmann::json j = {{"method", std::string(to_string(method_))}};
  if (method_ == ContaminationMethod::kDistanceProbe) {
    j["radius_quantile"] = radius_quantile_;
    j["radius"] = radius_;
  }
  return j;
}

std::vector<double> default_quantile_grid()
{
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) {
    grid.push_back(0.05 * i);
  }
  return grid;
}

GateSweep sweep_thresholds(const GateModel & gate, const Candidates & validation,
  std::span<const double> grid, const ContaminationEstimator & estimator, int threads)
{
  require(validation.size() > 0, ErrorKind::kInvalidArgument,
    "threshold sweep needs validation candidates");
  require(!grid.empty(), ErrorKind::kInvalidArgument, "threshold sweep needs a quantile grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 0.0 && grid[i] < 1.0, ErrorKind::kInvalidArgument,
      "quantile grid values must lie in [0, 1)");
    require(i == 0 || grid[i] > grid[i - 1], ErrorKind::kInvalidArgument,
      "quantile grid must be strictly increasing");
  }

  std::vector<double> scores(validation.size());
  parallel_for(scores.size(), threads, [&](std::size_t i) {
    scores[i] = gate.score(validation.vectors.row(static_cast<Eigen::Index>(i)).transpose());
  });

  GateSweep sweep;
  sweep.gate = std::string(gate.name());
  std::vector<std::size_t> accepted;
  for (double q : grid) {
    SweepRow row;
    row.quantile = q;
    row.tau = quantile(scores, q);
    accepted.clear();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= row.tau) {
        accepted.push_back(i);
      }
    }
    row.yield = accepted.size();
    row.contamination = estimator.estimate(validation, accepted);
    sweep.rows.push_back(row);
  }
  return sweep;
}

std::vector<ThresholdChoice> select_thresholds(
  std::span<const GateSweep> sweeps, double max_contamination)
{
  std::vector<ThresholdChoice> out;
  for (const auto & sweep : sweeps) {
    require(!sweep.rows.empty(), ErrorKind::kInvalidArgument,
      "no sweep rows for gate " + sweep.gate);
    const SweepRow * best = nullptr;
    for (const auto & row : sweep.rows) {
      if (row.contamination.rate <= max_contamination && (!best || row.tau < best->tau)) {
        best = &row;
      }
    }
    bool met = best != nullptr;
    if (!met) {
      for (const auto & row : sweep.rows) {
        if (!best || row.contamination.rate < best->contamination.rate ||
            (row.contamination.rate == best->contamination.rate && row.tau < best->tau)) {
          best = &row;
        }
      }
    }
    out.push_back(
      {sweep.gate, best->quantile, best->tau, best->contamination.rate, best->yield, met});
  }
  return out;
}

TestConfirmation confirm_on_test(const GateRefs & gates, const VotingPolicy & policy,
  const Candidates & test, std::span<const std::string> validation_ids,
  const ContaminationEstimator & estimator, double max_contamination, int threads)
{
  require(test.size() > 0, ErrorKind::kProtocol, "test split has no candidates");
  const std::unordered_set<std::string> validation(validation_ids.begin(), validation_ids.end());
  for (const auto & id : test.ids) {
    require(!validation.contains(id), ErrorKind::kProtocol,
      "validation and test splits overlap at id '" + id + "'");
  }

  const auto result = harvest(test, gates, policy, threads);
  // harvest records are id-ordered; map back to candidate positions
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < test.size(); ++i) {
    position.emplace(test.ids[i], i);
  }
  std::vector<std::size_t> accepted;
  for (const auto & rec : result.records) {
    if (rec.accepted) {
      accepted.push_back(position.at(rec.id));
    }
  }
  TestConfirmation c;
  c.scanned = test.size();
  c.yield = accepted.size();
  c.contamination = estimator.estimate(test, accepted);
  c.passed = c.contamination.rate <= max_contamination;
  return c;
}

namespace
{
nlohmann::json estimate_json(const ContaminationEstimate & e)
{
  return {{"rate", e.rate}, {"flagged", e.flagged}, {"accepted", e.accepted}, {"empty", e.empty}};
}
}  // namespace

nlohmann::json CalibrationReport::to_json() const
{
  auto sweeps_json = nlohmann::json::array();
  for (const auto & s : sweeps) {
    auto rows = nlohmann::json::array();
    for (const auto & r : s.rows) {
      rows.push_back({{"q", r.quantile}, {"tau", r.tau}, {"yield", r.yield},
        {"contamination", estimate_json(r.contamination)}});
    }
    sweeps_json.push_back({{"gate", s.gate}, {"rows", std::move(rows)}});
  }
  auto chosen_json = nlohmann::json::array();
  for (const auto & c : chosen) {
    chosen_json.push_back({{"gate", c.gate}, {"q", c.quantile}, {"tau", c.tau},
      {"contamination", c.contamination}, {"yield", c.yield},
      {"status", c.constraint_met ? "ok" : "constraint-unmet"}});
  }
  nlohmann::json j = {
    {"max_contamination", max_contamination},
    {"estimator", estimator},
    {"sweeps", std::move(sweeps_json)},
    {"chosen", std::move(chosen_json)},
  };
  if (test) {
    j["test"] = {{"scanned", test->scanned}, {"yield", test->yield},
      {"contamination", estimate_json(test->contamination)}, {"passed", test->passed}};
  } else {
    j["test"] = nullptr;
  }
  return j;
}

std::string CalibrationReport::to_csv() const
{
  std::string out = "gate,q,tau,contamination,yield\n";
  for (const auto & s : sweeps) {
    for (const auto & r : s.rows) {
      out += s.gate + ',' + format_real(r.quantile) + ',' + format_real(r.tau) + ',' +
             format_real(r.contamination.rate) + ',' + std::to_string(r.yield) + '\n';
    }
  }
  return out;
}

}  // namespace sage
