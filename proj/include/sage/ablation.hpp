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

#ifndef SAGE__ABLATION_HPP_
#define SAGE__ABLATION_HPP_

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sage/config.hpp"
#include "sage/harvester.hpp"
#include "sage/simhash.hpp"

namespace sage
{

struct PRPoint
{
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  /// False when nothing scored at or above the threshold; precision is then
  /// reported as 1.
  bool precision_defined = true;
};

/// 0.00, 0.01, ..., 1.00
std::vector<double> default_pr_grid();

/// A sample is predicted positive when score >= threshold.
std::vector<PRPoint> pr_curve(
  std::span<const double> scores, std::span<const bool> truth, std::span<const double> grid);

/// Step-wise area under the exact precision-recall curve (average precision).
/// Tied scores enter together.
double average_precision(std::span<const double> scores, std::span<const bool> truth);

/// threshold,precision,recall
std::string format_pr_csv(std::span<const PRPoint> points);

struct CoverageBucket
{
  std::string key;
  std::size_t population = 0;
  std::size_t sampled = 0;
  double ratio = 0.0;
};

struct CoverageReport
{
  std::size_t floor = 0;
  std::vector<CoverageBucket> buckets;  // key order
  std::size_t meeting_floor = 0;         // buckets with sampled >= min(floor, pop)
  double floor_fraction = 1.0;

  const CoverageBucket * find(const std::string & key) const;
};

/// Throws a validation error for ids outside the table or listed twice.
CoverageReport coverage_report(
  const StratumTable & table, std::span<const std::string> sampled_ids, std::size_t floor);

enum class SamplerKind
{
  kRandom,
  kSimhashFloors,
};

std::string_view to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(std::string_view text);

struct AblationArm
{
  std::string name;
  SamplerKind sampler = SamplerKind::kSimhashFloors;
  std::vector<std::string> gates;
  std::size_t required_votes = 0;  // 0 -> unanimous

  VotingPolicy policy() const;
  void validate() const;
  nlohmann::json to_json() const;
};

/// random, simhash-only, mahalanobis-only, knn-only, dual-unanimous, full-sage
std::vector<AblationArm> default_ablation_arms();
AblationArm default_ablation_arm(const std::string & name);

struct AblationPlan
{
  std::vector<AblationArm> arms;
  /// Arm whose natural yield every other arm is matched to.
  std::string reference;
  /// Recall on the test fraud at which cohort false-positive rates are read.
  double fpr_recall = 0.9;
};

/// {"arms": ["full-sage", {"name": ..., "sampler": ..., "gates": [...],
/// "required_votes": k}], "reference": "full-sage", "fpr_recall": 0.9}; every
/// key is optional.
AblationPlan parse_ablation_plan(const nlohmann::json & j);
AblationPlan load_ablation_plan(const std::filesystem::path & path);
AblationPlan default_ablation_plan();

struct ArmResult
{
  std::string arm;
  std::vector<std::string> gate_names;
  std::vector<double> thresholds;
  std::size_t budget = 0;       // simhash arms: budget after yield matching
  std::size_t scanned = 0;      // candidates looked at
  std::size_t yield = 0;
  std::size_t target_yield = 0;
  bool yield_matched = true;    // |yield - target| <= 1% of target
  std::size_t contaminated = 0; // accepted samples that are planted fraud
  double contamination = 0.0;
  CoverageReport coverage;
  std::vector<PRPoint> pr;
  double auprc = 0.0;
  /// Probe threshold at which recall on the test fraud first reaches the
  /// plan's fpr_recall.
  double recall_threshold = 0.0;
  /// Share of test rows of each legitimate cohort flagged by the probe, at
  /// recall_threshold and at probability 0.5.
  std::map<std::string, double> cohort_fpr;
  std::map<std::string, double> cohort_fpr_at_half;
  std::vector<std::string> sampled_ids;
  std::vector<std::string> accepted_ids;
};

struct AblationReport
{
  std::string config_digest;
  nlohmann::json config;
  nlohmann::json arm_specs;
  std::string reference;
  double fpr_recall = 0.9;
  std::vector<ArmResult> arms;
  StratumTable table;

  const ArmResult & arm(const std::string & name) const;

  /// arm,contamination,yield,coverage_floor_fraction,auprc
  std::string results_csv() const;
  /// arm,cohort,fpr_at_recall,fpr_at_half
  std::string cohort_fpr_csv() const;
  nlohmann::json to_json() const;
};

/// Runs every arm on the config's dataset (a truth sidecar is required).
/// Arms share the splits, the stratum table and the gate fits; each arm
/// calibrates its own thresholds on its own candidate pool at the configured
/// budget. The reference arm then fixes the target yield and every other arm
/// grows or shrinks its candidate pool (thresholds held fixed) to match it.
AblationReport run_ablation(
  const PipelineConfig & config, const AblationPlan & plan, int threads = 1);

/// results.csv, cohort_fpr.csv, pr_<arm>.csv and ablation_manifest.json.
void write_ablation(const AblationReport & report, const std::filesystem::path & dir);

}  // namespace sage

#endif  // SAGE__ABLATION_HPP_
