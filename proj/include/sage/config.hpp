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

#ifndef SAGE__CONFIG_HPP_
#define SAGE__CONFIG_HPP_

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sage/core_data.hpp"
#include "sage/gates.hpp"
#include "sage/probe.hpp"

namespace sage
{

struct SimhashConfig
{
  std::size_t bits = 64;
  std::size_t prefix_bits = 12;
  std::uint64_t seed = 11;
};

struct SamplerConfig
{
  std::size_t budget = 20000;
  std::size_t floor = 4;
  std::uint64_t seed = 12;
};

struct GatesConfig
{
  std::vector<std::string> enabled = {"mahalanobis", "knn"};
  std::size_t k = 5;
  std::vector<double> jitter_ladder = kDefaultJitterLadder;
};

struct CalibrationConfig
{
  std::vector<double> grid;  // empty -> default 19-point grid
  double max_contamination = 0.01;
  double validation_fraction = 0.2;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 13;
  /// "true-label" needs a truth sidecar; the probes do not.
  std::string estimator = "distance-probe";
  double probe_radius_quantile = 0.95;
};

/// Everything a run depends on. All randomness flows from the seeds here.
struct PipelineConfig
{
  std::filesystem::path dataset;
  std::filesystem::path truth;  // optional
  std::filesystem::path out_dir = "out";
  std::size_t dim = 0;
  LabelFilter standardize_on = LabelFilter::only(Label::kUnlabeled);
  SimhashConfig simhash;
  SamplerConfig sampler;
  GatesConfig gates;
  std::size_t required_votes = 0;  // 0 -> unanimous
  CalibrationConfig calibration;
  ProbeOptions probe;

  /// Checks ranges and cross-field constraints (k-of-n, split fractions...).
  void validate() const;

  std::size_t gate_count() const { return gates.enabled.size(); }
  std::size_t votes_needed() const { return required_votes == 0 ? gate_count() : required_votes; }
  std::vector<double> quantile_grid() const;

  /// Replaces every seed with one derived from `seed`.
  void override_seeds(std::uint64_t seed);

  /// Canonical JSON; out_dir is left out so the digest names the computation,
  /// not where its results were written.
  nlohmann::json to_json() const;
  std::string digest() const;

  /// Relative paths resolve against `base_dir`. Unknown keys are rejected.
  static PipelineConfig from_json(
    const nlohmann::json & j, const std::filesystem::path & base_dir = {});
};

PipelineConfig load_pipeline_config(const std::filesystem::path & path);

}  // namespace sage

#endif  // SAGE__CONFIG_HPP_
