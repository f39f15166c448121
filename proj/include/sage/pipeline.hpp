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

#ifndef SAGE__PIPELINE_HPP_
#define SAGE__PIPELINE_HPP_

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sage/calibration.hpp"
#include "sage/config.hpp"
#include "sage/core_data.hpp"
#include "sage/datagen.hpp"
#include "sage/floor_sampler.hpp"
#include "sage/gates.hpp"
#include "sage/harvester.hpp"
#include "sage/simhash.hpp"

namespace sage
{

/// Artifact file names inside the output directory.
namespace artifact
{
inline constexpr const char * kStrata = "strata.json";
inline constexpr const char * kAllocation = "allocation.json";
inline constexpr const char * kSample = "sample.csv";
inline constexpr const char * kGates = "gates.json";
inline constexpr const char * kCalibrationJson = "calibration.json";
inline constexpr const char * kCalibrationCsv = "calibration.csv";
inline constexpr const char * kHarvestRecords = "harvest_records.csv";
inline constexpr const char * kHarvestManifest = "harvest_manifest.json";
inline constexpr const char * kTraining = "training.csv";
inline constexpr const char * kRunManifest = "run_manifest.json";
}  // namespace artifact

/// Dataset, optional truth, standardizer and label-stratified splits.
struct PreparedInputs
{
  Dataset data{1};
  std::optional<TruthTable> truth;
  Standardizer standardizer;
  Splits splits;

  const TruthTable * truth_ptr() const { return truth ? &*truth : nullptr; }
};

PreparedInputs prepare_inputs(const PipelineConfig & config);

/// Hashes the unlabeled rows into buckets.
StratumTable stratify_population(
  const PipelineConfig & config, const PreparedInputs & inputs, int threads = 1);

struct SampleDraw
{
  AllocationPlan plan;
  std::vector<std::size_t> rows;  // sorted by id
};

SampleDraw draw_sample(
  const PipelineConfig & config, const StratumTable & table, std::size_t budget);

/// Gates fitted on the standardized fraud rows of the fit split.
struct FittedGates
{
  std::vector<std::unique_ptr<GateModel>> models;
  Matrix fraud;

  GateRefs refs() const;
  std::vector<std::string> names() const;
  std::vector<double> thresholds() const;
};

FittedGates fit_gates(const PipelineConfig & config, const PreparedInputs & inputs,
  std::span<const std::string> gate_names);

ContaminationEstimator make_estimator(
  const PipelineConfig & config, const PreparedInputs & inputs, const Matrix & fraud);

/// Members of `rows` that also appear in `allowed`, in the order of `rows`.
std::vector<std::size_t> restrict_rows(
  std::span<const std::size_t> rows, std::span<const std::size_t> allowed, std::size_t n);

/// Sweeps each gate over the validation part of `sample_rows`, sets the chosen
/// thresholds on the gates and confirms the ensemble on the test part.
CalibrationReport calibrate_gates(const PipelineConfig & config, const PreparedInputs & inputs,
  FittedGates & gates, const ContaminationEstimator & estimator,
  std::span<const std::size_t> sample_rows, int threads = 1);

/// Standardizer, policy and calibrated gates in one document.
nlohmann::json gates_document(const PipelineConfig & config, const Standardizer & standardizer,
  const FittedGates & gates);

struct LoadedGates
{
  std::string config_digest;
  Standardizer standardizer;
  VotingPolicy policy;
  std::vector<std::unique_ptr<GateModel>> models;

  GateRefs refs() const;
};

LoadedGates parse_gates_document(const nlohmann::json & j);
LoadedGates load_gates_document(const std::filesystem::path & path);

/// Stagewise entry points. Each one writes its artifacts into config.out_dir
/// and records itself in the run manifest. Later stages read the artifacts of
/// earlier ones and refuse artifacts written under a different config.
void run_stratify_stage(const PipelineConfig & config, int threads = 1);
void run_calibrate_stage(const PipelineConfig & config, int threads = 1);
void run_harvest_stage(const PipelineConfig & config, int threads = 1);

/// All stages in order. A failing stage leaves a manifest marked partial and
/// its error is rethrown. Returns the final manifest.
nlohmann::json run_pipeline(const PipelineConfig & config, int threads = 1);

}  // namespace sage

#endif  // SAGE__PIPELINE_HPP_
