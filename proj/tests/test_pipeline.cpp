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

#include <filesystem>
#include <string>

#include "sage/config.hpp"
#include "sage/error.hpp"
#include "sage/pipeline.hpp"
#include "sage/util.hpp"
#include "support.hpp"

namespace sage
{
namespace
{

namespace fs = std::filesystem;

ErrorKind kind_of(const auto & body)
{
  try {
    body();
  } catch (const Error & e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInvalidArgument;
}

const char * const kArtifacts[] = {artifact::kStrata, artifact::kAllocation, artifact::kSample,
  artifact::kGates, artifact::kCalibrationJson, artifact::kCalibrationCsv,
  artifact::kHarvestRecords, artifact::kHarvestManifest, artifact::kTraining,
  artifact::kRunManifest};

/// Small S1 setup shared by the pipeline cases.
PipelineConfig small_config(const fs::path & dir)
{
  auto j = test::write_scenario(dir, "s1", 6000, 17);
  j["sampler"] = {{"budget", 2500}, {"floor", 3}};
  j["calibration"] = {{"estimator", "true-label"}};
  return PipelineConfig::from_json(j);
}

void same_artifacts(const fs::path & a, const fs::path & b)
{
  for (const char * name : kArtifacts) {
    INFO(name);
    CHECK(read_file(a / name) == read_file(b / name));
  }
}

}  // namespace

TEST_CASE("config defaults and validation")
{
  const auto base = nlohmann::json{{"dataset", "d.csv"}, {"dim", 8}};
  const auto c = PipelineConfig::from_json(base, "/data");
  CHECK(c.dataset == fs::path("/data/d.csv"));
  CHECK(c.out_dir == fs::path("/data/out"));
  CHECK(c.votes_needed() == 2);
  CHECK(c.quantile_grid().size() == 19);

  auto j = base;
  j["policy"] = {{"required_votes", 3}};
  CHECK(kind_of([&] { PipelineConfig::from_json(j); }) == ErrorKind::kValidation);
  j = base;
  j["samplr"] = nlohmann::json::object();
  CHECK(kind_of([&] { PipelineConfig::from_json(j); }) == ErrorKind::kValidation);
  j = base;
  j["gates"] = {{"enabled", {"mahalanobis", "isolation"}}};
  CHECK(kind_of([&] { PipelineConfig::from_json(j); }) == ErrorKind::kValidation);
  j = base;
  j["calibration"] = {{"estimator", "true-label"}};
  CHECK(kind_of([&] { PipelineConfig::from_json(j); }) == ErrorKind::kValidation);
  j = base;
  j["calibration"] = {{"validation_fraction", 0.6}, {"test_fraction", 0.6}};
  CHECK(kind_of([&] { PipelineConfig::from_json(j); }) == ErrorKind::kValidation);
  j = base;
  j["simhash"] = {{"bits", 8}, {"prefix_bits", 12}};
  CHECK(kind_of([&] { PipelineConfig::from_json(j); }) == ErrorKind::kValidation);

  try {
    load_pipeline_config("/nonexistent/sage.json");
    FAIL("missing config accepted");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    CHECK(std::string(e.what()).find("/nonexistent/sage.json") != std::string::npos);
  }
}

TEST_CASE("config digest names the computation")
{
  auto a = PipelineConfig::from_json({{"dataset", "d.csv"}, {"dim", 8}}, "/x");
  auto b = a;
  b.out_dir = "/elsewhere";
  CHECK(a.digest() == b.digest());
  CHECK(a.digest().size() == 16);
  b.sampler.floor = 5;
  CHECK(a.digest() != b.digest());
  const auto back = PipelineConfig::from_json(a.to_json(), "/x");
  CHECK(back.digest() == a.digest());
  b = a;
  b.override_seeds(100);
  CHECK(b.simhash.seed == 100);
  CHECK(b.sampler.seed != b.simhash.seed);
  CHECK(b.calibration.split_seed != b.sampler.seed);
}

TEST_CASE("full run writes every artifact")
{
  const auto dir = test::scratch_dir("pipeline_full");
  const auto config = small_config(dir);
  const auto manifest = run_pipeline(config, 2);
  CHECK(manifest.at("status") == "complete");
  CHECK(manifest.at("config_digest") == config.digest());
  for (const char * name : kArtifacts) {
    CHECK(fs::exists(config.out_dir / name));
  }
  const auto & s = manifest.at("summary");
  CHECK(s.at("test_contamination").get<double>() <= 0.01);
  CHECK(s.at("yield").get<std::size_t>() > 0);
  const auto gates = load_gates_document(config.out_dir / artifact::kGates);
  CHECK(gates.config_digest == config.digest());
  CHECK(gates.models.size() == 2);
  CHECK(gates.policy.required == 2);
}

TEST_CASE("stagewise execution reproduces the full run")
{
  const auto dir = test::scratch_dir("pipeline_stages");
  auto config = small_config(dir);
  config.out_dir = dir / "full";
  run_pipeline(config, 1);
  config.out_dir = dir / "full8";
  run_pipeline(config, 8);
  config.out_dir = dir / "staged";
  run_stratify_stage(config, 3);
  run_calibrate_stage(config, 3);
  run_harvest_stage(config, 3);
  same_artifacts(dir / "full", dir / "full8");
  same_artifacts(dir / "full", dir / "staged");
}

TEST_CASE("stages refuse missing or foreign artifacts")
{
  const auto dir = test::scratch_dir("pipeline_protocol");
  auto config = small_config(dir);
  config.out_dir = dir / "fresh";
  CHECK(kind_of([&] { run_harvest_stage(config); }) == ErrorKind::kProtocol);
  CHECK(kind_of([&] { run_calibrate_stage(config); }) == ErrorKind::kProtocol);

  run_stratify_stage(config);
  auto other = config;
  other.sampler.floor = 1;
  CHECK(kind_of([&] { run_calibrate_stage(other); }) == ErrorKind::kProtocol);
}

TEST_CASE("failing stage leaves a partial manifest")
{
  const auto dir = test::scratch_dir("pipeline_partial");
  auto config = small_config(dir);
  config.gates.k = 100000;
  CHECK_THROWS_AS(run_pipeline(config), Error);
  const auto manifest =
    nlohmann::json::parse(read_file(config.out_dir / artifact::kRunManifest));
  CHECK(manifest.at("status") == "partial");
  CHECK(manifest.at("error").at("stage") == "fit_gates");
  CHECK(manifest.at("stages").at("stratify") == "ok");
}

TEST_CASE("truth must cover the dataset")
{
  const auto dir = test::scratch_dir("pipeline_truth");
  auto config = small_config(dir);
  write_file(dir / "truth.csv", "id,truth,cohort\nx,fraud,c\n");
  CHECK(kind_of([&] { prepare_inputs(config); }) == ErrorKind::kValidation);
}

}  // namespace sage
