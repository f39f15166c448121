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

#include "sage/config.hpp"

#include <set>

#include "sage/calibration.hpp"
#include "sage/error.hpp"
#include "sage/simhash.hpp"
#include "sage/util.hpp"

namespace sage
{

namespace
{

void reject_unknown(const nlohmann::json & j, const std::set<std::string> & known,
  const std::string & where)
{
  for (const auto & [key, value] : j.items()) {
    require(known.contains(key), ErrorKind::kValidation,
      "config: unknown key '" + key + "' in " + where);
  }
}

std::filesystem::path resolve(const std::string & p, const std::filesystem::path & base)
{
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) {
    return base / path;
  }
  return path;
}

}  // namespace

void PipelineConfig::validate() const
{
  require(dim >= 1, ErrorKind::kValidation, "config: dim must be >= 1");
  require(!dataset.empty(), ErrorKind::kValidation, "config: dataset path is required");
  require(simhash.bits >= 1 && simhash.bits <= kMaxSignatureBits, ErrorKind::kValidation,
    "config: simhash.bits must be in [1, 256]");
  require(simhash.prefix_bits >= 1 && simhash.prefix_bits <= simhash.bits,
    ErrorKind::kValidation, "config: simhash.prefix_bits must be in [1, bits]");
  require(sampler.budget >= 1, ErrorKind::kValidation, "config: sampler.budget must be >= 1");
  require(!gates.enabled.empty(), ErrorKind::kValidation, "config: at least one gate is required");
  std::set<std::string> seen;
  for (const auto & g : gates.enabled) {
    require(g == "mahalanobis" || g == "knn", ErrorKind::kValidation,
      "config: unknown gate '" + g + "'");
    require(seen.insert(g).second, ErrorKind::kValidation, "config: gate '" + g + "' listed twice");
  }
  require(gates.k >= 1, ErrorKind::kValidation, "config: gates.k must be >= 1");
  require(votes_needed() >= 1 && votes_needed() <= gate_count(), ErrorKind::kValidation,
    "config: policy needs 1 <= required_votes <= " + std::to_string(gate_count()) + ", got " +
      std::to_string(votes_needed()));
  require(calibration.max_contamination >= 0.0 && calibration.max_contamination <= 1.0,
    ErrorKind::kValidation, "config: max_contamination must lie in [0, 1]");
  SplitSpec(calibration.validation_fraction, calibration.test_fraction, calibration.split_seed);
  const auto grid = quantile_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 0.0 && grid[i] < 1.0 && (i == 0 || grid[i] > grid[i - 1]),
      ErrorKind::kValidation, "config: calibration.grid must be strictly increasing in [0, 1)");
  }
  const auto method = parse_contamination_method(calibration.estimator);
  require(method != ContaminationMethod::kTrueLabel || !truth.empty(), ErrorKind::kValidation,
    "config: the true-label estimator needs a truth sidecar path");
  require(calibration.probe_radius_quantile > 0.0 && calibration.probe_radius_quantile < 1.0,
    ErrorKind::kValidation, "config: probe_radius_quantile must lie in (0, 1)");
  require(probe.iterations >= 1 && probe.step > 0.0, ErrorKind::kValidation,
    "config: probe needs iterations >= 1 and step > 0");
}

std::vector<double> PipelineConfig::quantile_grid() const
{
  return calibration.grid.empty() ? default_quantile_grid() : calibration.grid;
}

void PipelineConfig::override_seeds(std::uint64_t seed)
{
  simhash.seed = seed;
  sampler.seed = seed + 1;
  calibration.split_seed = seed + 2;
}

nlohmann::json PipelineConfig::to_json() const
{
  nlohmann::json j = {
    {"dataset", dataset.generic_string()},
    {"dim", dim},
    {"standardize_on", standardize_on.to_string()},
    {"simhash", {{"bits", simhash.bits}, {"prefix_bits", simhash.prefix_bits},
                  {"seed", simhash.seed}}},
    {"sampler", {{"budget", sampler.budget}, {"floor", sampler.floor}, {"seed", sampler.seed}}},
    {"gates", {{"enabled", gates.enabled}, {"k", gates.k}, {"jitter_ladder", gates.jitter_ladder}}},
    {"policy", {{"required_votes", votes_needed()}, {"total_gates", gate_count()}}},
    {"calibration",
      {{"grid", quantile_grid()}, {"max_contamination", calibration.max_contamination},
        {"validation_fraction", calibration.validation_fraction},
        {"test_fraction", calibration.test_fraction}, {"split_seed", calibration.split_seed},
        {"estimator", calibration.estimator},
        {"probe_radius_quantile", calibration.probe_radius_quantile}}},
    {"probe", {{"iterations", probe.iterations}, {"step", probe.step}}},
  };
  j["truth"] = truth.empty() ? nlohmann::json(nullptr) : nlohmann::json(truth.generic_string());
  return j;
}

std::string PipelineConfig::digest() const { return hex64(fnv1a64(to_json().dump())); }

PipelineConfig PipelineConfig::from_json(
  const nlohmann::json & j, const std::filesystem::path & base_dir)
{
  try {
    require(j.is_object(), ErrorKind::kValidation, "config must be a JSON object");
    reject_unknown(j,
      {"dataset", "truth", "out_dir", "dim", "standardize_on", "simhash", "sampler", "gates",
        "policy", "calibration", "probe"},
      "config");
    PipelineConfig c;
    c.dataset = resolve(j.at("dataset").get<std::string>(), base_dir);
    if (j.contains("truth") && !j.at("truth").is_null()) {
      c.truth = resolve(j.at("truth").get<std::string>(), base_dir);
    }
    if (j.contains("out_dir")) {
      c.out_dir = resolve(j.at("out_dir").get<std::string>(), base_dir);
    } else {
      c.out_dir = resolve("out", base_dir);
    }
    c.dim = j.at("dim").get<std::size_t>();
    if (j.contains("standardize_on")) {
      c.standardize_on = LabelFilter::parse(j.at("standardize_on").get<std::string>());
    }
    if (j.contains("simhash")) {
      const auto & s = j.at("simhash");
      reject_unknown(s, {"bits", "prefix_bits", "seed"}, "simhash");
      c.simhash.bits = s.value("bits", c.simhash.bits);
      c.simhash.prefix_bits = s.value("prefix_bits", c.simhash.prefix_bits);
      c.simhash.seed = s.value("seed", c.simhash.seed);
    }
    if (j.contains("sampler")) {
      const auto & s = j.at("sampler");
      reject_unknown(s, {"budget", "floor", "seed"}, "sampler");
      c.sampler.budget = s.value("budget", c.sampler.budget);
      c.sampler.floor = s.value("floor", c.sampler.floor);
      c.sampler.seed = s.value("seed", c.sampler.seed);
    }
    if (j.contains("gates")) {
      const auto & g = j.at("gates");
      reject_unknown(g, {"enabled", "k", "jitter_ladder"}, "gates");
      c.gates.enabled = g.value("enabled", c.gates.enabled);
      c.gates.k = g.value("k", c.gates.k);
      c.gates.jitter_ladder = g.value("jitter_ladder", c.gates.jitter_ladder);
    }
    if (j.contains("policy")) {
      const auto & p = j.at("policy");
      reject_unknown(p, {"required_votes", "total_gates"}, "policy");
      c.required_votes = p.value("required_votes", std::size_t{0});
      if (p.contains("total_gates")) {
        require(p.at("total_gates").get<std::size_t>() == c.gate_count(), ErrorKind::kValidation,
          "config: policy.total_gates disagrees with the number of enabled gates");
      }
    }
    if (j.contains("calibration")) {
      const auto & k = j.at("calibration");
      reject_unknown(k,
        {"grid", "max_contamination", "validation_fraction", "test_fraction", "split_seed",
          "estimator", "probe_radius_quantile"},
        "calibration");
      c.calibration.grid = k.value("grid", c.calibration.grid);
      c.calibration.max_contamination = k.value("max_contamination", c.calibration.max_contamination);
      c.calibration.validation_fraction =
        k.value("validation_fraction", c.calibration.validation_fraction);
      c.calibration.test_fraction = k.value("test_fraction", c.calibration.test_fraction);
      c.calibration.split_seed = k.value("split_seed", c.calibration.split_seed);
      c.calibration.estimator = k.value("estimator", c.calibration.estimator);
      c.calibration.probe_radius_quantile =
        k.value("probe_radius_quantile", c.calibration.probe_radius_quantile);
    }
    if (j.contains("probe")) {
      const auto & p = j.at("probe");
      reject_unknown(p, {"iterations", "step"}, "probe");
      c.probe.iterations = p.value("iterations", c.probe.iterations);
      c.probe.step = p.value("step", c.probe.step);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception & e) {
    fail(ErrorKind::kValidation, std::string("config: ") + e.what());
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path & path)
{
  require(std::filesystem::exists(path), ErrorKind::kValidation,
    "config file '" + path.string() + "' does not exist");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error & e) {
    fail(ErrorKind::kValidation, "config file '" + path.string() + "': " + e.what());
  }
  return PipelineConfig::from_json(j, path.parent_path());
}

}  // namespace sage
