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

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "sage/sage.h"

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitStage = 2;

int report(sage_status status)
{
  if (status == SAGE_OK) {
    return kExitOk;
  }
  std::fprintf(stderr, "sage: %s: %s\n", sage_status_name(status), sage_last_error());
  return status == SAGE_ERR_VALIDATION || status == SAGE_ERR_INVALID_ARGUMENT ? kExitValidation
                                                                              : kExitStage;
}

struct PipelineArgs
{
  std::string config;
  std::string out;
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::string arms;
};

void add_pipeline_options(CLI::App * cmd, PipelineArgs & args)
{
  cmd->add_option("--config", args.config, "Pipeline config (JSON)")->required();
  cmd->add_option("--out", args.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", args.threads, "Worker thread cap")->check(CLI::Range(1, 1024));
  cmd->add_option("--seed-override", args.seed_override, "Replace every config seed");
}

/// Loads the config, applies overrides and runs `stage` on it.
template <typename F>
int with_config(const PipelineArgs & args, F && stage)
{
  sage_config * config = nullptr;
  sage_status st = sage_config_load(args.config.c_str(), &config);
  if (st == SAGE_OK && !args.out.empty()) {
    st = sage_config_set_out_dir(config, args.out.c_str());
  }
  if (st == SAGE_OK && args.seed_override) {
    st = sage_config_override_seeds(config, *args.seed_override);
  }
  if (st == SAGE_OK) {
    st = stage(config);
  }
  if (st == SAGE_OK) {
    char digest[17];
    sage_config_digest(config, digest, sizeof(digest));
    std::printf("ok (config %s)\n", digest);
  }
  sage_config_free(config);
  return report(st);
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Stratified negative harvesting for positive-unlabeled fraud data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sage_version());

  std::string scenario;
  std::string builtin;
  std::string gen_out;
  std::size_t gen_n = 50000;
  std::uint64_t gen_seed = 20240601;
  auto * gen = app.add_subcommand("gen", "Generate a synthetic dataset and truth sidecar");
  auto * scenario_opt = gen->add_option("--scenario", scenario, "Scenario config (JSON)");
  auto * builtin_opt =
    gen->add_option("--builtin", builtin, "Built-in scenario: s1, s2 or s3")->excludes(scenario_opt);
  gen->add_option("--n", gen_n, "Sample count for a built-in scenario")->needs(builtin_opt);
  gen->add_option("--seed", gen_seed, "Seed for a built-in scenario")->needs(builtin_opt);
  gen->add_option("--out", gen_out, "Output directory")->required();

  PipelineArgs run_args;
  auto * run = app.add_subcommand("run", "Run every stage and export the training set");
  add_pipeline_options(run, run_args);

  PipelineArgs stratify_args;
  auto * stratify = app.add_subcommand("stratify", "Hash, allocate and draw the candidate sample");
  add_pipeline_options(stratify, stratify_args);

  PipelineArgs calibrate_args;
  auto * calibrate = app.add_subcommand("calibrate", "Fit the gates and calibrate thresholds");
  add_pipeline_options(calibrate, calibrate_args);

  PipelineArgs harvest_args;
  auto * harvest = app.add_subcommand("harvest", "Harvest negatives and export the training set");
  add_pipeline_options(harvest, harvest_args);

  PipelineArgs ablate_args;
  auto * ablate = app.add_subcommand("ablate", "Compare sampler and gate combinations");
  add_pipeline_options(ablate, ablate_args);
  ablate->add_option("--arms", ablate_args.arms, "Arms config (JSON); default arm set if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (gen->parsed()) {
    if (scenario.empty() && builtin.empty()) {
      std::fprintf(stderr, "sage: gen needs --scenario or --builtin\n");
      return kExitValidation;
    }
    const sage_status st = scenario.empty()
                             ? sage_generate_builtin(builtin.c_str(), gen_n, gen_seed, gen_out.c_str())
                             : sage_generate(scenario.c_str(), gen_out.c_str());
    if (st == SAGE_OK) {
      std::printf("wrote %s/dataset.csv and %s/truth.csv\n", gen_out.c_str(), gen_out.c_str());
    }
    return report(st);
  }
  if (run->parsed()) {
    return with_config(run_args, [&](sage_config * c) { return sage_run(c, run_args.threads); });
  }
  if (stratify->parsed()) {
    return with_config(
      stratify_args, [&](sage_config * c) { return sage_stratify(c, stratify_args.threads); });
  }
  if (calibrate->parsed()) {
    return with_config(
      calibrate_args, [&](sage_config * c) { return sage_calibrate(c, calibrate_args.threads); });
  }
  if (harvest->parsed()) {
    return with_config(
      harvest_args, [&](sage_config * c) { return sage_harvest(c, harvest_args.threads); });
  }
  return with_config(ablate_args, [&](sage_config * c) {
    return sage_ablate(
      c, ablate_args.arms.empty() ? nullptr : ablate_args.arms.c_str(), ablate_args.threads);
  });
}
