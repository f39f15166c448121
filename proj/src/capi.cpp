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

#include "sage/sage.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "sage/ablation.hpp"
#include "sage/config.hpp"
#include "sage/datagen.hpp"
#include "sage/error.hpp"
#include "sage/pipeline.hpp"
#include "sage/util.hpp"

struct sage_config
{
  sage::PipelineConfig value;
};

struct sage_dataset
{
  sage::Dataset value;
};

struct sage_gates
{
  sage::LoadedGates value;
};

namespace
{

thread_local std::string g_last_error;

sage_status to_status(sage::ErrorKind kind)
{
  switch (kind) {
    case sage::ErrorKind::kInvalidArgument:
      return SAGE_ERR_INVALID_ARGUMENT;
    case sage::ErrorKind::kValidation:
      return SAGE_ERR_VALIDATION;
    case sage::ErrorKind::kIo:
      return SAGE_ERR_IO;
    case sage::ErrorKind::kParse:
      return SAGE_ERR_PARSE;
    case sage::ErrorKind::kNumeric:
      return SAGE_ERR_NUMERIC;
    case sage::ErrorKind::kProtocol:
      return SAGE_ERR_PROTOCOL;
  }
  return SAGE_ERR_INTERNAL;
}

template <typename F>
sage_status guarded(F && body)
{
  try {
    body();
    g_last_error.clear();
    return SAGE_OK;
  } catch (const sage::Error & e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return SAGE_ERR_INTERNAL;
  } catch (const std::exception & e) {
    g_last_error = e.what();
    return SAGE_ERR_INTERNAL;
  }
}

void need(const void * p, const char * what)
{
  sage::require(p != nullptr, sage::ErrorKind::kInvalidArgument, std::string(what) + " is null");
}

void write_generated(const sage::ScenarioConfig & scenario, const char * out_dir)
{
  const auto data = sage::generate(scenario);
  const std::filesystem::path dir(out_dir);
  sage::save_dataset(data.dataset, dir / "dataset.csv");
  sage::write_file(dir / "truth.csv", data.truth.format());
  auto j = scenario.to_json();
  j["config_digest"] = sage::hex64(sage::fnv1a64(scenario.to_json().dump()));
  sage::write_file(dir / "scenario.json", j.dump(2) + "\n");
}

}  // namespace

extern "C" {

const char * sage_last_error(void) { return g_last_error.c_str(); }

const char * sage_status_name(sage_status status)
{
  switch (status) {
    case SAGE_OK:
      return "ok";
    case SAGE_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case SAGE_ERR_VALIDATION:
      return "validation error";
    case SAGE_ERR_IO:
      return "i/o error";
    case SAGE_ERR_PARSE:
      return "parse error";
    case SAGE_ERR_NUMERIC:
      return "numeric error";
    case SAGE_ERR_PROTOCOL:
      return "protocol error";
    case SAGE_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char * sage_version(void) { return "0.1.0"; }

sage_status sage_config_load(const char * path, sage_config ** out)
{
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new sage_config{sage::load_pipeline_config(path)};
  });
}

sage_status sage_config_parse(const char * json, const char * base_dir, sage_config ** out)
{
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error & e) {
      sage::fail(sage::ErrorKind::kValidation, std::string("config: ") + e.what());
    }
    *out = new sage_config{
      sage::PipelineConfig::from_json(j, base_dir ? std::filesystem::path(base_dir) : "")};
  });
}

void sage_config_free(sage_config * config) { delete config; }

sage_status sage_config_set_out_dir(sage_config * config, const char * out_dir)
{
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    config->value.out_dir = out_dir;
  });
}

sage_status sage_config_override_seeds(sage_config * config, uint64_t seed)
{
  return guarded([&] {
    need(config, "config");
    config->value.override_seeds(seed);
  });
}

sage_status sage_config_digest(const sage_config * config, char * buf, size_t len)
{
  return guarded([&] {
    need(config, "config");
    need(buf, "buf");
    const auto d = config->value.digest();
    sage::require(len > d.size(), sage::ErrorKind::kInvalidArgument, "digest buffer too small");
    std::memcpy(buf, d.c_str(), d.size() + 1);
  });
}

sage_status sage_run(const sage_config * config, int threads)
{
  return guarded([&] {
    need(config, "config");
    sage::run_pipeline(config->value, threads);
  });
}

sage_status sage_stratify(const sage_config * config, int threads)
{
  return guarded([&] {
    need(config, "config");
    sage::run_stratify_stage(config->value, threads);
  });
}

sage_status sage_calibrate(const sage_config * config, int threads)
{
  return guarded([&] {
    need(config, "config");
    sage::run_calibrate_stage(config->value, threads);
  });
}

sage_status sage_harvest(const sage_config * config, int threads)
{
  return guarded([&] {
    need(config, "config");
    sage::run_harvest_stage(config->value, threads);
  });
}

sage_status sage_ablate(const sage_config * config, const char * arms_path, int threads)
{
  return guarded([&] {
    need(config, "config");
    const auto plan =
      arms_path ? sage::load_ablation_plan(arms_path) : sage::default_ablation_plan();
    const auto report = sage::run_ablation(config->value, plan, threads);
    sage::write_ablation(report, config->value.out_dir);
  });
}

sage_status sage_generate(const char * scenario_path, const char * out_dir)
{
  return guarded([&] {
    need(scenario_path, "scenario_path");
    need(out_dir, "out_dir");
    write_generated(sage::load_scenario(scenario_path), out_dir);
  });
}

sage_status sage_generate_builtin(const char * name, size_t n, uint64_t seed, const char * out_dir)
{
  return guarded([&] {
    need(name, "name");
    need(out_dir, "out_dir");
    write_generated(sage::builtin_scenario(name, n, seed), out_dir);
  });
}

sage_status sage_dataset_load(const char * path, size_t dim, sage_dataset ** out)
{
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new sage_dataset{sage::load_dataset(path, dim)};
  });
}

size_t sage_dataset_size(const sage_dataset * data) { return data ? data->value.size() : 0; }

size_t sage_dataset_dim(const sage_dataset * data) { return data ? data->value.dim() : 0; }

void sage_dataset_free(sage_dataset * data) { delete data; }

sage_status sage_gates_load(const char * path, sage_gates ** out)
{
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new sage_gates{sage::load_gates_document(path)};
  });
}

size_t sage_gates_count(const sage_gates * gates) { return gates ? gates->value.models.size() : 0; }

sage_status sage_gates_score(
  const sage_gates * gates, size_t index, const double * x, size_t dim, double * score)
{
  return guarded([&] {
    need(gates, "gates");
    need(x, "x");
    need(score, "score");
    const auto & g = gates->value;
    sage::require(index < g.models.size(), sage::ErrorKind::kInvalidArgument,
      "gate index out of range");
    sage::require(dim == g.standardizer.dim(), sage::ErrorKind::kValidation,
      "query has " + std::to_string(dim) + " features, gates expect " +
        std::to_string(g.standardizer.dim()));
    *score = g.models[index]->score(g.standardizer.transform(std::span<const double>(x, dim)));
  });
}

sage_status sage_gates_accept(
  const sage_gates * gates, const double * x, size_t dim, int * accepted, double * weight)
{
  return guarded([&] {
    need(gates, "gates");
    need(x, "x");
    need(accepted, "accepted");
    const auto & g = gates->value;
    sage::require(dim == g.standardizer.dim(), sage::ErrorKind::kValidation,
      "query has " + std::to_string(dim) + " features, gates expect " +
        std::to_string(g.standardizer.dim()));
    const auto z = g.standardizer.transform(std::span<const double>(x, dim));
    const auto refs = g.refs();
    const auto passes = std::make_unique<bool[]>(refs.size());
    std::vector<double> margins;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const auto d = refs[i]->decide(z);
      passes[i] = d.pass;
      margins.push_back(d.margin);
    }
    const bool ok = sage::vote(std::span<const bool>(passes.get(), refs.size()), g.policy);
    *accepted = ok ? 1 : 0;
    if (weight) {
      *weight = ok ? sage::confidence_weight(margins, true) : 0.0;
    }
  });
}

void sage_gates_free(sage_gates * gates) { delete gates; }

}  // extern "C"
