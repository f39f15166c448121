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

#ifndef SAGE__HARVESTER_HPP_
#define SAGE__HARVESTER_HPP_

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sage/core_data.hpp"
#include "sage/gates.hpp"

namespace sage
{

/// Accept when at least `required` of `total` gates pass.
struct VotingPolicy
{
  std::size_t required = 1;
  std::size_t total = 1;

  static VotingPolicy unanimous(std::size_t gates) { return {gates, gates}; }
  void validate() const;
};

bool vote(std::span<const bool> passes, const VotingPolicy & policy);

/// Mean over gates of logistic(margin). Lies in (0, 1) and is strictly
/// increasing in every margin. Only defined for accepted samples.
double confidence_weight(std::span<const double> margins, bool accepted);

using GateRefs = std::vector<const GateModel *>;

/// Standardized candidate vectors, one row per id.
struct Candidates
{
  std::vector<std::string> ids;
  Matrix vectors;

  std::size_t size() const { return ids.size(); }
};

Candidates make_candidates(
  const Dataset & data, std::span<const std::size_t> rows, const Standardizer & standardizer);

struct HarvestRecord
{
  std::string id;
  std::vector<double> scores;
  std::vector<double> margins;
  std::vector<bool> passes;
  std::size_t votes = 0;
  bool accepted = false;
  double weight = 0.0;  // meaningful only when accepted
};

struct HarvestManifest
{
  std::string config_digest;
  std::vector<std::string> gate_names;
  std::vector<double> thresholds;
  VotingPolicy policy;
  std::size_t scanned = 0;
  std::size_t accepted = 0;
  std::string training_csv;

  nlohmann::json to_json() const;
};

struct HarvestResult
{
  std::vector<HarvestRecord> records;  // sorted by id
  HarvestManifest manifest;

  std::vector<std::string> accepted_ids() const;
};

/// Scores every candidate on every gate (rejections are kept for audit),
/// votes, and weights the accepted ones.
HarvestResult harvest(
  const Candidates & candidates, const GateRefs & gates, const VotingPolicy & policy,
  int threads = 1);

/// `id,label,weight,f0..` with the labeled rows first (weight 1) followed by
/// accepted harvest records as nonfraud with their confidence weight.
/// `population` supplies raw features for harvested ids.
std::string format_training_set(
  std::span<const HarvestRecord> records, const Dataset & population, const Dataset & labeled);

void export_training_set(std::span<const HarvestRecord> records, const Dataset & population,
  const Dataset & labeled, const std::filesystem::path & path);

/// Audit log of every record: id,votes,accepted,weight,<gate>_score,<gate>_margin...
std::string format_harvest_records(
  std::span<const HarvestRecord> records, const std::vector<std::string> & gate_names);

/// Rows of `data` restricted to `rows`, in the given order.
Dataset subset(const Dataset & data, std::span<const std::size_t> rows);

}  // namespace sage

#endif  // SAGE__HARVESTER_HPP_
