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

#ifndef SAGE__DATAGEN_HPP_
#define SAGE__DATAGEN_HPP_

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sage/core_data.hpp"

namespace sage
{

/// One Gaussian cohort. `label` is what the pipeline sees; `truth` is the
/// planted class (fraud or nonfraud) recorded only in the sidecar.
struct CohortSpec
{
  std::string name;
  Label label = Label::kUnlabeled;
  Label truth = Label::kNonFraud;
  Vector mean;
  Matrix covariance;
  double proportion = 0.0;
};

struct ScenarioConfig
{
  std::string name;
  std::size_t dim = 8;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  /// Planted fraud share among unlabeled samples. Must agree with the cohort
  /// proportions.
  double hidden_fraud_rate = 0.0;
  std::vector<CohortSpec> cohorts;

  void validate() const;
  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json & j);
};

ScenarioConfig load_scenario(const std::filesystem::path & path);

/// Hidden fraud share implied by the cohort proportions.
double implied_hidden_fraud_rate(const std::vector<CohortSpec> & cohorts);

/// Built-in scenarios (d = 8):
///  s1  separated: fraud 6 units from the mainstream cohort, 1% hidden fraud
///  s2  s1 plus a 2% legitimate "super-fan" cohort 1.5 units from fraud
///  s3  s2 plus a 0.2% legitimate cohort in its own region
ScenarioConfig builtin_scenario(std::string_view name, std::size_t n = 50000,
  std::uint64_t seed = 20240601);

/// Ground truth per id: planted class and cohort name.
class TruthTable
{
public:
  struct Entry
  {
    Label truth;
    std::string cohort;
  };

  void add(std::string id, Label truth, std::string cohort);
  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view id) const;

  /// Throws for ids that were never generated.
  Label truth_lookup(std::string_view id) const;
  const std::string & cohort(std::string_view id) const;
  bool is_fraud(std::string_view id) const { return truth_lookup(id) == Label::kFraud; }

  /// `id,truth,cohort` in insertion order.
  std::string format() const;
  static TruthTable parse(std::string_view csv);
  static TruthTable load(const std::filesystem::path & path);

private:
  const Entry & at(std::string_view id) const;

  std::vector<std::string> order_;
  std::unordered_map<std::string, Entry> entries_;
};

struct GeneratedData
{
  Dataset dataset;
  TruthTable truth;
};

/// Seeded draw: each sample picks a cohort by proportion, then
/// x = mean + L z with L the Cholesky factor of the cohort covariance.
GeneratedData generate(const ScenarioConfig & scenario);

}  // namespace sage

#endif  // SAGE__DATAGEN_HPP_
