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

#include "sage/harvester.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

namespace
{
double logistic(double t)
{
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}
}  // namespace

void VotingPolicy::validate() const
{
  require(total >= 1 && required >= 1 && required <= total, ErrorKind::kValidation,
    "voting policy needs 1 <= k <= n, got k=" + std::to_string(required) +
      " n=" + std::to_string(total));
}

bool vote(std::span<const bool> passes, const VotingPolicy & policy)
{
  policy.validate();
  require(passes.size() == policy.total, ErrorKind::kInvalidArgument,
    "vote: " + std::to_string(passes.size()) + " gate results for a policy over " +
      std::to_string(policy.total) + " gates");
  const auto yes = static_cast<std::size_t>(std::count(passes.begin(), passes.end(), true));
  return yes >= policy.required;
}

double confidence_weight(std::span<const double> margins, bool accepted)
{
  require(accepted, ErrorKind::kProtocol, "confidence weight requested for a rejected sample");
  require(!margins.empty(), ErrorKind::kInvalidArgument, "confidence weight needs margins");
  double sum = 0.0;
  for (double m : margins) {
    sum += logistic(m);
  }
  return sum / static_cast<double>(margins.size());
}

Candidates make_candidates(
  const Dataset & data, std::span<const std::size_t> rows, const Standardizer & standardizer)
{
  Candidates c;
  c.ids.reserve(rows.size());
  for (std::size_t r : rows) {
    c.ids.push_back(data.id(r));
  }
  c.vectors = standardize_rows(standardizer, data, rows);
  return c;
}

nlohmann::json HarvestManifest::to_json() const
{
  nlohmann::json gates = nlohmann::json::array();
  for (std::size_t g = 0; g < gate_names.size(); ++g) {
    gates.push_back({{"name", gate_names[g]}, {"tau", thresholds[g]}});
  }
  return {
    {"config_digest", config_digest},
    {"gates", std::move(gates)},
    {"policy", {{"required_votes", policy.required}, {"total_gates", policy.total}}},
    {"scanned", scanned},
    {"accepted", accepted},
    {"training_csv", training_csv},
  };
}

std::vector<std::string> HarvestResult::accepted_ids() const
{
  std::vector<std::string> ids;
  for (const auto & r : records) {
    if (r.accepted) {
      ids.push_back(r.id);
    }
  }
  return ids;
}

HarvestResult harvest(
  const Candidates & candidates, const GateRefs & gates, const VotingPolicy & policy, int threads)
{
  policy.validate();
  require(gates.size() == policy.total, ErrorKind::kValidation,
    "policy expects " + std::to_string(policy.total) + " gates, got " +
      std::to_string(gates.size()));
  for (const auto * g : gates) {
    require(g->threshold().has_value(), ErrorKind::kValidation,
      std::string(g->name()) + " gate is not calibrated");
    require(static_cast<Eigen::Index>(g->dim()) == candidates.vectors.cols() ||
              candidates.size() == 0,
      ErrorKind::kInvalidArgument, "candidate dimension does not match gate");
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
    [&](std::size_t a, std::size_t b) { return candidates.ids[a] < candidates.ids[b]; });

  HarvestResult result;
  result.records.resize(candidates.size());
  parallel_for(order.size(), threads, [&](std::size_t slot) {
    const std::size_t i = order[slot];
    const Vector x = candidates.vectors.row(static_cast<Eigen::Index>(i)).transpose();
    HarvestRecord & rec = result.records[slot];
    rec.id = candidates.ids[i];
    rec.scores.reserve(gates.size());
    rec.margins.reserve(gates.size());
    rec.passes.reserve(gates.size());
    for (const auto * g : gates) {
      const auto d = g->decide(x);
      rec.scores.push_back(d.score);
      rec.margins.push_back(d.margin);
      rec.passes.push_back(d.pass);
    }
    rec.votes = static_cast<std::size_t>(std::count(rec.passes.begin(), rec.passes.end(), true));
    rec.accepted = rec.votes >= policy.required;
    if (rec.accepted) {
      rec.weight = confidence_weight(rec.margins, true);
    }
  });

  auto & m = result.manifest;
  m.policy = policy;
  m.scanned = result.records.size();
  for (const auto * g : gates) {
    m.gate_names.emplace_back(g->name());
    m.thresholds.push_back(*g->threshold());
  }
  m.accepted = static_cast<std::size_t>(std::count_if(result.records.begin(),
    result.records.end(), [](const HarvestRecord & r) { return r.accepted; }));
  return result;
}

namespace
{
void append_row(std::string & out, const std::string & id, Label label, double weight,
  std::span<const double> features)
{
  out += id;
  out += ',';
  out += to_string(label);
  out += ',';
  out += format_real(weight);
  for (double v : features) {
    out += ',';
    out += format_real(v);
  }
  out += '\n';
}
}  // namespace

std::string format_training_set(
  std::span<const HarvestRecord> records, const Dataset & population, const Dataset & labeled)
{
  require(population.dim() == labeled.dim(), ErrorKind::kInvalidArgument,
    "population and labeled datasets differ in dimension");
  std::string out = "id,label,weight";
  for (std::size_t j = 0; j < labeled.dim(); ++j) {
    out += ",f" + std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    require(labeled.label(i) != Label::kUnlabeled, ErrorKind::kInvalidArgument,
      "labeled set contains unlabeled row '" + labeled.id(i) + "'");
    append_row(out, labeled.id(i), labeled.label(i), 1.0, labeled.features(i));
  }
  for (const auto & rec : records) {
    if (!rec.accepted) {
      continue;
    }
    require(!labeled.find(rec.id).has_value(), ErrorKind::kProtocol,
      "harvested id '" + rec.id + "' collides with a labeled row");
    const auto row = population.find(rec.id);
    require(row.has_value(), ErrorKind::kProtocol,
      "harvested id '" + rec.id + "' not found in the population");
    append_row(out, rec.id, Label::kNonFraud, rec.weight, population.features(*row));
  }
  return out;
}

void export_training_set(std::span<const HarvestRecord> records, const Dataset & population,
  const Dataset & labeled, const std::filesystem::path & path)
{
  write_file(path, format_training_set(records, population, labeled));
}

std::string format_harvest_records(
  std::span<const HarvestRecord> records, const std::vector<std::string> & gate_names)
{
  std::string out = "id,votes,accepted,weight";
  for (const auto & g : gate_names) {
    out += "," + g + "_score," + g + "_margin";
  }
  out += '\n';
  for (const auto & rec : records) {
    out += rec.id + ',' + std::to_string(rec.votes) + ',' + (rec.accepted ? "1" : "0") + ',' +
           format_real(rec.weight);
    for (std::size_t g = 0; g < rec.scores.size(); ++g) {
      out += ',' + format_real(rec.scores[g]) + ',' + format_real(rec.margins[g]);
    }
    out += '\n';
  }
  return out;
}

Dataset subset(const Dataset & data, std::span<const std::size_t> rows)
{
  Dataset out(data.dim());
  for (std::size_t r : rows) {
    out.add(data.id(r), data.label(r), data.features(r));
  }
  return out;
}

}  // namespace sage
