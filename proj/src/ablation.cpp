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

#include "sage/ablation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "sage/error.hpp"
#include "sage/pipeline.hpp"
#include "sage/probe.hpp"
#include "sage/util.hpp"

namespace sage
{

std::vector<double> default_pr_grid()
{
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) {
    grid.push_back(i / 100.0);
  }
  return grid;
}

std::vector<PRPoint> pr_curve(
  std::span<const double> scores, std::span<const bool> truth, std::span<const double> grid)
{
  require(!scores.empty(), ErrorKind::kInvalidArgument, "pr_curve: empty evaluation set");
  require(scores.size() == truth.size(), ErrorKind::kInvalidArgument,
    "pr_curve: scores and truth differ in length");
  const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
  std::vector<PRPoint> out;
  out.reserve(grid.size());
  for (double t : grid) {
    std::size_t predicted = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        ++predicted;
        hits += truth[i] ? 1 : 0;
      }
    }
    PRPoint p;
    p.threshold = t;
    p.precision_defined = predicted > 0;
    p.precision = predicted > 0 ? static_cast<double>(hits) / static_cast<double>(predicted) : 1.0;
    p.recall = positives > 0 ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0;
    out.push_back(p);
  }
  return out;
}

double average_precision(std::span<const double> scores, std::span<const bool> truth)
{
  require(!scores.empty(), ErrorKind::kInvalidArgument, "average_precision: empty evaluation set");
  require(scores.size() == truth.size(), ErrorKind::kInvalidArgument,
    "average_precision: scores and truth differ in length");
  const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
  if (positives == 0) {
    return 0.0;
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t hits = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_hits = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_hits += truth[order[j]] ? 1 : 0;
      ++j;
    }
    hits += group_hits;
    seen += j - i;
    ap += static_cast<double>(group_hits) / static_cast<double>(positives) *
          (static_cast<double>(hits) / static_cast<double>(seen));
    i = j;
  }
  return ap;
}

std::string format_pr_csv(std::span<const PRPoint> points)
{
  std::string out = "threshold,precision,recall\n";
  for (const auto & p : points) {
    out += format_real(p.threshold) + ',' + format_real(p.precision) + ',' +
           format_real(p.recall) + '\n';
  }
  return out;
}

const CoverageBucket * CoverageReport::find(const std::string & key) const
{
  const auto it = std::lower_bound(buckets.begin(), buckets.end(), key,
    [](const CoverageBucket & b, const std::string & k) { return b.key < k; });
  return it != buckets.end() && it->key == key ? &*it : nullptr;
}

CoverageReport coverage_report(
  const StratumTable & table, std::span<const std::string> sampled_ids, std::size_t floor)
{
  std::unordered_map<std::string, std::size_t> bucket_of;
  std::vector<std::string> keys;
  for (const auto & [key, rows] : table.buckets) {
    for (std::size_t r : rows) {
      bucket_of.emplace(table.row_ids.at(r), keys.size());
    }
    keys.push_back(key);
  }
  std::vector<std::size_t> counts(keys.size(), 0);
  std::set<std::string_view> seen;
  for (const auto & id : sampled_ids) {
    const auto it = bucket_of.find(id);
    require(it != bucket_of.end(), ErrorKind::kValidation,
      "coverage: sampled id '" + id + "' is not in the stratified subset");
    require(seen.insert(id).second, ErrorKind::kValidation,
      "coverage: sampled id '" + id + "' listed twice");
    ++counts[it->second];
  }
  CoverageReport out;
  out.floor = floor;
  std::size_t k = 0;
  for (const auto & [key, rows] : table.buckets) {
    CoverageBucket b;
    b.key = key;
    b.population = rows.size();
    b.sampled = counts[k++];
    b.ratio = static_cast<double>(b.sampled) / static_cast<double>(b.population);
    if (b.sampled >= std::min(floor, b.population)) {
      ++out.meeting_floor;
    }
    out.buckets.push_back(std::move(b));
  }
  out.floor_fraction = out.buckets.empty() ? 1.0
                                           : static_cast<double>(out.meeting_floor) /
                                               static_cast<double>(out.buckets.size());
  return out;
}

std::string_view to_string(SamplerKind kind)
{
  return kind == SamplerKind::kRandom ? "random" : "simhash-floors";
}

SamplerKind parse_sampler_kind(std::string_view text)
{
  if (text == "random") {
    return SamplerKind::kRandom;
  }
  if (text == "simhash-floors") {
    return SamplerKind::kSimhashFloors;
  }
  fail(ErrorKind::kValidation, "unknown sampler '" + std::string(text) + "'");
}

VotingPolicy AblationArm::policy() const
{
  const std::size_t n = gates.size();
  return {required_votes == 0 ? n : required_votes, n};
}

void AblationArm::validate() const
{
  require(!name.empty(), ErrorKind::kValidation, "ablation arm needs a name");
  for (char c : name) {
    require(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_',
      ErrorKind::kValidation, "ablation arm name '" + name + "' must be alphanumeric, '-' or '_'");
  }
  std::set<std::string> seen;
  for (const auto & g : gates) {
    require(g == "mahalanobis" || g == "knn", ErrorKind::kValidation,
      "ablation arm '" + name + "': unknown gate '" + g + "'");
    require(seen.insert(g).second, ErrorKind::kValidation,
      "ablation arm '" + name + "': gate '" + g + "' listed twice");
  }
  if (gates.empty()) {
    require(required_votes == 0, ErrorKind::kValidation,
      "ablation arm '" + name + "': a sampler-only arm takes no votes");
  } else {
    policy().validate();
  }
}

nlohmann::json AblationArm::to_json() const
{
  return {{"name", name}, {"sampler", to_string(sampler)}, {"gates", gates},
    {"required_votes", policy().required}};
}

std::vector<AblationArm> default_ablation_arms()
{
  return {
    {"random", SamplerKind::kRandom, {}, 0},
    {"simhash-only", SamplerKind::kSimhashFloors, {}, 0},
    {"mahalanobis-only", SamplerKind::kRandom, {"mahalanobis"}, 0},
    {"knn-only", SamplerKind::kRandom, {"knn"}, 0},
    {"dual-unanimous", SamplerKind::kRandom, {"mahalanobis", "knn"}, 0},
    {"full-sage", SamplerKind::kSimhashFloors, {"mahalanobis", "knn"}, 0},
  };
}

AblationArm default_ablation_arm(const std::string & name)
{
  for (auto & arm : default_ablation_arms()) {
    if (arm.name == name) {
      return arm;
    }
  }
  fail(ErrorKind::kValidation, "unknown ablation arm '" + name + "'");
}

AblationPlan default_ablation_plan() { return {default_ablation_arms(), "full-sage"}; }

AblationPlan parse_ablation_plan(const nlohmann::json & j)
{
  try {
    require(j.is_object(), ErrorKind::kValidation, "arms config must be a JSON object");
    for (const auto & [key, value] : j.items()) {
      require(key == "arms" || key == "reference" || key == "fpr_recall", ErrorKind::kValidation,
        "arms config: unknown key '" + key + "'");
    }
    AblationPlan plan;
    if (!j.contains("arms")) {
      plan.arms = default_ablation_arms();
    } else {
      for (const auto & a : j.at("arms")) {
        if (a.is_string()) {
          plan.arms.push_back(default_ablation_arm(a.get<std::string>()));
          continue;
        }
        for (const auto & [key, value] : a.items()) {
          require(key == "name" || key == "sampler" || key == "gates" || key == "required_votes",
            ErrorKind::kValidation, "arms config: unknown arm key '" + key + "'");
        }
        AblationArm arm;
        arm.name = a.at("name").get<std::string>();
        arm.sampler = parse_sampler_kind(a.at("sampler").get<std::string>());
        arm.gates = a.value("gates", std::vector<std::string>{});
        arm.required_votes = a.value("required_votes", std::size_t{0});
        plan.arms.push_back(std::move(arm));
      }
    }
    require(!plan.arms.empty(), ErrorKind::kValidation, "arms config lists no arms");
    std::set<std::string> names;
    for (const auto & arm : plan.arms) {
      arm.validate();
      require(names.insert(arm.name).second, ErrorKind::kValidation,
        "arms config: arm '" + arm.name + "' listed twice");
    }
    plan.fpr_recall = j.value("fpr_recall", plan.fpr_recall);
    require(plan.fpr_recall > 0.0 && plan.fpr_recall <= 1.0, ErrorKind::kValidation,
      "arms config: fpr_recall must lie in (0, 1]");
    if (j.contains("reference")) {
      plan.reference = j.at("reference").get<std::string>();
      require(names.contains(plan.reference), ErrorKind::kValidation,
        "arms config: reference arm '" + plan.reference + "' is not in the arm list");
    } else {
      plan.reference = names.contains("full-sage") ? "full-sage" : plan.arms.front().name;
    }
    return plan;
  } catch (const nlohmann::json::exception & e) {
    fail(ErrorKind::kValidation, std::string("arms config: ") + e.what());
  }
}

AblationPlan load_ablation_plan(const std::filesystem::path & path)
{
  require(std::filesystem::exists(path), ErrorKind::kValidation,
    "arms config '" + path.string() + "' does not exist");
  try {
    return parse_ablation_plan(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error & e) {
    fail(ErrorKind::kValidation, "arms config '" + path.string() + "': " + e.what());
  }
}

const ArmResult & AblationReport::arm(const std::string & name) const
{
  for (const auto & a : arms) {
    if (a.arm == name) {
      return a;
    }
  }
  fail(ErrorKind::kInvalidArgument, "no ablation arm named '" + name + "'");
}

std::string AblationReport::results_csv() const
{
  std::string out = "arm,contamination,yield,coverage_floor_fraction,auprc\n";
  for (const auto & a : arms) {
    out += a.arm + ',' + format_real(a.contamination) + ',' + std::to_string(a.yield) + ',' +
           format_real(a.coverage.floor_fraction) + ',' + format_real(a.auprc) + '\n';
  }
  return out;
}

std::string AblationReport::cohort_fpr_csv() const
{
  std::string out = "arm,cohort,fpr_at_recall,fpr_at_half\n";
  for (const auto & a : arms) {
    for (const auto & [cohort, fpr] : a.cohort_fpr) {
      out += a.arm + ',' + cohort + ',' + format_real(fpr) + ',' +
             format_real(a.cohort_fpr_at_half.at(cohort)) + '\n';
    }
  }
  return out;
}

nlohmann::json AblationReport::to_json() const
{
  auto list = nlohmann::json::array();
  for (const auto & a : arms) {
    list.push_back({
      {"arm", a.arm},
      {"gates", a.gate_names},
      {"thresholds", a.thresholds},
      {"budget", a.budget},
      {"scanned", a.scanned},
      {"yield", a.yield},
      {"target_yield", a.target_yield},
      {"yield_matched", a.yield_matched},
      {"contaminated", a.contaminated},
      {"contamination", a.contamination},
      {"coverage_floor_fraction", a.coverage.floor_fraction},
      {"auprc", a.auprc},
      {"recall_threshold", a.recall_threshold},
      {"cohort_fpr", a.cohort_fpr},
      {"cohort_fpr_at_half", a.cohort_fpr_at_half},
    });
  }
  return {{"config_digest", config_digest}, {"config", config}, {"arm_specs", arm_specs},
    {"reference", reference}, {"fpr_recall", fpr_recall}, {"arms", std::move(list)}};
}

namespace
{

/// State shared by every arm.
struct Context
{
  const PipelineConfig & config;
  const PreparedInputs & inputs;
  const StratumTable & table;
  const FittedGates & gates;
  const ContaminationEstimator & estimator;
  std::vector<bool> harvestable;     // unlabeled and outside the test split
  std::vector<std::size_t> stream;   // seeded permutation of the unlabeled rows
  Dataset labeled_train{1};          // labeled rows outside the test split
  std::vector<std::size_t> eval_rows;
  double fpr_recall = 0.9;
  int threads = 1;
};

/// Per-row gate outcome for one arm over every harvestable row.
struct ArmDecisions
{
  std::vector<double> thresholds;
  std::vector<bool> accepted;
  std::vector<double> weight;
};

std::vector<std::size_t> random_pool(const Context & ctx, std::size_t budget)
{
  const auto end = ctx.stream.begin() + static_cast<std::ptrdiff_t>(std::min(budget, ctx.stream.size()));
  std::vector<std::size_t> rows(ctx.stream.begin(), end);
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<std::size_t> pool(const Context & ctx, const AblationArm & arm, std::size_t budget)
{
  if (arm.sampler == SamplerKind::kRandom) {
    return random_pool(ctx, budget);
  }
  return draw_sample(ctx.config, ctx.table, budget).rows;
}

std::size_t count_fraud(const Context & ctx, std::span<const std::size_t> rows)
{
  std::size_t n = 0;
  for (std::size_t r : rows) {
    n += ctx.inputs.truth->is_fraud(ctx.inputs.data.id(r)) ? 1 : 0;
  }
  return n;
}

ArmDecisions decide_arm(const Context & ctx, const AblationArm & arm)
{
  const std::size_t n = ctx.inputs.data.size();
  ArmDecisions d;
  d.accepted.assign(n, false);
  d.weight.assign(n, 0.0);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < n; ++r) {
    if (ctx.harvestable[r]) {
      rows.push_back(r);
    }
  }
  if (arm.gates.empty()) {
    for (std::size_t r : rows) {
      d.accepted[r] = true;
      d.weight[r] = 1.0;
    }
    return d;
  }

  FittedGates gates;
  gates.fraud = ctx.gates.fraud;
  for (const auto & name : arm.gates) {
    for (const auto & m : ctx.gates.models) {
      if (m->name() == name) {
        gates.models.push_back(m->clone());
      }
    }
  }
  PipelineConfig arm_config = ctx.config;
  arm_config.gates.enabled = arm.gates;
  arm_config.required_votes = arm.policy().required;
  const auto calibration_pool = pool(ctx, arm, ctx.config.sampler.budget);
  calibrate_gates(arm_config, ctx.inputs, gates, ctx.estimator, calibration_pool, ctx.threads);
  d.thresholds = gates.thresholds();

  const auto candidates = make_candidates(ctx.inputs.data, rows, ctx.inputs.standardizer);
  const auto result = harvest(candidates, gates.refs(), arm.policy(), ctx.threads);

  // Intersection bound: with unanimous voting the accept set is the
  // intersection of the per-gate pass sets, so it cannot hold more planted
  // fraud than any single gate passes.
  const bool unanimous = arm.policy().required == arm.policy().total;
  std::vector<std::size_t> per_gate_fraud(gates.models.size(), 0);
  std::size_t accepted_fraud = 0;
  for (const auto & rec : result.records) {
    const auto r = *ctx.inputs.data.find(rec.id);
    d.accepted[r] = rec.accepted;
    d.weight[r] = rec.accepted ? rec.weight : 0.0;
    const bool fraud = ctx.inputs.truth->is_fraud(rec.id);
    bool all = true;
    for (std::size_t g = 0; g < rec.passes.size(); ++g) {
      all = all && rec.passes[g];
      per_gate_fraud[g] += (rec.passes[g] && fraud) ? 1 : 0;
    }
    accepted_fraud += (rec.accepted && fraud) ? 1 : 0;
    require(!unanimous || all == rec.accepted, ErrorKind::kProtocol,
      "intersection bound violated: unanimous accept differs from the pass intersection for '" +
        rec.id + "'");
  }
  if (unanimous) {
    for (std::size_t g = 0; g < per_gate_fraud.size(); ++g) {
      require(accepted_fraud <= per_gate_fraud[g], ErrorKind::kProtocol,
        "intersection bound violated: unanimous fraud count exceeds gate '" + arm.gates[g] + "'");
    }
  }
  return d;
}

struct Selection
{
  std::vector<std::size_t> sampled;
  std::vector<std::size_t> accepted;
  std::size_t budget = 0;
  std::size_t scanned = 0;
};

Selection select_from(const Context & ctx, const ArmDecisions & d, std::vector<std::size_t> rows)
{
  Selection s;
  for (std::size_t r : rows) {
    if (ctx.harvestable[r]) {
      ++s.scanned;
      if (d.accepted[r]) {
        s.accepted.push_back(r);
      }
    }
  }
  s.sampled = std::move(rows);
  return s;
}

Selection natural_selection(const Context & ctx, const AblationArm & arm, const ArmDecisions & d)
{
  auto s = select_from(ctx, d, pool(ctx, arm, ctx.config.sampler.budget));
  s.budget = ctx.config.sampler.budget;
  return s;
}

/// Random arms walk the stream until `target` rows are accepted. SimHash arms
/// search for the smallest budget whose draw reaches `target`.
Selection matched_selection(
  const Context & ctx, const AblationArm & arm, const ArmDecisions & d, std::size_t target)
{
  if (arm.sampler == SamplerKind::kRandom) {
    std::size_t taken = 0;
    std::size_t prefix = 0;
    for (; prefix < ctx.stream.size() && taken < target; ++prefix) {
      const auto r = ctx.stream[prefix];
      taken += (ctx.harvestable[r] && d.accepted[r]) ? 1 : 0;
    }
    auto s = select_from(ctx, d, random_pool(ctx, prefix));
    s.budget = prefix;
    return s;
  }
  std::size_t lo = 1;
  std::size_t hi = ctx.table.total();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const auto s = select_from(ctx, d, pool(ctx, arm, mid));
    if (s.accepted.size() >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  auto s = select_from(ctx, d, pool(ctx, arm, lo));
  s.budget = lo;
  return s;
}

void evaluate(const Context & ctx, const AblationArm & arm, const ArmDecisions & d,
  const Selection & sel, ArmResult & out)
{
  const auto & data = ctx.inputs.data;
  const auto & truth = *ctx.inputs.truth;
  out.arm = arm.name;
  out.gate_names = arm.gates;
  out.thresholds = d.thresholds;
  out.budget = sel.budget;
  out.scanned = sel.scanned;
  out.yield = sel.accepted.size();
  out.contaminated = count_fraud(ctx, sel.accepted);
  out.contamination =
    out.yield > 0 ? static_cast<double>(out.contaminated) / static_cast<double>(out.yield) : 0.0;
  for (std::size_t r : sel.sampled) {
    out.sampled_ids.push_back(data.id(r));
  }
  out.coverage = coverage_report(ctx.table, out.sampled_ids, ctx.config.sampler.floor);

  std::vector<HarvestRecord> records;
  for (std::size_t r : sel.accepted) {
    HarvestRecord rec;
    rec.id = data.id(r);
    rec.accepted = true;
    rec.weight = d.weight[r];
    out.accepted_ids.push_back(rec.id);
    records.push_back(std::move(rec));
  }
  const auto training = parse_training_set(
    format_training_set(records, data, ctx.labeled_train), data.dim());
  const auto probe = train_probe(training, ctx.config.probe);

  std::vector<double> scores;
  const auto fraud_flags = std::make_unique<bool[]>(ctx.eval_rows.size());
  std::vector<double> fraud_scores;
  for (std::size_t i = 0; i < ctx.eval_rows.size(); ++i) {
    const auto r = ctx.eval_rows[i];
    scores.push_back(probe.probability(data.features(r)));
    fraud_flags[i] = truth.is_fraud(data.id(r));
    if (fraud_flags[i]) {
      fraud_scores.push_back(scores.back());
    }
  }
  const std::span<const bool> truth_span(fraud_flags.get(), ctx.eval_rows.size());
  out.pr = pr_curve(scores, truth_span, default_pr_grid());
  out.auprc = average_precision(scores, truth_span);

  // The highest threshold whose recall reaches fpr_recall: the score of the
  // ceil(recall * P)-th best fraud row.
  require(!fraud_scores.empty(), ErrorKind::kValidation, "the test split holds no fraud rows");
  std::sort(fraud_scores.begin(), fraud_scores.end(), std::greater<>());
  const auto needed = static_cast<std::size_t>(
    std::ceil(ctx.fpr_recall * static_cast<double>(fraud_scores.size()) - 1e-9));
  out.recall_threshold = fraud_scores[std::max<std::size_t>(needed, 1) - 1];

  std::map<std::string, std::array<std::size_t, 3>> counts;  // at recall, at 0.5, total
  for (std::size_t i = 0; i < ctx.eval_rows.size(); ++i) {
    if (fraud_flags[i]) {
      continue;
    }
    auto & c = counts[truth.cohort(data.id(ctx.eval_rows[i]))];
    c[0] += scores[i] >= out.recall_threshold ? 1 : 0;
    c[1] += scores[i] >= 0.5 ? 1 : 0;
    ++c[2];
  }
  for (const auto & [cohort, c] : counts) {
    const auto total = static_cast<double>(c[2]);
    out.cohort_fpr[cohort] = static_cast<double>(c[0]) / total;
    out.cohort_fpr_at_half[cohort] = static_cast<double>(c[1]) / total;
  }
}

}  // namespace

AblationReport run_ablation(const PipelineConfig & config, const AblationPlan & plan, int threads)
{
  require(!plan.arms.empty(), ErrorKind::kValidation, "ablation needs at least one arm");
  for (const auto & arm : plan.arms) {
    arm.validate();
  }
  const auto inputs = prepare_inputs(config);
  require(inputs.truth.has_value(), ErrorKind::kValidation,
    "ablation needs a truth sidecar to measure contamination");

  AblationReport report;
  report.config_digest = config.digest();
  report.config = config.to_json();
  report.arm_specs = nlohmann::json::array();
  for (const auto & arm : plan.arms) {
    report.arm_specs.push_back(arm.to_json());
  }
  report.reference = plan.reference;
  report.fpr_recall = plan.fpr_recall;
  report.table = stratify_population(config, inputs, threads);
  const auto all_gates =
    fit_gates(config, inputs, std::vector<std::string>{"mahalanobis", "knn"});
  const auto estimator = make_estimator(config, inputs, all_gates.fraud);

  Context ctx{config, inputs, report.table, all_gates, estimator, {}, {}, Dataset(config.dim), {},
    plan.fpr_recall, threads};
  const std::size_t n = inputs.data.size();
  std::vector<bool> in_test(n, false);
  for (std::size_t r : inputs.splits.test) {
    in_test[r] = true;
  }
  ctx.harvestable.assign(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    if (inputs.data.label(r) == Label::kUnlabeled && !in_test[r]) {
      ctx.harvestable[r] = true;
    } else if (inputs.data.label(r) != Label::kUnlabeled && !in_test[r]) {
      ctx.labeled_train.add(inputs.data.id(r), inputs.data.label(r), inputs.data.features(r));
    }
  }
  ctx.eval_rows = inputs.splits.test;
  ctx.stream = inputs.data.select(LabelFilter::only(Label::kUnlabeled));
  std::mt19937_64 rng(config.sampler.seed ^ fnv1a64("random-stream"));
  std::shuffle(ctx.stream.begin(), ctx.stream.end(), rng);

  std::vector<ArmDecisions> decisions;
  std::size_t ref_index = 0;
  for (std::size_t i = 0; i < plan.arms.size(); ++i) {
    decisions.push_back(decide_arm(ctx, plan.arms[i]));
    if (plan.arms[i].name == plan.reference) {
      ref_index = i;
    }
  }
  const auto ref_sel = natural_selection(ctx, plan.arms[ref_index], decisions[ref_index]);
  const std::size_t target = ref_sel.accepted.size();

  report.arms.resize(plan.arms.size());
  for (std::size_t i = 0; i < plan.arms.size(); ++i) {
    const auto sel = i == ref_index ? ref_sel
                                    : matched_selection(ctx, plan.arms[i], decisions[i], target);
    auto & res = report.arms[i];
    evaluate(ctx, plan.arms[i], decisions[i], sel, res);
    res.target_yield = target;
    const double diff = std::abs(static_cast<double>(res.yield) - static_cast<double>(target));
    res.yield_matched = diff <= 0.01 * static_cast<double>(target);
  }
  return report;
}

void write_ablation(const AblationReport & report, const std::filesystem::path & dir)
{
  write_file(dir / "results.csv", report.results_csv());
  write_file(dir / "cohort_fpr.csv", report.cohort_fpr_csv());
  auto manifest = report.to_json();
  manifest["files"] = nlohmann::json::object();
  manifest["files"]["results.csv"] = hex64(fnv1a64(report.results_csv()));
  manifest["files"]["cohort_fpr.csv"] = hex64(fnv1a64(report.cohort_fpr_csv()));
  for (const auto & a : report.arms) {
    const auto csv = format_pr_csv(a.pr);
    const auto name = "pr_" + a.arm + ".csv";
    write_file(dir / name, csv);
    manifest["files"][name] = hex64(fnv1a64(csv));
  }
  write_file(dir / "ablation_manifest.json", manifest.dump(2) + "\n");
}

}  // namespace sage
