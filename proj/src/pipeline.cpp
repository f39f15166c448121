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

#include "sage/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

namespace
{

std::vector<double> to_std(const Vector & v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double> & v)
{
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string dump(const nlohmann::json & j) { return j.dump(2) + "\n"; }

nlohmann::json read_json(const std::filesystem::path & path)
{
  require(std::filesystem::exists(path), ErrorKind::kProtocol,
    "missing artifact '" + path.string() + "'; run the earlier stage first");
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error & e) {
    fail(ErrorKind::kParse, "artifact '" + path.string() + "': " + e.what());
  }
}

void check_digest(const nlohmann::json & j, const PipelineConfig & config, const std::string & what)
{
  require(j.value("config_digest", std::string()) == config.digest(), ErrorKind::kProtocol,
    what + " was written under a different config; rerun the earlier stage");
}

std::string format_sample(const Dataset & data, std::span<const std::size_t> rows)
{
  std::string out = "id\n";
  for (std::size_t r : rows) {
    out += data.id(r);
    out += '\n';
  }
  return out;
}

std::vector<std::size_t> parse_sample(const Dataset & data, std::string_view csv)
{
  const auto lines = split_lines(csv);
  require(!lines.empty() && lines.front() == "id", ErrorKind::kParse,
    "sample file must start with an 'id' header");
  std::vector<std::size_t> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      continue;
    }
    const auto row = data.find(lines[i]);
    require(row.has_value(), ErrorKind::kProtocol,
      "sample id '" + std::string(lines[i]) + "' is not in the dataset");
    rows.push_back(*row);
  }
  return rows;
}

/// Run manifest shared by the stages. It is rebuilt from scratch whenever
/// the digest on disk differs from the current config.
class ManifestWriter
{
public:
  ManifestWriter(const PipelineConfig & config, bool fresh) : config_(config)
  {
    const auto path = config.out_dir / artifact::kRunManifest;
    if (!fresh && std::filesystem::exists(path)) {
      try {
        auto j = nlohmann::json::parse(read_file(path));
        if (j.value("config_digest", std::string()) == config.digest()) {
          doc_ = std::move(j);
        }
      } catch (const nlohmann::json::exception &) {
        doc_ = nullptr;
      }
    }
    if (doc_.is_null()) {
      doc_ = {{"config_digest", config.digest()}, {"config", config.to_json()},
        {"stages", nlohmann::json::object()}, {"artifacts", nlohmann::json::object()},
        {"summary", nlohmann::json::object()}};
    }
    doc_.erase("error");
  }

  void artifact(const std::string & name, std::string_view content)
  {
    write_file(config_.out_dir / name, content);
    doc_["artifacts"][name] = hex64(fnv1a64(content));
  }

  void stage(const std::string & name, const std::string & status) { doc_["stages"][name] = status; }

  nlohmann::json & summary() { return doc_["summary"]; }

  void failed(const std::string & stage_name, const std::exception & e)
  {
    stage(stage_name, "failed");
    doc_["error"] = {{"stage", stage_name}, {"message", e.what()}};
  }

  const nlohmann::json & finish()
  {
    static const char * kOrder[] = {"stratify", "allocate", "fit_gates", "calibrate", "harvest",
      "export"};
    bool complete = true;
    for (const char * s : kOrder) {
      complete = complete && doc_["stages"].value(s, std::string()) == "ok";
    }
    doc_["status"] = complete ? "complete" : "partial";
    write_file(config_.out_dir / artifact::kRunManifest, dump(doc_));
    return doc_;
  }

private:
  const PipelineConfig & config_;
  nlohmann::json doc_;
};

/// Runs `body` as the named stage; on failure the manifest is written as
/// partial before the error propagates.
template <typename F>
void stage(ManifestWriter & manifest, const std::string & name, F && body)
{
  try {
    body();
  } catch (const std::exception & e) {
    manifest.failed(name, e);
    manifest.finish();
    throw;
  }
  manifest.stage(name, "ok");
}

struct StratifyOutput
{
  StratumTable table;
  SampleDraw draw;
};

void do_stratify(const PipelineConfig & config, const PreparedInputs & inputs, int threads,
  ManifestWriter & manifest, StratifyOutput & out)
{
  stage(manifest, "stratify", [&] {
    out.table = stratify_population(config, inputs, threads);
    auto strata = to_json(out.table);
    strata["config_digest"] = config.digest();
    manifest.artifact(artifact::kStrata, dump(strata));
    manifest.summary()["population"] = out.table.total();
    manifest.summary()["nonempty_buckets"] = out.table.nonempty();
  });
  stage(manifest, "allocate", [&] {
    out.draw = draw_sample(config, out.table, config.sampler.budget);
    auto alloc = to_json(out.draw.plan, out.table);
    alloc["config_digest"] = config.digest();
    manifest.artifact(artifact::kAllocation, dump(alloc));
    manifest.artifact(artifact::kSample, format_sample(inputs.data, out.draw.rows));
    manifest.summary()["sampled"] = out.draw.rows.size();
    manifest.summary()["overshoot"] = out.draw.plan.overshoot();
  });
}

void do_calibrate(const PipelineConfig & config, const PreparedInputs & inputs,
  std::span<const std::size_t> sample, int threads, ManifestWriter & manifest)
{
  FittedGates gates;
  stage(manifest, "fit_gates", [&] { gates = fit_gates(config, inputs, config.gates.enabled); });
  stage(manifest, "calibrate", [&] {
    const auto estimator = make_estimator(config, inputs, gates.fraud);
    const auto report = calibrate_gates(config, inputs, gates, estimator, sample, threads);
    auto cal = report.to_json();
    cal["config_digest"] = config.digest();
    manifest.artifact(artifact::kCalibrationJson, dump(cal));
    manifest.artifact(artifact::kCalibrationCsv, report.to_csv());
    manifest.artifact(artifact::kGates, dump(gates_document(config, inputs.standardizer, gates)));

    bool met = true;
    for (const auto & c : report.chosen) {
      met = met && c.constraint_met;
    }
    auto & s = manifest.summary();
    s["estimator"] = report.estimator;
    s["max_contamination"] = config.calibration.max_contamination;
    s["validation_constraint_met"] = met;
    s["test_contamination"] = report.test->contamination.rate;
    s["test_yield"] = report.test->yield;
    s["test_passed"] = report.test->passed;
  });
}

void do_harvest(const PipelineConfig & config, const PreparedInputs & inputs,
  std::span<const std::size_t> sample, int threads, ManifestWriter & manifest)
{
  HarvestResult result;
  LoadedGates gates;
  stage(manifest, "harvest", [&] {
    const auto doc = read_json(config.out_dir / artifact::kGates);
    check_digest(doc, config, artifact::kGates);
    gates = parse_gates_document(doc);
    const auto candidates = make_candidates(inputs.data, sample, gates.standardizer);
    result = harvest(candidates, gates.refs(), gates.policy, threads);
    result.manifest.config_digest = config.digest();
    result.manifest.training_csv = artifact::kTraining;

    std::vector<std::size_t> accepted;
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      if (result.records[i].accepted) {
        accepted.push_back(i);
      }
    }
    // records are sorted by id, as are the sample rows
    const auto fraud_rows = restrict_rows(inputs.splits.fit,
      inputs.data.select(LabelFilter::only(Label::kFraud)), inputs.data.size());
    const auto fraud = standardize_rows(inputs.standardizer, inputs.data, fraud_rows);
    const auto estimator = make_estimator(config, inputs, fraud);
    const auto est = estimator.estimate(candidates, accepted);
    auto & s = manifest.summary();
    s["scanned"] = result.manifest.scanned;
    s["yield"] = result.manifest.accepted;
    s["harvest_contamination"] = est.rate;
    manifest.artifact(artifact::kHarvestRecords,
      format_harvest_records(result.records, result.manifest.gate_names));
  });
  stage(manifest, "export", [&] {
    const auto labeled_rows = inputs.data.select(
      LabelFilter{Label::kFraud, Label::kSuspicious, Label::kNonFraud});
    const auto labeled = subset(inputs.data, labeled_rows);
    manifest.artifact(
      artifact::kTraining, format_training_set(result.records, inputs.data, labeled));
    manifest.artifact(artifact::kHarvestManifest, dump(result.manifest.to_json()));
  });
}

std::vector<std::size_t> read_sample(const PipelineConfig & config, const PreparedInputs & inputs)
{
  const auto alloc = read_json(config.out_dir / artifact::kAllocation);
  check_digest(alloc, config, artifact::kAllocation);
  const auto path = config.out_dir / artifact::kSample;
  require(std::filesystem::exists(path), ErrorKind::kProtocol,
    "missing artifact '" + path.string() + "'; run the stratify stage first");
  return parse_sample(inputs.data, read_file(path));
}

}  // namespace

PreparedInputs prepare_inputs(const PipelineConfig & config)
{
  config.validate();
  PreparedInputs in;
  in.data = load_dataset(config.dataset, config.dim);
  if (!config.truth.empty()) {
    in.truth = TruthTable::load(config.truth);
    for (std::size_t i = 0; i < in.data.size(); ++i) {
      require(in.truth->contains(in.data.id(i)), ErrorKind::kValidation,
        "truth sidecar has no entry for id '" + in.data.id(i) + "'");
    }
  }
  in.standardizer = fit_standardizer(in.data, config.standardize_on);
  in.splits = split(in.data,
    SplitSpec(config.calibration.validation_fraction, config.calibration.test_fraction,
      config.calibration.split_seed),
    LabelFilter{Label::kFraud, Label::kUnlabeled});
  return in;
}

StratumTable stratify_population(
  const PipelineConfig & config, const PreparedInputs & inputs, int threads)
{
  const auto bank =
    ProjectionBank::build(config.dim, config.simhash.bits, config.simhash.seed);
  return stratify(bank, inputs.data, inputs.standardizer, LabelFilter::only(Label::kUnlabeled),
    config.simhash.prefix_bits, threads);
}

SampleDraw draw_sample(const PipelineConfig & config, const StratumTable & table, std::size_t budget)
{
  SampleDraw out;
  out.plan = allocate(table, budget, config.sampler.floor);
  out.rows = draw_rows(out.plan, table, config.sampler.seed);
  return out;
}

GateRefs FittedGates::refs() const
{
  GateRefs r;
  for (const auto & m : models) {
    r.push_back(m.get());
  }
  return r;
}

std::vector<std::string> FittedGates::names() const
{
  std::vector<std::string> out;
  for (const auto & m : models) {
    out.emplace_back(m->name());
  }
  return out;
}

std::vector<double> FittedGates::thresholds() const
{
  std::vector<double> out;
  for (const auto & m : models) {
    require(m->threshold().has_value(), ErrorKind::kValidation,
      "gate '" + std::string(m->name()) + "' is not calibrated");
    out.push_back(*m->threshold());
  }
  return out;
}

FittedGates fit_gates(const PipelineConfig & config, const PreparedInputs & inputs,
  std::span<const std::string> gate_names)
{
  FittedGates out;
  const auto fraud_rows = restrict_rows(inputs.splits.fit,
    inputs.data.select(LabelFilter::only(Label::kFraud)), inputs.data.size());
  out.fraud = standardize_rows(inputs.standardizer, inputs.data, fraud_rows);
  for (const auto & name : gate_names) {
    if (name == "mahalanobis") {
      out.models.push_back(std::make_unique<MahalanobisGate>(
        MahalanobisGate::fit(out.fraud, config.gates.jitter_ladder)));
    } else if (name == "knn") {
      out.models.push_back(
        std::make_unique<KnnDensityGate>(KnnDensityGate::fit(out.fraud, config.gates.k)));
    } else {
      fail(ErrorKind::kValidation, "unknown gate '" + name + "'");
    }
  }
  return out;
}

ContaminationEstimator make_estimator(
  const PipelineConfig & config, const PreparedInputs & inputs, const Matrix & fraud)
{
  switch (parse_contamination_method(config.calibration.estimator)) {
    case ContaminationMethod::kTrueLabel:
      require(inputs.truth.has_value(), ErrorKind::kValidation,
        "the true-label estimator needs a truth sidecar");
      return ContaminationEstimator::true_label(*inputs.truth);
    case ContaminationMethod::kDistanceProbe:
      return ContaminationEstimator::distance_probe(
        MahalanobisGate::fit(fraud, config.gates.jitter_ladder), fraud,
        config.calibration.probe_radius_quantile);
    case ContaminationMethod::kRegressionProbe: {
      const auto nonfraud_rows = restrict_rows(inputs.splits.fit,
        inputs.data.select(LabelFilter::only(Label::kNonFraud)), inputs.data.size());
      return ContaminationEstimator::regression_probe(fraud,
        standardize_rows(inputs.standardizer, inputs.data, nonfraud_rows), config.probe);
    }
  }
  fail(ErrorKind::kValidation, "unknown contamination estimator");
}

std::vector<std::size_t> restrict_rows(
  std::span<const std::size_t> rows, std::span<const std::size_t> allowed, std::size_t n)
{
  std::vector<bool> mark(n, false);
  for (std::size_t r : allowed) {
    require(r < n, ErrorKind::kInvalidArgument, "row index out of range");
    mark[r] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t r : rows) {
    if (r < n && mark[r]) {
      out.push_back(r);
    }
  }
  return out;
}

CalibrationReport calibrate_gates(const PipelineConfig & config, const PreparedInputs & inputs,
  FittedGates & gates, const ContaminationEstimator & estimator,
  std::span<const std::size_t> sample_rows, int threads)
{
  const std::size_t n = inputs.data.size();
  const auto val_rows = restrict_rows(sample_rows, inputs.splits.validation, n);
  const auto test_rows = restrict_rows(sample_rows, inputs.splits.test, n);
  require(!val_rows.empty(), ErrorKind::kProtocol, "the sample has no validation candidates");
  const auto validation = make_candidates(inputs.data, val_rows, inputs.standardizer);
  const auto test = make_candidates(inputs.data, test_rows, inputs.standardizer);

  CalibrationReport report;
  report.max_contamination = config.calibration.max_contamination;
  report.estimator = std::string(to_string(estimator.method()));
  const auto grid = config.quantile_grid();
  for (auto & g : gates.models) {
    g->clear_threshold();
    report.sweeps.push_back(sweep_thresholds(*g, validation, grid, estimator, threads));
  }
  report.chosen = select_thresholds(report.sweeps, config.calibration.max_contamination);
  for (std::size_t i = 0; i < gates.models.size(); ++i) {
    gates.models[i]->set_threshold(report.chosen[i].tau);
  }
  const VotingPolicy policy{config.votes_needed(), config.gate_count()};
  report.test = confirm_on_test(gates.refs(), policy, test, validation.ids, estimator,
    config.calibration.max_contamination, threads);
  return report;
}

nlohmann::json gates_document(
  const PipelineConfig & config, const Standardizer & standardizer, const FittedGates & gates)
{
  auto list = nlohmann::json::array();
  for (const auto & g : gates.models) {
    list.push_back(g->to_json());
  }
  return {
    {"config_digest", config.digest()},
    {"standardizer", {{"mean", to_std(standardizer.mean)}, {"scale", to_std(standardizer.scale)}}},
    {"policy", {{"required_votes", config.votes_needed()}, {"total_gates", config.gate_count()}}},
    {"gates", std::move(list)},
  };
}

GateRefs LoadedGates::refs() const
{
  GateRefs r;
  for (const auto & m : models) {
    r.push_back(m.get());
  }
  return r;
}

LoadedGates parse_gates_document(const nlohmann::json & j)
{
  try {
    LoadedGates out;
    out.config_digest = j.value("config_digest", std::string());
    out.standardizer.mean = from_std(j.at("standardizer").at("mean").get<std::vector<double>>());
    out.standardizer.scale = from_std(j.at("standardizer").at("scale").get<std::vector<double>>());
    require(out.standardizer.mean.size() == out.standardizer.scale.size(), ErrorKind::kParse,
      "gates document: standardizer mean and scale differ in length");
    out.policy.required = j.at("policy").at("required_votes").get<std::size_t>();
    out.policy.total = j.at("policy").at("total_gates").get<std::size_t>();
    out.policy.validate();
    for (const auto & g : j.at("gates")) {
      out.models.push_back(gate_from_json(g));
      require(out.models.back()->dim() == out.standardizer.dim(), ErrorKind::kParse,
        "gates document: gate dimension disagrees with the standardizer");
    }
    require(out.models.size() == out.policy.total, ErrorKind::kParse,
      "gates document: policy total disagrees with the number of gates");
    return out;
  } catch (const nlohmann::json::exception & e) {
    fail(ErrorKind::kParse, std::string("gates document: ") + e.what());
  }
}

LoadedGates load_gates_document(const std::filesystem::path & path)
{
  require(std::filesystem::exists(path), ErrorKind::kIo,
    "gates file '" + path.string() + "' does not exist");
  return parse_gates_document(read_json(path));
}

void run_stratify_stage(const PipelineConfig & config, int threads)
{
  const auto inputs = prepare_inputs(config);
  ManifestWriter manifest(config, false);
  StratifyOutput out;
  do_stratify(config, inputs, threads, manifest, out);
  manifest.finish();
}

void run_calibrate_stage(const PipelineConfig & config, int threads)
{
  const auto inputs = prepare_inputs(config);
  ManifestWriter manifest(config, false);
  std::vector<std::size_t> sample;
  stage(manifest, "calibrate", [&] { sample = read_sample(config, inputs); });
  do_calibrate(config, inputs, sample, threads, manifest);
  manifest.finish();
}

void run_harvest_stage(const PipelineConfig & config, int threads)
{
  const auto inputs = prepare_inputs(config);
  ManifestWriter manifest(config, false);
  std::vector<std::size_t> sample;
  stage(manifest, "harvest", [&] { sample = read_sample(config, inputs); });
  do_harvest(config, inputs, sample, threads, manifest);
  manifest.finish();
}

nlohmann::json run_pipeline(const PipelineConfig & config, int threads)
{
  const auto inputs = prepare_inputs(config);
  std::filesystem::create_directories(config.out_dir);
  ManifestWriter manifest(config, true);
  StratifyOutput out;
  do_stratify(config, inputs, threads, manifest, out);
  do_calibrate(config, inputs, out.draw.rows, threads, manifest);
  do_harvest(config, inputs, out.draw.rows, threads, manifest);
  return manifest.finish();
}

}  // namespace sage
