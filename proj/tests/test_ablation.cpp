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

#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sage/ablation.hpp"
#include "sage/error.hpp"
#include "sage/util.hpp"
#include "support.hpp"

namespace sage
{
namespace
{

namespace fs = std::filesystem;

struct Labels
{
  std::unique_ptr<bool[]> flags;
  std::size_t n = 0;
  std::span<const bool> span() const { return {flags.get(), n}; }
};

Labels labels(const std::vector<int> & v)
{
  Labels l{std::make_unique<bool[]>(v.size()), v.size()};
  for (std::size_t i = 0; i < v.size(); ++i) {
    l.flags[i] = v[i] != 0;
  }
  return l;
}

StratumTable two_buckets()
{
  StratumTable t;
  t.prefix_bits = 1;
  t.row_ids = {"a", "b", "c", "d", "e"};
  t.buckets["0"] = {0, 1, 2};
  t.buckets["1"] = {3, 4};
  return t;
}

}  // namespace

TEST_CASE("perfect scorer keeps precision one")
{
  const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
  const auto truth = labels({1, 1, 0, 0});
  const auto pr = pr_curve(scores, truth.span(), default_pr_grid());
  CHECK(pr.size() == 101);
  bool reached = false;
  for (const auto & p : pr) {
    if (p.recall < 1.0) {
      CHECK(p.precision == 1.0);
    }
    reached = reached || (p.recall == 1.0 && p.precision == 1.0);
  }
  CHECK(reached);
  CHECK(average_precision(scores, truth.span()) == 1.0);
}

TEST_CASE("constant scorer sits at the base rate")
{
  const std::vector<double> scores(10, 0.3);
  const auto truth = labels({1, 0, 0, 0, 0, 1, 0, 0, 0, 0});
  const auto pr = pr_curve(scores, truth.span(), default_pr_grid());
  for (const auto & p : pr) {
    if (p.threshold <= 0.3) {
      CHECK(p.precision == doctest::Approx(0.2));
      CHECK(p.recall == 1.0);
    } else {
      CHECK_FALSE(p.precision_defined);
      CHECK(p.recall == 0.0);
    }
  }
  CHECK(average_precision(scores, truth.span()) == doctest::Approx(0.2));
}

TEST_CASE("random scorer precision tracks the base rate")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<double> scores(10000);
  std::vector<int> truth(10000);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = u(rng);
    truth[i] = i % 100 == 0 ? 1 : 0;
  }
  const auto t = labels(truth);
  const std::vector<double> grid{0.0, 0.2, 0.4, 0.6};
  for (const auto & p : pr_curve(scores, t.span(), grid)) {
    CHECK(std::abs(p.precision - 0.01) <= 0.005);
  }
}

TEST_CASE("average precision by hand")
{
  // ranking: 1 0 1 0 -> (1/1 + 2/3) / 2
  const std::vector<double> scores{0.9, 0.8, 0.7, 0.6};
  const auto truth = labels({1, 0, 1, 0});
  CHECK(average_precision(scores, truth.span()) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK_THROWS_AS(pr_curve({}, {}, default_pr_grid()), Error);
  const auto csv = format_pr_csv(pr_curve(scores, truth.span(), std::vector<double>{0.5}));
  CHECK(csv == "threshold,precision,recall\n0.5,0.5,1\n");
}

TEST_CASE("recall never rises with the threshold")
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  std::vector<double> scores(500);
  std::vector<int> truth(500);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    truth[i] = u(rng) < 0.1 ? 1 : 0;
    scores[i] = std::min(1.0, u(rng) * (truth[i] ? 1.5 : 1.0));
  }
  truth[0] = 1;
  const auto t = labels(truth);
  const auto pr = pr_curve(scores, t.span(), default_pr_grid());
  for (std::size_t i = 1; i < pr.size(); ++i) {
    CHECK(pr[i].recall <= pr[i - 1].recall);
  }
}

TEST_CASE("coverage report")
{
  const auto t = two_buckets();
  const std::vector<std::string> all{"a", "b", "c", "d", "e"};
  const auto full = coverage_report(t, all, 2);
  for (const auto & b : full.buckets) {
    CHECK(b.ratio == 1.0);
  }
  CHECK(full.floor_fraction == 1.0);

  const auto none = coverage_report(t, {}, 2);
  for (const auto & b : none.buckets) {
    CHECK(b.ratio == 0.0);
  }
  CHECK(none.meeting_floor == 0);

  const std::vector<std::string> some{"a", "d", "e"};
  const auto part = coverage_report(t, some, 2);
  CHECK(part.find("0")->sampled == 1);
  CHECK(part.find("1")->sampled == 2);
  CHECK(part.meeting_floor == 1);
  CHECK(part.floor_fraction == 0.5);

  const std::vector<std::string> foreign{"zz"};
  CHECK_THROWS_AS(coverage_report(t, foreign, 2), Error);
  const std::vector<std::string> twice{"a", "a"};
  CHECK_THROWS_AS(coverage_report(t, twice, 2), Error);
}

TEST_CASE("arm definitions")
{
  const auto arms = default_ablation_arms();
  CHECK(arms.size() == 6);
  CHECK(arms.front().name == "random");
  CHECK(arms.front().gates.empty());
  CHECK(arms.back().name == "full-sage");
  CHECK(arms.back().sampler == SamplerKind::kSimhashFloors);
  CHECK(arms.back().gates.size() == 2);
  CHECK(default_ablation_plan().reference == "full-sage");

  try {
    default_ablation_arm("gradient-boost");
    FAIL("unknown arm accepted");
  } catch (const Error & e) {
    CHECK(e.kind() == ErrorKind::kValidation);
  }
  const auto plan = parse_ablation_plan(nlohmann::json::parse(
    R"({"arms": ["random", {"name": "one-of-two", "sampler": "simhash-floors",
        "gates": ["mahalanobis", "knn"], "required_votes": 1}], "reference": "one-of-two"})"));
  CHECK(plan.arms.size() == 2);
  CHECK(plan.arms[1].policy().required == 1);
  CHECK_THROWS_AS(parse_ablation_plan(nlohmann::json::parse(R"({"arms": ["nope"]})")), Error);
  CHECK_THROWS_AS(
    parse_ablation_plan(nlohmann::json::parse(R"({"arms": ["random"], "reference": "x"})")),
    Error);
}

TEST_CASE("ablation run on a small scenario")
{
  const auto dir = test::scratch_dir("ablation");
  auto j = test::write_scenario(dir, "s3", 8000, 23);
  j["simhash"] = {{"prefix_bits", 8}};
  j["sampler"] = {{"budget", 3000}, {"floor", 3}};
  j["calibration"] = {{"estimator", "true-label"}};
  const auto config = PipelineConfig::from_json(j);

  const auto report = run_ablation(config, default_ablation_plan(), 4);
  CHECK(report.arms.size() == 6);
  const auto & ref = report.arm("full-sage");
  for (const auto & arm : report.arms) {
    INFO(arm.arm);
    CHECK(arm.yield_matched);
    CHECK(arm.target_yield == ref.yield);
    CHECK(arm.pr.size() == 101);
    CHECK(arm.auprc >= 0.0);
    CHECK(arm.auprc <= 1.0);
    CHECK(arm.contamination == doctest::Approx(arm.yield ? double(arm.contaminated) / arm.yield : 0.0));
  }
  for (const auto & b : ref.coverage.buckets) {
    CHECK(b.sampled >= std::min<std::size_t>(3, b.population));
  }

  const auto again = run_ablation(config, default_ablation_plan(), 1);
  CHECK(again.results_csv() == report.results_csv());
  CHECK(again.cohort_fpr_csv() == report.cohort_fpr_csv());

  write_ablation(report, dir / "ablate");
  CHECK(fs::exists(dir / "ablate" / "results.csv"));
  CHECK(fs::exists(dir / "ablate" / "cohort_fpr.csv"));
  CHECK(fs::exists(dir / "ablate" / "ablation_manifest.json"));
  std::size_t pr_files = 0;
  for (const auto & e : fs::directory_iterator(dir / "ablate")) {
    if (e.path().filename().string().rfind("pr_", 0) == 0) {
      ++pr_files;
    }
  }
  CHECK(pr_files == 6);
  CHECK(read_file(dir / "ablate" / "results.csv").rfind(
          "arm,contamination,yield,coverage_floor_fraction,auprc\n", 0) == 0);
}

TEST_CASE("ablation needs ground truth")
{
  const auto dir = test::scratch_dir("ablation_truth");
  auto j = test::write_scenario(dir, "s1", 3000, 2);
  j.erase("truth");
  CHECK_THROWS_AS(run_ablation(PipelineConfig::from_json(j), default_ablation_plan()), Error);
}

}  // namespace sage
