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

#include "sage/datagen.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdio>
#include <random>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

namespace
{

constexpr double kProportionTolerance = 1e-9;

Label label_from_json(const nlohmann::json & j, const char * field)
{
  const auto text = j.get<std::string>();
  const auto label = parse_label(text);
  require(label.has_value(), ErrorKind::kValidation,
    std::string("scenario: unknown ") + field + " '" + text + "'");
  return *label;
}

CohortSpec cohort(std::string name, Label label, Label truth, Vector mean, double sd,
  double proportion)
{
  const auto d = mean.size();
  return {std::move(name), label, truth, std::move(mean),
    sd * sd * Matrix::Identity(d, d), proportion};
}

Vector axis(std::size_t dim, std::initializer_list<std::pair<Eigen::Index, double>> entries)
{
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto & [i, value] : entries) {
    v[i] = value;
  }
  return v;
}

}  // namespace

double implied_hidden_fraud_rate(const std::vector<CohortSpec> & cohorts)
{
  double unlabeled = 0.0;
  double hidden = 0.0;
  for (const auto & c : cohorts) {
    if (c.label == Label::kUnlabeled) {
      unlabeled += c.proportion;
      if (c.truth == Label::kFraud) {
        hidden += c.proportion;
      }
    }
  }
  return unlabeled > 0.0 ? hidden / unlabeled : 0.0;
}

void ScenarioConfig::validate() const
{
  require(dim >= 1, ErrorKind::kValidation, "scenario dimension must be >= 1");
  require(!cohorts.empty(), ErrorKind::kValidation, "scenario has no cohorts");
  require(hidden_fraud_rate >= 0.0 && hidden_fraud_rate < 1.0, ErrorKind::kValidation,
    "hidden fraud rate must lie in [0, 1)");
  double total = 0.0;
  for (const auto & c : cohorts) {
    const std::string where = "cohort '" + c.name + "'";
    require(static_cast<std::size_t>(c.mean.size()) == dim, ErrorKind::kValidation,
      where + ": mean has wrong length");
    require(c.covariance.rows() == c.mean.size() && c.covariance.cols() == c.mean.size(),
      ErrorKind::kValidation, where + ": covariance has wrong shape");
    require(c.proportion >= 0.0, ErrorKind::kValidation, where + ": negative proportion");
    require(c.truth == Label::kFraud || c.truth == Label::kNonFraud, ErrorKind::kValidation,
      where + ": truth must be fraud or nonfraud");
    require(c.label == Label::kUnlabeled || c.label == Label::kSuspicious || c.label == c.truth,
      ErrorKind::kValidation, where + ": visible label contradicts planted truth");
    require(c.covariance.isApprox(c.covariance.transpose()), ErrorKind::kValidation,
      where + ": covariance is not symmetric");
    Eigen::LLT<Matrix> llt(c.covariance);
    require(llt.info() == Eigen::Success, ErrorKind::kValidation,
      where + ": covariance is not positive definite");
    total += c.proportion;
  }
  require(std::fabs(total - 1.0) <= kProportionTolerance, ErrorKind::kValidation,
    "cohort proportions sum to " + format_real(total) + ", expected 1");
  require(std::fabs(implied_hidden_fraud_rate(cohorts) - hidden_fraud_rate) <= 1e-9,
    ErrorKind::kValidation,
    "hidden_fraud_rate " + format_real(hidden_fraud_rate) + " disagrees with cohort proportions (" +
      format_real(implied_hidden_fraud_rate(cohorts)) + ")");
}

nlohmann::json ScenarioConfig::to_json() const
{
  auto cs = nlohmann::json::array();
  for (const auto & c : cohorts) {
    std::vector<double> mean(c.mean.data(), c.mean.data() + c.mean.size());
    std::vector<std::vector<double>> cov;
    for (Eigen::Index i = 0; i < c.covariance.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < c.covariance.cols(); ++j) {
        row.push_back(c.covariance(i, j));
      }
      cov.push_back(std::move(row));
    }
    cs.push_back({
      {"name", c.name},
      {"label", std::string(to_string(c.label))},
      {"truth", std::string(to_string(c.truth))},
      {"mean", mean},
      {"cov", cov},
      {"proportion", c.proportion},
    });
  }
  return {
    {"name", name},
    {"dim", dim},
    {"n", n},
    {"seed", seed},
    {"hidden_fraud_rate", hidden_fraud_rate},
    {"cohorts", std::move(cs)},
  };
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json & j)
{
  try {
    ScenarioConfig s;
    s.name = j.value("name", std::string("custom"));
    s.dim = j.at("dim").get<std::size_t>();
    s.n = j.at("n").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto & cj : j.at("cohorts")) {
      CohortSpec c;
      c.name = cj.at("name").get<std::string>();
      c.label = label_from_json(cj.at("label"), "label");
      c.truth = cj.contains("truth") ? label_from_json(cj.at("truth"), "truth") : c.label;
      const auto mean = cj.at("mean").get<std::vector<double>>();
      c.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      const auto d = c.mean.size();
      if (cj.contains("cov")) {
        const auto cov = cj.at("cov").get<std::vector<std::vector<double>>>();
        require(static_cast<Eigen::Index>(cov.size()) == d, ErrorKind::kValidation,
          "cohort '" + c.name + "': covariance has wrong shape");
        c.covariance.resize(d, d);
        for (Eigen::Index r = 0; r < d; ++r) {
          const auto & row = cov[static_cast<std::size_t>(r)];
          require(static_cast<Eigen::Index>(row.size()) == d, ErrorKind::kValidation,
            "cohort '" + c.name + "': covariance has wrong shape");
          for (Eigen::Index k = 0; k < d; ++k) {
            c.covariance(r, k) = row[static_cast<std::size_t>(k)];
          }
        }
      } else if (cj.contains("cov_diag")) {
        const auto diag = cj.at("cov_diag").get<std::vector<double>>();
        require(static_cast<Eigen::Index>(diag.size()) == d, ErrorKind::kValidation,
          "cohort '" + c.name + "': cov_diag has wrong length");
        c.covariance = Eigen::Map<const Vector>(diag.data(), d).asDiagonal();
      } else {
        const double sd = cj.value("sd", 1.0);
        c.covariance = sd * sd * Matrix::Identity(d, d);
      }
      c.proportion = cj.at("proportion").get<double>();
      s.cohorts.push_back(std::move(c));
    }
    s.hidden_fraud_rate = j.contains("hidden_fraud_rate")
                            ? j.at("hidden_fraud_rate").get<double>()
                            : implied_hidden_fraud_rate(s.cohorts);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception & e) {
    fail(ErrorKind::kValidation, std::string("scenario: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path & path)
{
  require(std::filesystem::exists(path), ErrorKind::kValidation,
    "scenario file '" + path.string() + "' does not exist");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error & e) {
    fail(ErrorKind::kValidation, "scenario file '" + path.string() + "': " + e.what());
  }
  return ScenarioConfig::from_json(j);
}

ScenarioConfig builtin_scenario(std::string_view name, std::size_t n, std::uint64_t seed)
{
  constexpr std::size_t d = 8;
  // Every cohort has unit covariance, so distances between means are in
  // standardized units. Mainstream legitimate behavior sits at the origin and
  // fraud 6 units away.
  const Vector fraud_mean = axis(d, {{0, 6.0}});
  constexpr double sd = 1.0;
  constexpr double labeled_fraud = 0.01;
  constexpr double suspicious = 0.002;
  constexpr double labeled_nonfraud = 0.02;
  constexpr double hidden_rate = 0.01;
  double unlabeled = 1.0 - labeled_fraud - suspicious - labeled_nonfraud;

  ScenarioConfig s;
  s.name = std::string(name);
  s.dim = d;
  s.n = n;
  s.seed = seed;
  s.hidden_fraud_rate = hidden_rate;

  std::vector<CohortSpec> extra;
  if (name == "s2" || name == "s3") {
    // super-fans: legitimate, 1.5 units from the fraud mean
    extra.push_back(cohort("superfan", Label::kUnlabeled, Label::kNonFraud,
      fraud_mean + axis(d, {{1, 1.5}}), sd, 0.02));
  }
  if (name == "s3") {
    extra.push_back(cohort("rare", Label::kUnlabeled, Label::kNonFraud,
      axis(d, {{2, -4.0}, {3, 4.0}}), sd, 0.002));
  }
  require(name == "s1" || name == "s2" || name == "s3", ErrorKind::kValidation,
    "unknown built-in scenario '" + std::string(name) + "' (expected s1, s2 or s3)");

  const Vector origin = Vector::Zero(d);
  s.cohorts.push_back(
    cohort("fraud_labeled", Label::kFraud, Label::kFraud, fraud_mean, sd, labeled_fraud));
  s.cohorts.push_back(cohort("suspicious", Label::kSuspicious, Label::kFraud,
    fraud_mean - axis(d, {{0, 1.0}}), sd, suspicious));
  s.cohorts.push_back(cohort(
    "nonfraud_labeled", Label::kNonFraud, Label::kNonFraud, origin, sd, labeled_nonfraud));
  s.cohorts.push_back(cohort("fraud_hidden", Label::kUnlabeled, Label::kFraud, fraud_mean,
    sd, hidden_rate * unlabeled));
  double extra_total = 0.0;
  for (auto & c : extra) {
    extra_total += c.proportion;
    s.cohorts.push_back(std::move(c));
  }
  s.cohorts.push_back(cohort("mainstream", Label::kUnlabeled, Label::kNonFraud, origin, sd,
    (1.0 - hidden_rate) * unlabeled - extra_total));
  s.validate();
  return s;
}

void TruthTable::add(std::string id, Label truth, std::string cohort)
{
  require(!entries_.contains(id), ErrorKind::kInvalidArgument, "duplicate truth id '" + id + "'");
  order_.push_back(id);
  entries_.emplace(std::move(id), Entry{truth, std::move(cohort)});
}

bool TruthTable::contains(std::string_view id) const
{
  return entries_.contains(std::string(id));
}

const TruthTable::Entry & TruthTable::at(std::string_view id) const
{
  const auto it = entries_.find(std::string(id));
  require(it != entries_.end(), ErrorKind::kInvalidArgument,
    "no ground truth for id '" + std::string(id) + "'");
  return it->second;
}

Label TruthTable::truth_lookup(std::string_view id) const { return at(id).truth; }

const std::string & TruthTable::cohort(std::string_view id) const { return at(id).cohort; }

std::string TruthTable::format() const
{
  std::string out = "id,truth,cohort\n";
  for (const auto & id : order_) {
    const auto & e = entries_.at(id);
    out += id + ',' + std::string(to_string(e.truth)) + ',' + e.cohort + '\n';
  }
  return out;
}

TruthTable TruthTable::parse(std::string_view csv)
{
  const auto lines = split_lines(csv);
  require(!lines.empty(), ErrorKind::kParse, "truth sidecar is missing its header");
  const auto header = split_csv_line(lines[0]);
  require(header.size() >= 2 && header[0] == "id" && header[1] == "truth", ErrorKind::kParse,
    "truth sidecar header must start with id,truth");
  TruthTable t;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) {
      continue;
    }
    const auto cells = split_csv_line(lines[ln]);
    require(cells.size() == header.size(), ErrorKind::kParse,
      "truth sidecar line " + std::to_string(ln + 1) + ": wrong column count");
    const auto truth = parse_label(cells[1]);
    require(truth.has_value(), ErrorKind::kParse,
      "truth sidecar line " + std::to_string(ln + 1) + ": unknown truth");
    t.add(std::string(cells[0]), *truth, cells.size() > 2 ? std::string(cells[2]) : "");
  }
  return t;
}

TruthTable TruthTable::load(const std::filesystem::path & path) { return parse(read_file(path)); }

GeneratedData generate(const ScenarioConfig & scenario)
{
  scenario.validate();
  const auto d = static_cast<Eigen::Index>(scenario.dim);

  std::vector<Matrix> factors;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto & c : scenario.cohorts) {
    Eigen::LLT<Matrix> llt(c.covariance);
    factors.emplace_back(llt.matrixL());
    acc += c.proportion;
    cumulative.push_back(acc);
  }

  std::mt19937_64 rng(scenario.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int width = scenario.n <= 1 ? 1 : static_cast<int>(std::to_string(scenario.n - 1).size());
  GeneratedData out{Dataset(scenario.dim), {}};
  Vector z(d);
  char id[32];
  for (std::size_t i = 0; i < scenario.n; ++i) {
    const double u = uniform(rng) * acc;
    std::size_t c = 0;
    while (c + 1 < cumulative.size() && u >= cumulative[c]) {
      ++c;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      z[j] = normal(rng);
    }
    const Vector x = scenario.cohorts[c].mean + factors[c] * z;
    std::snprintf(id, sizeof(id), "s%0*zu", width, i);
    out.dataset.add(id, scenario.cohorts[c].label,
      std::span<const double>(x.data(), static_cast<std::size_t>(d)));
    out.truth.add(id, scenario.cohorts[c].truth, scenario.cohorts[c].name);
  }
  return out;
}

}  // namespace sage
