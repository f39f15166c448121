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

#include "sage/probe.hpp"

#include <cmath>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

namespace
{

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t)
{
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Vector logits(const Matrix & z, const Vector & params)
{
  const Eigen::Index d = z.cols();
  return (z * params.tail(d)).array() + params[0];
}

}  // namespace

TrainingSet parse_training_set(std::string_view csv, std::size_t dim)
{
  const auto lines = split_lines(csv);
  require(!lines.empty(), ErrorKind::kParse, "training set is missing its header row");
  const auto header = split_csv_line(lines[0]);
  require(header.size() == dim + 3 && header[0] == "id" && header[1] == "label" &&
            header[2] == "weight",
    ErrorKind::kParse, "training set header must be id,label,weight,f0..");

  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<double> weights;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) {
      continue;
    }
    const std::string where = "training set line " + std::to_string(ln + 1);
    const auto cells = split_csv_line(lines[ln]);
    require(cells.size() == dim + 3, ErrorKind::kParse, where + ": wrong column count");
    const auto label = parse_label(cells[1]);
    require(label.has_value() && *label != Label::kUnlabeled, ErrorKind::kParse,
      where + ": bad label '" + std::string(cells[1]) + "'");
    if (*label == Label::kSuspicious) {
      continue;
    }
    double w = 0.0;
    require(parse_real(cells[2], w) && std::isfinite(w) && w > 0.0, ErrorKind::kParse,
      where + ": weight must be a positive real");
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      require(parse_real(cells[j + 3], v) && std::isfinite(v), ErrorKind::kParse,
        where + ": malformed feature");
      values.push_back(v);
    }
    ids.emplace_back(cells[0]);
    targets.push_back(*label == Label::kFraud ? 1.0 : 0.0);
    weights.push_back(w);
  }

  TrainingSet set;
  const auto n = static_cast<Eigen::Index>(ids.size());
  set.ids = std::move(ids);
  set.features.resize(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(dim); ++j) {
      set.features(i, j) = values[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(j)];
    }
  }
  set.targets = Eigen::Map<const Vector>(targets.data(), n);
  set.weights = Eigen::Map<const Vector>(weights.data(), n);
  return set;
}

TrainingSet load_training_set(const std::filesystem::path & path, std::size_t dim)
{
  return parse_training_set(read_file(path), dim);
}

double probe_loss(const Matrix & z, const Vector & targets, const Vector & weights,
  const Vector & params)
{
  const Vector t = logits(z, params);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    loss += weights[i] * (softplus(t[i]) - targets[i] * t[i]);
  }
  return loss / weights.sum();
}

Vector probe_gradient(const Matrix & z, const Vector & targets, const Vector & weights,
  const Vector & params)
{
  const Vector t = logits(z, params);
  Vector residual(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    residual[i] = weights[i] * (sigmoid(t[i]) - targets[i]);
  }
  Vector grad(params.size());
  grad[0] = residual.sum();
  grad.tail(z.cols()) = z.transpose() * residual;
  return grad / weights.sum();
}

double LogisticProbe::logit(std::span<const double> raw) const
{
  return intercept + coef.dot(standardizer.transform(raw));
}

double LogisticProbe::probability(std::span<const double> raw) const { return sigmoid(logit(raw)); }

LogisticProbe train_probe(const TrainingSet & set, const ProbeOptions & options)
{
  require(set.size() >= 2, ErrorKind::kInvalidArgument, "probe needs at least two rows");
  const double positives = set.targets.sum();
  require(positives > 0.0 && positives < static_cast<double>(set.size()),
    ErrorKind::kInvalidArgument, "probe needs both fraud and nonfraud rows");

  // standardize with the plain (unweighted) moments of the training rows
  const auto n = set.features.rows();
  const auto d = set.features.cols();
  LogisticProbe probe;
  probe.standardizer.mean = set.features.colwise().mean().transpose();
  const Matrix centered = set.features.rowwise() - probe.standardizer.mean.transpose();
  probe.standardizer.scale =
    (centered.colwise().squaredNorm().transpose() / static_cast<double>(n)).cwiseSqrt();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(probe.standardizer.scale[j] > 0.0)) {
      probe.standardizer.scale[j] = 1.0;
    }
  }
  const Matrix z = centered.array().rowwise() / probe.standardizer.scale.transpose().array();

  Vector params = Vector::Zero(d + 1);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    params -= options.step * probe_gradient(z, set.targets, set.weights, params);
  }
  probe.intercept = params[0];
  probe.coef = params.tail(d);
  return probe;
}

}  // namespace sage
