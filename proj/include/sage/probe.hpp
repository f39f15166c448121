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

#ifndef SAGE__PROBE_HPP_
#define SAGE__PROBE_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sage/core_data.hpp"

namespace sage
{

/// Binary weighted rows: target 1 = fraud, 0 = nonfraud. Raw features.
struct TrainingSet
{
  std::vector<std::string> ids;
  Matrix features;
  Vector targets;
  Vector weights;

  std::size_t size() const { return ids.size(); }
};

/// Parses `id,label,weight,f0..`; fraud and nonfraud rows are kept,
/// suspicious rows are skipped (the probe is binary).
TrainingSet parse_training_set(std::string_view csv, std::size_t dim);
TrainingSet load_training_set(const std::filesystem::path & path, std::size_t dim);

struct ProbeOptions
{
  std::size_t iterations = 1000;
  double step = 1.0;
};

/// Weighted logistic loss (normalized by the total weight) at parameters
/// [intercept, coef...] over already standardized rows. Shared by training
/// and by the finite-difference check.
double probe_loss(const Matrix & z, const Vector & targets, const Vector & weights,
  const Vector & params);
Vector probe_gradient(const Matrix & z, const Vector & targets, const Vector & weights,
  const Vector & params);

/// Linear logistic model over standardized features.
struct LogisticProbe
{
  Standardizer standardizer;
  double intercept = 0.0;
  Vector coef;

  double logit(std::span<const double> raw) const;
  double probability(std::span<const double> raw) const;
};

/// Full-batch gradient descent from zero. Needs both classes present.
LogisticProbe train_probe(const TrainingSet & set, const ProbeOptions & options = {});

}  // namespace sage

#endif  // SAGE__PROBE_HPP_
