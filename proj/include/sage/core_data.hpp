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

#ifndef SAGE__CORE_DATA_HPP_
#define SAGE__CORE_DATA_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sage
{

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Label : std::uint8_t
{
  kFraud = 0,
  kSuspicious = 1,
  kNonFraud = 2,
  kUnlabeled = 3,
};

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

/// Set of labels used to select a subset of a dataset.
class LabelFilter
{
public:
  constexpr LabelFilter() = default;
  LabelFilter(std::initializer_list<Label> labels);

  static LabelFilter all();
  static LabelFilter only(Label label) { return LabelFilter{label}; }

  bool contains(Label label) const { return (mask_ >> static_cast<unsigned>(label)) & 1U; }
  bool empty() const { return mask_ == 0; }

  /// Parses names such as "unlabeled" or "fraud,nonfraud".
  static LabelFilter parse(std::string_view text);
  std::string to_string() const;

private:
  std::uint8_t mask_ = 0;
};

/// Labeled samples of fixed dimensionality. Ids are unique and every row has
/// exactly dim finite entries; both are enforced on insertion.
class Dataset
{
public:
  explicit Dataset(std::size_t dim);

  void add(std::string id, Label label, std::span<const double> features);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::string & id(std::size_t row) const { return ids_[row]; }
  Label label(std::size_t row) const { return labels_[row]; }
  std::span<const double> features(std::size_t row) const
  {
    return {values_.data() + row * dim_, dim_};
  }
  Eigen::Map<const Vector> row_vector(std::size_t row) const
  {
    return Eigen::Map<const Vector>(values_.data() + row * dim_, static_cast<Eigen::Index>(dim_));
  }

  std::optional<std::size_t> find(std::string_view id) const;

  /// Row indices whose label is in the filter, in row order.
  std::vector<std::size_t> select(const LabelFilter & filter) const;

private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<Label> labels_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads `id,label,f0,...,f{dim-1}`. Errors name the offending line.
Dataset load_dataset(const std::filesystem::path & path, std::size_t dim);
Dataset parse_dataset(std::string_view csv, std::size_t dim);

std::string format_dataset(const Dataset & data);
void save_dataset(const Dataset & data, const std::filesystem::path & path);

/// Per-feature affine map x -> (x - mean) / scale.
struct Standardizer
{
  Vector mean;
  Vector scale;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  Vector transform(std::span<const double> x) const;
  Vector transform(const Eigen::Ref<const Vector> & x) const;
};

/// Population mean and standard deviation over the selected rows. A feature
/// with zero spread keeps scale 1 so it stays in the vector.
Standardizer fit_standardizer(const Dataset & data, const LabelFilter & subset);

Vector standardize(const Standardizer & s, std::span<const double> x);

/// Standardized copies of the given rows, one row per entry of `rows`.
Matrix standardize_rows(
  const Standardizer & s, const Dataset & data, std::span<const std::size_t> rows);

/// Splits one CSV line on commas; no quoting support (ids must not contain
/// commas). A trailing '\r' is stripped.
std::vector<std::string_view> split_csv_line(std::string_view line);

/// Iterates the lines of a text blob, skipping a final empty line.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace sage

#endif  // SAGE__CORE_DATA_HPP_
