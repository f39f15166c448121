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

#include "sage/core_data.hpp"

#include <cmath>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

namespace
{
constexpr std::string_view kLabelNames[] = {"fraud", "suspicious", "nonfraud", "unlabeled"};
}  // namespace

std::string_view to_string(Label label) { return kLabelNames[static_cast<unsigned>(label)]; }

std::optional<Label> parse_label(std::string_view text)
{
  for (unsigned i = 0; i < 4; ++i) {
    if (text == kLabelNames[i]) {
      return static_cast<Label>(i);
    }
  }
  return std::nullopt;
}

LabelFilter::LabelFilter(std::initializer_list<Label> labels)
{
  for (Label l : labels) {
    mask_ |= static_cast<std::uint8_t>(1U << static_cast<unsigned>(l));
  }
}

LabelFilter LabelFilter::all()
{
  return {Label::kFraud, Label::kSuspicious, Label::kNonFraud, Label::kUnlabeled};
}

LabelFilter LabelFilter::parse(std::string_view text)
{
  LabelFilter f;
  if (text == "all") {
    return all();
  }
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view token = text.substr(0, comma);
    const auto label = parse_label(token);
    require(label.has_value(), ErrorKind::kValidation,
      "unknown label '" + std::string(token) + "' in label filter");
    f.mask_ |= static_cast<std::uint8_t>(1U << static_cast<unsigned>(*label));
    if (comma == std::string_view::npos) {
      break;
    }
    text.remove_prefix(comma + 1);
  }
  require(!f.empty(), ErrorKind::kValidation, "empty label filter");
  return f;
}

std::string LabelFilter::to_string() const
{
  std::string out;
  for (unsigned i = 0; i < 4; ++i) {
    if (contains(static_cast<Label>(i))) {
      if (!out.empty()) {
        out += ',';
      }
      out += kLabelNames[i];
    }
  }
  return out;
}

Dataset::Dataset(std::size_t dim) : dim_(dim)
{
  require(dim >= 1, ErrorKind::kInvalidArgument, "dataset dimensionality must be positive");
}

void Dataset::add(std::string id, Label label, std::span<const double> features)
{
  require(!id.empty(), ErrorKind::kInvalidArgument, "empty sample id");
  require(features.size() == dim_, ErrorKind::kInvalidArgument,
    "sample '" + id + "' has " + std::to_string(features.size()) + " features, expected " +
      std::to_string(dim_));
  for (double v : features) {
    require(std::isfinite(v), ErrorKind::kInvalidArgument,
      "sample '" + id + "' has a non-finite feature");
  }
  require(!index_.contains(id), ErrorKind::kInvalidArgument, "duplicate id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  labels_.push_back(label);
  values_.insert(values_.end(), features.begin(), features.end());
}

std::optional<std::size_t> Dataset::find(std::string_view id) const
{
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::vector<std::size_t> Dataset::select(const LabelFilter & filter) const
{
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i) {
    if (filter.contains(labels_[i])) {
      rows.push_back(i);
    }
  }
  return rows;
}

std::vector<std::string_view> split_csv_line(std::string_view line)
{
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::vector<std::string_view> split_lines(std::string_view text)
{
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

Dataset parse_dataset(std::string_view csv, std::size_t dim)
{
  Dataset data(dim);
  const auto lines = split_lines(csv);
  require(!lines.empty(), ErrorKind::kParse, "dataset is missing its header row");
  const auto header = split_csv_line(lines[0]);
  require(header.size() == dim + 2 && header[0] == "id" && header[1] == "label", ErrorKind::kParse,
    "dataset header must be id,label,f0..f" + std::to_string(dim - 1));

  std::vector<double> row(dim);
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string where = "line " + std::to_string(ln + 1);
    if (lines[ln].empty() || lines[ln] == "\r") {
      continue;
    }
    const auto cells = split_csv_line(lines[ln]);
    require(cells.size() == dim + 2, ErrorKind::kParse,
      where + ": expected " + std::to_string(dim + 2) + " columns, found " +
        std::to_string(cells.size()));
    const auto label = parse_label(cells[1]);
    require(label.has_value(), ErrorKind::kParse,
      where + ": unknown label '" + std::string(cells[1]) + "'");
    for (std::size_t j = 0; j < dim; ++j) {
      require(parse_real(cells[j + 2], row[j]), ErrorKind::kParse,
        where + ": malformed value '" + std::string(cells[j + 2]) + "'");
      require(std::isfinite(row[j]), ErrorKind::kParse, where + ": non-finite value");
    }
    require(!cells[0].empty(), ErrorKind::kParse, where + ": empty id");
    require(!data.find(cells[0]).has_value(), ErrorKind::kParse,
      where + ": duplicate id '" + std::string(cells[0]) + "'");
    data.add(std::string(cells[0]), *label, row);
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path & path, std::size_t dim)
{
  try {
    return parse_dataset(read_file(path), dim);
  } catch (const Error & e) {
    if (e.kind() == ErrorKind::kParse) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
    throw;
  }
}

std::string format_dataset(const Dataset & data)
{
  std::string out = "id,label";
  for (std::size_t j = 0; j < data.dim(); ++j) {
    out += ",f" + std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += data.id(i);
    out += ',';
    out += to_string(data.label(i));
    for (double v : data.features(i)) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset & data, const std::filesystem::path & path)
{
  write_file(path, format_dataset(data));
}

Vector Standardizer::transform(std::span<const double> x) const
{
  require(x.size() == dim(), ErrorKind::kInvalidArgument,
    "standardize: vector length " + std::to_string(x.size()) + " != " + std::to_string(dim()));
  Vector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    out[k] = (x[j] - mean[k]) / scale[k];
  }
  return out;
}

Vector Standardizer::transform(const Eigen::Ref<const Vector> & x) const
{
  return transform(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Standardizer fit_standardizer(const Dataset & data, const LabelFilter & subset)
{
  const auto rows = data.select(subset);
  require(rows.size() >= 2, ErrorKind::kInvalidArgument,
    "standardizer needs at least 2 samples in subset '" + subset.to_string() + "', found " +
      std::to_string(rows.size()));
  const auto d = static_cast<Eigen::Index>(data.dim());
  const double n = static_cast<double>(rows.size());

  Vector mean = Vector::Zero(d);
  for (std::size_t r : rows) {
    mean += data.row_vector(r);
  }
  mean /= n;

  Vector var = Vector::Zero(d);
  for (std::size_t r : rows) {
    var += (data.row_vector(r) - mean).cwiseAbs2();
  }
  var /= n;

  // exact constancy check: the mean of identical values need not round back
  // to that value, which would leave a spurious tiny variance
  std::vector<bool> constant(static_cast<std::size_t>(d), true);
  const auto first = data.row_vector(rows.front());
  for (std::size_t r : rows) {
    const auto x = data.row_vector(r);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (x[j] != first[j]) {
        constant[static_cast<std::size_t>(j)] = false;
      }
    }
  }

  Vector scale = var.cwiseSqrt();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (constant[static_cast<std::size_t>(j)] || !(scale[j] > 0.0)) {
      scale[j] = 1.0;
    }
  }
  return {std::move(mean), std::move(scale)};
}

Vector standardize(const Standardizer & s, std::span<const double> x) { return s.transform(x); }

Matrix standardize_rows(
  const Standardizer & s, const Dataset & data, std::span<const std::size_t> rows)
{
  require(s.dim() == data.dim(), ErrorKind::kInvalidArgument, "standardizer dimension mismatch");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
      ((data.row_vector(rows[i]) - s.mean).array() / s.scale.array()).matrix().transpose();
  }
  return out;
}

}  // namespace sage
