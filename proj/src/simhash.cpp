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

#include "sage/simhash.hpp"

#include <bit>
#include <random>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

ProjectionBank ProjectionBank::build(std::size_t dim, std::size_t bits, std::uint64_t seed)
{
  require(dim >= 1, ErrorKind::kInvalidArgument, "projection dimension must be >= 1");
  require(bits >= 1 && bits <= kMaxSignatureBits, ErrorKind::kInvalidArgument,
    "signature bits must be in [1, 256], got " + std::to_string(bits));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix planes(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(dim));
  // row-major draw order is part of the reproducibility contract
  for (Eigen::Index i = 0; i < planes.rows(); ++i) {
    for (Eigen::Index j = 0; j < planes.cols(); ++j) {
      planes(i, j) = normal(rng);
    }
  }
  return ProjectionBank(std::move(planes), seed);
}

Signature::Signature(std::size_t bits) : bits_(bits)
{
  require(bits >= 1 && bits <= kMaxSignatureBits, ErrorKind::kInvalidArgument,
    "signature width must be in [1, 256]");
}

std::string Signature::prefix(std::size_t bits) const
{
  require(bits <= bits_, ErrorKind::kInvalidArgument, "prefix longer than signature");
  std::string out(bits, '0');
  for (std::size_t i = 0; i < bits; ++i) {
    if (test(i)) {
      out[i] = '1';
    }
  }
  return out;
}

std::size_t Signature::hamming(const Signature & other) const
{
  require(bits_ == other.bits_, ErrorKind::kInvalidArgument, "signature widths differ");
  std::size_t count = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    count += static_cast<std::size_t>(std::popcount(words_[w] ^ other.words_[w]));
  }
  return count;
}

Signature signature(const ProjectionBank & bank, std::span<const double> x)
{
  require(x.size() == bank.dim(), ErrorKind::kInvalidArgument,
    "signature: vector length " + std::to_string(x.size()) + " != bank dimension " +
      std::to_string(bank.dim()));
  const auto & planes = bank.planes();
  Signature sig(bank.bits());
  for (std::size_t i = 0; i < bank.bits(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      dot += planes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[j];
    }
    if (dot >= 0.0) {
      sig.set(i);
    }
  }
  return sig;
}

Signature signature(const ProjectionBank & bank, const Eigen::Ref<const Vector> & x)
{
  return signature(bank, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

std::size_t StratumTable::population(const std::string & key) const
{
  const auto it = buckets.find(key);
  return it == buckets.end() ? 0 : it->second.size();
}

std::size_t StratumTable::total() const
{
  std::size_t n = 0;
  for (const auto & [key, rows] : buckets) {
    n += rows.size();
  }
  return n;
}

StratumTable stratify(const ProjectionBank & bank, const Dataset & data,
  const Standardizer & standardizer, const LabelFilter & subset, std::size_t prefix_bits,
  int threads)
{
  require(prefix_bits >= 1 && prefix_bits <= bank.bits(), ErrorKind::kInvalidArgument,
    "prefix bits must be in [1, " + std::to_string(bank.bits()) + "], got " +
      std::to_string(prefix_bits));
  require(bank.dim() == data.dim(), ErrorKind::kInvalidArgument,
    "projection bank dimension does not match dataset");

  const auto rows = data.select(subset);
  std::vector<std::string> keys(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const Vector z = standardizer.transform(data.features(rows[i]));
    keys[i] = signature(bank, z).prefix(prefix_bits);
  });

  StratumTable table;
  table.prefix_bits = prefix_bits;
  table.row_ids.reserve(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    table.row_ids.push_back(data.id(r));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.buckets[keys[i]].push_back(rows[i]);
  }
  return table;
}

nlohmann::json to_json(const StratumTable & table)
{
  nlohmann::json buckets = nlohmann::json::object();
  for (const auto & [key, rows] : table.buckets) {
    auto ids = nlohmann::json::array();
    for (std::size_t r : rows) {
      ids.push_back(table.row_ids[r]);
    }
    buckets[key] = std::move(ids);
  }
  return {{"prefix_bits", table.prefix_bits}, {"buckets", std::move(buckets)}};
}

}  // namespace sage
