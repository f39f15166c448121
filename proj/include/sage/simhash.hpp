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

#ifndef SAGE__SIMHASH_HPP_
#define SAGE__SIMHASH_HPP_

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sage/core_data.hpp"

namespace sage
{

constexpr std::size_t kMaxSignatureBits = 256;

/// h random hyperplanes through the origin, one standard-normal row each.
/// Rebuilding from (dim, bits, seed) reproduces the planes bit for bit.
class ProjectionBank
{
public:
  static ProjectionBank build(std::size_t dim, std::size_t bits, std::uint64_t seed);

  std::size_t dim() const { return static_cast<std::size_t>(planes_.cols()); }
  std::size_t bits() const { return static_cast<std::size_t>(planes_.rows()); }
  std::uint64_t seed() const { return seed_; }
  const Matrix & planes() const { return planes_; }

private:
  ProjectionBank(Matrix planes, std::uint64_t seed) : planes_(std::move(planes)), seed_(seed) {}

  Matrix planes_;
  std::uint64_t seed_;
};

/// Fixed-width bit string of at most kMaxSignatureBits bits.
class Signature
{
public:
  explicit Signature(std::size_t bits);

  std::size_t size() const { return bits_; }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1ULL; }
  void set(std::size_t i) { words_[i / 64] |= 1ULL << (i % 64); }

  /// '0'/'1' characters of the first `bits` positions.
  std::string prefix(std::size_t bits) const;
  std::string to_string() const { return prefix(bits_); }

  std::size_t hamming(const Signature & other) const;

  bool operator==(const Signature &) const = default;

private:
  std::array<std::uint64_t, kMaxSignatureBits / 64> words_{};
  std::size_t bits_;
};

/// bit i = [planes_i . x >= 0]; a zero projection hashes to 1.
Signature signature(const ProjectionBank & bank, std::span<const double> x);
Signature signature(const ProjectionBank & bank, const Eigen::Ref<const Vector> & x);

/// Bucket key -> member rows, keyed by the b-bit signature prefix. Buckets are
/// disjoint and cover exactly the stratified subset.
struct StratumTable
{
  std::size_t prefix_bits = 0;
  std::map<std::string, std::vector<std::size_t>> buckets;
  /// Ids of every dataset row, so bucket members can be reported by id.
  std::vector<std::string> row_ids;

  std::size_t population(const std::string & key) const;
  std::size_t total() const;
  std::size_t nonempty() const { return buckets.size(); }
};

/// Hashes each selected row once (after standardizing) and groups rows by
/// signature prefix. Work is O(n h d); hashing may use several threads but
/// bucket member lists are always in row order.
StratumTable stratify(const ProjectionBank & bank, const Dataset & data,
  const Standardizer & standardizer, const LabelFilter & subset, std::size_t prefix_bits,
  int threads = 1);

/// {"prefix_bits": b, "buckets": {"0101...": [ids]}}
nlohmann::json to_json(const StratumTable & table);

}  // namespace sage

#endif  // SAGE__SIMHASH_HPP_
