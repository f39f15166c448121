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

#ifndef SAGE__FLOOR_SAMPLER_HPP_
#define SAGE__FLOOR_SAMPLER_HPP_

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sage/simhash.hpp"

namespace sage
{

/// Per-bucket sample quotas. Every nonempty bucket gets at least
/// min(floor, pop) and at most pop; when the floors alone exceed the budget
/// the plan keeps the floors and overshoots.
struct AllocationPlan
{
  std::size_t budget = 0;
  std::size_t floor = 0;
  std::map<std::string, std::size_t> quotas;

  std::size_t total() const;
  bool overshoot() const { return total() > budget; }
};

/// Floors first, then the remaining budget split over leftover capacity
/// (pop - floor share) by largest-remainder apportionment. Ties go to the
/// larger remainder, then to the lexicographically smaller key. Integer
/// arithmetic throughout, so the result is exact.
AllocationPlan allocate(const StratumTable & table, std::size_t budget, std::size_t floor);

/// Uniform draw without replacement inside each bucket. Each bucket has its
/// own generator seeded from seed ^ fnv1a(key), so the result does not depend
/// on iteration order. Rows come back sorted by id.
std::vector<std::size_t> draw_rows(
  const AllocationPlan & plan, const StratumTable & table, std::uint64_t seed);

/// Same as draw_rows, reported as ids.
std::vector<std::string> draw(
  const AllocationPlan & plan, const StratumTable & table, std::uint64_t seed);

nlohmann::json to_json(const AllocationPlan & plan, const StratumTable & table);

}  // namespace sage

#endif  // SAGE__FLOOR_SAMPLER_HPP_
