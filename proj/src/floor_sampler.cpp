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

#include "sage/floor_sampler.hpp"

#include <algorithm>
#include <random>

#include "sage/error.hpp"
#include "sage/util.hpp"

namespace sage
{

std::size_t AllocationPlan::total() const
{
  std::size_t n = 0;
  for (const auto & [key, q] : quotas) {
    n += q;
  }
  return n;
}

AllocationPlan allocate(const StratumTable & table, std::size_t budget, std::size_t floor)
{
  require(budget >= 1, ErrorKind::kInvalidArgument, "sampling budget must be >= 1");
  AllocationPlan plan;
  plan.budget = budget;
  plan.floor = floor;

  struct Share
  {
    const std::string * key;
    std::size_t capacity;
    unsigned __int128 remainder;  // numerator over the common denominator
  };
  std::vector<Share> shares;
  std::size_t base_total = 0;
  std::size_t capacity_total = 0;
  for (const auto & [key, rows] : table.buckets) {
    const std::size_t pop = rows.size();
    if (pop == 0) {
      continue;
    }
    const std::size_t base = std::min(floor, pop);
    plan.quotas[key] = base;
    base_total += base;
    capacity_total += pop - base;
    shares.push_back({&key, pop - base, 0});
  }

  const std::size_t rest = budget > base_total ? budget - base_total : 0;
  if (rest == 0 || capacity_total == 0) {
    return plan;
  }
  if (rest >= capacity_total) {
    for (const auto & s : shares) {
      plan.quotas[*s.key] += s.capacity;
    }
    return plan;
  }

  // exact quotient rest * capacity / capacity_total with integer remainder
  std::size_t assigned = 0;
  for (auto & s : shares) {
    const unsigned __int128 num = static_cast<unsigned __int128>(rest) * s.capacity;
    const auto whole = static_cast<std::size_t>(num / capacity_total);
    s.remainder = num % capacity_total;
    plan.quotas[*s.key] += whole;
    assigned += whole;
  }
  std::sort(shares.begin(), shares.end(), [](const Share & a, const Share & b) {
    if (a.remainder != b.remainder) {
      return a.remainder > b.remainder;
    }
    return *a.key < *b.key;
  });
  for (std::size_t i = 0; assigned < rest; ++i, ++assigned) {
    plan.quotas[*shares[i].key] += 1;
  }
  return plan;
}

std::vector<std::size_t> draw_rows(
  const AllocationPlan & plan, const StratumTable & table, std::uint64_t seed)
{
  std::vector<std::size_t> out;
  for (const auto & [key, quota] : plan.quotas) {
    const auto it = table.buckets.find(key);
    require(it != table.buckets.end(), ErrorKind::kProtocol,
      "allocation plan names bucket " + key + " which is not in the stratum table");
    const auto & members = it->second;
    require(quota <= members.size(), ErrorKind::kProtocol,
      "quota " + std::to_string(quota) + " exceeds population " + std::to_string(members.size()) +
        " of bucket " + key);
    std::vector<std::size_t> pool = members;
    std::mt19937_64 rng(seed ^ fnv1a64(key));
    // partial Fisher-Yates: the first `quota` slots become the sample
    for (std::size_t i = 0; i < quota; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota));
  }
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    return table.row_ids[a] < table.row_ids[b];
  });
  return out;
}

std::vector<std::string> draw(
  const AllocationPlan & plan, const StratumTable & table, std::uint64_t seed)
{
  std::vector<std::string> ids;
  for (std::size_t r : draw_rows(plan, table, seed)) {
    ids.push_back(table.row_ids[r]);
  }
  return ids;
}

nlohmann::json to_json(const AllocationPlan & plan, const StratumTable & table)
{
  nlohmann::json quotas = nlohmann::json::object();
  std::size_t floor_total = 0;
  for (const auto & [key, q] : plan.quotas) {
    const std::size_t pop = table.population(key);
    quotas[key] = {{"population", pop}, {"quota", q}};
    floor_total += std::min(plan.floor, pop);
  }
  return {
    {"budget", plan.budget},
    {"floor", plan.floor},
    {"floor_total", floor_total},
    {"realized_total", plan.total()},
    {"overshoot", plan.overshoot()},
    {"quotas", std::move(quotas)},
  };
}

}  // namespace sage
