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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>

#include "sage/error.hpp"
#include "sage/floor_sampler.hpp"

namespace sage
{
namespace
{

/// Buckets with the given populations; rows are numbered consecutively.
StratumTable table_of(const std::map<std::string, std::size_t> & pops)
{
  StratumTable t;
  t.prefix_bits = 1;
  for (const auto & [key, pop] : pops) {
    auto & rows = t.buckets[key];
    for (std::size_t i = 0; i < pop; ++i) {
      rows.push_back(t.row_ids.size());
      t.row_ids.push_back(key + std::to_string(i));
    }
  }
  return t;
}

std::map<std::string, std::size_t> count_by_bucket(
  const StratumTable & t, const std::vector<std::size_t> & rows)
{
  std::map<std::size_t, std::string> owner;
  for (const auto & [key, members] : t.buckets) {
    for (auto r : members) {
      owner[r] = key;
    }
  }
  std::map<std::string, std::size_t> counts;
  for (auto r : rows) {
    ++counts[owner.at(r)];
  }
  return counts;
}

}  // namespace

TEST_CASE("floors then largest remainder")
{
  // floors 2+2+2 leave 94 over capacities 898/88/8 (sum 994):
  // 84.924, 8.322, 0.757 -> 84, 8, 0 plus one seat each to A and C.
  const auto plan = allocate(table_of({{"A", 900}, {"B", 90}, {"C", 10}}), 100, 2);
  CHECK(plan.quotas == std::map<std::string, std::size_t>{{"A", 87}, {"B", 10}, {"C", 3}});
  CHECK(plan.total() == 100);
  CHECK_FALSE(plan.overshoot());
}

TEST_CASE("allocation edge cases")
{
  CHECK(allocate(table_of({{"A", 50}}), 10, 0).quotas.at("A") == 10);
  const auto capped = allocate(table_of({{"A", 1}, {"B", 1}}), 10, 2);
  CHECK(capped.quotas == std::map<std::string, std::size_t>{{"A", 1}, {"B", 1}});
  CHECK(allocate(StratumTable{}, 10, 2).quotas.empty());

  const auto over = allocate(table_of({{"A", 5}, {"B", 5}, {"C", 5}}), 4, 2);
  CHECK(over.total() == 6);
  CHECK(over.overshoot());
  CHECK_THROWS_AS(allocate(table_of({{"A", 5}}), 0, 0), Error);
}

TEST_CASE("draw honours the plan exactly")
{
  const auto t = table_of({{"A", 900}, {"B", 90}, {"C", 10}});
  AllocationPlan plan;
  plan.budget = 100;
  plan.floor = 2;
  plan.quotas = {{"A", 89}, {"B", 9}, {"C", 2}};
  const auto rows = draw_rows(plan, t, 77);
  CHECK(rows.size() == 100);
  CHECK(std::set<std::size_t>(rows.begin(), rows.end()).size() == 100);
  CHECK(count_by_bucket(t, rows) == plan.quotas);
  CHECK(draw_rows(plan, t, 77) == rows);
  CHECK(draw_rows(plan, t, 78) != rows);

  plan.quotas = {{"C", 10}};
  const auto all = draw(plan, t, 1);
  CHECK(all.size() == 10);
  for (const auto & id : all) {
    CHECK(id[0] == 'C');
  }
}

TEST_CASE("draw rejects a plan that does not fit the table")
{
  const auto t = table_of({{"A", 3}});
  AllocationPlan plan;
  plan.quotas = {{"A", 4}};
  CHECK_THROWS_AS(draw_rows(plan, t, 1), Error);
  plan.quotas = {{"Z", 1}};
  CHECK_THROWS_AS(draw_rows(plan, t, 1), Error);
}

TEST_CASE("draw of one bucket does not depend on the others")
{
  const auto a = table_of({{"A", 40}, {"B", 40}});
  const auto b = table_of({{"A", 40}, {"C", 7}});
  AllocationPlan pa;
  pa.quotas = {{"A", 10}, {"B", 5}};
  AllocationPlan pb;
  pb.quotas = {{"A", 10}, {"C", 3}};
  auto ids = [](const StratumTable & t, const AllocationPlan & p) {
    std::vector<std::string> out;
    for (const auto & id : draw(p, t, 5)) {
      if (id[0] == 'A') {
        out.push_back(id);
      }
    }
    return out;
  };
  CHECK(ids(a, pa) == ids(b, pb));
}

TEST_CASE("proportional allocation without floors")
{
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> nb(1, 40);
    std::uniform_int_distribution<std::size_t> pop(1, 5000);
    std::map<std::string, std::size_t> pops;
    const std::size_t buckets = nb(rng);
    std::size_t total = 0;
    for (std::size_t i = 0; i < buckets; ++i) {
      const auto p = pop(rng);
      pops["k" + std::to_string(i)] = p;
      total += p;
    }
    const std::size_t budget = std::uniform_int_distribution<std::size_t>(1, total)(rng);
    const auto plan = allocate(table_of(pops), budget, 0);
    CHECK(plan.total() == budget);
    for (const auto & [key, p] : pops) {
      const double ideal = static_cast<double>(budget) * p / static_cast<double>(total);
      CHECK(std::abs(static_cast<double>(plan.quotas.at(key)) - ideal) < 1.0);
    }
  }
}

TEST_CASE("raising the floor never lowers a quota below the floor")
{
  const std::map<std::string, std::size_t> pops{
    {"a", 1000}, {"b", 300}, {"c", 12}, {"d", 3}, {"e", 1}};
  const auto t = table_of(pops);
  for (std::size_t f = 0; f <= 10; ++f) {
    const auto plan = allocate(t, 200, f);
    for (const auto & [key, p] : pops) {
      CHECK(plan.quotas.at(key) >= std::min(f, p));
      CHECK(plan.quotas.at(key) <= p);
    }
    if (f > 0) {
      const auto prev = allocate(t, 200, f - 1);
      for (const auto & key : {"c", "d", "e"}) {
        CHECK(plan.quotas.at(key) >= prev.quotas.at(key));
      }
    }
  }
}

}  // namespace sage
