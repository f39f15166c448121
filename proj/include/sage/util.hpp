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

#ifndef SAGE__UTIL_HPP_
#define SAGE__UTIL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sage
{

/// 64-bit FNV-1a. Used wherever a hash must be stable across platforms and
/// runs (per-bucket seeds, config digests); std::hash gives no such promise.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

/// Shortest decimal rendering that parses back to the identical double.
std::string format_real(double value);

/// Strict parse of a finite or non-finite real; rejects trailing junk.
bool parse_real(std::string_view text, double & out);

std::string read_file(const std::filesystem::path & path);
void write_file(const std::filesystem::path & path, std::string_view content);

/// Type-7 (linear interpolation) empirical quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

double median(std::vector<double> values);

/// Median absolute deviation from the median; no consistency constant.
double median_abs_deviation(std::span<const double> values);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; callers write into preallocated slots so results do
/// not depend on the schedule.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)> & body);

}  // namespace sage

#endif  // SAGE__UTIL_HPP_
