/*
 * Copyright (c) 2026, the semblance-kit authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "semblance/common.hpp"

namespace semblance {

/**
 * Sorted copy of one feature column with O(log n) strictly-below /
 * strictly-above counts for any real threshold, observed or not.
 * Immutable after construction and safe to share across threads.
 *
 * Invariant: count_below(v) + count_above(v) + multiplicity(v) == size()
 * for every v.
 */
class FeatureIndex {
 public:
  FeatureIndex() = default;

  explicit FeatureIndex(std::vector<double> sorted) : sorted_(std::move(sorted)) {}

  std::int64_t size() const { return static_cast<std::int64_t>(sorted_.size()); }

  /// Number of stored values strictly less than x.
  std::int64_t count_below(double x) const {
    return std::lower_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  }

  /// Number of stored values strictly greater than x.
  std::int64_t count_above(double x) const {
    return sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), x);
  }

  /// Number of stored values equal to x.
  std::int64_t multiplicity(double x) const {
    const auto [lo, hi] = std::equal_range(sorted_.begin(), sorted_.end(), x);
    return hi - lo;
  }

  const std::vector<double>& sorted_values() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// Builds the index for one feature column. O(n log n). Non-finite entries
/// are rejected with the offending row (and feature, when labeled).
inline FeatureIndex build_feature_index(std::span<const double> column,
                                        const std::string& feature_label = {}) {
  if (column.empty()) throw DataError("feature column is empty");
  std::vector<double> sorted(column.begin(), column.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!std::isfinite(sorted[i])) {
      std::string where = feature_label.empty() ? "feature" : "feature '" + feature_label + "'";
      throw DataError(where + ": non-finite value at row " + std::to_string(i + 1));
    }
  }
  std::sort(sorted.begin(), sorted.end());
  return FeatureIndex(std::move(sorted));
}

/**
 * Strictly-below and strictly-above counts for every entry of a column,
 * in the column's original row order. This is the per-feature lookup
 * table used by the fast Gram assembly: because below-counts are
 * nondecreasing and above-counts nonincreasing in the value,
 *
 *   #{v < min(x, y)} == min(below[x], below[y])
 *   #{v > max(x, y)} == min(above[x], above[y])
 *
 * which turns each pair evaluation into two integer mins.
 */
struct ColumnCounts {
  std::vector<std::int32_t> below;
  std::vector<std::int32_t> above;
};

inline ColumnCounts column_rank_counts(std::span<const double> column) {
  const std::size_t n = column.size();
  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&column](std::int32_t a, std::int32_t b) { return column[a] < column[b]; });

  ColumnCounts counts;
  counts.below.resize(n);
  counts.above.resize(n);
  std::size_t run_start = 0;
  while (run_start < n) {
    std::size_t run_end = run_start + 1;
    const double v = column[order[run_start]];
    while (run_end < n && column[order[run_end]] == v) ++run_end;
    for (std::size_t k = run_start; k < run_end; ++k) {
      counts.below[order[k]] = static_cast<std::int32_t>(run_start);
      counts.above[order[k]] = static_cast<std::int32_t>(n - run_end);
    }
    run_start = run_end;
  }
  return counts;
}

}  // namespace semblance
