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
#include <cstdint>
#include <span>
#include <vector>

#include "semblance/feature_index.hpp"
#include "semblance/types.hpp"

namespace semblance {

/**
 * Per-feature similarity of a value pair: the empirical probability that a
 * value redrawn from the column lands strictly outside [min(x,y), max(x,y)].
 * Rare agreement scores high; agreement on a common value scores low; a
 * constant column contributes 0 for every pair.
 *
 * Result is in [0, (n-1)/n] and symmetric in (x, y). For x == y it equals
 * 1 - multiplicity(x)/n. Arbitrary thresholds (values never observed in the
 * column) are handled by the count maps.
 */
inline double semblance_feature_similarity(const FeatureIndex& index, double x, double y) {
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  const std::int64_t outside = index.count_below(lo) + index.count_above(hi);
  return static_cast<double>(outside) / static_cast<double>(index.size());
}

namespace detail {

/// Shared finalization rule: every Gram entry is (an exact integer count,
/// or an exact weighted sum of counts) divided once by n * sum(weights).
/// Both the fast path and the naive oracle go through this, which is what
/// makes their outputs bit-for-bit identical.
inline double semblance_weight_sum(Eigen::Index n_features, const std::vector<double>& weights) {
  if (weights.empty()) return static_cast<double>(n_features);
  double sum = 0.0;
  for (double w : weights) sum += w;
  return sum;
}

inline void check_weights(const std::vector<double>& weights, Eigen::Index n_features) {
  if (weights.empty()) return;
  if (static_cast<Eigen::Index>(weights.size()) != n_features) {
    throw ConfigError("weight vector length " + std::to_string(weights.size()) +
                      " does not match feature count " + std::to_string(n_features));
  }
  double sum = 0.0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    if (!(weights[g] >= 0.0) || !std::isfinite(weights[g])) {
      throw ConfigError("feature weight " + std::to_string(g + 1) + " must be finite and >= 0");
    }
    sum += weights[g];
  }
  if (sum <= 0.0) throw ConfigError("feature weights must not all be zero");
}

/// Row boundaries splitting the packed upper triangle of an n x n matrix
/// into blocks of roughly equal pair count.
inline std::vector<std::size_t> balanced_row_blocks(std::size_t n, unsigned threads) {
  const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  std::vector<std::size_t> bounds{0};
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n + 1);
  double carried = 0.0;
  std::size_t row = 0;
  for (std::size_t b = 1; b < blocks; ++b) {
    const double target = total * static_cast<double>(b) / static_cast<double>(blocks);
    while (row < n && carried < target) {
      carried += static_cast<double>(n - row);
      ++row;
    }
    bounds.push_back(row);
  }
  bounds.push_back(n);
  return bounds;
}

}  // namespace detail

/**
 * Semblance Gram matrix over all object pairs: the (weighted) mean across
 * features of the strictly-outside probability. O(G n log n + G n^2).
 *
 * Counts are exact integers; each entry is divided exactly once, so the
 * output is deterministic, independent of iteration order and of
 * `threads` (workers own disjoint row blocks of the upper triangle).
 */
inline GramMatrix semblance_gram(const DataMatrix& data, const std::vector<double>& weights = {},
                                 unsigned threads = 0) {
  const Eigen::Index n = data.rows();
  const Eigen::Index n_features = data.cols();
  if (n < 1 || n_features < 1) throw DataError("semblance_gram: need at least 1 object and 1 feature");
  detail::check_weights(weights, n_features);

  // Per-feature strictly-below / strictly-above counts, built once and
  // shared read-only by all workers.
  std::vector<ColumnCounts> counts(static_cast<std::size_t>(n_features));
  parallel_chunks(static_cast<std::size_t>(n_features), threads, [&](std::size_t gb, std::size_t ge) {
    std::vector<double> column(static_cast<std::size_t>(n));
    for (std::size_t g = gb; g < ge; ++g) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = data.values(i, static_cast<Eigen::Index>(g));
        if (!std::isfinite(v)) {
          throw DataError("semblance_gram: non-finite value at row " + std::to_string(i + 1) +
                          ", column " + std::to_string(g + 1));
        }
        column[static_cast<std::size_t>(i)] = v;
      }
      counts[g] = column_rank_counts(column);
    }
  });

  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<std::size_t> row_offset(un + 1);
  for (std::size_t i = 0; i <= un; ++i) row_offset[i] = i * un - i * (i - 1) / 2;
  const std::size_t n_pairs = row_offset[un];

  const bool unweighted = weights.empty();
  std::vector<std::int64_t> acc_int(unweighted ? n_pairs : 0, 0);
  std::vector<double> acc_wtd(unweighted ? 0 : n_pairs, 0.0);

  const auto accumulate_rows = [&](std::size_t rb, std::size_t re) {
    for (std::size_t g = 0; g < static_cast<std::size_t>(n_features); ++g) {
      const std::int32_t* below = counts[g].below.data();
      const std::int32_t* above = counts[g].above.data();
      if (unweighted) {
        for (std::size_t i = rb; i < re; ++i) {
          std::int64_t* row = acc_int.data() + row_offset[i];
          const std::int32_t bi = below[i];
          const std::int32_t ai = above[i];
          for (std::size_t j = i; j < un; ++j) {
            row[j - i] += std::min(bi, below[j]) + std::min(ai, above[j]);
          }
        }
      } else {
        const double w = weights[g];
        for (std::size_t i = rb; i < re; ++i) {
          double* row = acc_wtd.data() + row_offset[i];
          const std::int32_t bi = below[i];
          const std::int32_t ai = above[i];
          for (std::size_t j = i; j < un; ++j) {
            row[j - i] += w * static_cast<double>(std::min(bi, below[j]) + std::min(ai, above[j]));
          }
        }
      }
    }
  };
  const auto bounds = detail::balanced_row_blocks(un, resolve_thread_count(threads));
  if (bounds.size() == 2) {
    accumulate_rows(bounds[0], bounds[1]);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      pool.emplace_back([&accumulate_rows, rb = bounds[b], re = bounds[b + 1]] {
        accumulate_rows(rb, re);
      });
    }
    for (auto& t : pool) t.join();
  }

  const double denom = static_cast<double>(n) * detail::semblance_weight_sum(n_features, weights);
  GramMatrix gram;
  gram.kernel_id = KernelId::semblance;
  gram.weights = weights;
  gram.object_names = data.object_names;
  gram.entries.resize(n, n);
  for (std::size_t i = 0; i < un; ++i) {
    for (std::size_t j = i; j < un; ++j) {
      const double numer = unweighted ? static_cast<double>(acc_int[row_offset[i] + (j - i)])
                                      : acc_wtd[row_offset[i] + (j - i)];
      const double value = numer / denom;
      gram.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      gram.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
    }
  }
  return gram;
}

/**
 * Reference oracle: evaluates the strictly-outside indicator sum directly
 * for every pair and feature, O(G n^3). Kept deliberately independent of
 * the rank/count path; on any input the two agree bit for bit.
 */
inline GramMatrix semblance_gram_naive(const DataMatrix& data,
                                       const std::vector<double>& weights = {}) {
  const Eigen::Index n = data.rows();
  const Eigen::Index n_features = data.cols();
  if (n < 1 || n_features < 1)
    throw DataError("semblance_gram_naive: need at least 1 object and 1 feature");
  detail::check_weights(weights, n_features);
  ensure_finite(data.values, "semblance_gram_naive");

  const bool unweighted = weights.empty();
  const double denom = static_cast<double>(n) * detail::semblance_weight_sum(n_features, weights);

  GramMatrix gram;
  gram.kernel_id = KernelId::semblance;
  gram.weights = weights;
  gram.object_names = data.object_names;
  gram.entries.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      std::int64_t total = 0;
      double total_wtd = 0.0;
      for (Eigen::Index g = 0; g < n_features; ++g) {
        const double lo = std::min(data.values(i, g), data.values(j, g));
        const double hi = std::max(data.values(i, g), data.values(j, g));
        std::int64_t outside = 0;
        for (Eigen::Index t = 0; t < n; ++t) {
          const double v = data.values(t, g);
          outside += (v < lo) + (v > hi);
        }
        if (unweighted) {
          total += outside;
        } else {
          total_wtd += weights[static_cast<std::size_t>(g)] * static_cast<double>(outside);
        }
      }
      const double value = (unweighted ? static_cast<double>(total) : total_wtd) / denom;
      gram.entries(i, j) = value;
      gram.entries(j, i) = value;
    }
  }
  return gram;
}

/**
 * Kernel rows between new objects and the training set, with counts taken
 * from the training empirical distribution only. Row i, column j holds the
 * (weighted) mean over features of the strictly-outside probability of
 * (query_i, train_j). Query values never observed in training are fine:
 * the strictly-below/above counts are evaluated by binary search.
 *
 * A query equal to a training row reproduces that row's Gram column
 * exactly.
 */
inline Eigen::MatrixXd semblance_cross_gram(const DataMatrix& train, const Eigen::MatrixXd& queries,
                                            const std::vector<double>& weights = {},
                                            unsigned threads = 0) {
  const Eigen::Index n = train.rows();
  const Eigen::Index n_features = train.cols();
  if (n < 1 || n_features < 1)
    throw DataError("semblance_cross_gram: need at least 1 training object and 1 feature");
  if (queries.cols() != n_features) {
    throw DataError("semblance_cross_gram: query column count " + std::to_string(queries.cols()) +
                    " does not match training feature count " + std::to_string(n_features));
  }
  detail::check_weights(weights, n_features);
  const Eigen::Index m = queries.rows();
  if (m == 0) return Eigen::MatrixXd(0, n);
  ensure_finite(queries, "semblance_cross_gram queries");

  struct TrainFeature {
    FeatureIndex index;
    ColumnCounts counts;
  };
  std::vector<TrainFeature> features(static_cast<std::size_t>(n_features));
  parallel_chunks(static_cast<std::size_t>(n_features), threads, [&](std::size_t gb, std::size_t ge) {
    std::vector<double> column(static_cast<std::size_t>(n));
    for (std::size_t g = gb; g < ge; ++g) {
      for (Eigen::Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = train.values(i, static_cast<Eigen::Index>(g));
      features[g].index = build_feature_index(column, std::to_string(g + 1));
      features[g].counts = column_rank_counts(column);
    }
  });

  const bool unweighted = weights.empty();
  const double denom = static_cast<double>(n) * detail::semblance_weight_sum(n_features, weights);
  Eigen::MatrixXd out(m, n);

  parallel_chunks(static_cast<std::size_t>(m), threads, [&](std::size_t qb, std::size_t qe) {
    std::vector<std::int64_t> acc_int(static_cast<std::size_t>(n));
    std::vector<double> acc_wtd(static_cast<std::size_t>(n));
    for (std::size_t q = qb; q < qe; ++q) {
      std::fill(acc_int.begin(), acc_int.end(), 0);
      std::fill(acc_wtd.begin(), acc_wtd.end(), 0.0);
      for (std::size_t g = 0; g < static_cast<std::size_t>(n_features); ++g) {
        const double value = queries(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(g));
        const std::int32_t bq = static_cast<std::int32_t>(features[g].index.count_below(value));
        const std::int32_t aq = static_cast<std::int32_t>(features[g].index.count_above(value));
        const std::int32_t* below = features[g].counts.below.data();
        const std::int32_t* above = features[g].counts.above.data();
        if (unweighted) {
          for (Eigen::Index j = 0; j < n; ++j) {
            acc_int[static_cast<std::size_t>(j)] += std::min(bq, below[j]) + std::min(aq, above[j]);
          }
        } else {
          const double w = weights[g];
          for (Eigen::Index j = 0; j < n; ++j) {
            acc_wtd[static_cast<std::size_t>(j)] +=
                w * static_cast<double>(std::min(bq, below[j]) + std::min(aq, above[j]));
          }
        }
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        const double numer = unweighted ? static_cast<double>(acc_int[static_cast<std::size_t>(j)])
                                        : acc_wtd[static_cast<std::size_t>(j)];
        out(static_cast<Eigen::Index>(q), j) = numer / denom;
      }
    }
  });
  return out;
}

}  // namespace semblance
