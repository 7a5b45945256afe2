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
#include <numeric>
#include <string>
#include <vector>

#include "semblance/kernel.hpp"
#include "semblance/types.hpp"

namespace semblance {
namespace detail {

/// Average ranks (1-based, ties share the mean of their positions) of the
/// values within one object row. This is the within-row ranking used by
/// Spearman; it is unrelated to the within-column ranking of Semblance.
inline Eigen::VectorXd fractional_row_ranks(const Eigen::VectorXd& row) {
  const Eigen::Index m = row.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&row](Eigen::Index a, Eigen::Index b) { return row[a] < row[b]; });
  Eigen::VectorXd ranks(m);
  Eigen::Index run_start = 0;
  while (run_start < m) {
    Eigen::Index run_end = run_start + 1;
    while (run_end < m && row[order[static_cast<std::size_t>(run_end)]] ==
                              row[order[static_cast<std::size_t>(run_start)]]) {
      ++run_end;
    }
    const double mean_rank = 0.5 * static_cast<double>(run_start + run_end + 1);
    for (Eigen::Index k = run_start; k < run_end; ++k) {
      ranks[order[static_cast<std::size_t>(k)]] = mean_rank;
    }
    run_start = run_end;
  }
  return ranks;
}

/// Centers a row and scales it to unit norm so that correlations become
/// plain dot products. Returns false when the row has zero variance.
inline bool center_normalize(Eigen::VectorXd& row) {
  row.array() -= row.mean();
  const double norm = row.norm();
  if (norm == 0.0 || !std::isfinite(norm)) return false;
  row /= norm;
  return true;
}

inline std::string row_label(const DataMatrix& data, Eigen::Index i) {
  std::string label = "row " + std::to_string(i + 1);
  if (!data.object_names.empty()) label += " ('" + data.object_names[static_cast<std::size_t>(i)] + "')";
  return label;
}

/// Rows transformed so that the metric's pairwise value is a fixed function
/// of the transformed rows. One code path serves both the square matrix and
/// the cross (query-vs-train) evaluation, so a query identical to a
/// training row reproduces that row's matrix column exactly.
inline Eigen::MatrixXd prepare_rows(const Eigen::MatrixXd& rows, KernelId tag,
                                    const DataMatrix* names_for_errors,
                                    const std::string& role) {
  Eigen::MatrixXd prepared = rows;
  if (tag != KernelId::pearson && tag != KernelId::spearman) return prepared;
  for (Eigen::Index i = 0; i < prepared.rows(); ++i) {
    Eigen::VectorXd row = prepared.row(i).transpose();
    if (tag == KernelId::spearman) row = fractional_row_ranks(row);
    if (!center_normalize(row)) {
      const std::string label = names_for_errors != nullptr
                                    ? row_label(*names_for_errors, i)
                                    : role + " row " + std::to_string(i + 1);
      throw DataError(to_string(tag) + ": " + label +
                      " has zero variance across features; correlation is undefined");
    }
    prepared.row(i) = row.transpose();
  }
  return prepared;
}

template <typename RowA, typename RowB>
double pair_value(KernelId tag, const KernelParams& params, const RowA& a, const RowB& b) {
  switch (tag) {
    case KernelId::euclidean_distance:
      return (a - b).norm();
    case KernelId::pearson:
    case KernelId::spearman:
      return std::clamp(a.dot(b), -1.0, 1.0);
    case KernelId::gaussian: {
      const double d2 = (a - b).squaredNorm();
      return std::exp(-d2 / (2.0 * params.sigma * params.sigma));
    }
    case KernelId::laplacian:
      return std::exp(-(a - b).norm() / params.sigma);
    case KernelId::linear:
      return a.dot(b);
    case KernelId::polynomial:
      return std::pow(params.scale * a.dot(b) + params.offset, params.degree);
    case KernelId::semblance:
      break;
  }
  throw ConfigError("pairwise_matrix does not handle the semblance kernel; use semblance_gram");
}

}  // namespace detail

/// Median of the n(n-1)/2 pairwise Euclidean distances between rows;
/// the usual bandwidth heuristic. Falls back to 1 when degenerate.
inline double median_pairwise_distance(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n > 0 ? n - 1 : 0) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      distances.push_back((rows.row(i) - rows.row(j)).norm());
    }
  }
  const double med = finite_median(std::move(distances));
  return (std::isfinite(med) && med > 0.0) ? med : 1.0;
}

/// Fills in defaulted hyperparameters (currently: the bandwidth via the
/// median heuristic) and validates the rest.
inline KernelParams resolve_params(const Eigen::MatrixXd& train_rows, KernelId tag,
                                   KernelParams params) {
  if (tag == KernelId::gaussian || tag == KernelId::laplacian) {
    if (!std::isfinite(params.sigma)) params.sigma = median_pairwise_distance(train_rows);
    if (!(params.sigma > 0.0)) throw ConfigError(to_string(tag) + ": bandwidth sigma must be > 0");
  }
  if (tag == KernelId::polynomial && params.degree < 1) {
    throw ConfigError("polynomial: degree must be >= 1");
  }
  return params;
}

/**
 * Pairwise similarity (or distance, for euclidean_distance) between the
 * object rows of `data` under a baseline metric. Symmetric by
 * construction; the gaussian/laplacian/correlation diagonals are exactly 1
 * and the euclidean diagonal exactly 0.
 */
inline GramMatrix pairwise_matrix(const DataMatrix& data, const MetricId& metric) {
  if (metric.tag == KernelId::semblance) {
    throw ConfigError("pairwise_matrix does not handle the semblance kernel; use semblance_gram");
  }
  const Eigen::Index n = data.rows();
  if (n < 1 || data.cols() < 1) throw DataError("pairwise_matrix: empty data");
  ensure_finite(data.values, "pairwise_matrix");

  GramMatrix out;
  out.kernel_id = metric.tag;
  out.params = resolve_params(data.values, metric.tag, metric.params);
  out.object_names = data.object_names;
  out.entries.resize(n, n);

  const Eigen::MatrixXd prepared = detail::prepare_rows(data.values, metric.tag, &data, "data");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = detail::pair_value(metric.tag, out.params, prepared.row(i), prepared.row(j));
      out.entries(i, j) = v;
      out.entries(j, i) = v;
    }
  }
  double diag = 1.0;
  if (metric.tag == KernelId::euclidean_distance) diag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (metric.tag == KernelId::linear || metric.tag == KernelId::polynomial) {
      out.entries(i, i) =
          detail::pair_value(metric.tag, out.params, prepared.row(i), prepared.row(i));
    } else {
      out.entries(i, i) = diag;
    }
  }
  return out;
}

/// Metric values between query rows and training rows, one query per output
/// row. `params` should carry the resolved hyperparameters of the training
/// matrix (a NaN bandwidth is re-resolved against the training rows).
inline Eigen::MatrixXd pairwise_cross(const DataMatrix& train, const Eigen::MatrixXd& queries,
                                      const MetricId& metric) {
  if (metric.tag == KernelId::semblance) {
    throw ConfigError("pairwise_cross does not handle the semblance kernel; use semblance_cross_gram");
  }
  if (queries.cols() != train.cols()) {
    throw DataError("pairwise_cross: query column count " + std::to_string(queries.cols()) +
                    " does not match training feature count " + std::to_string(train.cols()));
  }
  const KernelParams params = resolve_params(train.values, metric.tag, metric.params);
  if (queries.rows() == 0) return Eigen::MatrixXd(0, train.rows());
  ensure_finite(queries, "pairwise_cross queries");

  const Eigen::MatrixXd train_prepared = detail::prepare_rows(train.values, metric.tag, &train, "train");
  const Eigen::MatrixXd query_prepared = detail::prepare_rows(queries, metric.tag, nullptr, "query");
  Eigen::MatrixXd out(queries.rows(), train.rows());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (Eigen::Index j = 0; j < train.rows(); ++j) {
      out(q, j) = detail::pair_value(metric.tag, params, query_prepared.row(q), train_prepared.row(j));
    }
  }
  return out;
}

/// Single entry point over all measures, including Semblance.
inline GramMatrix proximity_matrix(const DataMatrix& data, KernelId id,
                                   const KernelParams& params = {},
                                   const std::vector<double>& weights = {}, unsigned threads = 0) {
  if (id == KernelId::semblance) return semblance_gram(data, weights, threads);
  return pairwise_matrix(data, MetricId{id, params});
}

inline Eigen::MatrixXd proximity_cross(const DataMatrix& train, const Eigen::MatrixXd& queries,
                                       KernelId id, const KernelParams& params = {},
                                       const std::vector<double>& weights = {},
                                       unsigned threads = 0) {
  if (id == KernelId::semblance) return semblance_cross_gram(train, queries, weights, threads);
  return pairwise_cross(train, queries, MetricId{id, params});
}

}  // namespace semblance
