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

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "semblance/common.hpp"

namespace semblance {

/**
 * Dense observation matrix: n objects (rows) by G features (columns).
 * All entries must be finite; ingestion and the generators enforce this.
 * Name vectors are either empty or exactly n / G long.
 */
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> feature_names;
  std::vector<std::string> object_names;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Throws DataError naming the first non-finite cell, if any.
inline void ensure_finite(const Eigen::MatrixXd& m, const std::string& context) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        throw DataError(context + ": non-finite value at row " + std::to_string(i + 1) +
                        ", column " + std::to_string(j + 1));
      }
    }
  }
}

enum class KernelId {
  semblance,
  euclidean_distance,
  pearson,
  spearman,
  gaussian,
  laplacian,
  linear,
  polynomial,
};

inline std::string to_string(KernelId id) {
  switch (id) {
    case KernelId::semblance: return "semblance";
    case KernelId::euclidean_distance: return "euclidean";
    case KernelId::pearson: return "pearson";
    case KernelId::spearman: return "spearman";
    case KernelId::gaussian: return "gaussian";
    case KernelId::laplacian: return "laplacian";
    case KernelId::linear: return "linear";
    case KernelId::polynomial: return "polynomial";
  }
  return "unknown";
}

inline KernelId kernel_id_from_string(const std::string& name) {
  if (name == "semblance") return KernelId::semblance;
  if (name == "euclidean" || name == "euclidean_distance") return KernelId::euclidean_distance;
  if (name == "pearson") return KernelId::pearson;
  if (name == "spearman") return KernelId::spearman;
  if (name == "gaussian" || name == "rbf") return KernelId::gaussian;
  if (name == "laplacian") return KernelId::laplacian;
  if (name == "linear") return KernelId::linear;
  if (name == "polynomial" || name == "poly") return KernelId::polynomial;
  throw ConfigError("unknown kernel/metric name: " + name);
}

/**
 * Kernel hyperparameters. `sigma` applies to gaussian/laplacian; when it is
 * NaN the median heuristic resolves it at compute time and the resolved
 * value is recorded on the output matrix. degree/scale/offset apply to the
 * polynomial kernel.
 */
struct KernelParams {
  double sigma = std::numeric_limits<double>::quiet_NaN();
  int degree = 2;
  double scale = 1.0;
  double offset = 1.0;
};

/// Metric selector: which measure plus its parameters.
struct MetricId {
  KernelId tag = KernelId::euclidean_distance;
  KernelParams params;
};

/**
 * Symmetric n-by-n proximity matrix with provenance. For similarity
 * kernels larger means closer; for euclidean_distance the entries are
 * distances (diagonal exactly zero).
 */
struct GramMatrix {
  Eigen::MatrixXd entries;
  KernelId kernel_id = KernelId::semblance;
  KernelParams params;
  std::vector<double> weights;  // empty = unweighted
  std::vector<std::string> object_names;

  Eigen::Index size() const { return entries.rows(); }
};

}  // namespace semblance
