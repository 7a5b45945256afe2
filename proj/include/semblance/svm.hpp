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
#include <limits>
#include <vector>

#include "semblance/comparators.hpp"
#include "semblance/psd.hpp"
#include "semblance/types.hpp"

namespace semblance {

/**
 * Soft-margin binary SVM trained on a precomputed kernel matrix. The
 * solver never sees raw features; prediction needs kernel rows between new
 * points and the training objects.
 */
struct SvmModel {
  Eigen::VectorXd alpha;  // dual coefficients, 0 <= alpha_i <= C
  double bias = 0.0;
  Eigen::VectorXi labels;  // -1 / +1
  std::vector<Eigen::Index> support_indices;
  double C = 1.0;

  KernelId kernel = KernelId::semblance;
  KernelParams params;
  std::vector<double> feature_weights;

  int updates = 0;
  bool truncated = false;          // hit the update cap before reaching tol
  double kkt_violation = 0.0;      // optimality gap at termination
  double diagonal_shift = 0.0;     // regularization applied to an indefinite input
  std::vector<double> objective_trace;  // dual objective after each pair update
};

namespace detail {

inline void check_binary_labels(const Eigen::VectorXi& labels) {
  bool has_pos = false, has_neg = false;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 1) has_pos = true;
    else if (labels(i) == -1) has_neg = true;
    else throw DataError("svm: labels must be -1 or +1 (saw " + std::to_string(labels(i)) +
                         " at row " + std::to_string(i + 1) + ")");
  }
  if (!has_pos || !has_neg) throw DataError("svm: training labels must contain both classes");
}

}  // namespace detail

/**
 * Two-coordinate dual ascent (SMO) with maximal-violating-pair selection.
 * Terminates when the KKT optimality gap drops to `tol` or after
 * `max_updates` pair updates (then `truncated` is set). The dual objective
 * is recorded after every update and is nondecreasing.
 *
 * The kernel matrix must be PSD within tolerance. An indefinite input
 * (possible for non-Mercer comparators) is rejected unless
 * `shift_if_indefinite` is set, in which case |lambda_min| + tolerance is
 * added to the diagonal and recorded on the model.
 */
inline SvmModel svm_train(const GramMatrix& gram, const Eigen::VectorXi& labels, double C = 1.0,
                          double tol = 1e-3, int max_updates = 10000,
                          bool shift_if_indefinite = false) {
  const Eigen::Index n = gram.entries.rows();
  if (gram.entries.cols() != n || n < 2) throw DataError("svm_train: kernel matrix must be square, n >= 2");
  if (labels.size() != n) throw DataError("svm_train: label count does not match kernel size");
  detail::check_binary_labels(labels);
  if (!(C > 0.0)) throw ConfigError("svm_train: C must be > 0");
  if (!(tol > 0.0)) throw ConfigError("svm_train: tol must be > 0");

  Eigen::MatrixXd kernel_matrix = gram.entries;
  double shift = 0.0;
  const PsdReport psd = check_psd(kernel_matrix);
  if (!psd.is_psd) {
    if (!shift_if_indefinite) {
      throw NumericError("svm_train: kernel matrix is not PSD (min eigenvalue " +
                         std::to_string(psd.min_eigenvalue) +
                         "); rerun with the diagonal-shift option to regularize");
    }
    shift = std::abs(psd.min_eigenvalue) + psd.tolerance;
    kernel_matrix.diagonal().array() += shift;
  }

  SvmModel model;
  model.alpha = Eigen::VectorXd::Zero(n);
  model.labels = labels;
  model.C = C;
  model.kernel = gram.kernel_id;
  model.params = gram.params;
  model.feature_weights = gram.weights;
  model.diagonal_shift = shift;

  // Gradient of the (minimization-form) dual; F_i = -y_i * grad_i are the
  // candidate bias values whose spread is the optimality gap.
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  double objective = 0.0;
  double gap = std::numeric_limits<double>::infinity();

  const auto in_up_set = [&](Eigen::Index t) {
    return (labels(t) == 1 && model.alpha(t) < C) || (labels(t) == -1 && model.alpha(t) > 0.0);
  };
  const auto in_low_set = [&](Eigen::Index t) {
    return (labels(t) == 1 && model.alpha(t) > 0.0) || (labels(t) == -1 && model.alpha(t) < C);
  };

  while (model.updates < max_updates) {
    Eigen::Index i = -1, j = -1;
    double f_max = -std::numeric_limits<double>::infinity();
    double f_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double f = -static_cast<double>(labels(t)) * grad(t);
      if (in_up_set(t) && f > f_max) {
        f_max = f;
        i = t;
      }
      if (in_low_set(t) && f < f_min) {
        f_min = f;
        j = t;
      }
    }
    if (i < 0 || j < 0) {
      gap = 0.0;
      break;
    }
    gap = f_max - f_min;
    if (gap <= tol) break;

    const double yi = labels(i);
    const double yj = labels(j);
    const double s = yi * yj;
    double eta = kernel_matrix(i, i) + kernel_matrix(j, j) - 2.0 * kernel_matrix(i, j);
    if (eta <= 1e-12) eta = 1e-12;

    double low, high;
    if (s < 0.0) {
      low = std::max(0.0, model.alpha(j) - model.alpha(i));
      high = std::min(C, C + model.alpha(j) - model.alpha(i));
    } else {
      low = std::max(0.0, model.alpha(i) + model.alpha(j) - C);
      high = std::min(C, model.alpha(i) + model.alpha(j));
    }

    const double alpha_j_old = model.alpha(j);
    const double alpha_i_old = model.alpha(i);
    double alpha_j_new = std::clamp(alpha_j_old - yj * gap / eta, low, high);
    // snap to a box face only when the face is feasible for this pair
    if (low == 0.0 && alpha_j_new < 1e-12 * C) alpha_j_new = 0.0;
    if (high == C && alpha_j_new > C - 1e-12 * C) alpha_j_new = C;
    const double delta_j = alpha_j_new - alpha_j_old;
    if (delta_j == 0.0) break;  // no feasible progress on the worst pair
    const double delta_i = -s * delta_j;
    model.alpha(j) = alpha_j_new;
    model.alpha(i) = alpha_i_old + delta_i;
    // clear cancellation dust so a coordinate parked on a box face does not
    // linger in the working sets as an unmovable violator
    if (model.alpha(i) < 1e-12 * C) model.alpha(i) = 0.0;
    else if (model.alpha(i) > C - 1e-12 * C) model.alpha(i) = C;

    objective += -(grad(i) * delta_i + grad(j) * delta_j) -
                 0.5 * (kernel_matrix(i, i) * delta_i * delta_i +
                        2.0 * s * kernel_matrix(i, j) * delta_i * delta_j +
                        kernel_matrix(j, j) * delta_j * delta_j);
    model.objective_trace.push_back(objective);

    for (Eigen::Index t = 0; t < n; ++t) {
      grad(t) += static_cast<double>(labels(t)) *
                 (kernel_matrix(t, i) * yi * delta_i + kernel_matrix(t, j) * yj * delta_j);
    }
    ++model.updates;
  }
  model.truncated = model.updates >= max_updates && gap > tol;
  model.kkt_violation = std::max(gap, 0.0);

  // Bias from the free support vectors when there are any; otherwise the
  // midpoint of the admissible interval.
  double f_up = -std::numeric_limits<double>::infinity();
  double f_low = std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double f = -static_cast<double>(labels(t)) * grad(t);
    if (model.alpha(t) > 0.0 && model.alpha(t) < C) {
      free_sum += f;
      ++free_count;
    }
    if (in_up_set(t)) f_up = std::max(f_up, f);
    if (in_low_set(t)) f_low = std::min(f_low, f);
  }
  model.bias = free_count > 0 ? free_sum / free_count : 0.5 * (f_up + f_low);

  for (Eigen::Index t = 0; t < n; ++t) {
    if (model.alpha(t) > 0.0) model.support_indices.push_back(t);
  }
  return model;
}

struct SvmPrediction {
  Eigen::VectorXd scores;
  Eigen::VectorXi classes;  // sign(score); an exact zero maps to +1
};

/// Decision values from kernel rows (one row per point, columns = training
/// objects): score = sum_i alpha_i y_i K(x, x_i) + bias.
inline SvmPrediction svm_predict(const SvmModel& model, const Eigen::MatrixXd& kernel_rows) {
  if (kernel_rows.cols() != model.alpha.size()) {
    throw DataError("svm_predict: kernel rows have " + std::to_string(kernel_rows.cols()) +
                    " columns, expected " + std::to_string(model.alpha.size()));
  }
  SvmPrediction out;
  out.scores.resize(kernel_rows.rows());
  out.classes.resize(kernel_rows.rows());
  for (Eigen::Index q = 0; q < kernel_rows.rows(); ++q) {
    double score = model.bias;
    for (const Eigen::Index i : model.support_indices) {
      score += model.alpha(i) * static_cast<double>(model.labels(i)) * kernel_rows(q, i);
    }
    out.scores(q) = score;
    out.classes(q) = score < 0.0 ? -1 : 1;
  }
  return out;
}

/// Per-fold and mean held-out accuracy of a stratified k-fold run.
struct CvReport {
  int folds = 0;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  std::uint64_t seed = 0;
};

/**
 * Stratified k-fold cross-validation of a precomputed-kernel SVM. Folds
 * are dealt per class from a seeded shuffle, so the split is deterministic
 * and identical across metrics for a given seed. For Semblance the
 * per-fold kernel (and its empirical distributions) is fit on that fold's
 * training portion only; held-out rows enter through cross-kernel rows.
 */
inline CvReport cross_validate(const DataMatrix& data, const Eigen::VectorXi& labels,
                               const MetricId& metric, int folds, std::uint64_t seed,
                               double C = 1.0, double tol = 1e-3,
                               const std::vector<double>& feature_weights = {}) {
  const Eigen::Index n = data.rows();
  if (labels.size() != n) throw DataError("cross_validate: label count does not match data");
  detail::check_binary_labels(labels);
  if (folds < 2) throw ConfigError("cross_validate: folds must be >= 2");
  if (folds > static_cast<int>(n)) throw ConfigError("cross_validate: more folds than objects");

  // Stratified assignment: shuffle each class, deal round-robin.
  std::vector<int> fold_of(static_cast<std::size_t>(n), -1);
  Rng rng(seed);
  for (const int cls : {1, -1}) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels(i) == cls) members.push_back(i);
    }
    shuffle(members, rng);
    for (std::size_t t = 0; t < members.size(); ++t) {
      fold_of[static_cast<std::size_t>(members[t])] = static_cast<int>(t % static_cast<std::size_t>(folds));
    }
  }

  CvReport report;
  report.folds = folds;
  report.seed = seed;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train_idx, test_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test_idx : train_idx).push_back(i);
    }
    if (test_idx.empty()) {
      throw ConfigError("cross_validate: fold " + std::to_string(f + 1) +
                        " is empty; reduce the fold count");
    }
    DataMatrix train;
    train.values.resize(static_cast<Eigen::Index>(train_idx.size()), data.cols());
    Eigen::VectorXi train_labels(static_cast<Eigen::Index>(train_idx.size()));
    for (std::size_t t = 0; t < train_idx.size(); ++t) {
      train.values.row(static_cast<Eigen::Index>(t)) = data.values.row(train_idx[t]);
      train_labels(static_cast<Eigen::Index>(t)) = labels(train_idx[t]);
    }
    const bool has_pos = (train_labels.array() == 1).any();
    const bool has_neg = (train_labels.array() == -1).any();
    if (!has_pos || !has_neg) {
      throw ConfigError("cross_validate: fold " + std::to_string(f + 1) +
                        " leaves single-class training data; reduce the fold count");
    }

    Eigen::MatrixXd test(static_cast<Eigen::Index>(test_idx.size()), data.cols());
    Eigen::VectorXi test_labels(static_cast<Eigen::Index>(test_idx.size()));
    for (std::size_t t = 0; t < test_idx.size(); ++t) {
      test.row(static_cast<Eigen::Index>(t)) = data.values.row(test_idx[t]);
      test_labels(static_cast<Eigen::Index>(t)) = labels(test_idx[t]);
    }

    const GramMatrix gram = proximity_matrix(train, metric.tag, metric.params, feature_weights);
    const SvmModel model = svm_train(gram, train_labels, C, tol);
    const Eigen::MatrixXd rows =
        proximity_cross(train, test, metric.tag, gram.params, feature_weights);
    const SvmPrediction prediction = svm_predict(model, rows);

    int correct = 0;
    for (Eigen::Index t = 0; t < test_labels.size(); ++t) {
      if (prediction.classes(t) == test_labels(t)) ++correct;
    }
    report.fold_accuracy.push_back(static_cast<double>(correct) /
                                   static_cast<double>(test_labels.size()));
  }
  double sum = 0.0;
  for (double a : report.fold_accuracy) sum += a;
  report.mean_accuracy = sum / static_cast<double>(folds);
  return report;
}

inline std::vector<CvReport> cross_validate(const DataMatrix& data, const Eigen::VectorXi& labels,
                                            const std::vector<MetricId>& metrics, int folds,
                                            std::uint64_t seed, double C = 1.0, double tol = 1e-3) {
  std::vector<CvReport> reports;
  reports.reserve(metrics.size());
  for (const MetricId& metric : metrics) {
    reports.push_back(cross_validate(data, labels, metric, folds, seed, C, tol));
  }
  return reports;
}

}  // namespace semblance
