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

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "semblance/types.hpp"

namespace semblance {

struct SymmetricEigen {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, matching order
};

/// min_eigenvalue >= -tolerance <=> is_psd.
struct PsdReport {
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
  bool is_psd = false;
  Eigen::Index n = 0;
};

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& m, const std::string& who) {
  if (m.rows() != m.cols()) throw DataError(who + ": matrix is not square");
  ensure_finite(m, who);
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1.0)) {
    throw DataError(who + ": matrix is not symmetric (max |A - A^T| = " + std::to_string(asym) + ")");
  }
}

}  // namespace detail

/// Full eigensolution of a symmetric matrix, eigenvalues sorted descending.
inline SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& matrix) {
  detail::require_symmetric(matrix, "symmetric_eigen");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric_eigen: eigensolver failed to converge");
  }
  const Eigen::Index n = matrix.rows();
  SymmetricEigen out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

/// Tolerance scaled by dimension and magnitude, so that the verdict stays
/// meaningful from toy matrices up to n in the thousands.
inline double default_psd_tolerance(const Eigen::MatrixXd& m) {
  const double scale = m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
  return 1e-8 * static_cast<double>(m.rows()) * scale;
}

/**
 * Certifies nonnegative definiteness by eigenvalue bound. An eigenvalue
 * margin is reported rather than a Cholesky pass/fail because kernel
 * matrices with eigenvalues at numerical zero are routine here.
 */
inline PsdReport check_psd(const Eigen::MatrixXd& matrix,
                           double tolerance = std::numeric_limits<double>::quiet_NaN()) {
  if (!std::isfinite(tolerance)) tolerance = default_psd_tolerance(matrix);
  const SymmetricEigen eig = symmetric_eigen(matrix);
  PsdReport report;
  report.n = matrix.rows();
  report.tolerance = tolerance;
  report.min_eigenvalue = eig.eigenvalues(eig.eigenvalues.size() - 1);
  report.is_psd = report.min_eigenvalue >= -tolerance;
  return report;
}

inline PsdReport check_psd(const GramMatrix& gram,
                           double tolerance = std::numeric_limits<double>::quiet_NaN()) {
  return check_psd(gram.entries, tolerance);
}

/**
 * Feature-space centering: K~ = K - JK - KJ + JKJ with J = ones/n,
 * evaluated entrywise as K_ij - rowmean_i - rowmean_j + grandmean, which
 * keeps the output exactly symmetric. Row and column sums of the result
 * are zero up to roundoff; a PSD input stays PSD.
 */
inline Eigen::MatrixXd center_kernel(const Eigen::MatrixXd& gram) {
  detail::require_symmetric(gram, "center_kernel");
  const Eigen::Index n = gram.rows();
  const Eigen::VectorXd row_means = gram.rowwise().mean();
  const double grand_mean = row_means.mean();
  Eigen::MatrixXd centered(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double value = gram(i, j) - row_means(i) - row_means(j) + grand_mean;
      centered(i, j) = value;
      centered(j, i) = value;
    }
  }
  return centered;
}

inline Eigen::MatrixXd center_kernel(const GramMatrix& gram) { return center_kernel(gram.entries); }

}  // namespace semblance
