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
#include <vector>

#include "semblance/comparators.hpp"
#include "semblance/psd.hpp"
#include "semblance/types.hpp"

namespace semblance {

/**
 * Kernel PCA model: eigenpairs of the centered training Gram, with
 * projection coefficients alpha_k = v_k / sqrt(lambda_k) so that each
 * retained component has unit feature-space norm (lambda_k * |alpha_k|^2
 * == 1). Components whose eigenvalue falls at or below
 * floor_ratio * lambda_max are dropped and `components` reduced, rather
 * than dividing by a numerically zero eigenvalue.
 */
struct KpcaModel {
  DataMatrix training;
  KernelId kernel = KernelId::semblance;
  KernelParams params;
  std::vector<double> feature_weights;

  Eigen::VectorXd eigenvalues;      // retained, descending
  Eigen::MatrixXd alphas;           // n x components
  Eigen::MatrixXd training_scores;  // n x components
  Eigen::VectorXd gram_row_means;
  double gram_mean = 0.0;

  int requested_components = 0;
  int components = 0;
  bool components_reduced = false;
};

Eigen::MatrixXd kpca_project(const KpcaModel& model, const Eigen::MatrixXd& points);

inline KpcaModel kpca_fit(const DataMatrix& data, KernelId kernel, const KernelParams& params,
                          int components, const std::vector<double>& feature_weights = {},
                          double floor_ratio = 1e-10) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw DataError("kpca_fit: need at least 2 objects");
  if (components < 1 || components > static_cast<int>(n) - 1) {
    throw ConfigError("kpca_fit: component count must lie in [1, n-1]");
  }

  const GramMatrix gram = proximity_matrix(data, kernel, params, feature_weights);
  const PsdReport psd = check_psd(gram.entries);
  if (!psd.is_psd) {
    throw NumericError("kpca_fit: kernel matrix is not positive semidefinite (min eigenvalue " +
                       std::to_string(psd.min_eigenvalue) + ")");
  }

  const Eigen::MatrixXd centered = center_kernel(gram.entries);
  const SymmetricEigen eig = symmetric_eigen(centered);

  const double lambda_max = std::max(eig.eigenvalues(0), 0.0);
  const double lambda_floor = floor_ratio * lambda_max;
  int admissible = 0;
  while (admissible < static_cast<int>(n) && eig.eigenvalues(admissible) > lambda_floor) ++admissible;

  KpcaModel model;
  model.training = data;
  model.kernel = kernel;
  model.params = gram.params;  // hyperparameters as resolved on the training data
  model.feature_weights = feature_weights;
  model.requested_components = components;
  model.components = std::min(components, admissible);
  model.components_reduced = model.components < components;
  model.gram_row_means = gram.entries.rowwise().mean();
  model.gram_mean = model.gram_row_means.mean();

  model.eigenvalues = eig.eigenvalues.head(model.components);
  model.alphas.resize(n, model.components);
  for (int k = 0; k < model.components; ++k) {
    model.alphas.col(k) = eig.eigenvectors.col(k) / std::sqrt(model.eigenvalues(k));
  }
  model.training_scores = kpca_project(model, data.values);
  return model;
}

/**
 * Out-of-sample projection: kernel rows against the training set, centered
 * with the training means, then contracted with the alpha coefficients.
 * Feeding a training row back through this path reproduces its fit-time
 * score.
 */
inline Eigen::MatrixXd kpca_project(const KpcaModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != model.training.cols()) {
    throw DataError("kpca_project: point column count " + std::to_string(points.cols()) +
                    " does not match training feature count " + std::to_string(model.training.cols()));
  }
  const Eigen::Index m = points.rows();
  if (m == 0) return Eigen::MatrixXd(0, model.components);

  const Eigen::MatrixXd rows = proximity_cross(model.training, points, model.kernel, model.params,
                                               model.feature_weights);
  const Eigen::VectorXd query_means = rows.rowwise().mean();
  Eigen::MatrixXd scores(m, model.components);
  Eigen::RowVectorXd centered_row(model.training.rows());
  for (Eigen::Index q = 0; q < m; ++q) {
    for (Eigen::Index j = 0; j < model.training.rows(); ++j) {
      centered_row(j) = rows(q, j) - query_means(q) - model.gram_row_means(j) + model.gram_mean;
    }
    // row-at-a-time product: identical input rows land on identical scores
    scores.row(q) = centered_row * model.alphas;
  }
  return scores;
}

struct PreimageOptions {
  int neighbors = 10;
  bool uniform_weights = false;
};

/**
 * Approximate pre-image by distance-constrained neighbor averaging: squared
 * distances from the score vector to every training score, the nearest
 * `neighbors` training points (ties at the cutoff included), and a
 * convex combination of their input rows with weights exp(-d^2 / mean d^2).
 * Degenerate all-equal distances fall back to uniform weights. No iteration,
 * no kernel-specific fixed point; works for any kernel with a score space.
 */
inline Eigen::VectorXd preimage_reconstruct(const KpcaModel& model, const Eigen::VectorXd& scores,
                                            const PreimageOptions& options = {}) {
  const Eigen::Index n = model.training.rows();
  if (scores.size() != model.components) {
    throw ConfigError("preimage_reconstruct: score length " + std::to_string(scores.size()) +
                      " does not match retained component count " + std::to_string(model.components));
  }
  if (options.neighbors < 1) throw ConfigError("preimage_reconstruct: neighbors must be >= 1");
  const Eigen::Index k = std::min<Eigen::Index>(options.neighbors, n);

  Eigen::VectorXd sq_dist(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sq_dist(i) = (scores - model.training_scores.row(i).transpose()).squaredNorm();
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&sq_dist](Eigen::Index a, Eigen::Index b) { return sq_dist(a) < sq_dist(b); });
  Eigen::Index selected = k;
  while (selected < n && sq_dist(order[static_cast<std::size_t>(selected)]) ==
                             sq_dist(order[static_cast<std::size_t>(k - 1)])) {
    ++selected;
  }

  double mean_sq = 0.0;
  for (Eigen::Index s = 0; s < selected; ++s) mean_sq += sq_dist(order[static_cast<std::size_t>(s)]);
  mean_sq /= static_cast<double>(selected);

  Eigen::VectorXd weights(selected);
  if (options.uniform_weights || !(mean_sq > 0.0) || !std::isfinite(mean_sq)) {
    weights.setConstant(1.0 / static_cast<double>(selected));
  } else {
    for (Eigen::Index s = 0; s < selected; ++s) {
      weights(s) = std::exp(-sq_dist(order[static_cast<std::size_t>(s)]) / mean_sq);
    }
    weights /= weights.sum();
  }

  Eigen::VectorXd reconstruction = Eigen::VectorXd::Zero(model.training.cols());
  for (Eigen::Index s = 0; s < selected; ++s) {
    reconstruction += weights(s) * model.training.values.row(order[static_cast<std::size_t>(s)]).transpose();
  }
  return reconstruction;
}

/// H x W image with pixel intensities in [0, 1].
struct ImageGrid {
  Eigen::MatrixXd pixels;

  Eigen::Index height() const { return pixels.rows(); }
  Eigen::Index width() const { return pixels.cols(); }
};

inline ImageGrid clamp_image(Eigen::MatrixXd pixels) {
  for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
    for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
      pixels(i, j) = std::clamp(pixels(i, j), 0.0, 1.0);
    }
  }
  return ImageGrid{std::move(pixels)};
}

struct DenoiseResult {
  ImageGrid noisy;
  ImageGrid reconstructed;
  double mse_noisy = 0.0;
  double mse_reconstructed = 0.0;
};

namespace detail {

inline double image_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace detail

/**
 * Row-wise image denoising: treat the H rows as observations of W
 * features, corrupt with i.i.d. Uniform(-amplitude, amplitude) noise
 * (clamped back to [0,1]), fit kernel PCA on the noisy rows, and rebuild
 * each row from its leading `components` scores. The linear kernel has an
 * exact input-space pre-image (mean plus principal-direction expansion)
 * and uses it; other kernels go through preimage_reconstruct. Both MSE
 * figures are measured against the clean input.
 */
inline DenoiseResult denoise_image(const ImageGrid& image, KernelId kernel,
                                   const KernelParams& params, int components,
                                   double noise_amplitude, std::uint64_t seed,
                                   const PreimageOptions& preimage = {}) {
  const Eigen::Index height = image.height();
  const Eigen::Index width = image.width();
  if (height < 2 || width < 1) throw DataError("denoise_image: image too small");
  if (components < 1 || components > static_cast<int>(height) - 1) {
    throw ConfigError("denoise_image: component count must lie in [1, H-1] for an H-row image");
  }
  if (noise_amplitude < 0.0) throw ConfigError("denoise_image: noise amplitude must be >= 0");

  Rng rng(seed);
  Eigen::MatrixXd noisy = image.pixels;
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      noisy(r, c) = std::clamp(noisy(r, c) + rng.uniform_range(-noise_amplitude, noise_amplitude), 0.0, 1.0);
    }
  }

  DataMatrix observations;
  observations.values = noisy;
  const KpcaModel model = kpca_fit(observations, kernel, params, components);
  const Eigen::MatrixXd& scores = model.training_scores;

  Eigen::MatrixXd reconstructed(height, width);
  if (kernel == KernelId::linear) {
    // Exact pre-image: feature space is input space, so a score vector maps
    // back through the principal directions of the centered rows.
    const Eigen::RowVectorXd col_means = noisy.colwise().mean();
    const Eigen::MatrixXd centered_rows = noisy.rowwise() - col_means;
    const Eigen::MatrixXd directions = centered_rows.transpose() * model.alphas;  // W x f
    for (Eigen::Index r = 0; r < height; ++r) {
      reconstructed.row(r) = col_means + (directions * scores.row(r).transpose()).transpose();
    }
  } else {
    for (Eigen::Index r = 0; r < height; ++r) {
      reconstructed.row(r) = preimage_reconstruct(model, scores.row(r).transpose(), preimage).transpose();
    }
  }

  DenoiseResult result;
  result.noisy = ImageGrid{noisy};
  result.reconstructed = clamp_image(std::move(reconstructed));
  result.mse_noisy = detail::image_mse(noisy, image.pixels);
  result.mse_reconstructed = detail::image_mse(result.reconstructed.pixels, image.pixels);
  return result;
}

}  // namespace semblance
