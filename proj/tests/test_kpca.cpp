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

#include <Eigen/SVD>
#include <cmath>

#include "doctest.h"
#include "semblance/kpca.hpp"
#include "test_helpers.hpp"

using namespace semblance;

namespace {

/// Classical PCA scores via SVD of the column-centered data; the
/// independent oracle for linear-kernel kPCA.
Eigen::MatrixXd classical_pca_scores(const Eigen::MatrixXd& data, int components) {
  const Eigen::RowVectorXd means = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - means;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(components) *
         svd.singularValues().head(components).asDiagonal();
}

/// Flips oracle column signs to match the candidate (eigenvector sign is
/// arbitrary on both sides).
Eigen::MatrixXd align_signs(const Eigen::MatrixXd& reference, Eigen::MatrixXd candidate) {
  for (Eigen::Index k = 0; k < candidate.cols(); ++k) {
    if (reference.col(k).dot(candidate.col(k)) < 0.0) candidate.col(k) = -candidate.col(k);
  }
  return candidate;
}

/// Gradient plus two rectangles: structured rows with repeated patterns.
ImageGrid structured_image(Eigen::Index height, Eigen::Index width) {
  Eigen::MatrixXd pixels(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      pixels(r, c) = 0.5 * static_cast<double>(c) / static_cast<double>(width - 1);
    }
  }
  const Eigen::Index h4 = height / 4, w4 = width / 4;
  pixels.block(h4, w4, h4, w4).setConstant(0.95);
  pixels.block(2 * h4, 2 * w4, h4, w4).setConstant(0.05);
  return ImageGrid{pixels};
}

}  // namespace

TEST_CASE("linear-kernel kPCA matches classical PCA") {
  Rng rng(61);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::Index n = 8 + static_cast<Eigen::Index>(rng.below(10));
    const Eigen::Index cols = 3 + static_cast<Eigen::Index>(rng.below(5));
    const DataMatrix data = testutil::random_data(rng, n, cols, testutil::DataKind::continuous);
    const int f = static_cast<int>(std::min<Eigen::Index>(3, n - 1));
    const KpcaModel model = kpca_fit(data, KernelId::linear, {}, f);
    REQUIRE(model.components == f);
    const Eigen::MatrixXd oracle = align_signs(model.training_scores, classical_pca_scores(data.values, f));
    CHECK(testutil::max_abs_diff(model.training_scores, oracle) <= 1e-8);
  }
}

TEST_CASE("out-of-sample linear projection matches classical PCA") {
  Rng rng(62);
  const DataMatrix data = testutil::random_data(rng, 14, 5, testutil::DataKind::continuous);
  const DataMatrix query = testutil::random_data(rng, 3, 5, testutil::DataKind::continuous);
  const KpcaModel model = kpca_fit(data, KernelId::linear, {}, 3);

  // oracle: project the fresh points on the principal directions
  const Eigen::RowVectorXd means = data.values.colwise().mean();
  const Eigen::MatrixXd centered = data.values.rowwise() - means;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd directions = svd.matrixV().leftCols(3);
  const Eigen::MatrixXd oracle = (query.values.rowwise() - means) * directions;

  const Eigen::MatrixXd scores = kpca_project(model, query.values);
  const Eigen::MatrixXd fit_ref = align_signs(model.training_scores, classical_pca_scores(data.values, 3));
  // align the oracle's signs the same way the fit scores were aligned
  Eigen::MatrixXd aligned_oracle = oracle;
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Eigen::MatrixXd pca_scores = classical_pca_scores(data.values, 3);
    if (model.training_scores.col(k).dot(pca_scores.col(k)) < 0.0) {
      aligned_oracle.col(k) = -aligned_oracle.col(k);
    }
  }
  CHECK(testutil::max_abs_diff(scores, aligned_oracle) <= 1e-8);
}

TEST_CASE("training rows project onto their fit-time scores") {
  Rng rng(63);
  for (const KernelId id : {KernelId::semblance, KernelId::gaussian, KernelId::linear}) {
    const DataMatrix data = testutil::random_data(rng, 12, 4, testutil::DataKind::mixed);
    const KpcaModel model = kpca_fit(data, id, {}, 4);
    const Eigen::MatrixXd again = kpca_project(model, data.values);
    CHECK(testutil::max_abs_diff(again, model.training_scores) <= 1e-8);
  }
}

TEST_CASE("retained components rebuild the centered kernel at f = n-1") {
  Rng rng(64);
  const DataMatrix data = testutil::random_data(rng, 10, 5, testutil::DataKind::continuous);
  const KpcaModel model = kpca_fit(data, KernelId::semblance, {}, 9);
  const Eigen::MatrixXd centered = center_kernel(semblance_gram(data).entries);
  Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(10, 10);
  for (int k = 0; k < model.components; ++k) {
    const Eigen::VectorXd v = model.alphas.col(k) * std::sqrt(model.eigenvalues(k));
    rebuilt += model.eigenvalues(k) * v * v.transpose();
  }
  CHECK(testutil::max_abs_diff(centered, rebuilt) <= 1e-8);
}

TEST_CASE("component energy is monotone in f") {
  Rng rng(65);
  const DataMatrix data = testutil::random_data(rng, 12, 6, testutil::DataKind::continuous);
  const KpcaModel model = kpca_fit(data, KernelId::semblance, {}, 11);
  for (int k = 1; k < model.components; ++k) {
    CHECK(model.eigenvalues(k) <= model.eigenvalues(k - 1));
    CHECK(model.eigenvalues(k) > 0.0);
  }
  // alpha scaling: each retained component has unit feature-space norm
  for (int k = 0; k < model.components; ++k) {
    CHECK(model.eigenvalues(k) * model.alphas.col(k).squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("duplicated objects receive identical projections") {
  Rng rng(66);
  DataMatrix data = testutil::random_data(rng, 7, 4, testutil::DataKind::mixed);
  DataMatrix doubled;
  doubled.values.resize(14, 4);
  doubled.values.topRows(7) = data.values;
  doubled.values.bottomRows(7) = data.values;
  const KpcaModel model = kpca_fit(doubled, KernelId::semblance, {}, 5);
  for (Eigen::Index i = 0; i < 7; ++i) {
    for (int k = 0; k < model.components; ++k) {
      CHECK(model.training_scores(i, k) == model.training_scores(i + 7, k));
    }
  }
}

TEST_CASE("projection permutation equivariance") {
  Rng rng(67);
  const DataMatrix data = testutil::random_data(rng, 9, 4, testutil::DataKind::continuous);
  const std::vector<Eigen::Index> perm{3, 1, 4, 0, 8, 2, 7, 5, 6};
  DataMatrix permuted;
  permuted.values.resize(9, 4);
  for (Eigen::Index i = 0; i < 9; ++i) {
    permuted.values.row(i) = data.values.row(perm[static_cast<std::size_t>(i)]);
  }
  const KpcaModel a = kpca_fit(data, KernelId::semblance, {}, 3);
  const KpcaModel b = kpca_fit(permuted, KernelId::semblance, {}, 3);
  // undo the permutation; geometry must match up to component sign
  Eigen::MatrixXd reordered(9, b.components);
  for (Eigen::Index i = 0; i < 9; ++i) {
    reordered.row(perm[static_cast<std::size_t>(i)]) = b.training_scores.row(i);
  }
  CHECK(testutil::max_abs_diff(align_signs(a.training_scores, reordered), a.training_scores) <= 1e-8);
}

TEST_CASE("semblance projections survive monotone per-feature transforms bit-for-bit") {
  Rng rng(75);
  const DataMatrix data = testutil::random_data(rng, 11, 4, testutil::DataKind::mixed);
  DataMatrix warped = data;
  for (Eigen::Index i = 0; i < 11; ++i) {
    warped.values(i, 0) = std::exp(data.values(i, 0));
    warped.values(i, 1) = 5.0 * data.values(i, 1) - 2.0;
    warped.values(i, 2) = std::pow(data.values(i, 2), 3.0);
    warped.values(i, 3) = std::atan(data.values(i, 3));
  }
  const KpcaModel a = kpca_fit(data, KernelId::semblance, {}, 4);
  const KpcaModel b = kpca_fit(warped, KernelId::semblance, {}, 4);
  CHECK(testutil::bitwise_equal(a.training_scores, b.training_scores));
}

TEST_CASE("empty projection input") {
  Rng rng(68);
  const DataMatrix data = testutil::random_data(rng, 8, 3, testutil::DataKind::continuous);
  const KpcaModel model = kpca_fit(data, KernelId::semblance, {}, 2);
  const Eigen::MatrixXd scores = kpca_project(model, Eigen::MatrixXd(0, 3));
  CHECK(scores.rows() == 0);
  CHECK(scores.cols() == 2);
  CHECK_THROWS_AS(kpca_project(model, Eigen::MatrixXd(2, 5)), DataError);
}

TEST_CASE("component count out of range") {
  Rng rng(69);
  const DataMatrix data = testutil::random_data(rng, 6, 3, testutil::DataKind::continuous);
  CHECK_THROWS_AS(kpca_fit(data, KernelId::semblance, {}, 0), ConfigError);
  CHECK_THROWS_AS(kpca_fit(data, KernelId::semblance, {}, 6), ConfigError);
}

TEST_CASE("requesting more components than the spectrum supports reduces f") {
  // rank-1 data: one informative direction only
  DataMatrix data;
  data.values.resize(6, 3);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const double t = static_cast<double>(i);
    data.values.row(i) << t, 2.0 * t, -t;
  }
  const KpcaModel model = kpca_fit(data, KernelId::linear, {}, 5);
  CHECK(model.components == 1);
  CHECK(model.components_reduced);
}

TEST_CASE("pre-image of an uncorrupted training point with one neighbor") {
  Rng rng(70);
  const DataMatrix data = testutil::random_data(rng, 9, 4, testutil::DataKind::continuous);
  const KpcaModel model = kpca_fit(data, KernelId::semblance, {}, 4);
  PreimageOptions options;
  options.neighbors = 1;
  for (Eigen::Index i = 0; i < 9; ++i) {
    const Eigen::VectorXd rebuilt =
        preimage_reconstruct(model, model.training_scores.row(i).transpose(), options);
    for (Eigen::Index g = 0; g < 4; ++g) CHECK(rebuilt(g) == data.values(i, g));
  }
}

TEST_CASE("uniform full-neighborhood pre-image is the column mean") {
  Rng rng(71);
  const DataMatrix data = testutil::random_data(rng, 8, 3, testutil::DataKind::continuous);
  const KpcaModel model = kpca_fit(data, KernelId::semblance, {}, 3);
  PreimageOptions options;
  options.neighbors = 8;
  options.uniform_weights = true;
  const Eigen::VectorXd rebuilt = preimage_reconstruct(model, model.training_scores.row(0).transpose(), options);
  const Eigen::VectorXd means = data.values.colwise().mean().transpose();
  CHECK(testutil::max_abs_diff(rebuilt, means) <= 1e-12);
}

TEST_CASE("pre-image lands inside the right cluster") {
  // two tight clusters, far apart; the default neighborhood fits in one
  DataMatrix data;
  data.values.resize(20, 2);
  Rng rng(72);
  for (Eigen::Index i = 0; i < 10; ++i) {
    data.values(i, 0) = 0.0 + 0.01 * rng.normal();
    data.values(i, 1) = 0.0 + 0.01 * rng.normal();
    data.values(i + 10, 0) = 10.0 + 0.01 * rng.normal();
    data.values(i + 10, 1) = 10.0 + 0.01 * rng.normal();
  }
  const KpcaModel model = kpca_fit(data, KernelId::gaussian, {}, 2);
  const Eigen::VectorXd centroid_scores =
      model.training_scores.topRows(10).colwise().mean().transpose();
  const Eigen::VectorXd rebuilt = preimage_reconstruct(model, centroid_scores);
  const Eigen::Vector2d cluster_a(0.0, 0.0), cluster_b(10.0, 10.0);
  CHECK((rebuilt - cluster_a).norm() < 1.0);
  CHECK((rebuilt - cluster_b).norm() > 9.0);
}

TEST_CASE("noise-free linear pipeline at full rank is lossless") {
  const ImageGrid image = structured_image(16, 16);
  const DenoiseResult result = denoise_image(image, KernelId::linear, {}, 15, 0.0, 5);
  CHECK(result.mse_noisy == 0.0);
  CHECK(result.mse_reconstructed < 1e-6);
}

TEST_CASE("constant image reconstructs to itself") {
  ImageGrid flat;
  flat.pixels = Eigen::MatrixXd::Constant(12, 10, 0.6);
  const DenoiseResult result = denoise_image(flat, KernelId::semblance, {}, 3, 0.0, 5);
  CHECK(testutil::max_abs_diff(result.reconstructed.pixels, flat.pixels) <= 1e-12);
}

TEST_CASE("semblance kPCA denoises a structured image") {
  const ImageGrid image = structured_image(32, 32);
  const DenoiseResult result = denoise_image(image, KernelId::semblance, {}, 6, 0.3, 11);
  CHECK(result.mse_noisy > 0.01);
  CHECK(result.mse_reconstructed < result.mse_noisy);
}

TEST_CASE("denoise validates its inputs") {
  const ImageGrid image = structured_image(8, 8);
  CHECK_THROWS_AS(denoise_image(image, KernelId::semblance, {}, 8, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(denoise_image(image, KernelId::semblance, {}, 2, -0.5, 1), ConfigError);
}
