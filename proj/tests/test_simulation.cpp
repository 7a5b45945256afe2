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

#include <cmath>

#include "doctest.h"
#include "semblance/simulation.hpp"
#include "test_helpers.hpp"

using namespace semblance;

namespace {

TwoGroupConfig bernoulli_config() {
  TwoGroupConfig config;
  config.model = TwoGroupModel::bernoulli;
  config.n = 60;
  config.m = 40;
  config.q = 0.2;
  config.p = 0.25;
  config.r0 = 0.5;
  config.r1 = 0.05;
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("group sizes follow round(q*n)") {
  TwoGroupConfig config;
  config.n = 100;
  config.q = 0.1;
  config.seed = 3;
  const TwoGroupData sample = generate_two_group(config);
  int group1 = 0;
  for (int label : sample.labels) {
    if (label == 1) ++group1;
  }
  CHECK(group1 == 10);
  CHECK(sample.labels.size() == 100);
  CHECK(sample.data.rows() == 100);
  CHECK(sample.data.cols() == 100);
  for (int i = 0; i < 10; ++i) CHECK(sample.labels[static_cast<std::size_t>(i)] == 1);
}

TEST_CASE("generation is bit-reproducible from the seed") {
  const TwoGroupConfig config = bernoulli_config();
  const TwoGroupData a = generate_two_group(config);
  const TwoGroupData b = generate_two_group(config);
  CHECK(testutil::bitwise_equal(a.data.values, b.data.values));
  TwoGroupConfig other = config;
  other.seed = config.seed + 1;
  CHECK_FALSE(testutil::bitwise_equal(a.data.values, generate_two_group(other).data.values));
}

TEST_CASE("informative block sits in the leading columns") {
  TwoGroupConfig config = bernoulli_config();
  config.n = 400;
  config.r1 = 0.01;
  const TwoGroupData sample = generate_two_group(config);
  const Eigen::Index n1 = config.group1_count();
  const Eigen::Index informative = config.informative_count();
  CHECK(informative == 10);
  // group-1 informative block is nearly all zeros at r1 = 0.01
  const double rate_informative =
      sample.data.values.block(0, 0, n1, informative).mean();
  const double rate_noise = sample.data.values.block(0, informative, n1, config.m - informative).mean();
  CHECK(rate_informative < 0.15);
  CHECK(rate_noise > 0.3);
}

TEST_CASE("config invariants are enforced") {
  TwoGroupConfig config;
  config.q = 0.6;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = TwoGroupConfig{};
  config.n = 10;
  config.q = 0.1;  // round(1) = 1 < 2 members in group 1
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = TwoGroupConfig{};
  config.model = TwoGroupModel::bernoulli;
  config.r1 = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = TwoGroupConfig{};
  config.sigma1 = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("degenerate all-equal matrix gives T = 0") {
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(6, 6, 0.4);
  const std::vector<int> labels{1, 1, 1, 2, 2, 2};
  const SeparationStats stats = separation_stats(flat, labels);
  CHECK(stats.t1 == 0.0);
  CHECK(stats.t2 == 0.0);
  CHECK(stats.s11 == 0.4);
}

TEST_CASE("block matrix means and the infinite sentinel") {
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(6, 6);
  const std::vector<int> labels{1, 1, 1, 2, 2, 2};
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) block(i, j) = 1.0;
    }
  }
  const SeparationStats stats = separation_stats(block, labels);
  CHECK(stats.s11 == 1.0);
  CHECK(stats.s22 == 1.0);
  CHECK(stats.s12 == 0.0);
  CHECK(stats.pairs11 == 3);
  CHECK(stats.pairs22 == 3);
  CHECK(stats.pairs12 == 9);
  // separation is perfect, spread is zero: sentinel rather than a number
  CHECK(std::isinf(stats.t1));
  CHECK(stats.t1 > 0.0);
}

TEST_CASE("a group without pairs is an error") {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(separation_stats(m, std::vector<int>{1, 2, 2, 2}), DataError);
}

TEST_CASE("separated blocks give large positive T for a similarity") {
  TwoGroupConfig config = bernoulli_config();
  const TwoGroupData sample = generate_two_group(config);
  const GramMatrix gram = semblance_gram(sample.data);
  const SeparationStats stats = separation_stats(gram, sample.labels);
  CHECK(std::isfinite(stats.t2));
  CHECK(stats.t2 > 3.0);  // strong niche regime
}

TEST_CASE("null configuration keeps mean T near zero") {
  TwoGroupConfig config = bernoulli_config();
  config.r1 = config.r0;  // identically distributed groups
  double sum_t1 = 0.0, sum_t2 = 0.0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    config.seed = 100 + static_cast<std::uint64_t>(s);
    const TwoGroupData sample = generate_two_group(config);
    const SeparationStats stats = separation_stats(semblance_gram(sample.data), sample.labels);
    sum_t1 += stats.t1;
    sum_t2 += stats.t2;
  }
  CHECK(std::abs(sum_t1 / seeds) < 0.6);
  CHECK(std::abs(sum_t2 / seeds) < 0.6);
}

TEST_CASE("one-cell sweep equals a direct computation") {
  const TwoGroupConfig config = bernoulli_config();
  const std::vector<MetricId> metrics{{KernelId::semblance, {}}, {KernelId::euclidean_distance, {}}};
  const SweepResult sweep = run_sweep(config, GridAxis{"r1", {0.05}}, GridAxis{"q", {0.2}}, metrics, 1);

  TwoGroupConfig direct = config;
  direct.r1 = 0.05;
  direct.q = 0.2;
  direct.seed = config.seed;
  const TwoGroupData sample = generate_two_group(direct);
  const SeparationStats semblance_stats = separation_stats(semblance_gram(sample.data), sample.labels);
  const SeparationStats euclid_stats = separation_stats(
      pairwise_matrix(sample.data, MetricId{KernelId::euclidean_distance, {}}), sample.labels);

  CHECK(sweep.cell(0, 0, 0).t1_median == semblance_stats.t1);
  CHECK(sweep.cell(0, 0, 0).t2_median == semblance_stats.t2);
  CHECK(sweep.cell(0, 0, 1).t1_median == euclid_stats.t1);
  CHECK(sweep.cell(0, 0, 1).t2_median == euclid_stats.t2);
}

TEST_CASE("sweeps are deterministic and thread-count independent") {
  TwoGroupConfig config = bernoulli_config();
  config.n = 40;
  config.m = 24;
  const std::vector<MetricId> metrics{{KernelId::semblance, {}}, {KernelId::pearson, {}}};
  const GridAxis axis1{"r1", {0.05, 0.3}};
  const GridAxis axis2{"q", {0.2, 0.4}};
  const SweepResult a = run_sweep(config, axis1, axis2, metrics, 5, 1);
  const SweepResult b = run_sweep(config, axis1, axis2, metrics, 5, 4);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t c = 0; c < a.cells.size(); ++c) {
    CHECK(a.cells[c].t1_median == b.cells[c].t1_median);
    CHECK(a.cells[c].t2_median == b.cells[c].t2_median);
  }
  CHECK(a.seeds.size() == 5);
  CHECK(a.seeds.front() == config.seed);
}

TEST_CASE("unknown sweep parameter is rejected") {
  const TwoGroupConfig config = bernoulli_config();
  CHECK_THROWS_AS(run_sweep(config, GridAxis{"bogus", {1.0}}, GridAxis{"q", {0.2}},
                            {{KernelId::semblance, {}}}, 1),
                  ConfigError);
  CHECK_THROWS_AS(run_sweep(config, GridAxis{"r1", {}}, GridAxis{"q", {0.2}},
                            {{KernelId::semblance, {}}}, 1),
                  ConfigError);
}
