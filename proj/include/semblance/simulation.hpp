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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "semblance/comparators.hpp"
#include "semblance/types.hpp"

namespace semblance {

enum class TwoGroupModel { normal, bernoulli };

/**
 * Two-group mixture: n objects with m independent features; a minority
 * group of proportion q and an informative-feature proportion p. In the
 * normal model informative features follow N(mu*sigma2, sigma1) for group
 * 1 and N(0, sigma2) for group 2 (sigmas are standard deviations), with
 * N(0, 1) noise features shared by both groups. In the bernoulli model
 * informative features follow Bernoulli(r1) for group 1 and Bernoulli(r0)
 * everywhere else.
 */
struct TwoGroupConfig {
  Eigen::Index n = 100;
  Eigen::Index m = 100;
  double q = 0.1;
  double p = 0.1;
  TwoGroupModel model = TwoGroupModel::normal;
  double mu = 2.0;
  double sigma1 = 0.1;
  double sigma2 = 0.1;
  double r0 = 0.5;
  double r1 = 0.05;
  std::uint64_t seed = 1;

  Eigen::Index group1_count() const { return static_cast<Eigen::Index>(std::llround(q * static_cast<double>(n))); }
  Eigen::Index informative_count() const { return static_cast<Eigen::Index>(std::ceil(p * static_cast<double>(m))); }

  void validate() const {
    if (n < 4 || m < 1) throw ConfigError("two-group config: need n >= 4 and m >= 1");
    if (!(q > 0.0 && q <= 0.5)) throw ConfigError("two-group config: q must lie in (0, 0.5]");
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("two-group config: p must lie in (0, 1]");
    if (group1_count() < 2) throw ConfigError("two-group config: round(q*n) must be >= 2");
    if (n - group1_count() < 2) throw ConfigError("two-group config: group 2 must have >= 2 members");
    if (informative_count() < 1) throw ConfigError("two-group config: ceil(p*m) must be >= 1");
    if (model == TwoGroupModel::normal) {
      if (!(sigma1 > 0.0 && sigma2 > 0.0)) throw ConfigError("two-group config: sigmas must be > 0");
    } else {
      if (!(r0 > 0.0 && r0 < 1.0 && r1 > 0.0 && r1 < 1.0))
        throw ConfigError("two-group config: rates must lie in (0, 1)");
    }
  }
};

struct TwoGroupData {
  DataMatrix data;
  std::vector<int> labels;  // 1 or 2; the first round(q*n) objects are group 1
};

/// Draws one dataset. Feature-major draw order, so the same seed gives a
/// bit-identical matrix on every run.
inline TwoGroupData generate_two_group(const TwoGroupConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const Eigen::Index n1 = config.group1_count();
  const Eigen::Index informative = config.informative_count();

  TwoGroupData out;
  out.data.values.resize(config.n, config.m);
  out.labels.assign(static_cast<std::size_t>(config.n), 2);
  for (Eigen::Index i = 0; i < n1; ++i) out.labels[static_cast<std::size_t>(i)] = 1;

  for (Eigen::Index g = 0; g < config.m; ++g) {
    const bool is_informative = g < informative;
    for (Eigen::Index i = 0; i < config.n; ++i) {
      const bool group1 = i < n1;
      double v = 0.0;
      if (config.model == TwoGroupModel::normal) {
        if (!is_informative) {
          v = rng.normal();
        } else if (group1) {
          v = rng.normal(config.mu * config.sigma2, config.sigma1);
        } else {
          v = rng.normal(0.0, config.sigma2);
        }
      } else {
        const double rate = (is_informative && group1) ? config.r1 : config.r0;
        v = rng.bernoulli(rate) ? 1.0 : 0.0;
      }
      out.data.values(i, g) = v;
    }
  }
  return out;
}

/**
 * Group-separation summary of a proximity matrix: mean entry within group
 * 1, within group 2, and across groups, with the standardized differences
 *   T1 = (S11 - S12) / se1,   T2 = (S22 - S12) / se2.
 * Entries of a pair set are treated as independent when forming the
 * standard errors (an approximation: pairs share objects). A zero
 * numerator with zero se yields T = 0; a nonzero numerator with zero se
 * yields an infinite sentinel, which sweep medians exclude.
 *
 * For distance matrices good separation shows up as negative T.
 */
struct SeparationStats {
  double s11 = 0.0, s22 = 0.0, s12 = 0.0;
  double se1 = 0.0, se2 = 0.0;
  double t1 = 0.0, t2 = 0.0;
  std::size_t pairs11 = 0, pairs22 = 0, pairs12 = 0;
};

namespace detail {

struct PairSetSummary {
  double mean = 0.0;
  double variance = 0.0;  // sample variance; 0 when fewer than 2 entries
  std::size_t count = 0;
};

inline PairSetSummary summarize(const std::vector<double>& values) {
  PairSetSummary s;
  s.count = values.size();
  if (s.count == 0) return s;
  bool all_equal = true;
  for (double v : values) {
    if (v != values.front()) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) {  // keep degenerate sets exact instead of averaging roundoff
    s.mean = values.front();
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(s.count - 1);
  }
  return s;
}

inline double standardized_difference(double diff, double se) {
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline SeparationStats separation_stats(const Eigen::MatrixXd& matrix, const std::vector<int>& labels) {
  const Eigen::Index n = matrix.rows();
  if (matrix.cols() != n) throw DataError("separation_stats: matrix must be square");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DataError("separation_stats: label count does not match matrix size");

  std::vector<double> within1, within2, cross;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int a = labels[static_cast<std::size_t>(i)];
      const int b = labels[static_cast<std::size_t>(j)];
      if (a == 1 && b == 1) within1.push_back(matrix(i, j));
      else if (a == 2 && b == 2) within2.push_back(matrix(i, j));
      else cross.push_back(matrix(i, j));
    }
  }
  if (within1.empty() || within2.empty()) {
    throw DataError("separation_stats: each group needs at least 2 members so within-group pairs exist");
  }

  const auto w1 = detail::summarize(within1);
  const auto w2 = detail::summarize(within2);
  const auto cr = detail::summarize(cross);

  SeparationStats stats;
  stats.s11 = w1.mean;
  stats.s22 = w2.mean;
  stats.s12 = cr.mean;
  stats.pairs11 = w1.count;
  stats.pairs22 = w2.count;
  stats.pairs12 = cr.count;
  stats.se1 = std::sqrt(w1.variance / static_cast<double>(w1.count) +
                        cr.variance / static_cast<double>(cr.count));
  stats.se2 = std::sqrt(w2.variance / static_cast<double>(w2.count) +
                        cr.variance / static_cast<double>(cr.count));
  stats.t1 = detail::standardized_difference(stats.s11 - stats.s12, stats.se1);
  stats.t2 = detail::standardized_difference(stats.s22 - stats.s12, stats.se2);
  return stats;
}

inline SeparationStats separation_stats(const GramMatrix& gram, const std::vector<int>& labels) {
  return separation_stats(gram.entries, labels);
}

struct GridAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepCellStat {
  double t1_median = std::numeric_limits<double>::quiet_NaN();
  double t2_median = std::numeric_limits<double>::quiet_NaN();
};

/**
 * A grid of (axis1 value, axis2 value) cells, each holding the per-metric
 * median of T1 and T2 over `replicates` datasets. Replicate r of every
 * cell uses seed base+r, so a sweep is reproducible from its base seed and
 * identical cells across metrics see identical data.
 */
struct SweepResult {
  GridAxis axis1, axis2;
  std::vector<MetricId> metrics;
  int replicates = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCellStat> cells;  // [i1][i2][metric], flattened

  const SweepCellStat& cell(std::size_t i1, std::size_t i2, std::size_t metric) const {
    return cells[(i1 * axis2.values.size() + i2) * metrics.size() + metric];
  }
};

namespace detail {

inline void apply_axis(TwoGroupConfig& config, const std::string& name, double value) {
  if (name == "n") config.n = static_cast<Eigen::Index>(std::llround(value));
  else if (name == "m") config.m = static_cast<Eigen::Index>(std::llround(value));
  else if (name == "p") config.p = value;
  else if (name == "q") config.q = value;
  else if (name == "mu") config.mu = value;
  else if (name == "sigma1") config.sigma1 = value;
  else if (name == "sigma2") config.sigma2 = value;
  else if (name == "r0") config.r0 = value;
  else if (name == "r1") config.r1 = value;
  else throw ConfigError("unknown sweep parameter '" + name + "'");
}

}  // namespace detail

inline SweepResult run_sweep(const TwoGroupConfig& base, const GridAxis& axis1,
                             const GridAxis& axis2, const std::vector<MetricId>& metrics,
                             int replicates, unsigned threads = 0) {
  if (axis1.values.empty() || axis2.values.empty()) throw ConfigError("run_sweep: empty grid axis");
  if (metrics.empty()) throw ConfigError("run_sweep: no metrics requested");
  if (replicates < 1) throw ConfigError("run_sweep: replicates must be >= 1");

  SweepResult result;
  result.axis1 = axis1;
  result.axis2 = axis2;
  result.metrics = metrics;
  result.replicates = replicates;
  for (int r = 0; r < replicates; ++r) result.seeds.push_back(base.seed + static_cast<std::uint64_t>(r));

  const std::size_t n_cells = axis1.values.size() * axis2.values.size();
  const std::size_t n_metrics = metrics.size();
  // t values for every (cell, replicate, metric), filled by position so the
  // merge is deterministic for any worker count.
  std::vector<double> t1_samples(n_cells * static_cast<std::size_t>(replicates) * n_metrics);
  std::vector<double> t2_samples(t1_samples.size());

  const std::size_t n_jobs = n_cells * static_cast<std::size_t>(replicates);
  parallel_chunks(n_jobs, threads, [&](std::size_t jb, std::size_t je) {
    for (std::size_t job = jb; job < je; ++job) {
      const std::size_t cell = job / static_cast<std::size_t>(replicates);
      const std::size_t rep = job % static_cast<std::size_t>(replicates);
      const std::size_t i1 = cell / axis2.values.size();
      const std::size_t i2 = cell % axis2.values.size();

      TwoGroupConfig config = base;
      detail::apply_axis(config, axis1.name, axis1.values[i1]);
      detail::apply_axis(config, axis2.name, axis2.values[i2]);
      config.seed = base.seed + rep;
      const TwoGroupData sample = generate_two_group(config);

      for (std::size_t k = 0; k < n_metrics; ++k) {
        const GramMatrix proximity =
            proximity_matrix(sample.data, metrics[k].tag, metrics[k].params, {}, 1);
        const SeparationStats stats = separation_stats(proximity, sample.labels);
        const std::size_t slot = (cell * static_cast<std::size_t>(replicates) + rep) * n_metrics + k;
        t1_samples[slot] = stats.t1;
        t2_samples[slot] = stats.t2;
      }
    }
  });

  result.cells.resize(n_cells * n_metrics);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    for (std::size_t k = 0; k < n_metrics; ++k) {
      std::vector<double> t1s, t2s;
      t1s.reserve(static_cast<std::size_t>(replicates));
      t2s.reserve(static_cast<std::size_t>(replicates));
      for (int r = 0; r < replicates; ++r) {
        const std::size_t slot = (cell * static_cast<std::size_t>(replicates) + static_cast<std::size_t>(r)) * n_metrics + k;
        t1s.push_back(t1_samples[slot]);
        t2s.push_back(t2_samples[slot]);
      }
      SweepCellStat stat;
      stat.t1_median = finite_median(std::move(t1s));
      stat.t2_median = finite_median(std::move(t2s));
      result.cells[cell * n_metrics + k] = stat;
    }
  }
  return result;
}

}  // namespace semblance
