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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semblance/semblance.hpp"

namespace {

using namespace semblance;

// exit codes: 0 success, 1 usage/config, 2 data, 3 numeric failure
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonIoFlags {
  bool header = false;
  bool row_names = false;

  TableOptions table_options() const {
    TableOptions options;
    options.header = header;
    options.row_names = row_names;
    return options;
  }
};

struct KernelFlags {
  std::string kernel = "semblance";
  double sigma = std::numeric_limits<double>::quiet_NaN();
  int degree = 2;
  double scale = 1.0;
  double offset = 1.0;
  std::string weights_path;

  void attach(CLI::App* cmd, const std::string& default_kernel = "semblance") {
    kernel = default_kernel;
    cmd->add_option("--kernel", kernel,
                    "semblance|pearson|spearman|gaussian|laplacian|linear|polynomial|euclidean")
        ->capture_default_str();
    attach_params(cmd);
  }

  void attach_params(CLI::App* cmd) {
    cmd->add_option("--sigma", sigma, "bandwidth for gaussian/laplacian (default: median heuristic)");
    cmd->add_option("--degree", degree, "polynomial degree")->capture_default_str();
    cmd->add_option("--scale", scale, "polynomial scale")->capture_default_str();
    cmd->add_option("--offset", offset, "polynomial offset")->capture_default_str();
    cmd->add_option("--weights", weights_path, "file with one nonnegative feature weight per line");
  }

  KernelId id() const { return kernel_id_from_string(kernel); }

  KernelParams params() const {
    KernelParams p;
    p.sigma = sigma;
    p.degree = degree;
    p.scale = scale;
    p.offset = offset;
    return p;
  }

  std::vector<double> load_weights() const {
    std::vector<double> weights;
    if (weights_path.empty()) return weights;
    std::ifstream in(weights_path);
    if (!in) throw DataError("cannot open weights file '" + weights_path + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      weights.push_back(parse_double(line, "'" + weights_path + "' line " +
                                               std::to_string(weights.size() + 1)));
    }
    return weights;
  }
};

Eigen::VectorXi load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels file '" + path + "'");
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const double v = parse_double(line, "'" + path + "' line " + std::to_string(labels.size() + 1));
    if (v != 1.0 && v != -1.0) {
      throw DataError("'" + path + "' line " + std::to_string(labels.size() + 1) +
                      ": labels must be +1 or -1");
    }
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw DataError("'" + path + "' holds no labels");
  Eigen::VectorXi out(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) out(static_cast<Eigen::Index>(i)) = labels[i];
  return out;
}

std::vector<MetricId> parse_metric_list(const std::string& list, const KernelParams& params) {
  std::vector<MetricId> metrics;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string name =
        list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!name.empty()) metrics.push_back(MetricId{kernel_id_from_string(name), params});
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (metrics.empty()) throw ConfigError("no metrics given");
  return metrics;
}

/// "name=v1,v2,v3" or "name=lo:hi:count" (inclusive linear spacing).
GridAxis parse_axis(const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("axis spec '" + spec + "' must look like name=v1,v2,... or name=lo:hi:count");
  }
  GridAxis axis;
  axis.name = spec.substr(0, eq);
  const std::string values = spec.substr(eq + 1);
  if (values.find(':') != std::string::npos) {
    const std::size_t c1 = values.find(':');
    const std::size_t c2 = values.find(':', c1 + 1);
    if (c2 == std::string::npos) throw ConfigError("range axis must be name=lo:hi:count");
    const double lo = parse_double(values.substr(0, c1), "axis '" + axis.name + "' lo");
    const double hi = parse_double(values.substr(c1 + 1, c2 - c1 - 1), "axis '" + axis.name + "' hi");
    const long count = std::lround(parse_double(values.substr(c2 + 1), "axis '" + axis.name + "' count"));
    if (count < 1) throw ConfigError("axis count must be >= 1");
    for (long k = 0; k < count; ++k) {
      axis.values.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) /
                                                       static_cast<double>(count - 1));
    }
  } else {
    std::size_t start = 0;
    while (start <= values.size()) {
      const std::size_t comma = values.find(',', start);
      const std::string token =
          values.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!token.empty()) axis.values.push_back(parse_double(token, "axis '" + axis.name + "'"));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (axis.values.empty()) throw ConfigError("axis '" + axis.name + "' has no values");
  return axis;
}

void echo_config(const std::string& what) { std::cerr << "# " << what << '\n'; }

// ---------------------------------------------------------------------------

int run_gram(const std::string& input, const std::string& output, const std::string& format,
             const CommonIoFlags& io, const KernelFlags& kernel, unsigned threads) {
  const DataMatrix data = ingest_table(input, io.table_options());
  echo_config("loaded " + input + ": n=" + std::to_string(data.rows()) +
              " features=" + std::to_string(data.cols()));
  const GramMatrix gram =
      proximity_matrix(data, kernel.id(), kernel.params(), kernel.load_weights(), threads);
  echo_config("kernel=" + to_string(gram.kernel_id) +
              (gram.kernel_id == KernelId::gaussian || gram.kernel_id == KernelId::laplacian
                   ? " sigma=" + format_double(gram.params.sigma)
                   : ""));
  if (format == "binary") {
    write_matrix_binary(gram.entries, output);
  } else {
    write_table_csv(gram.entries, output, gram.object_names,
                    gram.object_names.empty() ? std::vector<std::string>{} : gram.object_names);
  }
  echo_config("wrote " + output);
  return 0;
}

int run_check_psd(const std::string& input, double tolerance, const CommonIoFlags& io) {
  const Eigen::MatrixXd matrix = read_square_matrix(input, io.table_options());
  const PsdReport report = check_psd(matrix, tolerance);
  std::cout << "min_eigenvalue=" << format_double(report.min_eigenvalue)
            << " tolerance=" << format_double(report.tolerance)
            << " verdict=" << (report.is_psd ? "PSD" : "NOT_PSD") << '\n';
  return report.is_psd ? 0 : kExitNumeric;
}

int run_simulate(const TwoGroupConfig& base, const std::string& axis1_spec,
                 const std::string& axis2_spec, const std::string& metric_list, int replicates,
                 const std::string& output, unsigned threads) {
  const GridAxis axis1 = parse_axis(axis1_spec);
  const GridAxis axis2 = parse_axis(axis2_spec);
  const std::vector<MetricId> metrics = parse_metric_list(metric_list, {});
  const SweepResult sweep = run_sweep(base, axis1, axis2, metrics, replicates, threads);
  if (output.empty() || output == "-") {
    write_sweep_csv(sweep, base, std::cout);
  } else {
    std::ofstream out(output);
    if (!out) throw DataError("cannot write '" + output + "'");
    write_sweep_csv(sweep, base, out);
    echo_config("wrote " + output);
  }
  return 0;
}

int run_kpca_denoise(const std::string& input, const std::string& prefix, const KernelFlags& kernel,
                     int components, double noise, std::uint64_t seed, int neighbors) {
  const ImageGrid image = read_pgm(input);
  echo_config("loaded " + input + ": " + std::to_string(image.height()) + "x" +
              std::to_string(image.width()) + " seed=" + std::to_string(seed));
  PreimageOptions preimage;
  preimage.neighbors = neighbors;
  const DenoiseResult result =
      denoise_image(image, kernel.id(), kernel.params(), components, noise, seed, preimage);
  const std::string noisy_path = prefix + "-noisy.pgm";
  const std::string denoised_path = prefix + "-denoised.pgm";
  write_pgm(result.noisy, noisy_path);
  write_pgm(result.reconstructed, denoised_path);
  echo_config("wrote " + noisy_path + " and " + denoised_path);
  std::cout << "mse_noisy,mse_denoised\n"
            << format_double(result.mse_noisy) << ',' << format_double(result.mse_reconstructed)
            << '\n';
  return 0;
}

int run_svm_train(const std::string& data_path, const std::string& labels_path,
                  const std::string& model_path, const CommonIoFlags& io, const KernelFlags& kernel,
                  double C, double tol, int max_updates, bool shift, unsigned threads) {
  const DataMatrix data = ingest_table(data_path, io.table_options());
  const Eigen::VectorXi labels = load_labels(labels_path);
  if (labels.size() != data.rows()) {
    throw DataError("label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(data.rows()) + " data rows");
  }
  const GramMatrix gram =
      proximity_matrix(data, kernel.id(), kernel.params(), kernel.load_weights(), threads);
  const SvmModel model = svm_train(gram, labels, C, tol, max_updates, shift);
  save_svm_model(model, model_path);
  echo_config("wrote " + model_path);
  std::cout << "support_vectors=" << model.support_indices.size() << " updates=" << model.updates
            << " kkt_violation=" << format_double(model.kkt_violation)
            << " truncated=" << (model.truncated ? "yes" : "no") << '\n';
  return model.truncated ? kExitNumeric : 0;
}

int run_svm_predict(const std::string& model_path, const std::string& train_path,
                    const std::string& input_path, const std::string& output,
                    const CommonIoFlags& io, unsigned threads) {
  const SvmModel model = load_svm_model(model_path);
  const DataMatrix train = ingest_table(train_path, io.table_options());
  if (train.rows() != model.alpha.size()) {
    throw DataError("training table has " + std::to_string(train.rows()) + " rows but the model was fit on " +
                    std::to_string(model.alpha.size()));
  }
  const DataMatrix points = ingest_table(input_path, io.table_options());
  const Eigen::MatrixXd rows = proximity_cross(train, points.values, model.kernel, model.params,
                                               model.feature_weights, threads);
  const SvmPrediction prediction = svm_predict(model, rows);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!output.empty() && output != "-") {
    file.open(output);
    if (!file) throw DataError("cannot write '" + output + "'");
    out = &file;
  }
  (*out) << "score,class\n";
  for (Eigen::Index i = 0; i < prediction.scores.size(); ++i) {
    (*out) << format_double(prediction.scores(i)) << ',' << prediction.classes(i) << '\n';
  }
  return 0;
}

int run_svm_cv(const std::string& data_path, const std::string& labels_path,
               const std::string& kernel_list, const KernelFlags& kernel_flags,
               const CommonIoFlags& io, int folds, std::uint64_t seed, double C, double tol) {
  const DataMatrix data = ingest_table(data_path, io.table_options());
  const Eigen::VectorXi labels = load_labels(labels_path);
  if (labels.size() != data.rows()) {
    throw DataError("label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(data.rows()) + " data rows");
  }
  const std::vector<MetricId> metrics = parse_metric_list(kernel_list, kernel_flags.params());
  const std::vector<double> weights = kernel_flags.load_weights();
  echo_config("folds=" + std::to_string(folds) + " seed=" + std::to_string(seed) +
              " C=" + format_double(C));
  std::cout << "kernel,fold,accuracy\n";
  for (const MetricId& metric : metrics) {
    const CvReport report = cross_validate(data, labels, metric, folds, seed, C, tol, weights);
    for (std::size_t f = 0; f < report.fold_accuracy.size(); ++f) {
      std::cout << to_string(metric.tag) << ',' << (f + 1) << ','
                << format_double(report.fold_accuracy[f]) << '\n';
    }
    std::cout << to_string(metric.tag) << ",mean," << format_double(report.mean_accuracy) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-based similarity toolkit: Gram matrices, PSD checks, two-group "
               "simulations, kernel PCA denoising, and precomputed-kernel SVMs"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();

  // gram
  auto* gram_cmd = app.add_subcommand("gram", "compute a similarity/distance matrix");
  std::string gram_input, gram_output, gram_format = "csv";
  CommonIoFlags gram_io;
  KernelFlags gram_kernel;
  gram_cmd->add_option("--input,-i", gram_input, "delimited data table")->required();
  gram_cmd->add_option("--output,-o", gram_output, "output path")->required();
  gram_cmd->add_option("--format", gram_format, "csv|binary")->capture_default_str();
  gram_cmd->add_flag("--header", gram_io.header, "first row holds feature names");
  gram_cmd->add_flag("--row-names", gram_io.row_names, "first column holds object names");
  gram_kernel.attach(gram_cmd);

  // check-psd
  auto* psd_cmd = app.add_subcommand("check-psd", "certify a matrix as positive semidefinite");
  std::string psd_input;
  double psd_tolerance = std::numeric_limits<double>::quiet_NaN();
  CommonIoFlags psd_io;
  psd_cmd->add_option("--input,-i", psd_input, "matrix file (csv or binary)")->required();
  psd_cmd->add_option("--tolerance", psd_tolerance, "eigenvalue tolerance (default 1e-8*n*max|entry|)");
  psd_cmd->add_flag("--header", psd_io.header, "first row holds names");
  psd_cmd->add_flag("--row-names", psd_io.row_names, "first column holds names");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "two-group parameter sweep, long-format CSV out");
  TwoGroupConfig base;
  std::string sim_model = "bernoulli", sim_axis1, sim_axis2, sim_metrics = "semblance,pearson,spearman,euclidean";
  std::string sim_output;
  int sim_replicates = 25;
  long long sim_n = 100, sim_m = 100;
  sim_cmd->add_option("--model", sim_model, "normal|bernoulli")->capture_default_str();
  sim_cmd->add_option("--n", sim_n, "objects")->capture_default_str();
  sim_cmd->add_option("--m", sim_m, "features")->capture_default_str();
  sim_cmd->add_option("--p", base.p, "informative-feature proportion")->capture_default_str();
  sim_cmd->add_option("--q", base.q, "group-1 proportion")->capture_default_str();
  sim_cmd->add_option("--mu", base.mu, "normal model: group-1 mean shift in sigma2 units")->capture_default_str();
  sim_cmd->add_option("--sigma1", base.sigma1, "normal model: group-1 sd")->capture_default_str();
  sim_cmd->add_option("--sigma2", base.sigma2, "normal model: group-2 sd")->capture_default_str();
  sim_cmd->add_option("--r0", base.r0, "bernoulli model: background rate")->capture_default_str();
  sim_cmd->add_option("--r1", base.r1, "bernoulli model: group-1 informative rate")->capture_default_str();
  sim_cmd->add_option("--seed", base.seed, "base seed; replicate r uses seed+r")->capture_default_str();
  sim_cmd->add_option("--replicates", sim_replicates, "replicates per cell")->capture_default_str();
  std::string sim_grid;
  sim_cmd->add_option("--axis1", sim_axis1, "grid axis, name=v1,v2,... or name=lo:hi:count");
  sim_cmd->add_option("--axis2", sim_axis2, "second grid axis");
  sim_cmd->add_option("--grid", sim_grid, "both axes at once, axis1spec;axis2spec");
  sim_cmd->add_option("--metrics", sim_metrics, "comma-separated metric list")->capture_default_str();
  sim_cmd->add_option("--output,-o", sim_output, "output CSV ('-' or empty = stdout)");

  // kpca denoise
  auto* kpca_cmd = app.add_subcommand("kpca", "kernel PCA pipelines");
  kpca_cmd->require_subcommand(1);
  auto* denoise_cmd = kpca_cmd->add_subcommand("denoise", "corrupt a PGM with uniform noise and reconstruct it");
  std::string den_input, den_prefix = "denoise";
  KernelFlags den_kernel;
  int den_components = 8, den_neighbors = 10;
  double den_noise = 0.3;
  std::uint64_t den_seed = 1;
  denoise_cmd->add_option("--input,-i", den_input, "PGM (P5) image")->required();
  denoise_cmd->add_option("--output-prefix,-o", den_prefix, "prefix for <prefix>-noisy.pgm / <prefix>-denoised.pgm")
      ->capture_default_str();
  denoise_cmd->add_option("--components", den_components, "retained components")->capture_default_str();
  denoise_cmd->add_option("--noise", den_noise, "uniform noise amplitude")->capture_default_str();
  denoise_cmd->add_option("--seed", den_seed, "noise seed")->capture_default_str();
  denoise_cmd->add_option("--neighbors", den_neighbors, "pre-image neighborhood size")->capture_default_str();
  den_kernel.attach(denoise_cmd);

  // svm
  auto* svm_cmd = app.add_subcommand("svm", "precomputed-kernel SVM");
  svm_cmd->require_subcommand(1);

  auto* train_cmd = svm_cmd->add_subcommand("train", "fit a binary SVM");
  std::string train_data, train_labels, train_model = "svm-model.txt";
  CommonIoFlags train_io;
  KernelFlags train_kernel;
  double train_C = 1.0, train_tol = 1e-3;
  int train_max_updates = 10000;
  bool train_shift = false;
  train_cmd->add_option("--data", train_data, "training table")->required();
  train_cmd->add_option("--labels", train_labels, "file with one +1/-1 label per row")->required();
  train_cmd->add_option("--model-out", train_model, "model file to write")->capture_default_str();
  train_cmd->add_flag("--header", train_io.header, "first row holds feature names");
  train_cmd->add_flag("--row-names", train_io.row_names, "first column holds object names");
  train_cmd->add_option("--C", train_C, "box constraint")->capture_default_str();
  train_cmd->add_option("--tol", train_tol, "KKT termination tolerance")->capture_default_str();
  train_cmd->add_option("--max-updates", train_max_updates, "pair-update cap")->capture_default_str();
  train_cmd->add_flag("--shift-indefinite", train_shift,
                      "regularize a non-PSD kernel by shifting its diagonal");
  train_kernel.attach(train_cmd);

  auto* predict_cmd = svm_cmd->add_subcommand("predict", "score new points with a trained model");
  std::string pred_model, pred_train, pred_input, pred_output;
  CommonIoFlags pred_io;
  predict_cmd->add_option("--model", pred_model, "model file from 'svm train'")->required();
  predict_cmd->add_option("--train", pred_train, "the table the model was trained on")->required();
  predict_cmd->add_option("--input", pred_input, "points to classify")->required();
  predict_cmd->add_option("--output,-o", pred_output, "CSV out ('-' or empty = stdout)");
  predict_cmd->add_flag("--header", pred_io.header, "tables have a header row");
  predict_cmd->add_flag("--row-names", pred_io.row_names, "tables have a name column");

  auto* cv_cmd = svm_cmd->add_subcommand("cv", "stratified k-fold cross-validation");
  std::string cv_data, cv_labels, cv_kernels = "semblance";
  CommonIoFlags cv_io;
  KernelFlags cv_kernel_flags;
  int cv_folds = 10;
  std::uint64_t cv_seed = 1;
  double cv_C = 1.0, cv_tol = 1e-3;
  cv_cmd->add_option("--data", cv_data, "data table")->required();
  cv_cmd->add_option("--labels", cv_labels, "file with one +1/-1 label per row")->required();
  cv_cmd->add_option("--kernels,--kernel", cv_kernels, "comma-separated kernel list")->capture_default_str();
  cv_cmd->add_option("--folds", cv_folds, "fold count")->capture_default_str();
  cv_cmd->add_option("--seed", cv_seed, "fold-split seed")->capture_default_str();
  cv_cmd->add_option("--C", cv_C, "box constraint")->capture_default_str();
  cv_cmd->add_option("--tol", cv_tol, "KKT termination tolerance")->capture_default_str();
  cv_cmd->add_flag("--header", cv_io.header, "first row holds feature names");
  cv_cmd->add_flag("--row-names", cv_io.row_names, "first column holds object names");
  cv_kernel_flags.attach_params(cv_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gram_cmd->parsed()) {
      if (gram_format != "csv" && gram_format != "binary") {
        throw ConfigError("--format must be csv or binary");
      }
      return run_gram(gram_input, gram_output, gram_format, gram_io, gram_kernel, threads);
    }
    if (psd_cmd->parsed()) return run_check_psd(psd_input, psd_tolerance, psd_io);
    if (sim_cmd->parsed()) {
      if (sim_model == "normal") base.model = TwoGroupModel::normal;
      else if (sim_model == "bernoulli") base.model = TwoGroupModel::bernoulli;
      else throw ConfigError("--model must be normal or bernoulli");
      base.n = static_cast<Eigen::Index>(sim_n);
      base.m = static_cast<Eigen::Index>(sim_m);
      if (!sim_grid.empty()) {
        const std::size_t semi = sim_grid.find(';');
        if (semi == std::string::npos) {
          throw ConfigError("--grid wants two axis specs separated by ';'");
        }
        sim_axis1 = sim_grid.substr(0, semi);
        sim_axis2 = sim_grid.substr(semi + 1);
      }
      if (sim_axis1.empty() || sim_axis2.empty()) {
        throw ConfigError("simulate needs a grid: either --grid or both --axis1 and --axis2");
      }
      return run_simulate(base, sim_axis1, sim_axis2, sim_metrics, sim_replicates, sim_output, threads);
    }
    if (denoise_cmd->parsed()) {
      return run_kpca_denoise(den_input, den_prefix, den_kernel, den_components, den_noise,
                              den_seed, den_neighbors);
    }
    if (train_cmd->parsed()) {
      return run_svm_train(train_data, train_labels, train_model, train_io, train_kernel, train_C,
                           train_tol, train_max_updates, train_shift, threads);
    }
    if (predict_cmd->parsed()) {
      return run_svm_predict(pred_model, pred_train, pred_input, pred_output, pred_io, threads);
    }
    if (cv_cmd->parsed()) {
      return run_svm_cv(cv_data, cv_labels, cv_kernels, cv_kernel_flags, cv_io, cv_folds, cv_seed,
                        cv_C, cv_tol);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
