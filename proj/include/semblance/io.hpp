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

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "semblance/kpca.hpp"
#include "semblance/simulation.hpp"
#include "semblance/svm.hpp"
#include "semblance/types.hpp"

namespace semblance {

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
  // trim ASCII whitespace (covers \r from CRLF files)
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t' || text.front() == '\r')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw DataError(where + ": cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

struct TableOptions {
  bool header = false;
  bool row_names = false;
  char delimiter = '\0';  // '\0' = by extension: .tsv/.tab tab, otherwise comma
};

namespace detail {

inline char resolve_delimiter(const std::string& path, char requested) {
  if (requested != '\0') return requested;
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos) {
    const std::string ext = path.substr(dot);
    if (ext == ".tsv" || ext == ".tab") return '\t';
  }
  return ',';
}

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace detail

/**
 * Reads a delimited numeric table: rows are objects, columns are features,
 * with an optional header row and row-name column. Parsing is
 * locale-independent (dot decimal separator). Ragged rows, non-numeric
 * cells and non-finite values are rejected with their location.
 */
inline DataMatrix ingest_table(const std::string& path, const TableOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  const char delimiter = detail::resolve_delimiter(path, options.delimiter);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw DataError("'" + path + "' is empty");

  DataMatrix data;
  std::size_t first_data_line = 0;
  if (options.header) {
    auto cells = detail::split_line(lines[0], delimiter);
    if (options.row_names && !cells.empty()) cells.erase(cells.begin());
    data.feature_names = std::move(cells);
    first_data_line = 1;
    if (first_data_line >= lines.size()) throw DataError("'" + path + "' has a header but no data rows");
  }

  std::vector<std::vector<double>> rows;
  std::size_t expected_cols = 0;
  for (std::size_t ln = first_data_line; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) throw DataError("'" + path + "': row " + std::to_string(ln - first_data_line + 1) + " is empty");
    auto cells = detail::split_line(lines[ln], delimiter);
    const std::size_t row_number = ln - first_data_line + 1;
    if (options.row_names) {
      data.object_names.push_back(cells.empty() ? "" : cells.front());
      if (!cells.empty()) cells.erase(cells.begin());
    }
    if (rows.empty()) {
      expected_cols = cells.size();
      if (expected_cols == 0) throw DataError("'" + path + "': row 1 has no data columns");
    } else if (cells.size() != expected_cols) {
      throw DataError("'" + path + "': row " + std::to_string(row_number) + " has " +
                      std::to_string(cells.size()) + " columns, expected " + std::to_string(expected_cols));
    }
    std::vector<double> parsed(expected_cols);
    for (std::size_t c = 0; c < expected_cols; ++c) {
      const std::string where = "'" + path + "' row " + std::to_string(row_number) + ", column " + std::to_string(c + 1);
      const double v = parse_double(cells[c], where);
      if (!std::isfinite(v)) throw DataError(where + ": non-finite value '" + cells[c] + "'");
      parsed[c] = v;
    }
    rows.push_back(std::move(parsed));
  }

  if (!data.feature_names.empty() && data.feature_names.size() != expected_cols) {
    throw DataError("'" + path + "': header has " + std::to_string(data.feature_names.size()) +
                    " names for " + std::to_string(expected_cols) + " columns");
  }
  data.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(expected_cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < expected_cols; ++c) {
      data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return data;
}

inline void write_table_csv(const Eigen::MatrixXd& matrix, const std::string& path,
                            const std::vector<std::string>& row_labels = {},
                            const std::vector<std::string>& col_labels = {},
                            char delimiter = ',') {
  if (matrix.size() == 0) throw DataError("refusing to write an empty matrix to '" + path + "'");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  const bool with_rows = !row_labels.empty();
  if (!col_labels.empty()) {
    if (with_rows) out << "name" << delimiter;
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      out << col_labels[c] << (c + 1 < col_labels.size() ? std::string(1, delimiter) : "");
    }
    out << '\n';
  }
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    if (with_rows) out << row_labels[static_cast<std::size_t>(i)] << delimiter;
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      out << format_double(matrix(i, j)) << (j + 1 < matrix.cols() ? std::string(1, delimiter) : "");
    }
    out << '\n';
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

// --- compact binary square-matrix format -----------------------------------
// magic "SEMBLMAT", u64 dimension, then n*n doubles row-major, little-endian.

inline constexpr char kMatrixMagic[8] = {'S', 'E', 'M', 'B', 'L', 'M', 'A', 'T'};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t swapped = 0;
  for (int b = 0; b < 8; ++b) swapped = (swapped << 8) | ((v >> (8 * b)) & 0xffu);
  return swapped;
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  const std::uint64_t le = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(&le), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t le = 0;
  in.read(reinterpret_cast<char*>(&le), 8);
  return to_little_endian(le);
}

inline void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

inline double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline void write_matrix_binary(const Eigen::MatrixXd& matrix, const std::string& path) {
  if (matrix.rows() != matrix.cols()) throw DataError("binary matrix format holds square matrices only");
  if (matrix.size() == 0) throw DataError("refusing to write an empty matrix to '" + path + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(kMatrixMagic, 8);
  detail::put_u64(out, static_cast<std::uint64_t>(matrix.rows()));
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      detail::put_f64(out, matrix(i, j));
    }
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline bool is_binary_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, 8);
  return in && std::memcmp(magic, kMatrixMagic, 8) == 0;
}

inline Eigen::MatrixXd read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char magic[8] = {};
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMatrixMagic, 8) != 0) {
    throw DataError("'" + path + "' is not a binary matrix file");
  }
  const std::uint64_t n = detail::get_u64(in);
  if (!in || n == 0 || n > (1u << 20)) throw DataError("'" + path + "' has an implausible dimension");
  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < n; ++j) {
      matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = detail::get_f64(in);
    }
  }
  if (!in) throw DataError("'" + path + "' is truncated");
  return matrix;
}

/// Square matrix from either format: binary when the magic matches,
/// delimited text otherwise.
inline Eigen::MatrixXd read_square_matrix(const std::string& path, const TableOptions& options = {}) {
  Eigen::MatrixXd m;
  if (is_binary_matrix_file(path)) {
    m = read_matrix_binary(path);
  } else {
    m = ingest_table(path, options).values;
  }
  if (m.rows() != m.cols()) {
    throw DataError("'" + path + "' holds a " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + " matrix, expected square");
  }
  return m;
}

// --- PGM (P5) ----------------------------------------------------------------

/// Binary PGM, maxval 255; intensity p in [0,1] maps to round(255 p).
inline void write_pgm(const ImageGrid& image, const std::string& path) {
  if (image.height() < 1 || image.width() < 1) throw DataError("refusing to write an empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
  for (Eigen::Index r = 0; r < image.height(); ++r) {
    for (Eigen::Index c = 0; c < image.width(); ++c) {
      const double clamped = std::clamp(image.pixels(r, c), 0.0, 1.0);
      const unsigned char byte = static_cast<unsigned char>(std::lround(255.0 * clamped));
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline ImageGrid read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic != "P5") throw DataError("'" + path + "' is not a binary PGM (P5) file");
  const auto next_int = [&in, &path]() {
    // skip whitespace and '#' comment lines
    while (true) {
      const int ch = in.peek();
      if (ch == '#') {
        std::string comment;
        std::getline(in, comment);
      } else if (std::isspace(ch)) {
        in.get();
      } else {
        break;
      }
    }
    long value = -1;
    in >> value;
    if (!in || value < 0) throw DataError("'" + path + "': malformed PGM header");
    return value;
  };
  const long width = next_int();
  const long height = next_int();
  const long maxval = next_int();
  if (maxval != 255) throw DataError("'" + path + "': only maxval 255 is supported");
  in.get();  // the single whitespace byte before the raster

  ImageGrid image;
  image.pixels.resize(height, width);
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      unsigned char byte = 0;
      in.read(reinterpret_cast<char*>(&byte), 1);
      image.pixels(r, c) = static_cast<double>(byte) / 255.0;
    }
  }
  if (!in) throw DataError("'" + path + "' is truncated");
  return image;
}

// --- sweep CSV ----------------------------------------------------------------

/// Long-format CSV: axis1, axis2, metric, statistic, value, replicates.
/// Configuration (including the seed) is echoed in '#' comment lines.
inline void write_sweep_csv(const SweepResult& result, const TwoGroupConfig& base, std::ostream& out) {
  out << "# model=" << (base.model == TwoGroupModel::normal ? "normal" : "bernoulli")
      << " n=" << base.n << " m=" << base.m << " p=" << base.p << " q=" << base.q;
  if (base.model == TwoGroupModel::normal) {
    out << " mu=" << base.mu << " sigma1=" << base.sigma1 << " sigma2=" << base.sigma2;
  } else {
    out << " r0=" << base.r0 << " r1=" << base.r1;
  }
  out << " seed=" << base.seed << " replicates=" << result.replicates << '\n';
  out << "# axis1=" << result.axis1.name << " axis2=" << result.axis2.name << '\n';
  out << "axis1,axis2,metric,statistic,value,replicates\n";
  for (std::size_t i1 = 0; i1 < result.axis1.values.size(); ++i1) {
    for (std::size_t i2 = 0; i2 < result.axis2.values.size(); ++i2) {
      for (std::size_t k = 0; k < result.metrics.size(); ++k) {
        const SweepCellStat& cell = result.cell(i1, i2, k);
        const std::string prefix = format_double(result.axis1.values[i1]) + "," +
                                   format_double(result.axis2.values[i2]) + "," +
                                   to_string(result.metrics[k].tag) + ",";
        out << prefix << "T1," << format_double(cell.t1_median) << ',' << result.replicates << '\n';
        out << prefix << "T2," << format_double(cell.t2_median) << ',' << result.replicates << '\n';
      }
    }
  }
}

// --- SVM model record ----------------------------------------------------------

/// Plain-text model record. Training data is not embedded; prediction
/// recomputes kernel rows against the original training table.
inline void save_svm_model(const SvmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "semblance-svm v1\n";
  out << "kernel " << to_string(model.kernel) << '\n';
  out << "sigma " << format_double(model.params.sigma) << '\n';
  out << "degree " << model.params.degree << '\n';
  out << "scale " << format_double(model.params.scale) << '\n';
  out << "offset " << format_double(model.params.offset) << '\n';
  out << "C " << format_double(model.C) << '\n';
  out << "bias " << format_double(model.bias) << '\n';
  out << "diagonal_shift " << format_double(model.diagonal_shift) << '\n';
  out << "n " << model.alpha.size() << '\n';
  out << "alpha";
  for (Eigen::Index i = 0; i < model.alpha.size(); ++i) out << ' ' << format_double(model.alpha(i));
  out << "\nlabels";
  for (Eigen::Index i = 0; i < model.labels.size(); ++i) out << ' ' << model.labels(i);
  out << "\nsupport";
  for (const Eigen::Index i : model.support_indices) out << ' ' << i;
  out << '\n';
  if (!model.feature_weights.empty()) {
    out << "weights";
    for (const double w : model.feature_weights) out << ' ' << format_double(w);
    out << '\n';
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

inline SvmModel load_svm_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "semblance-svm v1") {
    throw DataError("'" + path + "' is not a v1 SVM model file");
  }
  SvmModel model;
  Eigen::Index n = 0;
  while (std::getline(in, line)) {
    std::istringstream splitter(line);
    std::string key;
    splitter >> key;
    if (key.empty()) continue;
    std::vector<std::string> tokens;
    std::string token;
    while (splitter >> token) tokens.push_back(token);
    const auto where = [&path, &key] { return "'" + path + "' field '" + key + "'"; };
    const auto one_double = [&]() {
      if (tokens.size() != 1) throw DataError(where() + ": expected one value");
      return parse_double(tokens[0], where());
    };
    if (key == "kernel") {
      if (tokens.size() != 1) throw DataError(where() + ": expected one value");
      model.kernel = kernel_id_from_string(tokens[0]);
    } else if (key == "sigma") model.params.sigma = one_double();
    else if (key == "degree") model.params.degree = static_cast<int>(one_double());
    else if (key == "scale") model.params.scale = one_double();
    else if (key == "offset") model.params.offset = one_double();
    else if (key == "C") model.C = one_double();
    else if (key == "bias") model.bias = one_double();
    else if (key == "diagonal_shift") model.diagonal_shift = one_double();
    else if (key == "n") {
      n = static_cast<Eigen::Index>(one_double());
      if (n < 1) throw DataError(where() + ": must be >= 1");
      model.alpha.resize(n);
      model.labels.resize(n);
    } else if (key == "alpha") {
      if (static_cast<Eigen::Index>(tokens.size()) != n) throw DataError(where() + ": wrong count");
      for (Eigen::Index i = 0; i < n; ++i) model.alpha(i) = parse_double(tokens[static_cast<std::size_t>(i)], where());
    } else if (key == "labels") {
      if (static_cast<Eigen::Index>(tokens.size()) != n) throw DataError(where() + ": wrong count");
      for (Eigen::Index i = 0; i < n; ++i) model.labels(i) = static_cast<int>(parse_double(tokens[static_cast<std::size_t>(i)], where()));
    } else if (key == "support") {
      for (const std::string& t : tokens) model.support_indices.push_back(static_cast<Eigen::Index>(parse_double(t, where())));
    } else if (key == "weights") {
      for (const std::string& t : tokens) model.feature_weights.push_back(parse_double(t, where()));
    } else {
      throw DataError("'" + path + "': unknown model field '" + key + "'");
    }
  }
  if (n == 0) throw DataError("'" + path + "': missing model size");
  return model;
}

}  // namespace semblance
