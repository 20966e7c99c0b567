/* Copyright 2026 The ntk Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NTK_DATAIO_HPP
#define NTK_DATAIO_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ntk/errors.hpp"
#include "ntk/mat.hpp"
#include "ntk/ntk_explicit.hpp"
#include "ntk/rng.hpp"
#include "ntk/training.hpp"

namespace ntk {

// ---------------------------------------------------------------------------
// IDX tensor container (big-endian magic, dimension sizes, raw uint8 data).

struct IdxTensor {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> data;
};

/// Parses an IDX byte buffer. Only the uint8 element type (0x08) is
/// supported; the payload length must match the header exactly.
inline IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw TruncatedFile("idx: fewer than 4 header bytes");
  if (bytes[0] != 0 || bytes[1] != 0) throw BadMagic("idx: first two magic bytes nonzero");
  const std::uint8_t type = bytes[2];
  if (type != 0x08) {
    // Known IDX element-type codes other than uint8.
    if (type == 0x09 || type == 0x0B || type == 0x0C || type == 0x0D || type == 0x0E) {
      throw UnsupportedElementType("idx: element type code " + std::to_string(type) +
                                   " not supported (uint8 only)");
    }
    throw BadMagic("idx: unknown element type byte");
  }
  const std::size_t ndims = bytes[3];
  if (ndims == 0) throw BadMagic("idx: zero dimensions");
  if (bytes.size() < 4 + 4 * ndims) throw TruncatedFile("idx: header truncated");

  IdxTensor tensor;
  std::size_t expected = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    const std::size_t base = 4 + 4 * d;
    const std::size_t dim = (static_cast<std::size_t>(bytes[base]) << 24) |
                            (static_cast<std::size_t>(bytes[base + 1]) << 16) |
                            (static_cast<std::size_t>(bytes[base + 2]) << 8) |
                            static_cast<std::size_t>(bytes[base + 3]);
    tensor.dims.push_back(dim);
    if (dim != 0 && expected > std::numeric_limits<std::size_t>::max() / dim) {
      throw ShapeOverflow("idx: dimension product overflows");
    }
    expected *= dim;
  }
  const std::size_t have = bytes.size() - 4 - 4 * ndims;
  if (have < expected) throw TruncatedFile("idx: payload shorter than header promises");
  if (have > expected) throw BadMagic("idx: trailing bytes after payload");
  tensor.data.assign(bytes.begin() + 4 + 4 * ndims, bytes.end());
  return tensor;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Io("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline IdxTensor read_idx_file(const std::string& path) {
  return parse_idx(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Datasets

struct Dataset {
  Mat features;             // d_0 x n, one column per datapoint
  std::vector<double> labels;  // 0/1
  bool sorted_by_class = false;
  std::vector<std::pair<std::string, std::string>> meta;
};

/// Two-class subset of an image archive: flatten, scale into [0,1], subtract
/// the per-feature mean, divide by the global scalar std. Class a columns
/// come first with label 0, class b follows with label 1.
///
/// Subsampling draws per_class indices per class from the class-filtered pool
/// ordered by original index, so interleaving classes differently upstream
/// does not change the result for a fixed seed.
inline Dataset prepare_mnist2(const IdxTensor& images, const IdxTensor& labels, int class_a,
                              int class_b, std::size_t per_class, std::uint64_t seed) {
  if (images.dims.size() != 3) throw ShapeMismatch("prepare_mnist2: images must be 3-D");
  if (labels.dims.size() != 1) throw ShapeMismatch("prepare_mnist2: labels must be 1-D");
  if (images.dims[0] != labels.dims[0]) {
    throw ShapeMismatch("prepare_mnist2: image/label counts differ");
  }
  const std::size_t pixels = images.dims[1] * images.dims[2];

  std::vector<std::size_t> pool_a, pool_b;
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    if (labels.data[i] == class_a) pool_a.push_back(i);
    if (labels.data[i] == class_b) pool_b.push_back(i);
  }
  if (pool_a.size() < per_class || pool_b.size() < per_class) {
    throw InsufficientSamples("prepare_mnist2: need " + std::to_string(per_class) +
                              " per class, have " + std::to_string(pool_a.size()) + "/" +
                              std::to_string(pool_b.size()));
  }

  Rng rng(seed);
  auto pick = [&rng, per_class](std::vector<std::size_t> pool) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t j = i + rng.next_below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(per_class);
    std::sort(pool.begin(), pool.end());
    return pool;
  };
  const std::vector<std::size_t> chosen_a = pick(pool_a);
  const std::vector<std::size_t> chosen_b = pick(pool_b);

  const std::size_t n = 2 * per_class;
  Dataset ds{Mat(pixels, n), std::vector<double>(n), true, {}};
  auto fill_column = [&](std::size_t col, std::size_t image_index) {
    const std::uint8_t* src = images.data.data() + image_index * pixels;
    double* dst = ds.features.col(col);
    for (std::size_t k = 0; k < pixels; ++k) dst[k] = static_cast<double>(src[k]) / 255.0;
  };
  for (std::size_t i = 0; i < per_class; ++i) {
    fill_column(i, chosen_a[i]);
    ds.labels[i] = 0.0;
    fill_column(per_class + i, chosen_b[i]);
    ds.labels[per_class + i] = 1.0;
  }

  // Center each feature, then divide everything by one global std.
  std::vector<double> mean(pixels, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    const double* c = ds.features.col(col);
    for (std::size_t k = 0; k < pixels; ++k) mean[k] += c[k];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    double* c = ds.features.col(col);
    for (std::size_t k = 0; k < pixels; ++k) {
      c[k] -= mean[k];
      sq += c[k] * c[k];
    }
  }
  const double stddev = std::sqrt(sq / static_cast<double>(pixels * n));
  if (stddev > 0.0) {
    for (std::size_t idx = 0; idx < ds.features.size(); ++idx) ds.features.data()[idx] /= stddev;
  }

  ds.meta = {{"source", "idx"},
             {"classes", std::to_string(class_a) + "," + std::to_string(class_b)},
             {"per_class", std::to_string(per_class)},
             {"seed", std::to_string(seed)},
             {"normalization", "div255,center-feature-mean,scale-global-std"},
             {"global_std", std::to_string(stddev)}};
  return ds;
}

/// Synthetic stand-in for the two-class image task: class 0 ~ N(-mu, I),
/// class 1 ~ N(+mu, I) with mu = separation/2 along the first axis, sorted by
/// class.
inline Dataset synth_two_gaussians(std::size_t d, std::size_t n_per_class, double separation,
                                   std::uint64_t seed) {
  if (d < 1 || n_per_class < 1) throw Error("synth_two_gaussians: d and n must be >= 1");
  const std::size_t n = 2 * n_per_class;
  Dataset ds{Mat(d, n), std::vector<double>(n), true, {}};
  Rng rng(seed);
  const double mu = separation / 2.0;
  for (std::size_t col = 0; col < n; ++col) {
    const bool second_class = col >= n_per_class;
    double* c = ds.features.col(col);
    for (std::size_t k = 0; k < d; ++k) c[k] = rng.next_normal();
    c[0] += second_class ? mu : -mu;
    ds.labels[col] = second_class ? 1.0 : 0.0;
  }
  ds.meta = {{"source", "synth-two-gaussians"},
             {"d", std::to_string(d)},
             {"n_per_class", std::to_string(n_per_class)},
             {"separation", std::to_string(separation)},
             {"seed", std::to_string(seed)}};
  return ds;
}

// ---------------------------------------------------------------------------
// Matrix persistence: NTKMAT01 binary (explicit little-endian) and CSV.

namespace detail {

inline void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xFF));
}

inline std::uint64_t get_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

inline void put_f64_le(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64_le(out, bits);
}

inline double get_f64_le(const std::uint8_t* p) {
  const std::uint64_t bits = get_u64_le(p);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

inline constexpr char kMatMagic[8] = {'N', 'T', 'K', 'M', 'A', 'T', '0', '1'};

}  // namespace detail

inline void write_matrix_binary(const std::string& path, const Mat& m) {
  std::vector<std::uint8_t> out;
  out.reserve(24 + 8 * m.size());
  out.insert(out.end(), detail::kMatMagic, detail::kMatMagic + 8);
  detail::put_u64_le(out, m.rows());
  detail::put_u64_le(out, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) detail::put_f64_le(out, m(i, j));
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Io("cannot open '" + path + "' for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw Io("write failed for '" + path + "'");
}

inline Mat read_matrix_binary(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() < 24) throw TruncatedFile("'" + path + "': header truncated");
  if (std::memcmp(bytes.data(), detail::kMatMagic, 8) != 0) {
    throw BadMagic("'" + path + "' is not a NTKMAT01 file");
  }
  const std::uint64_t rows = detail::get_u64_le(bytes.data() + 8);
  const std::uint64_t cols = detail::get_u64_le(bytes.data() + 16);
  if (rows == 0 || cols == 0) throw BadMagic("'" + path + "': zero dimension");
  if (cols > std::numeric_limits<std::size_t>::max() / 8 / rows) {
    throw ShapeOverflow("'" + path + "': shape overflows");
  }
  const std::size_t need = static_cast<std::size_t>(rows * cols) * 8;
  if (bytes.size() - 24 < need) throw TruncatedFile("'" + path + "': payload truncated");
  if (bytes.size() - 24 > need) throw BadMagic("'" + path + "': trailing bytes");
  Mat m(rows, cols);
  const std::uint8_t* p = bytes.data() + 24;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j, p += 8) m(i, j) = detail::get_f64_le(p);
  return m;
}

inline void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Io("cannot open '" + path + "' for writing");
  char buf[40];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      file << buf << (j + 1 == m.cols() ? "" : ",");
    }
    file << "\n";
  }
  if (!file) throw Io("write failed for '" + path + "'");
}

inline Mat read_matrix_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Io("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      const std::string field =
          line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str()) throw Io("'" + path + "': unparsable field '" + field + "'");
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Io("'" + path + "': ragged csv");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Io("'" + path + "': empty csv");
  Mat m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

/// Dispatch by extension: .csv is text, everything else is NTKMAT01 binary.
inline void write_matrix(const std::string& path, const Mat& m) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    write_matrix_csv(path, m);
  } else {
    write_matrix_binary(path, m);
  }
}

inline Mat read_matrix(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    return read_matrix_csv(path);
  }
  return read_matrix_binary(path);
}

// ---------------------------------------------------------------------------
// Flat key=value metadata files.

inline void write_metadata(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Io("cannot open '" + path + "' for writing");
  for (const auto& [key, value] : entries) file << key << "=" << value << "\n";
  if (!file) throw Io("write failed for '" + path + "'");
}

inline std::vector<std::pair<std::string, std::string>> read_metadata(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Io("cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw Io("'" + path + "': malformed metadata line");
    entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Labels and dataset directories.

inline void write_labels(const std::string& path, const std::vector<double>& labels) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Io("cannot open '" + path + "' for writing");
  char buf[40];
  for (const double v : labels) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    file << buf << "\n";
  }
  if (!file) throw Io("write failed for '" + path + "'");
}

inline std::vector<double> read_labels(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Io("cannot open '" + path + "'");
  std::vector<double> labels;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) throw Io("'" + path + "': unparsable label '" + line + "'");
    labels.push_back(v);
  }
  return labels;
}

inline void write_dataset(const std::string& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  write_matrix_binary(dir + "/features.ntkmat", ds.features);
  write_labels(dir + "/labels.txt", ds.labels);
  auto meta = ds.meta;
  meta.emplace_back("sorted_by_class", ds.sorted_by_class ? "1" : "0");
  write_metadata(dir + "/meta.txt", meta);
}

inline Dataset read_dataset(const std::string& dir) {
  Dataset ds{read_matrix_binary(dir + "/features.ntkmat"), read_labels(dir + "/labels.txt"),
             false, {}};
  if (ds.labels.size() != ds.features.cols()) {
    throw ShapeMismatch("dataset '" + dir + "': label count does not match columns");
  }
  if (std::filesystem::exists(dir + "/meta.txt")) {
    ds.meta = read_metadata(dir + "/meta.txt");
    for (const auto& [key, value] : ds.meta)
      if (key == "sorted_by_class") ds.sorted_by_class = value == "1";
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Snapshot series persistence: one step-numbered directory per record.

inline std::string snapshot_dir_name(std::size_t step) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "step-%08zu", step);
  return buf;
}

inline void write_snapshot_series(
    const std::string& dir, const SnapshotSeries& series,
    const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::filesystem::create_directories(dir);
  write_metadata(dir + "/meta.txt", metadata);
  char buf[40];
  for (const SnapshotRecord& record : series.records) {
    const std::string rdir = dir + "/" + snapshot_dir_name(record.step);
    std::filesystem::create_directories(rdir);
    std::vector<std::pair<std::string, std::string>> info;
    info.emplace_back("step", std::to_string(record.step));
    std::snprintf(buf, sizeof buf, "%.17g", record.loss);
    info.emplace_back("loss", buf);
    if (record.components) {
      std::string names;
      for (const auto& [name, _] : record.components->items) {
        if (!names.empty()) names += ",";
        names += name;
      }
      info.emplace_back("components", names);
    }
    write_metadata(rdir + "/record.txt", info);
    write_matrix_binary(rdir + "/full.ntkmat", record.full);
    if (record.components) {
      for (const auto& [name, m] : record.components->items)
        write_matrix_binary(rdir + "/" + name + ".ntkmat", m);
    }
  }
}

inline SnapshotSeries read_snapshot_series(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) throw Io("'" + dir + "' is not a directory");
  std::vector<std::string> record_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("step-", 0) == 0) {
      record_dirs.push_back(entry.path().string());
    }
  }
  std::sort(record_dirs.begin(), record_dirs.end());

  SnapshotSeries series;
  for (const std::string& rdir : record_dirs) {
    std::size_t step = 0;
    double loss = 0.0;
    std::optional<std::string> component_names;
    for (const auto& [key, value] : read_metadata(rdir + "/record.txt")) {
      if (key == "step") step = std::stoull(value);
      if (key == "loss") loss = std::strtod(value.c_str(), nullptr);
      if (key == "components") component_names = value;
    }
    SnapshotRecord record(step, loss, read_matrix_binary(rdir + "/full.ntkmat"));
    if (component_names) {
      NTKComponents components;
      std::size_t pos = 0;
      while (pos <= component_names->size() && !component_names->empty()) {
        const std::size_t comma = component_names->find(',', pos);
        const std::string name = component_names->substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        components.add(name, read_matrix_binary(rdir + "/" + name + ".ntkmat"));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      record.components = std::move(components);
    }
    series.records.push_back(std::move(record));
  }
  return series;
}

}  // namespace ntk

#endif  // NTK_DATAIO_HPP
