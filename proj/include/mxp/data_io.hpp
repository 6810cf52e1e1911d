#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mxp/dataset.hpp"
#include "mxp/tensor.hpp"

namespace mxp {

namespace detail {

inline std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open file: " + path);
  f.seekg(0, std::ios::end);
  const auto n = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  std::vector<std::uint8_t> bytes(n);
  if (n > 0) f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (!f) throw FormatError("short read: " + path);
  return bytes;
}

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError("IDX header truncated");
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace detail

// IDX pair loader: big-endian magics 0x00000803 (images) and 0x00000801
// (labels), unsigned-byte pixels scaled by 1/255.
inline Dataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
  const auto img = detail::read_all_bytes(images_path);
  const auto lab = detail::read_all_bytes(labels_path);

  if (detail::be32(img, 0) != 0x00000803u) {
    throw FormatError("IDX images: bad magic in " + images_path);
  }
  if (detail::be32(lab, 0) != 0x00000801u) {
    throw FormatError("IDX labels: bad magic in " + labels_path);
  }
  const std::size_t n = detail::be32(img, 4);
  const std::size_t rows = detail::be32(img, 8);
  const std::size_t cols = detail::be32(img, 12);
  if (detail::be32(lab, 4) != n) {
    throw FormatError("IDX: image count " + std::to_string(n) +
                      " does not match label count " +
                      std::to_string(detail::be32(lab, 4)));
  }
  const std::size_t pixels = n * rows * cols;
  if (img.size() != 16 + pixels) {
    throw FormatError("IDX images: payload length mismatch in " + images_path);
  }
  if (lab.size() != 8 + n) {
    throw FormatError("IDX labels: payload length mismatch in " + labels_path);
  }

  Dataset d;
  d.channels = 1;
  d.rows = rows;
  d.cols = cols;
  d.images = Tensor({n, rows * cols});
  for (std::size_t i = 0; i < pixels; ++i) {
    d.images[i] = img[16 + i] / 255.0;
  }
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (lab[8 + i] >= 10) throw FormatError("IDX labels: label out of range");
    d.labels[i] = lab[8 + i];
  }
  return d;
}

// CIFAR-10 binary batches: 3073-byte records, 1 label byte + 3072
// channel-major pixels, shaped N×3×32×32.
inline Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
  Dataset d;
  d.channels = 3;
  d.rows = 32;
  d.cols = 32;
  std::vector<double> pixels;
  for (const auto& path : batch_paths) {
    const auto bytes = detail::read_all_bytes(path);
    if (bytes.size() % 3073 != 0) {
      throw FormatError("CIFAR-10: file length not a multiple of 3073: " + path);
    }
    const std::size_t n = bytes.size() / 3073;
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint8_t label = bytes[r * 3073];
      if (label >= 10) throw FormatError("CIFAR-10: label out of range");
      d.labels.push_back(label);
      for (std::size_t i = 0; i < 3072; ++i) {
        pixels.push_back(bytes[r * 3073 + 1 + i] / 255.0);
      }
    }
  }
  d.images = Tensor::from({d.labels.size(), 3072}, std::move(pixels));
  return d;
}

// Binary PGM (P5), per-image min-max normalization to [0,255]; a constant
// image maps to mid-gray.
inline void export_pgm(const Tensor& image, const std::string& path) {
  if (image.rank() != 2) throw DimensionError("export_pgm: expects a 2-D tensor");
  const std::size_t H = image.dim(0), W = image.dim(1);
  double lo = image[0], hi = image[0];
  for (std::size_t i = 0; i < image.size(); ++i) {
    lo = std::min(lo, image[i]);
    hi = std::max(hi, image[i]);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("export_pgm: cannot open " + path);
  f << "P5\n" << W << " " << H << "\n255\n";
  for (std::size_t i = 0; i < image.size(); ++i) {
    int v = 128;
    if (hi > lo) {
      v = static_cast<int>(std::lround((image[i] - lo) / (hi - lo) * 255.0));
    }
    f.put(static_cast<char>(v));
  }
  if (!f) throw FormatError("export_pgm: write failed for " + path);
}

// Rectangular string table, header row first.
using CsvTable = std::vector<std::vector<std::string>>;

inline std::string csv_format(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

inline void export_csv(const CsvTable& table, const std::string& path) {
  if (table.empty()) throw ArgumentError("export_csv: table needs a header row");
  const std::size_t width = table.front().size();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("export_csv: cannot open " + path);
  for (const auto& row : table) {
    if (row.size() != width) throw ArgumentError("export_csv: ragged row");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) f << ",";
      f << row[i];
    }
    f << "\n";
  }
}

}  // namespace mxp
