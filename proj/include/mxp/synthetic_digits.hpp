#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mxp/dataset.hpp"
#include "mxp/tensor.hpp"

namespace mxp {

// Procedural 28×28 digit renderer. Each digit is a set of strokes (polylines,
// with curves sampled as polylines); every sample applies a random affine
// distortion, stroke-width jitter, contrast scaling and pixel noise. The
// result is an MNIST-shaped classification task generated entirely from a
// seed, for use where the real files are not available.

namespace synth {

struct Pt {
  double x, y;
};
using Stroke = std::vector<Pt>;

inline Stroke arc(double cx, double cy, double rx, double ry, double a0,
                  double a1, int n = 16) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * i / n;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

// Glyphs live in a unit box, x right, y down.
inline const std::vector<std::vector<Stroke>>& glyphs() {
  static const std::vector<std::vector<Stroke>> g = [] {
    constexpr double pi = 3.14159265358979323846;
    std::vector<std::vector<Stroke>> v(10);
    v[0] = {arc(0.5, 0.5, 0.32, 0.42, 0, 2 * pi, 28)};
    v[1] = {{{0.55, 0.08}, {0.55, 0.92}}, {{0.38, 0.24}, {0.55, 0.08}}};
    v[2] = {arc(0.5, 0.3, 0.3, 0.22, -pi, 0.35 * pi, 18),
            {{0.72, 0.45}, {0.22, 0.9}},
            {{0.22, 0.9}, {0.78, 0.9}}};
    v[3] = {arc(0.45, 0.28, 0.28, 0.2, -0.8 * pi, 0.5 * pi, 16),
            arc(0.45, 0.7, 0.32, 0.22, -0.5 * pi, 0.85 * pi, 16)};
    v[4] = {{{0.62, 0.08}, {0.62, 0.92}},
            {{0.62, 0.08}, {0.2, 0.62}},
            {{0.2, 0.62}, {0.85, 0.62}}};
    v[5] = {{{0.75, 0.1}, {0.3, 0.1}},
            {{0.3, 0.1}, {0.28, 0.45}},
            arc(0.48, 0.66, 0.28, 0.24, -0.6 * pi, 0.75 * pi, 18)};
    v[6] = {arc(0.52, 0.66, 0.26, 0.24, 0, 2 * pi, 20),
            arc(0.62, 0.42, 0.46, 0.52, 0.8 * pi, 1.25 * pi, 12)};
    v[7] = {{{0.2, 0.1}, {0.8, 0.1}}, {{0.8, 0.1}, {0.42, 0.92}}};
    v[8] = {arc(0.5, 0.3, 0.24, 0.2, 0, 2 * pi, 20),
            arc(0.5, 0.72, 0.28, 0.22, 0, 2 * pi, 20)};
    v[9] = {arc(0.48, 0.34, 0.26, 0.24, 0, 2 * pi, 20),
            arc(0.38, 0.58, 0.46, 0.52, -0.25 * pi, 0.2 * pi, 12)};
    return v;
  }();
  return g;
}

inline double dist_to_segment(double px, double py, const Pt& a, const Pt& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = px - a.x, wy = py - a.y;
  const double vv = vx * vx + vy * vy;
  double t = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

inline double gauss(SeededRng& rng) {
  // Box-Muller
  const double u1 = std::max(rng.next_double(), 1e-12);
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace synth

// Renders one 28×28 digit image into `out` (length 784), values in [0,1].
inline void render_digit(std::size_t digit, SeededRng& rng,
                         std::span<double> out) {
  using namespace synth;
  constexpr int N = 28;
  const auto& strokes = glyphs().at(digit);

  const double angle = (rng.next_double() - 0.5) * 0.5;   // ±0.25 rad
  const double scale = 0.78 + rng.next_double() * 0.34;
  const double shear = (rng.next_double() - 0.5) * 0.3;
  const double tx = (rng.next_double() - 0.5) * 5.0;
  const double ty = (rng.next_double() - 0.5) * 5.0;
  const double radius = 1.0 + rng.next_double() * 0.9;    // stroke half-width, px
  const double contrast = 0.65 + rng.next_double() * 0.35;
  const double noise = 0.06 + rng.next_double() * 0.05;

  const double ca = std::cos(angle), sa = std::sin(angle);
  auto to_px = [&](const Pt& p) {
    // center, shear, rotate, scale to a 20px glyph box, then place
    const double ux = (p.x - 0.5) + shear * (p.y - 0.5);
    const double uy = p.y - 0.5;
    const double rx = ca * ux - sa * uy;
    const double ry = sa * ux + ca * uy;
    return Pt{14.0 + tx + 20.0 * scale * rx, 14.0 + ty + 20.0 * scale * ry};
  };

  std::vector<std::pair<Pt, Pt>> segs;
  for (const auto& s : strokes) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      segs.emplace_back(to_px(s[i]), to_px(s[i + 1]));
    }
  }

  for (int r = 0; r < N; ++r) {
    for (int c = 0; c < N; ++c) {
      double d = 1e9;
      for (const auto& [a, b] : segs) {
        d = std::min(d, dist_to_segment(c + 0.5, r + 0.5, a, b));
      }
      double v = std::clamp(1.0 - (d - radius) / 1.2, 0.0, 1.0) * contrast;
      v += noise * gauss(rng);
      out[r * N + c] = std::clamp(v, 0.0, 1.0);
    }
  }
}

// A balanced-by-draw dataset of n rendered digits, fully seed-determined.
inline Dataset make_synthetic_digits(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  Dataset d;
  d.channels = 1;
  d.rows = 28;
  d.cols = 28;
  d.images = Tensor({n, 784});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t digit = rng.uniform_index(10);
    d.labels[i] = digit;
    render_digit(digit, rng, {d.images.data() + i * 784, 784});
  }
  return d;
}

// IDX pair writer (big-endian header, byte pixels); inverse of load_idx up to
// pixel quantization.
inline void write_idx(const Dataset& d, const std::string& images_path,
                      const std::string& labels_path) {
  auto be32 = [](std::ofstream& f, std::uint32_t v) {
    for (int b = 3; b >= 0; --b) f.put(static_cast<char>((v >> (8 * b)) & 0xff));
  };
  std::ofstream fi(images_path, std::ios::binary);
  if (!fi) throw FormatError("write_idx: cannot open " + images_path);
  be32(fi, 0x00000803u);
  be32(fi, static_cast<std::uint32_t>(d.size()));
  be32(fi, static_cast<std::uint32_t>(d.rows));
  be32(fi, static_cast<std::uint32_t>(d.cols));
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    fi.put(static_cast<char>(std::lround(std::clamp(d.images[i], 0.0, 1.0) * 255.0)));
  }
  std::ofstream fl(labels_path, std::ios::binary);
  if (!fl) throw FormatError("write_idx: cannot open " + labels_path);
  be32(fl, 0x00000801u);
  be32(fl, static_cast<std::uint32_t>(d.size()));
  for (std::size_t l : d.labels) fl.put(static_cast<char>(l));
  if (!fi || !fl) throw FormatError("write_idx: write failed");
}

}  // namespace mxp
