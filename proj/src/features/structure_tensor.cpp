#include <cmath>
#include <numbers>

#include "internal.hpp"
#include "rd/error.hpp"

namespace rd::features {

namespace detail {

TensorMap tensor_map(const imaging::Plane& luma, int n_bins) {
  const int w = luma.width();
  const int h = luma.height();
  TensorMap map;
  map.width = w;
  map.height = h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  map.bin.assign(n, -1);
  map.trace.assign(n, 0.0);
  if (w < 5 || h < 5) return map;

  // Tensor products at interior pixels (central differences, no padding).
  std::vector<double> xx(n, 0.0), xy(n, 0.0), yy(n, 0.0);
  const float* I = luma.data().data();
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double gx = 0.5 * (static_cast<double>(I[i + 1]) - static_cast<double>(I[i - 1]));
      const double gy = 0.5 * (static_cast<double>(I[i + w]) - static_cast<double>(I[i - w]));
      xx[i] = gx * gx;
      xy[i] = gx * gy;
      yy[i] = gy * gy;
    }
  }
  // 3x3 box mean, valid where the whole neighbourhood has gradients.
  for (int y = 2; y < h - 2; ++y) {
    for (int x = 2; x < w - 2; ++x) {
      double a = 0.0, b = 0.0, c = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const std::size_t row = static_cast<std::size_t>(y + dy) * w;
        for (int dx = -1; dx <= 1; ++dx) {
          a += xx[row + x + dx];
          b += xy[row + x + dx];
          c += yy[row + x + dx];
        }
      }
      a /= 9.0;
      b /= 9.0;
      c /= 9.0;
      // Dominant eigenvector orientation in [0, pi); trace = l1 + l2.
      double phi = 0.5 * std::atan2(2.0 * b, a - c);
      if (phi < 0.0) phi += std::numbers::pi;
      int bin = static_cast<int>(std::floor(phi / std::numbers::pi * n_bins));
      if (bin >= n_bins) bin = n_bins - 1;
      if (bin < 0) bin = 0;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      map.bin[i] = bin;
      map.trace[i] = a + c;
    }
  }
  return map;
}

void accumulate_tensor(const TensorMap& map, const imaging::Rect& window, int n_bins, double* out) {
  for (int b = 0; b < n_bins; ++b) out[b] = 0.0;
  for (int y = window.y + 2; y < window.y + window.height - 2; ++y) {
    for (int x = window.x + 2; x < window.x + window.width - 2; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
      out[map.bin[i]] += map.trace[i];
    }
  }
}

}  // namespace detail

std::vector<double> structure_tensor_features(const imaging::Plane& window, int n_bins) {
  if (window.width() < 3 || window.height() < 3) {
    fail(ErrorCode::DegenerateWindow, "structure tensor needs at least 3x3");
  }
  if (n_bins <= 0) fail(ErrorCode::InvalidArgument, "bin count must be positive");
  std::vector<double> out(static_cast<std::size_t>(n_bins), 0.0);
  const auto map = detail::tensor_map(window, n_bins);
  detail::accumulate_tensor(map, imaging::Rect{0, 0, window.width(), window.height()}, n_bins, out.data());
  return out;
}

}  // namespace rd::features
