#include <cmath>

#include "internal.hpp"
#include "rd/error.hpp"

namespace rd::features {

namespace detail {

namespace {

constexpr double kLevel[3] = {1.0, 2.0, 1.0};
constexpr double kEdge[3] = {-1.0, 0.0, 1.0};
constexpr double kSpot[3] = {-1.0, 2.0, -1.0};

// Horizontal 3-tap pass, defined for x in [1, w-2].
std::vector<double> row_pass(const imaging::Plane& p, const double* k) {
  const int w = p.width();
  const int h = p.height();
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  const float* I = p.data().data();
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * w;
    for (int x = 1; x < w - 1; ++x) {
      out[row + x] = k[0] * I[row + x - 1] + k[1] * I[row + x] + k[2] * I[row + x + 1];
    }
  }
  return out;
}

// Vertical 3-tap pass over a row-filtered image, absolute value, valid interior.
std::vector<double> abs_col_pass(const std::vector<double>& r, int w, int h, const double* k) {
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 1; y < h - 1; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * w;
    for (int x = 1; x < w - 1; ++x) {
      out[row + x] = std::abs(k[0] * r[row - w + x] + k[1] * r[row + x] + k[2] * r[row + w + x]);
    }
  }
  return out;
}

}  // namespace

LawsMap laws_map(const imaging::Raster& raster) {
  const int w = raster.width();
  const int h = raster.height();
  LawsMap map;
  map.width = w;
  map.height = h;
  const auto& Y = raster.plane(imaging::Channel::Y);
  const auto yl = row_pass(Y, kLevel);
  const auto ye = row_pass(Y, kEdge);
  const auto ys = row_pass(Y, kSpot);
  const auto crl = row_pass(raster.plane(imaging::Channel::Cr), kLevel);
  const auto cbl = row_pass(raster.plane(imaging::Channel::Cb), kLevel);
  // Mask "AB" is the outer product of A (vertical) and B (horizontal).
  map.response[0] = abs_col_pass(yl, w, h, kLevel);
  map.response[1] = abs_col_pass(crl, w, h, kLevel);
  map.response[2] = abs_col_pass(cbl, w, h, kLevel);
  map.response[3] = abs_col_pass(ye, w, h, kLevel);
  map.response[4] = abs_col_pass(ys, w, h, kLevel);
  map.response[5] = abs_col_pass(ye, w, h, kEdge);
  map.response[6] = abs_col_pass(ys, w, h, kEdge);
  map.response[7] = abs_col_pass(ys, w, h, kSpot);
  return map;
}

void accumulate_laws(const LawsMap& map, const imaging::Rect& window, double* out) {
  const double count = static_cast<double>(window.width - 2) * static_cast<double>(window.height - 2);
  for (std::size_t m = 0; m < kLawsDim; ++m) {
    const auto& r = map.response[m];
    double sum = 0.0;
    for (int y = window.y + 1; y < window.y + window.height - 1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * map.width;
      for (int x = window.x + 1; x < window.x + window.width - 1; ++x) sum += r[row + x];
    }
    out[m] = sum / count;
  }
}

}  // namespace detail

std::vector<double> laws_features(const imaging::Raster& window) {
  if (window.width() < 3 || window.height() < 3) fail(ErrorCode::DegenerateWindow, "Laws masks need at least 3x3");
  std::vector<double> out(kLawsDim);
  const auto map = detail::laws_map(window);
  detail::accumulate_laws(map, imaging::Rect{0, 0, window.width(), window.height()}, out.data());
  return out;
}

}  // namespace rd::features
