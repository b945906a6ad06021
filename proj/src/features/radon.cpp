#include <algorithm>
#include <cmath>
#include <numbers>

#include "internal.hpp"
#include "rd/error.hpp"

namespace rd::features {

namespace detail {

// Lines are parameterized by their direction theta (from the x axis, bin
// centers over [0, pi)) and signed offset s from the window center (bin
// centers over +-diagonal/2). Samples are taken at unit steps along the line
// and snapped to the nearest pixel.
std::vector<std::vector<int>> radon_lines(int w, int h, int stride, int n_theta, int n_s) {
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double diag = std::sqrt(static_cast<double>(w) * w + static_cast<double>(h) * h);
  const int half_len = static_cast<int>(std::ceil(0.5 * diag));
  std::vector<std::vector<int>> lines;
  lines.reserve(static_cast<std::size_t>(n_theta) * n_s);
  for (int k = 0; k < n_theta; ++k) {
    const double theta = (k + 0.5) * std::numbers::pi / n_theta;
    const double dx = std::cos(theta);
    const double dy = std::sin(theta);
    for (int j = 0; j < n_s; ++j) {
      const double s = -0.5 * diag + (j + 0.5) * diag / n_s;
      const double ox = cx - s * dy;
      const double oy = cy + s * dx;
      std::vector<int> offsets;
      for (int t = -half_len; t <= half_len; ++t) {
        const int px = static_cast<int>(std::floor(ox + t * dx + 0.5));
        const int py = static_cast<int>(std::floor(oy + t * dy + 0.5));
        if (px < 0 || py < 0 || px >= w || py >= h) continue;
        offsets.push_back(py * stride + px);
      }
      lines.push_back(std::move(offsets));
    }
  }
  return lines;
}

void radon_top2(const float* origin, const std::vector<std::vector<int>>& lines, int n_theta, int n_s,
                double* out) {
  for (int k = 0; k < n_theta; ++k) {
    double best = -INFINITY;
    double second = -INFINITY;
    for (int j = 0; j < n_s; ++j) {
      const auto& line = lines[static_cast<std::size_t>(k) * n_s + j];
      double value = 0.0;
      if (!line.empty()) {
        double sum = 0.0;
        for (int off : line) sum += origin[off];
        value = sum / static_cast<double>(line.size());
      }
      if (value > best) {
        second = best;
        best = value;
      } else if (value > second) {
        second = value;
      }
    }
    out[2 * k] = best;
    out[2 * k + 1] = n_s > 1 ? second : best;
  }
}

}  // namespace detail

std::vector<double> radon_features(const imaging::Plane& window, int n_theta, int n_s) {
  if (window.width() < 2 || window.height() < 2) fail(ErrorCode::DegenerateWindow, "Radon needs at least 2x2");
  if (n_theta <= 0 || n_s <= 0) fail(ErrorCode::InvalidArgument, "Radon bin counts must be positive");
  const auto lines = detail::radon_lines(window.width(), window.height(), window.width(), n_theta, n_s);
  std::vector<double> out(2 * static_cast<std::size_t>(n_theta));
  detail::radon_top2(window.data().data(), lines, n_theta, n_s, out.data());
  return out;
}

}  // namespace rd::features
