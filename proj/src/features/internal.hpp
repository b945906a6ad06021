#pragma once

#include <array>
#include <vector>

#include "rd/features.hpp"
#include "rd/imaging.hpp"

namespace rd::features::detail {

// Sample offsets (y * stride + x, relative to the window origin) for every
// (theta, s) line of a w x h window, theta-major.
std::vector<std::vector<int>> radon_lines(int w, int h, int stride, int n_theta, int n_s);

// Top-two line means per theta, written to out[2 * n_theta].
void radon_top2(const float* origin, const std::vector<std::vector<int>>& lines, int n_theta, int n_s,
                double* out);

// Per-pixel orientation bin and tensor trace. Defined on [2, w-3] x [2, h-3];
// other pixels hold bin -1.
struct TensorMap {
  int width = 0;
  int height = 0;
  std::vector<int> bin;
  std::vector<double> trace;
};

TensorMap tensor_map(const imaging::Plane& luma, int n_bins);

// Accumulates the map over a window's valid interior (row-major order).
void accumulate_tensor(const TensorMap& map, const imaging::Rect& window, int n_bins, double* out);

// Absolute Laws responses in output order (LL.Y, LL.Cr, LL.Cb, LE, LS, EE,
// ES, SS), each defined on [1, w-2] x [1, h-2].
struct LawsMap {
  int width = 0;
  int height = 0;
  std::array<std::vector<double>, kLawsDim> response;
};

LawsMap laws_map(const imaging::Raster& raster);

void accumulate_laws(const LawsMap& map, const imaging::Rect& window, double* out);

}  // namespace rd::features::detail
