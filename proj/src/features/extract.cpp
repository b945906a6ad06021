#include <algorithm>

#include "internal.hpp"
#include "rd/error.hpp"

namespace rd::features {

namespace {
constexpr int kRadonAngles = 15;
constexpr int kRadonOffsets = 15;
constexpr int kTensorBins = 15;
}  // namespace

FeatureExtractor::FeatureExtractor(const imaging::WindowGrid& grid, FlowParams flow)
    : grid_(grid), flow_params_(flow), layout_(FeatureLayout::full(grid.count())) {
  if (grid.win_w < 5 || grid.win_h < 5) fail(ErrorCode::DegenerateWindow, "feature windows must be at least 5x5");
  radon_lines_ = detail::radon_lines(grid.win_w, grid.win_h, grid.image_width, kRadonAngles, kRadonOffsets);
}

std::vector<double> FeatureExtractor::extract(const imaging::Raster& prev, const imaging::Raster& cur,
                                              const ControlContext& ctx) const {
  if (cur.width() != grid_.image_width || cur.height() != grid_.image_height || prev.width() != cur.width() ||
      prev.height() != cur.height()) {
    fail(ErrorCode::DimensionMismatch, "rasters do not match the window grid geometry");
  }
  const auto& luma = cur.luma();
  const auto flow = dense_flow(prev.luma(), luma, flow_params_);
  const auto tensors = detail::tensor_map(luma, kTensorBins);
  const auto laws = detail::laws_map(cur);

  std::vector<double> out(layout_.total_dim(), 0.0);
  const float* Y = luma.data().data();
  for (int w = 0; w < grid_.count(); ++w) {
    const auto rect = grid_.window(w);
    double* slot = out.data() + static_cast<std::size_t>(w) * (kRadonDim + kStructureTensorDim + kLawsDim + kFlowDim);
    const float* origin = Y + static_cast<std::size_t>(rect.y) * grid_.image_width + rect.x;
    detail::radon_top2(origin, radon_lines_, kRadonAngles, kRadonOffsets, slot);
    slot += kRadonDim;
    detail::accumulate_tensor(tensors, rect, kTensorBins, slot);
    slot += kStructureTensorDim;
    detail::accumulate_laws(laws, rect, slot);
    slot += kLawsDim;
    const auto fl = flow_features(flow, rect);
    std::copy(fl.begin(), fl.end(), slot);
  }
  double* nv = out.data() + (out.size() - kNonVisualDim);
  for (std::size_t k = 0; k < kHistoryLength; ++k) nv[k] = ctx.history[k];
  nv[kHistoryLength] = ctx.drift;
  nv[kHistoryLength + 1] = ctx.yaw_dev;
  return out;
}

FeatureVector extract(const imaging::Raster& prev, const imaging::Raster& cur, const ControlContext& ctx,
                      const imaging::WindowGrid& grid) {
  FeatureExtractor ex(grid);
  return FeatureVector{ex.extract(prev, cur, ctx), ex.layout()};
}

}  // namespace rd::features
