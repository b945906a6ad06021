#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rd/imaging.hpp"

namespace rd::features {

enum class Group { Radon = 0, StructureTensor = 1, Laws = 2, Flow = 3, NonVisual = 4 };

inline constexpr std::array<Group, 5> kAllGroups = {Group::Radon, Group::StructureTensor, Group::Laws,
                                                     Group::Flow, Group::NonVisual};
inline constexpr std::array<Group, 4> kVisualGroups = {Group::Radon, Group::StructureTensor, Group::Laws,
                                                       Group::Flow};

inline constexpr std::size_t kRadonDim = 30;
inline constexpr std::size_t kStructureTensorDim = 15;
inline constexpr std::size_t kLawsDim = 8;
inline constexpr std::size_t kFlowDim = 5;
inline constexpr std::size_t kNonVisualDim = 9;
inline constexpr std::size_t kHistoryLength = 7;

std::size_t group_dim(Group g);
std::string_view group_name(Group g);
// Accepts the names returned by group_name (case-insensitive); throws UnknownGroup.
Group parse_group(std::string_view name);

struct LayoutEntry {
  Group group = Group::Radon;
  int window = -1;  // -1 for the non-visual block
  std::size_t start = 0;
  std::size_t length = 0;

  bool operator==(const LayoutEntry&) const = default;
};

// Maps (group, window) to contiguous index ranges of the flat feature vector.
// Per window the included visual groups appear in canonical order, then the
// non-visual block (if included) closes the vector.
class FeatureLayout {
public:
  FeatureLayout() = default;
  FeatureLayout(int n_windows, std::vector<Group> groups);

  static FeatureLayout full(int n_windows) {
    return FeatureLayout(n_windows, std::vector<Group>(kAllGroups.begin(), kAllGroups.end()));
  }

  int n_windows() const { return n_windows_; }
  const std::vector<Group>& groups() const { return groups_; }
  const std::vector<LayoutEntry>& entries() const { return entries_; }
  std::size_t total_dim() const { return total_dim_; }
  bool has_group(Group g) const;
  // Total number of dimensions belonging to g across all windows.
  std::size_t group_total(Group g) const;
  const LayoutEntry* find(Group g, int window) const;

  bool operator==(const FeatureLayout& o) const {
    return n_windows_ == o.n_windows_ && groups_ == o.groups_;
  }

private:
  int n_windows_ = 0;
  std::vector<Group> groups_;
  std::vector<LayoutEntry> entries_;
  std::size_t total_dim_ = 0;
};

struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;
  std::vector<unsigned char> valid;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

inline constexpr std::array<double, kHistoryLength> kHistoryDecay = {0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95};

struct ControlContext {
  std::array<double, kHistoryLength> history{};
  double drift = 0.0;    // lateral velocity, m/s
  double yaw_dev = 0.0;  // radians from the initial heading

  bool operator==(const ControlContext&) const = default;
};

std::vector<double> radon_features(const imaging::Plane& window, int n_theta = 15, int n_s = 15);
std::vector<double> structure_tensor_features(const imaging::Plane& window, int n_bins = 15);
std::vector<double> laws_features(const imaging::Raster& window);

struct FlowParams {
  int levels = 3;
  int grid_step = 4;
  int patch_radius = 2;  // 5x5 patches
  int iterations = 10;
  double min_eigenvalue = 1e-6;
  double convergence = 1e-3;  // px; iteration stops once the update is smaller
};

FlowField dense_flow(const imaging::Plane& prev, const imaging::Plane& cur, const FlowParams& params = {});
std::vector<double> flow_features(const FlowField& flow, const imaging::Rect& window);

ControlContext update_context(const ControlContext& ctx, double executed_command, double lateral_velocity,
                              double yaw_dev);

struct FeatureVector {
  std::vector<double> values;
  FeatureLayout layout;
};

// Precomputes per-geometry tables once so repeated extraction is cheap. The
// output for each slice equals the corresponding per-window function applied
// to the cropped window, bit for bit.
class FeatureExtractor {
public:
  explicit FeatureExtractor(const imaging::WindowGrid& grid, FlowParams flow = {});

  const imaging::WindowGrid& grid() const { return grid_; }
  const FeatureLayout& layout() const { return layout_; }

  std::vector<double> extract(const imaging::Raster& prev, const imaging::Raster& cur,
                              const ControlContext& ctx) const;

private:
  imaging::WindowGrid grid_;
  FlowParams flow_params_;
  FeatureLayout layout_;
  std::vector<std::vector<int>> radon_lines_;  // n_theta * n_s offset lists, theta-major
};

FeatureVector extract(const imaging::Raster& prev, const imaging::Raster& cur, const ControlContext& ctx,
                      const imaging::WindowGrid& grid);

}  // namespace rd::features
