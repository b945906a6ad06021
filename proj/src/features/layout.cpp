#include <algorithm>
#include <cctype>
#include <string>

#include "rd/error.hpp"
#include "rd/features.hpp"

namespace rd::features {

std::size_t group_dim(Group g) {
  switch (g) {
    case Group::Radon: return kRadonDim;
    case Group::StructureTensor: return kStructureTensorDim;
    case Group::Laws: return kLawsDim;
    case Group::Flow: return kFlowDim;
    case Group::NonVisual: return kNonVisualDim;
  }
  return 0;
}

std::string_view group_name(Group g) {
  switch (g) {
    case Group::Radon: return "Radon";
    case Group::StructureTensor: return "StructureTensor";
    case Group::Laws: return "Laws";
    case Group::Flow: return "Flow";
    case Group::NonVisual: return "NonVisual";
  }
  return "?";
}

Group parse_group(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Group g : kAllGroups) {
    std::string candidate(group_name(g));
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (candidate == lower) return g;
  }
  if (lower == "st") return Group::StructureTensor;
  fail(ErrorCode::UnknownGroup, "unknown feature group '" + std::string(name) + "'");
}

FeatureLayout::FeatureLayout(int n_windows, std::vector<Group> groups) : n_windows_(n_windows) {
  if (n_windows < 0) fail(ErrorCode::InvalidArgument, "negative window count");
  // Canonical order regardless of how the caller listed them.
  for (Group g : kAllGroups) {
    if (std::find(groups.begin(), groups.end(), g) != groups.end()) groups_.push_back(g);
  }
  std::size_t offset = 0;
  for (int w = 0; w < n_windows_; ++w) {
    for (Group g : groups_) {
      if (g == Group::NonVisual) continue;
      entries_.push_back(LayoutEntry{g, w, offset, group_dim(g)});
      offset += group_dim(g);
    }
  }
  if (has_group(Group::NonVisual)) {
    entries_.push_back(LayoutEntry{Group::NonVisual, -1, offset, kNonVisualDim});
    offset += kNonVisualDim;
  }
  total_dim_ = offset;
}

bool FeatureLayout::has_group(Group g) const {
  return std::find(groups_.begin(), groups_.end(), g) != groups_.end();
}

std::size_t FeatureLayout::group_total(Group g) const {
  if (!has_group(g)) return 0;
  return g == Group::NonVisual ? kNonVisualDim : group_dim(g) * static_cast<std::size_t>(n_windows_);
}

const LayoutEntry* FeatureLayout::find(Group g, int window) const {
  for (const auto& e : entries_) {
    if (e.group == g && e.window == window) return &e;
  }
  return nullptr;
}

}  // namespace rd::features
