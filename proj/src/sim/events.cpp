#include <algorithm>
#include <cmath>
#include <numbers>

#include "rd/error.hpp"
#include "rd/simworld.hpp"

namespace rd::sim {

double relative_bearing(const Tree& tree, const Pose& pose) {
  double b = std::atan2(tree.y - pose.y, tree.x - pose.x) - pose.heading;
  while (b > std::numbers::pi) b -= 2.0 * std::numbers::pi;
  while (b <= -std::numbers::pi) b += 2.0 * std::numbers::pi;
  return b;
}

bool tree_visible(const Tree& tree, const Pose& pose, const CameraModel& camera) {
  const double dist = std::hypot(tree.x - pose.x, tree.y - pose.y);
  if (dist > camera.max_range) return false;
  if (dist <= tree.r) return true;
  const double half_width = std::asin(tree.r / dist);
  return std::abs(relative_bearing(tree, pose)) - half_width < 0.5 * camera.hfov;
}

std::string side_name(Side s) {
  switch (s) {
    case Side::Left: return "Left";
    case Side::Right: return "Right";
    case Side::Middle: return "Middle";
  }
  return "?";
}

std::string failure_name(FailureClass f) {
  switch (f) {
    case FailureClass::VisibleTree: return "VisibleTree";
    case FailureClass::NarrowFOV: return "NarrowFOV";
    case FailureClass::Other: return "Other";
  }
  return "?";
}

namespace {

Pose pose_of(const StepRecord& r) { return {r.state.x, r.state.y, r.state.heading}; }

bool active_before(const EpisodeLog& log, std::size_t step, const EventParams& p) {
  const double t_end = log.steps[step].t;
  for (std::size_t i = step + 1; i-- > 0;) {
    if (log.steps[i].t < t_end - p.active_window - 1e-9) break;
    if (std::abs(log.steps[i].cmd_learner) > p.active_threshold) return true;
  }
  return false;
}

}  // namespace

// A tree is passed when it leaves the field of view while closer than
// exit_range. Exits towards the drone's left count as Left.
std::vector<TreeEvent> tree_events(const EpisodeLog& log, const World& world, const CameraModel& camera,
                                   const EventParams& p) {
  const std::size_t n_trees = world.trees.size();
  const std::size_t n_steps = log.steps.size();
  std::vector<TreeEvent> exits;
  if (n_trees == 0 || n_steps < 2) return exits;

  std::vector<std::vector<unsigned char>> visible(n_steps, std::vector<unsigned char>(n_trees, 0));
  for (std::size_t s = 0; s < n_steps; ++s) {
    const Pose pose = pose_of(log.steps[s]);
    for (std::size_t k = 0; k < n_trees; ++k) visible[s][k] = tree_visible(world.trees[k], pose, camera);
  }

  std::vector<bool> done(n_trees, false);
  for (std::size_t s = 1; s < n_steps; ++s) {
    const Pose pose = pose_of(log.steps[s]);
    for (std::size_t k = 0; k < n_trees; ++k) {
      if (done[k] || !visible[s - 1][k] || visible[s][k]) continue;
      if (log.status == Status::Crashed && log.crashed_tree == static_cast<int>(k)) continue;
      const auto& t = world.trees[k];
      if (std::hypot(t.x - pose.x, t.y - pose.y) - t.r >= p.exit_range) continue;
      done[k] = true;
      TreeEvent e;
      e.tree = static_cast<int>(k);
      e.side = relative_bearing(t, pose) > 0.0 ? Side::Left : Side::Right;
      e.step = s;
      exits.push_back(e);
    }
  }

  auto co_visible = [&](int a, int b) {
    for (std::size_t s = 0; s < n_steps; ++s) {
      if (visible[s][static_cast<std::size_t>(a)] && visible[s][static_cast<std::size_t>(b)]) return true;
    }
    return false;
  };

  std::vector<bool> paired(exits.size(), false);
  std::vector<TreeEvent> events;
  for (std::size_t i = 0; i < exits.size(); ++i) {
    if (paired[i]) continue;
    const auto& a = world.trees[static_cast<std::size_t>(exits[i].tree)];
    for (std::size_t j = i + 1; j < exits.size(); ++j) {
      if (paired[j] || exits[j].side == exits[i].side) continue;
      const auto& b = world.trees[static_cast<std::size_t>(exits[j].tree)];
      if (std::hypot(a.x - b.x, a.y - b.y) - a.r - b.r >= p.middle_separation) continue;
      if (!co_visible(exits[i].tree, exits[j].tree)) continue;
      paired[i] = paired[j] = true;
      TreeEvent m;
      m.tree = std::min(exits[i].tree, exits[j].tree);
      m.partner = std::max(exits[i].tree, exits[j].tree);
      m.side = Side::Middle;
      m.step = std::max(exits[i].step, exits[j].step);
      events.push_back(m);
      break;
    }
    if (!paired[i]) events.push_back(exits[i]);
  }
  std::stable_sort(events.begin(), events.end(), [](const TreeEvent& x, const TreeEvent& y) { return x.step < y.step; });
  for (auto& e : events) e.active = active_before(log, e.step, p);
  return events;
}

FailureClass classify_failure(const EpisodeLog& log, const World& world, const CameraModel& camera, double tau) {
  if (log.status != Status::Crashed) fail(ErrorCode::NotACrash, "episode ended with " + status_name(log.status));
  if (log.steps.size() < 2 || log.crashed_tree < 0 ||
      log.crashed_tree >= static_cast<int>(world.trees.size())) {
    return FailureClass::Other;
  }
  const auto& tree = world.trees[static_cast<std::size_t>(log.crashed_tree)];
  const double t_impact = log.steps.back().t;
  bool any = false;
  for (std::size_t i = log.steps.size() - 1; i-- > 0;) {
    if (log.steps[i].t < t_impact - tau - 1e-9) break;
    any = true;
    if (tree_visible(tree, pose_of(log.steps[i]), camera)) return FailureClass::VisibleTree;
  }
  return any ? FailureClass::NarrowFOV : FailureClass::Other;
}

}  // namespace rd::sim
