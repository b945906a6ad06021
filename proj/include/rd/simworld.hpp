#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rd/imaging.hpp"

namespace rd::sim {

enum class Mode { Indoor, Outdoor };

struct Bounds {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
  bool operator==(const Bounds&) const = default;
};

struct Tree {
  double x = 0.0, y = 0.0, r = 0.0;
  bool operator==(const Tree&) const = default;
};

struct Pose {
  double x = 0.0, y = 0.0, heading = 0.0;
  bool operator==(const Pose&) const = default;
};

// Flight is along +x from the start pose; y grows to the drone's left.
struct World {
  Bounds bounds;
  std::vector<Tree> trees;
  std::uint64_t seed = 0;
  Mode mode = Mode::Outdoor;
  Pose start;
  double goal_x = 0.0, goal_y = 0.0;  // indoor: heading is re-aimed here every step
  double end_x = 0.0;                 // episode succeeds once x >= end_x

  bool operator==(const World&) const = default;
};

// Reflection about the flight axis (y -> 2*start.y - y).
World mirrored(const World& world);

struct DroneState {
  double x = 0.0, y = 0.0, heading = 0.0;
  double v_forward = 0.0;
  double v_lateral = 0.0;  // positive = left
  double t = 0.0;

  bool operator==(const DroneState&) const = default;
};

DroneState initial_state(const World& world, double v_forward);

struct Dynamics {
  double v_lat_max = 1.0;
  double tau = 0.3;
  double dt = 0.1;
};

DroneState step(const World& world, const DroneState& state, double command, const Dynamics& dyn);

struct CameraModel {
  double hfov = 1.6232;  // 93 degrees
  int width = 320;
  int height = 240;
  double max_range = 25.0;
  double trunk_scale = 2400.0;  // px * m

  double focal() const;
  // Bearing of column col relative to the heading; positive = left.
  double column_angle(int col) const;
};

imaging::Raster render(const World& world, const DroneState& state, const CameraModel& camera = {});

inline constexpr double kDroneRadius = 0.2;

std::optional<int> collision(const World& world, const DroneState& state, double drone_radius = kDroneRadius);

struct ExpertParams {
  double lookahead = 6.0;
  double half_angle = 1.0471975511965976;  // 60 degrees
  double corridor = 1.5;
  double gain_repulse = 2.5;
  double gain_attract = 0.5;
  double yaw_scale = 0.5;  // rad of heading deviation for full attraction
};

struct ExpertDecision {
  double command = 0.0;
  bool tie_break = false;  // net repulsion was exactly zero with a tree dead ahead
};

ExpertDecision expert_decision(const World& world, const DroneState& state, const ExpertParams& params = {});
inline double expert_policy(const World& world, const DroneState& state, const ExpertParams& params = {}) {
  return expert_decision(world, state, params).command;
}

// Forest and scenario generation ------------------------------------------

struct ForestParams {
  double density = 0.08;  // trees per m^2
  Bounds bounds{0.0, 100.0, -10.0, 10.0};
  double min_clearance = 1.5;  // surface-to-surface, m
  double r_min = 0.1, r_max = 0.4;
  double start_clear = 2.0;
  double end_margin = 2.0;  // success line sits this far before x_max
};

World generate_forest(std::uint64_t seed, const ForestParams& params = {});

// Fixed suite: one empty arena, three single-tree and seven two-tree layouts.
std::vector<World> indoor_scenarios();

// Episode records ---------------------------------------------------------

enum class Status { Running, ReachedEnd, Crashed, RangeLimit };

struct StepRecord {
  double t = 0.0;
  DroneState state;
  double cmd_learner = 0.0;
  double cmd_expert = 0.0;
  bool takeover = false;
  std::uint64_t frame_hash = 0;

  bool operator==(const StepRecord&) const = default;
};

struct EpisodeLog {
  std::uint32_t episode = 0;
  std::vector<StepRecord> steps;
  Status status = Status::Running;
  int crashed_tree = -1;
  double distance = 0.0;  // path length flown, m
  int takeovers = 0;      // contiguous takeover periods

  bool operator==(const EpisodeLog&) const = default;
};

std::string status_name(Status s);

// Tree is in view when its angular extent overlaps the horizontal field of
// view and its centre lies within max_range.
bool tree_visible(const Tree& tree, const Pose& pose, const CameraModel& camera);
// Bearing of the tree centre relative to the heading, in (-pi, pi]; positive = left.
double relative_bearing(const Tree& tree, const Pose& pose);

enum class Side { Left, Right, Middle };
std::string side_name(Side s);

struct TreeEvent {
  int tree = -1;
  int partner = -1;  // second tree of a Middle pass
  Side side = Side::Left;
  bool active = false;
  std::size_t step = 0;  // index of the step at which the tree left the view

  bool operator==(const TreeEvent&) const = default;
};

struct EventParams {
  double exit_range = 5.0;
  double middle_separation = 3.0;
  double active_threshold = 0.25;
  double active_window = 2.0;  // s
};

std::vector<TreeEvent> tree_events(const EpisodeLog& log, const World& world, const CameraModel& camera = {},
                                   const EventParams& params = {});

enum class FailureClass { VisibleTree, NarrowFOV, Other };
std::string failure_name(FailureClass f);

FailureClass classify_failure(const EpisodeLog& log, const World& world, const CameraModel& camera = {},
                              double tau = 1.5);

// Serialization -------------------------------------------------------------

nlohmann::json world_to_json(const World& world);
World world_from_json(const nlohmann::json& j);
void save_world(const std::filesystem::path& path, const World& world);
World load_world(const std::filesystem::path& path);

// One JSON object per step, then a closing status line.
void write_episode_jsonl(std::ostream& out, const EpisodeLog& log);

}  // namespace rd::sim
