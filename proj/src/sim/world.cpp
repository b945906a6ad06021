#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "rd/error.hpp"
#include "rd/rng.hpp"
#include "rd/simworld.hpp"

namespace rd::sim {

World mirrored(const World& world) {
  World m = world;
  const double axis = world.start.y;
  auto flip = [axis](double y) { return axis == 0.0 ? -y : 2.0 * axis - y; };
  for (auto& t : m.trees) t.y = flip(t.y);
  m.start.heading = -world.start.heading;
  m.goal_y = flip(world.goal_y);
  const double lo = flip(world.bounds.y_max), hi = flip(world.bounds.y_min);
  m.bounds.y_min = lo;
  m.bounds.y_max = hi;
  return m;
}

DroneState initial_state(const World& world, double v_forward) {
  DroneState s;
  s.x = world.start.x;
  s.y = world.start.y;
  s.heading = world.start.heading;
  if (world.mode == Mode::Indoor) s.heading = std::atan2(world.goal_y - s.y, world.goal_x - s.x);
  s.v_forward = v_forward;
  return s;
}

DroneState step(const World& world, const DroneState& state, double command, const Dynamics& dyn) {
  if (!(dyn.dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  DroneState s = state;
  const double u = std::clamp(command, -1.0, 1.0) * dyn.v_lat_max;
  s.v_lateral += (u - s.v_lateral) * std::min(1.0, dyn.dt / dyn.tau);
  const double c = std::cos(s.heading), sn = std::sin(s.heading);
  s.x += s.v_forward * dyn.dt * c - s.v_lateral * dyn.dt * sn;
  s.y += s.v_forward * dyn.dt * sn + s.v_lateral * dyn.dt * c;
  if (world.mode == Mode::Indoor) s.heading = std::atan2(world.goal_y - s.y, world.goal_x - s.x);
  s.t += dyn.dt;
  return s;
}

std::optional<int> collision(const World& world, const DroneState& state, double drone_radius) {
  for (std::size_t i = 0; i < world.trees.size(); ++i) {
    const auto& t = world.trees[i];
    if (std::hypot(state.x - t.x, state.y - t.y) < t.r + drone_radius) return static_cast<int>(i);
  }
  return std::nullopt;
}

World generate_forest(std::uint64_t seed, const ForestParams& p) {
  const double area = p.bounds.area();
  if (!(p.density > 0.0) || p.density * area < 1.0) fail(ErrorCode::InvalidArgument, "density * area must be >= 1");
  if (p.min_clearance < 2.0 * kDroneRadius) fail(ErrorCode::InvalidArgument, "min_clearance below drone diameter");
  if (p.r_min < 0.05 || p.r_max > 0.6 || p.r_min > p.r_max) fail(ErrorCode::InvalidArgument, "tree radii out of range");

  World w;
  w.seed = seed;
  w.mode = Mode::Outdoor;
  w.bounds = p.bounds;
  w.start = {p.bounds.x_min, 0.5 * (p.bounds.y_min + p.bounds.y_max), 0.0};
  w.goal_x = p.bounds.x_max;
  w.goal_y = w.start.y;
  w.end_x = p.bounds.x_max - p.end_margin;

  const auto target = static_cast<std::size_t>(std::ceil(p.density * area - 1e-9));
  Rng rng(mix_seed(seed, 0xF0E57));
  std::size_t rejections = 0;
  while (w.trees.size() < target) {
    Tree t;
    t.x = rng.uniform(p.bounds.x_min, p.bounds.x_max);
    t.y = rng.uniform(p.bounds.y_min, p.bounds.y_max);
    t.r = rng.uniform(p.r_min, p.r_max);
    bool ok = std::hypot(t.x - w.start.x, t.y - w.start.y) - t.r >= p.start_clear;
    for (std::size_t i = 0; ok && i < w.trees.size(); ++i) {
      const auto& o = w.trees[i];
      ok = std::hypot(t.x - o.x, t.y - o.y) - t.r - o.r >= p.min_clearance;
    }
    if (ok) {
      w.trees.push_back(t);
    } else if (++rejections >= 100000) {
      fail(ErrorCode::PlacementFailure, "placed " + std::to_string(w.trees.size()) + " of " +
                                            std::to_string(target) + " trees before the rejection budget ran out");
    }
  }
  return w;
}

std::vector<World> indoor_scenarios() {
  constexpr double r = 0.15;
  const std::vector<std::vector<Tree>> layouts = {
      {},
      {{4.0, 0.4, r}},
      {{4.0, 0.0, r}},
      {{4.0, -0.4, r}},
      {{3.5, -0.3, r}, {5.2, -1.2, r}},  // both right of the line: go left
      {{3.5, 0.3, r}, {5.2, 1.2, r}},    // mirror: go right
      {{2.5, 0.7, r}, {6.0, -0.7, r}},   // slalom
      {{2.5, -0.7, r}, {6.0, 0.7, r}},   // slalom, other hand
      {{4.5, 1.3, r}, {4.5, -1.3, r}},   // gap on the line
      {{2.5, 0.0, r}, {5.5, 0.0, r}},    // two on the line
      {{2.0, 0.4, r}, {5.5, -0.9, r}},
  };
  std::vector<World> out;
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    World w;
    w.seed = 1000 + i;
    w.mode = Mode::Indoor;
    w.bounds = {0.0, 8.0, -2.5, 2.5};
    w.trees = layouts[i];
    w.start = {0.5, 0.0, 0.0};
    w.goal_x = 10.0;
    w.goal_y = 0.0;
    w.end_x = 7.5;
    out.push_back(w);
  }
  return out;
}

std::string status_name(Status s) {
  switch (s) {
    case Status::Running: return "Running";
    case Status::ReachedEnd: return "ReachedEnd";
    case Status::Crashed: return "Crashed";
    case Status::RangeLimit: return "RangeLimit";
  }
  return "?";
}

nlohmann::json world_to_json(const World& w) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : w.trees) trees.push_back({{"x", t.x}, {"y", t.y}, {"r", t.r}});
  return {{"seed", w.seed},
          {"mode", w.mode == Mode::Indoor ? "indoor" : "outdoor"},
          {"bounds", {{"x_min", w.bounds.x_min}, {"x_max", w.bounds.x_max},
                      {"y_min", w.bounds.y_min}, {"y_max", w.bounds.y_max}}},
          {"start", {{"x", w.start.x}, {"y", w.start.y}, {"heading", w.start.heading}}},
          {"goal", {{"x", w.goal_x}, {"y", w.goal_y}}},
          {"end_x", w.end_x},
          {"trees", trees}};
}

World world_from_json(const nlohmann::json& j) {
  World w;
  try {
    w.seed = j.at("seed").get<std::uint64_t>();
    const auto& b = j.at("bounds");
    w.bounds = {b.at("x_min").get<double>(), b.at("x_max").get<double>(), b.at("y_min").get<double>(),
                b.at("y_max").get<double>()};
    for (const auto& t : j.at("trees")) w.trees.push_back({t.at("x").get<double>(), t.at("y").get<double>(),
                                                           t.at("r").get<double>()});
    w.mode = j.value("mode", std::string("outdoor")) == "indoor" ? Mode::Indoor : Mode::Outdoor;
    if (j.contains("start")) {
      const auto& s = j.at("start");
      w.start = {s.at("x").get<double>(), s.at("y").get<double>(), s.value("heading", 0.0)};
    } else {
      w.start = {w.bounds.x_min, 0.5 * (w.bounds.y_min + w.bounds.y_max), 0.0};
    }
    if (j.contains("goal")) {
      w.goal_x = j.at("goal").at("x").get<double>();
      w.goal_y = j.at("goal").at("y").get<double>();
    } else {
      w.goal_x = w.bounds.x_max;
      w.goal_y = w.start.y;
    }
    w.end_x = j.value("end_x", w.bounds.x_max);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("bad world json: ") + e.what());
  }
  for (const auto& t : w.trees) {
    if (t.r < 0.05 || t.r > 0.6) fail(ErrorCode::FormatError, "tree radius outside [0.05, 0.6]");
  }
  return w;
}

void save_world(const std::filesystem::path& path, const World& world) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string());
  out << world_to_json(world).dump(1) << '\n';
}

World load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return world_from_json(j);
}

void write_episode_jsonl(std::ostream& out, const EpisodeLog& log) {
  for (const auto& s : log.steps) {
    nlohmann::json j = {{"t", s.t},
                        {"x", s.state.x},
                        {"y", s.state.y},
                        {"heading", s.state.heading},
                        {"v_lat", s.state.v_lateral},
                        {"cmd_learner", s.cmd_learner},
                        {"cmd_expert", s.cmd_expert},
                        {"takeover", s.takeover},
                        {"frame", s.frame_hash}};
    out << j.dump() << '\n';
  }
  nlohmann::json end = {{"episode", log.episode},
                        {"status", status_name(log.status)},
                        {"tree", log.crashed_tree},
                        {"distance", log.distance},
                        {"takeovers", log.takeovers}};
  out << end.dump() << '\n';
}

}  // namespace rd::sim
