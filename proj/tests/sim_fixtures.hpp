#pragma once

#include <algorithm>
#include <vector>

#include "rd/simworld.hpp"

namespace rd::test {

inline sim::World open_world(std::vector<sim::Tree> trees = {}) {
  sim::World w;
  w.seed = 3;
  w.mode = sim::Mode::Outdoor;
  w.bounds = {0.0, 60.0, -10.0, 10.0};
  w.start = {0.0, 0.0, 0.0};
  w.goal_x = 60.0;
  w.end_x = 58.0;
  w.trees = std::move(trees);
  return w;
}

// Straight flight along +x at speed v until x_end.
inline sim::EpisodeLog straight_log(double v, double x_end, double cmd = 0.0) {
  sim::EpisodeLog log;
  for (int k = 0; k * 0.1 * v <= x_end; ++k) {
    sim::StepRecord r;
    r.t = 0.1 * k;
    r.state.x = 0.1 * k * v;
    r.state.t = r.t;
    r.state.v_forward = v;
    r.cmd_learner = cmd;
    log.steps.push_back(r);
  }
  log.status = sim::Status::ReachedEnd;
  log.distance = log.steps.back().state.x;
  return log;
}

// Passes a tree at (2, 1), stops, then slides left into it from behind.
inline sim::EpisodeLog drift_log(const sim::World& side) {
  sim::EpisodeLog drift;
  double y = 0.0;
  for (int k = 0;; ++k) {
    sim::StepRecord r;
    r.t = 0.1 * k;
    r.state.x = std::min(0.1 * k, 2.3);
    if (k > 25) y += 0.05;
    r.state.y = y;
    drift.steps.push_back(r);
    if (sim::collision(side, r.state)) break;
  }
  drift.status = sim::Status::Crashed;
  drift.crashed_tree = 0;
  drift.distance = 2.3 + y;
  return drift;
}

}  // namespace rd::test
