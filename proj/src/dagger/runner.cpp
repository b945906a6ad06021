#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "rd/dagger.hpp"
#include "rd/error.hpp"
#include "rd/rng.hpp"

namespace rd::dagger {

void validate(const DaggerConfig& cfg) {
  if (cfg.n_iterations < 1) fail(ErrorCode::ConfigError, "n_iterations must be >= 1");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0)) {
    fail(ErrorCode::ConfigError, "holdout_fraction must be in (0, 1)");
  }
  if (!(cfg.lambda_base >= 0.0)) fail(ErrorCode::ConfigError, "lambda_base must be >= 0");
  if (cfg.label_latency < 0 || !(cfg.label_noise >= 0.0)) fail(ErrorCode::ConfigError, "bad label noise/latency");
  if (!(cfg.v_forward > 0.0) || !(cfg.dynamics.dt > 0.0) || !(cfg.dynamics.tau > 0.0)) {
    fail(ErrorCode::ConfigError, "speeds and time constants must be positive");
  }
  if (cfg.worlds.empty()) fail(ErrorCode::ConfigError, "no scenarios");
}

double nearest_tree(const sim::World& world, const sim::DroneState& s) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : world.trees) best = std::min(best, std::hypot(t.x - s.x, t.y - s.y));
  return best;
}

double time_to_collision(const sim::World& world, const sim::DroneState& s, double drone_radius) {
  const double c = std::cos(s.heading), sn = std::sin(s.heading);
  const double vx = s.v_forward * c - s.v_lateral * sn;
  const double vy = s.v_forward * sn + s.v_lateral * c;
  const double a = vx * vx + vy * vy;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : world.trees) {
    const double px = s.x - t.x, py = s.y - t.y;
    const double rr = t.r + drone_radius;
    const double cc = px * px + py * py - rr * rr;
    if (cc <= 0.0) return 0.0;
    const double b = 2.0 * (px * vx + py * vy);
    if (b >= 0.0 || a == 0.0) continue;
    const double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) continue;
    best = std::min(best, (-b - std::sqrt(disc)) / (2.0 * a));
  }
  return best;
}

bool unsafe(const sim::World& world, const sim::DroneState& s, const DaggerConfig& cfg) {
  return nearest_tree(world, s) < cfg.d_safe || time_to_collision(world, s) < cfg.t_safe;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("RD_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Runner::Runner(const DaggerConfig& cfg)
    : cfg_(cfg),
      extractor_(imaging::make_grid(cfg.camera.width, cfg.camera.height, cfg.grid_nx, cfg.grid_ny)) {}

Episode Runner::run(const sim::World& world, const EpisodeSpec& spec) const {
  Episode ep{sim::EpisodeLog{}, learner::Dataset(layout())};
  auto& log = ep.log;
  log.episode = spec.episode;
  Rng noise(mix_seed(cfg_.seed, 0x1ABE1ULL + spec.episode));
  std::vector<double> expert_history;

  auto s = sim::initial_state(world, cfg_.v_forward);
  features::ControlContext ctx;
  imaging::Raster prev;
  bool takeover = false;
  double calm = 0.0;

  for (int n = 0;; ++n) {
    if (const auto hit = sim::collision(world, s)) {
      sim::StepRecord r;
      r.t = s.t;
      r.state = s;
      r.takeover = takeover;
      log.steps.push_back(r);
      log.status = sim::Status::Crashed;
      log.crashed_tree = *hit;
      break;
    }
    if (s.x >= world.end_x) {
      log.status = sim::Status::ReachedEnd;
      break;
    }
    if (!world.bounds.contains(s.x, s.y) || n >= cfg_.max_steps) {
      log.status = sim::Status::RangeLimit;
      break;
    }

    const auto frame = sim::render(world, s, cfg_.camera);
    if (n == 0) prev = frame;
    const auto x = extractor_.extract(prev, frame, ctx);

    expert_history.push_back(sim::expert_policy(world, s, cfg_.expert));
    const std::size_t lagged = expert_history.size() - 1 -
                               std::min<std::size_t>(expert_history.size() - 1, cfg_.label_latency);
    double label = expert_history[lagged];
    if (cfg_.label_noise > 0.0) label = std::clamp(label + cfg_.label_noise * noise.normal(), -1.0, 1.0);

    const double learner_cmd = spec.model ? learner::predict(*spec.model, x) : label;
    if (spec.takeover_enabled) {
      const bool danger = unsafe(world, s, cfg_);
      if (!takeover && danger) {
        takeover = true;
        calm = 0.0;
        ++log.takeovers;
      } else if (takeover) {
        calm = danger ? 0.0 : calm + cfg_.dynamics.dt;
        if (calm >= cfg_.takeover_release - 1e-9) takeover = false;
      }
    }
    const double executed = takeover ? label : learner_cmd;

    if (spec.collect && (cfg_.include_takeover_frames || !takeover)) {
      learner::RowMeta meta;
      meta.label = static_cast<float>(label);
      meta.iteration = spec.iteration;
      meta.episode = spec.episode;
      meta.takeover = takeover;
      ep.rows.add(x, meta);
    }

    sim::StepRecord r;
    r.t = s.t;
    r.state = s;
    r.cmd_learner = learner_cmd;
    r.cmd_expert = label;
    r.takeover = takeover;
    r.frame_hash = imaging::raster_hash(frame);
    log.steps.push_back(r);

    const auto next = sim::step(world, s, executed, cfg_.dynamics);
    log.distance += std::hypot(next.x - s.x, next.y - s.y);
    ctx = features::update_context(ctx, executed, next.v_lateral, next.heading - world.start.heading);
    s = next;
    prev = frame;
  }
  return ep;
}

std::vector<Episode> Runner::run_all(const std::vector<sim::World>& worlds, const EpisodeSpec& base,
                                     std::uint32_t first_episode) const {
  std::vector<Episode> out(worlds.size());
  auto job = [&](std::size_t i) {
    EpisodeSpec spec = base;
    spec.episode = first_episode + static_cast<std::uint32_t>(i);
    out[i] = run(worlds[i], spec);
  };
  const unsigned threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(worlds.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < worlds.size(); ++i) job(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < worlds.size(); i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace rd::dagger
