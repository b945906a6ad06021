#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rd/features.hpp"
#include "rd/learner.hpp"
#include "rd/simworld.hpp"

namespace rd::dagger {

struct DaggerConfig {
  int n_iterations = 5;
  double lambda_base = 0.1;
  double holdout_fraction = 0.2;
  double d_safe = 0.8;           // m, distance to the nearest trunk centre
  double t_safe = 1.2;           // s, straight-line time to collision
  double takeover_release = 0.5; // s of safe flight that ends a takeover
  bool include_takeover_frames = true;
  double label_noise = 0.0;  // std of Gaussian noise added to expert labels
  int label_latency = 0;     // steps of label delay
  std::uint64_t seed = 7;

  double v_forward = 1.0;
  sim::Dynamics dynamics;
  sim::CameraModel camera;
  sim::ExpertParams expert;
  int grid_nx = 15, grid_ny = 7;
  int max_steps = 3000;

  std::vector<sim::World> worlds;
};

void validate(const DaggerConfig& cfg);

// Distance from the drone centre to the nearest trunk centre (infinity when empty).
double nearest_tree(const sim::World& world, const sim::DroneState& s);
// First time the drone disc meets a trunk under straight-line extrapolation of
// the current velocity; infinity if never.
double time_to_collision(const sim::World& world, const sim::DroneState& s,
                         double drone_radius = sim::kDroneRadius);
bool unsafe(const sim::World& world, const sim::DroneState& s, const DaggerConfig& cfg);

struct EpisodeSpec {
  const learner::RidgeModel* model = nullptr;  // null: expert flies
  bool takeover_enabled = false;
  bool collect = true;
  std::uint16_t iteration = 0;
  std::uint32_t episode = 0;
};

struct Episode {
  sim::EpisodeLog log;
  learner::Dataset rows;
};

class Runner {
public:
  explicit Runner(const DaggerConfig& cfg);

  const DaggerConfig& config() const { return cfg_; }
  const features::FeatureExtractor& extractor() const { return extractor_; }
  const features::FeatureLayout& layout() const { return extractor_.layout(); }

  Episode run(const sim::World& world, const EpisodeSpec& spec) const;
  // Runs one episode per world (in parallel when allowed); results are in world order.
  std::vector<Episode> run_all(const std::vector<sim::World>& worlds, const EpisodeSpec& base,
                               std::uint32_t first_episode) const;

private:
  DaggerConfig cfg_;
  features::FeatureExtractor extractor_;
};

learner::Dataset collect_demonstration(const Runner& runner, std::vector<sim::EpisodeLog>* logs = nullptr);

struct IterationReport {
  int iteration = 0;  // k: policy pi_k, trained on data from iterations 0..k-1
  double intervention_rate = 0.0;
  double imitation_loss = 0.0;
  int takeovers = 0;
  int crashes = 0;
  std::size_t dataset_rows = 0;  // aggregate after this iteration's rollout
  std::size_t train_rows = 0;    // rows pi_k was fitted on
  std::size_t holdout_rows = 0;
  learner::RidgeModel model;
  std::vector<sim::EpisodeLog> episodes;
};

struct TrainResult {
  std::vector<IterationReport> reports;
  learner::Dataset aggregate;
  std::vector<std::uint32_t> holdout_episodes;  // sorted
  std::vector<sim::EpisodeLog> demonstration;

  const learner::RidgeModel& final_model() const { return reports.back().model; }
  learner::RowSelection train_rows() const;
  learner::RowSelection holdout_rows() const;
};

// Called once per finished iteration (0 = demonstration, report null).
using IterationHook = std::function<void(int iteration, const TrainResult& partial)>;

TrainResult train(const DaggerConfig& cfg, const IterationHook& hook = {});

// Minimal intervention rate, then lower imitation loss, then later iteration.
std::size_t best_iteration(const std::vector<IterationReport>& reports);

// Episodes held out in one iteration: round(fraction * n), at least one, chosen by seeded shuffle.
std::vector<std::uint32_t> holdout_episodes(std::uint64_t seed, int iteration, std::size_t n_worlds,
                                            double fraction);

nlohmann::json report_to_json(const IterationReport& r);

// Writes run/<iter k>/{dataset.bin, model.json, episodes.jsonl, report.json}.
void write_iteration(const std::filesystem::path& run_dir, int iteration, const TrainResult& partial);

// Worker threads for independent episodes: RD_THREADS if set and > 0, else hardware concurrency.
unsigned worker_threads();

}  // namespace rd::dagger
