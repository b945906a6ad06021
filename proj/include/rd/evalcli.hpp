#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rd/dagger.hpp"

namespace rd::eval {

// Config --------------------------------------------------------------------

// Flat "key = value" text; '#' starts a comment. Unknown keys are errors.
struct ExperimentConfig {
  dagger::DaggerConfig dagger;
  std::string scenarios = "indoor";  // indoor | outdoor
  int n_worlds = 20;                 // outdoor only
  std::uint64_t world_seed = 1;
  double world_length = 100.0;
  double world_width = 20.0;
  double density = 0.08;
  double min_clearance = 1.5;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Default "key = value" lines, one per documented key.
std::string default_config_text();
std::vector<sim::World> outdoor_worlds(std::uint64_t seed, int count, double length, double width, double density,
                                       double min_clearance);

// Metrics -------------------------------------------------------------------

struct MetricsReport {
  int episodes = 0;
  double distance = 0.0;  // m flown autonomously
  double duration = 0.0;  // s
  int crashes = 0;
  std::optional<double> distance_per_failure;  // empty when there were no crashes
  std::optional<double> time_per_failure;
  std::map<std::string, int> crashes_by_type;  // VisibleTree, NarrowFOV, Other
  std::map<std::string, std::optional<double>> distance_per_failure_by_type;
  std::optional<double> distance_per_failure_non_fov;  // NarrowFOV crashes excluded
  int trees_avoided = 0;                               // Left + Right passes
  int trees_middle = 0;                                // Middle passes (pairs)
  double trees_avoided_per_meter = 0.0;
  double active_fraction = 0.0;  // among avoided trees
  double side_left = 0.0, side_right = 0.0, side_middle = 0.0;
  std::vector<double> intervention_rate;  // per DAgger iteration, when known
  std::vector<double> imitation_loss;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(const std::vector<sim::EpisodeLog>& logs, const std::vector<sim::World>& worlds,
                              const sim::CameraModel& camera = {});

nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);
std::string metrics_to_csv(const MetricsReport& m);
MetricsReport metrics_from_csv(const std::string& csv);

// Autonomous flights without takeover.
std::vector<sim::EpisodeLog> evaluate(const dagger::Runner& runner, const learner::RidgeModel& model,
                                      const std::vector<sim::World>& worlds);

// Ablation ------------------------------------------------------------------

struct Ablation {
  double loss_full = 0.0;
  double loss_dropped = 0.0;
  double relative_change = 0.0;
  learner::RidgeModel full, dropped;
};

Ablation ablate(const learner::Dataset& data, const learner::RowSelection& train_rows,
                const learner::RowSelection& holdout_rows, double lambda_base,
                const std::vector<features::Group>& drop);
std::vector<features::Group> parse_groups(const std::string& list);  // comma separated; throws UnknownGroup

// Contribution overlay ------------------------------------------------------

struct Overlay {
  std::vector<double> window;                          // combined visual contribution per window
  std::map<features::Group, std::vector<double>> group; // per visual group, per window
  double non_visual = 0.0;
  double intercept = 0.0;
  double unclipped = 0.0;
};

Overlay contribution_overlay(const learner::RidgeModel& model, std::span<const double> x);
// Arrow per window, pointing left for positive values; the largest is 30 px.
std::string overlay_svg(const imaging::Raster& frame, const imaging::WindowGrid& grid, const std::vector<double>& values,
                        const std::string& title);
std::string base64(std::span<const std::uint8_t> bytes);

// Run reports ---------------------------------------------------------------

struct RunRow {
  int iteration = 0;
  double intervention_rate = 0.0;
  double imitation_loss = 0.0;
};

std::vector<RunRow> read_run(const std::filesystem::path& run_dir);
std::string run_csv(const std::vector<RunRow>& rows);
std::string run_svg(const std::vector<RunRow>& rows);

// CLI -----------------------------------------------------------------------

int cli_main(int argc, char** argv);

}  // namespace rd::eval
