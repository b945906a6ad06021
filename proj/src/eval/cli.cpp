#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "rd/error.hpp"
#include "rd/evalcli.hpp"

namespace rd::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? parse_config("") : load_config(path);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Re-expresses a full-layout vector in the (possibly reduced) model layout.
std::vector<double> to_layout(const features::FeatureLayout& from, std::span<const double> x,
                              const features::FeatureLayout& to) {
  if (from.n_windows() != to.n_windows()) {
    fail(ErrorCode::DimensionMismatch, "frame geometry gives " + std::to_string(from.n_windows()) +
                                           " windows, model expects " + std::to_string(to.n_windows()));
  }
  std::vector<double> out(to.total_dim());
  for (const auto& e : to.entries()) {
    const auto* src = from.find(e.group, e.window);
    if (!src || src->length != e.length) fail(ErrorCode::DimensionMismatch, "model layout not derivable from frame");
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(src->start), e.length,
                out.begin() + static_cast<std::ptrdiff_t>(e.start));
  }
  return out;
}

json layout_manifest(const features::FeatureLayout& layout) {
  json groups = json::array();
  for (const auto& e : layout.entries()) {
    groups.push_back({{"id", std::string(features::group_name(e.group))},
                      {"window", e.window},
                      {"start", e.start},
                      {"len", e.length}});
  }
  return {{"n_windows", layout.n_windows()}, {"total_dim", layout.total_dim()}, {"groups", groups}};
}

// Aggregate and holdout split of a finished run directory.
struct RunData {
  learner::Dataset data;
  learner::RowSelection train, holdout;
};

RunData load_run_data(const fs::path& run_dir, const ExperimentConfig& cfg) {
  const auto& d = cfg.dagger;
  const auto grid = imaging::make_grid(d.camera.width, d.camera.height, d.grid_nx, d.grid_ny);
  const auto layout = features::FeatureLayout::full(grid.count());
  RunData r{learner::Dataset(layout), {}, {}};
  std::vector<std::uint32_t> held;
  int k = 0;
  for (;; ++k) {
    const auto path = run_dir / ("iter" + std::to_string(k)) / "dataset.bin";
    if (!fs::exists(path)) break;
    r.data.append(learner::load_dataset(path, layout));
    const auto ids = dagger::holdout_episodes(d.seed, k, d.worlds.size(), d.holdout_fraction);
    held.insert(held.end(), ids.begin(), ids.end());
  }
  if (k == 0) fail(ErrorCode::IoError, "no datasets under " + run_dir.string());
  std::sort(held.begin(), held.end());
  for (std::size_t i = 0; i < r.data.rows(); ++i) {
    const bool h = std::binary_search(held.begin(), held.end(), r.data.meta(i).episode);
    (h ? r.holdout : r.train).push_back(i);
  }
  return r;
}

struct Options {
  bool json_out = false;
  std::string config, out, model, prev, cur, run, drop, group;
  std::vector<std::string> worlds;
  std::uint64_t seed = 1;
  double density = 0.08, length = 100.0, width = 20.0, clearance = 1.5;
  int nx = 15, ny = 7;
};

void emit(const Options& o, const json& j, const std::string& text) {
  if (o.json_out) {
    std::cout << j.dump() << '\n';
  } else {
    std::cout << text;
  }
}

void cmd_gen_world(const Options& o) {
  sim::ForestParams p;
  p.density = o.density;
  p.bounds = {0.0, o.length, -0.5 * o.width, 0.5 * o.width};
  p.min_clearance = o.clearance;
  const auto world = sim::generate_forest(o.seed, p);
  const fs::path out = o.out.empty() ? fs::path("world.json") : fs::path(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  sim::save_world(out, world);
  emit(o, {{"world", out.string()}, {"trees", world.trees.size()}},
       "wrote " + out.string() + " (" + std::to_string(world.trees.size()) + " trees)\n");
}

void cmd_indoor_suite(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path("indoor") : fs::path(o.out);
  fs::create_directories(dir);
  const auto suite = sim::indoor_scenarios();
  json files = json::array();
  for (std::size_t i = 0; i < suite.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scenario%02zu.json", i);
    sim::save_world(dir / name, suite[i]);
    files.push_back((dir / name).string());
  }
  emit(o, {{"scenarios", files}}, "wrote " + std::to_string(suite.size()) + " scenarios to " + dir.string() + "\n");
}

void cmd_train(const Options& o, bool seed_given) {
  auto cfg = config_or_default(o.config);
  if (seed_given) cfg.dagger.seed = o.seed;
  const fs::path run = o.out.empty() ? fs::path("run") : fs::path(o.out);
  fs::create_directories(run);
  const auto result = dagger::train(cfg.dagger, [&](int k, const dagger::TrainResult& partial) {
    dagger::write_iteration(run, k, partial);
    if (!o.json_out && k > 0) {
      const auto& r = partial.reports.back();
      std::printf("iteration %d: intervention_rate %.3f imitation_loss %.6f rows %zu\n", k, r.intervention_rate,
                  r.imitation_loss, r.dataset_rows);
      std::fflush(stdout);
    }
  });
  std::vector<RunRow> rows;
  for (const auto& r : result.reports) rows.push_back({r.iteration, r.intervention_rate, r.imitation_loss});
  write_text(run / "metrics.csv", run_csv(rows));
  const auto best = dagger::best_iteration(result.reports);
  learner::save_model(run / "model.json", result.final_model());
  json summary = {{"run", run.string()},
                  {"iterations", result.reports.size()},
                  {"best_iteration", result.reports[best].iteration},
                  {"rows", result.aggregate.rows()}};
  write_text(run / "summary.json", summary.dump(2) + "\n");
  emit(o, summary, "run written to " + run.string() + "\n");
}

void cmd_eval(const Options& o) {
  auto cfg = config_or_default(o.config);
  if (o.model.empty()) throw UsageError("eval needs --model");
  const auto model = learner::load_model(o.model);
  std::vector<sim::World> worlds;
  for (const auto& w : o.worlds) worlds.push_back(sim::load_world(w));
  if (worlds.empty()) worlds = cfg.dagger.worlds;
  cfg.dagger.worlds = worlds;
  const dagger::Runner runner(cfg.dagger);
  const auto logs = evaluate(runner, model, worlds);
  const auto m = compute_metrics(logs, worlds, cfg.dagger.camera);
  const fs::path dir = o.out.empty() ? fs::path("eval") : fs::path(o.out);
  fs::create_directories(dir);
  {
    std::ofstream ep(dir / "episodes.jsonl");
    if (!ep) fail(ErrorCode::IoError, "cannot write " + (dir / "episodes.jsonl").string());
    for (const auto& log : logs) sim::write_episode_jsonl(ep, log);
  }
  write_text(dir / "metrics.json", metrics_to_json(m).dump(2) + "\n");
  write_text(dir / "metrics.csv", metrics_to_csv(m));
  std::ostringstream text;
  text << "episodes " << m.episodes << ", distance " << fmt(m.distance) << " m, crashes " << m.crashes
       << ", distance per failure "
       << (m.distance_per_failure ? fmt(*m.distance_per_failure) : std::string("inf")) << "\n";
  emit(o, metrics_to_json(m), text.str());
}

void cmd_features(const Options& o) {
  if (o.prev.empty() || o.cur.empty()) throw UsageError("features needs --prev and --cur");
  const auto prev = imaging::read_raster(o.prev);
  const auto cur = imaging::read_raster(o.cur);
  if (prev.width() != cur.width() || prev.height() != cur.height()) {
    fail(ErrorCode::DimensionMismatch, "frames differ in size");
  }
  const auto grid = imaging::make_grid(cur.width(), cur.height(), o.nx, o.ny);
  const auto fv = features::extract(prev, cur, features::ControlContext{}, grid);
  std::ostringstream csv;
  csv << "group,window,dim,value\n";
  for (const auto& e : fv.layout.entries()) {
    for (std::size_t d = 0; d < e.length; ++d) {
      csv << features::group_name(e.group) << ',' << e.window << ',' << d << ',' << fmt(fv.values[e.start + d])
          << '\n';
    }
  }
  const fs::path dir = o.out.empty() ? fs::path("features") : fs::path(o.out);
  write_text(dir / "features.csv", csv.str());
  write_text(dir / "layout.json", layout_manifest(fv.layout).dump(2) + "\n");
  emit(o, {{"dim", fv.values.size()}, {"windows", grid.count()}},
       "wrote " + std::to_string(fv.values.size()) + " features to " + dir.string() + "\n");
}

void cmd_contrib(const Options& o) {
  if (o.model.empty() || o.prev.empty() || o.cur.empty()) throw UsageError("contrib needs --model, --prev, --cur");
  const auto model = learner::load_model(o.model);
  const auto prev = imaging::read_raster(o.prev);
  const auto cur = imaging::read_raster(o.cur);
  if (prev.width() != cur.width() || prev.height() != cur.height()) {
    fail(ErrorCode::DimensionMismatch, "frames differ in size");
  }
  const auto grid = imaging::make_grid(cur.width(), cur.height(), o.nx, o.ny);
  const auto fv = features::extract(prev, cur, features::ControlContext{}, grid);
  const auto x = to_layout(fv.layout, fv.values, model.layout);
  const auto ov = contribution_overlay(model, x);

  std::vector<double> values = ov.window;
  std::string title = "combined";
  if (!o.group.empty()) {
    const auto g = features::parse_group(o.group);
    if (g == features::Group::NonVisual) throw UsageError("NonVisual has no per-window overlay");
    const auto it = ov.group.find(g);
    if (it == ov.group.end()) fail(ErrorCode::DimensionMismatch, "model has no " + o.group + " features");
    values = it->second;
    title = std::string(features::group_name(g));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s | non-visual %+.4f | intercept %+.4f | prediction %+.4f", title.c_str(),
                ov.non_visual, ov.intercept, learner::predict(model, x));
  const fs::path dir = o.out.empty() ? fs::path("contrib") : fs::path(o.out);
  write_text(dir / "overlay.svg", overlay_svg(cur, grid, values, buf));

  json groups = json::object();
  for (const auto& [g, v] : ov.group) groups[std::string(features::group_name(g))] = v;
  json j = {{"window", ov.window},
            {"groups", groups},
            {"non_visual", ov.non_visual},
            {"intercept", ov.intercept},
            {"unclipped", ov.unclipped}};
  write_text(dir / "contributions.json", j.dump(2) + "\n");
  emit(o, j, "wrote overlay to " + (dir / "overlay.svg").string() + "\n");
}

void cmd_ablate(const Options& o, bool seed_given) {
  auto cfg = config_or_default(o.config);
  if (seed_given) cfg.dagger.seed = o.seed;
  const auto drop = parse_groups(o.drop);
  RunData r;
  if (!o.run.empty()) {
    r = load_run_data(o.run, cfg);
  } else {
    auto res = dagger::train(cfg.dagger);
    r.train = res.train_rows();
    r.holdout = res.holdout_rows();
    r.data = std::move(res.aggregate);
  }
  const auto a = ablate(r.data, r.train, r.holdout, cfg.dagger.lambda_base, drop);
  json dropped = json::array();
  for (auto g : drop) dropped.push_back(std::string(features::group_name(g)));
  json j = {{"dropped", dropped},
            {"loss_full", a.loss_full},
            {"loss_dropped", a.loss_dropped},
            {"relative_change", a.relative_change},
            {"train_rows", r.train.size()},
            {"holdout_rows", r.holdout.size()}};
  if (!o.out.empty()) write_text(fs::path(o.out) / "ablation.json", j.dump(2) + "\n");
  emit(o, j,
       "loss_full " + fmt(a.loss_full) + "\nloss_dropped " + fmt(a.loss_dropped) + "\nrelative_change " +
           fmt(a.relative_change) + "\n");
}

void cmd_report(const Options& o) {
  if (o.run.empty()) throw UsageError("report needs --run");
  const auto rows = read_run(o.run);
  const fs::path dir = o.out.empty() ? fs::path(o.run) : fs::path(o.out);
  write_text(dir / "report.csv", run_csv(rows));
  write_text(dir / "report.svg", run_svg(rows));
  json j = json::array();
  for (const auto& r : rows) {
    j.push_back({{"iteration", r.iteration},
                 {"intervention_rate", r.intervention_rate},
                 {"imitation_loss", r.imitation_loss}});
  }
  emit(o, j, run_csv(rows));
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::ConfigError || code == ErrorCode::UnknownGroup ? 2 : 1;
}

void report_error(bool as_json, const std::string& kind, const std::string& message, int code) {
  if (as_json) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
}

}  // namespace

int cli_main(int argc, char** argv) {
  Options o;
  CLI::App app{"DAgger reactive-control experiments in a 2-D forest simulator", "rdagger"};
  app.require_subcommand(1);
  app.add_flag("--json", o.json_out, "Machine-readable output; errors as JSON on stderr");

  auto* gen = app.add_subcommand("gen-world", "Generate a seeded forest world (JSON)");
  gen->add_option("--seed", o.seed, "World seed");
  gen->add_option("--density", o.density, "Trees per square metre");
  gen->add_option("--length", o.length, "Corridor length, m");
  gen->add_option("--width", o.width, "Corridor width, m");
  gen->add_option("--min-clearance", o.clearance, "Surface-to-surface clearance, m");
  gen->add_option("--out", o.out, "Output file");

  auto* suite = app.add_subcommand("indoor-suite", "Write the 11 indoor scenarios");
  suite->add_option("--out", o.out, "Output directory");

  auto* train = app.add_subcommand("train", "Run DAgger from a config file");
  auto* train_seed = train->add_option("--seed", o.seed, "Override the config seed");
  train->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Run directory");

  auto* ev = app.add_subcommand("eval", "Fly a model without takeover and compute metrics");
  ev->add_option("--model", o.model, "model.json")->required()->check(CLI::ExistingFile);
  ev->add_option("--config", o.config, "Config file (worlds and flight parameters)")->check(CLI::ExistingFile);
  ev->add_option("--world", o.worlds, "World file(s); default: the config's worlds")->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "Output directory");

  auto* feat = app.add_subcommand("features", "Dump the feature vector of a frame pair");
  feat->add_option("--prev", o.prev, "Previous frame (.ppm or .yccr)")->required()->check(CLI::ExistingFile);
  feat->add_option("--cur", o.cur, "Current frame (.ppm or .yccr)")->required()->check(CLI::ExistingFile);
  feat->add_option("--nx", o.nx, "Windows across");
  feat->add_option("--ny", o.ny, "Windows down");
  feat->add_option("--out", o.out, "Output directory");

  auto* contrib = app.add_subcommand("contrib", "Per-window contribution overlay (SVG)");
  contrib->add_option("--model", o.model, "model.json")->required()->check(CLI::ExistingFile);
  contrib->add_option("--prev", o.prev, "Previous frame")->required()->check(CLI::ExistingFile);
  contrib->add_option("--cur", o.cur, "Current frame")->required()->check(CLI::ExistingFile);
  contrib->add_option("--group", o.group, "Single group instead of the combined view");
  contrib->add_option("--nx", o.nx, "Windows across");
  contrib->add_option("--ny", o.ny, "Windows down");
  contrib->add_option("--out", o.out, "Output directory");

  auto* abl = app.add_subcommand("ablate", "Refit without some feature groups and compare holdout loss");
  auto* abl_seed = abl->add_option("--seed", o.seed, "Override the config seed");
  abl->add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  abl->add_option("--run", o.run, "Existing run directory (otherwise a run is trained)")->check(CLI::ExistingDirectory);
  abl->add_option("--drop", o.drop, "Comma-separated groups: Radon,StructureTensor,Laws,Flow,NonVisual");
  abl->add_option("--out", o.out, "Output directory");

  auto* rep = app.add_subcommand("report", "CSV and SVG plot of a run");
  rep->add_option("--run", o.run, "Run directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", o.out, "Output directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(o.json_out, "UsageError", e.what(), 2);
    if (!o.json_out) std::cerr << "run with --help for usage\n";
    return 2;
  }

  try {
    if (gen->parsed()) cmd_gen_world(o);
    else if (suite->parsed()) cmd_indoor_suite(o);
    else if (train->parsed()) cmd_train(o, train_seed->count() > 0);
    else if (ev->parsed()) cmd_eval(o);
    else if (feat->parsed()) cmd_features(o);
    else if (contrib->parsed()) cmd_contrib(o);
    else if (abl->parsed()) cmd_ablate(o, abl_seed->count() > 0);
    else if (rep->parsed()) cmd_report(o);
  } catch (const UsageError& e) {
    report_error(o.json_out, "UsageError", e.what(), 2);
    return 2;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    report_error(o.json_out, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error(o.json_out, "RuntimeError", e.what(), 1);
    return 1;
  }
  return 0;
}

}  // namespace rd::eval
