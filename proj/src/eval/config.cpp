#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rd/error.hpp"
#include "rd/evalcli.hpp"

namespace rd::eval {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(ErrorCode::ConfigError, key + ": not a number: " + v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(ErrorCode::ConfigError, key + ": not an integer: " + v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorCode::ConfigError, key + ": expected true or false, got " + v);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n_iterations", [](auto& c, auto& k, auto& v) { c.dagger.n_iterations = static_cast<int>(to_int(k, v)); }},
      {"lambda_base", [](auto& c, auto& k, auto& v) { c.dagger.lambda_base = to_double(k, v); }},
      {"holdout_fraction", [](auto& c, auto& k, auto& v) { c.dagger.holdout_fraction = to_double(k, v); }},
      {"d_safe", [](auto& c, auto& k, auto& v) { c.dagger.d_safe = to_double(k, v); }},
      {"t_safe", [](auto& c, auto& k, auto& v) { c.dagger.t_safe = to_double(k, v); }},
      {"takeover_release", [](auto& c, auto& k, auto& v) { c.dagger.takeover_release = to_double(k, v); }},
      {"include_takeover_frames", [](auto& c, auto& k, auto& v) { c.dagger.include_takeover_frames = to_bool(k, v); }},
      {"label_noise", [](auto& c, auto& k, auto& v) { c.dagger.label_noise = to_double(k, v); }},
      {"label_latency", [](auto& c, auto& k, auto& v) { c.dagger.label_latency = static_cast<int>(to_int(k, v)); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.dagger.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"v_forward", [](auto& c, auto& k, auto& v) { c.dagger.v_forward = to_double(k, v); }},
      {"v_lat_max", [](auto& c, auto& k, auto& v) { c.dagger.dynamics.v_lat_max = to_double(k, v); }},
      {"tau", [](auto& c, auto& k, auto& v) { c.dagger.dynamics.tau = to_double(k, v); }},
      {"dt", [](auto& c, auto& k, auto& v) { c.dagger.dynamics.dt = to_double(k, v); }},
      {"hfov", [](auto& c, auto& k, auto& v) { c.dagger.camera.hfov = to_double(k, v); }},
      {"max_range", [](auto& c, auto& k, auto& v) { c.dagger.camera.max_range = to_double(k, v); }},
      {"lookahead", [](auto& c, auto& k, auto& v) { c.dagger.expert.lookahead = to_double(k, v); }},
      {"grid_nx", [](auto& c, auto& k, auto& v) { c.dagger.grid_nx = static_cast<int>(to_int(k, v)); }},
      {"grid_ny", [](auto& c, auto& k, auto& v) { c.dagger.grid_ny = static_cast<int>(to_int(k, v)); }},
      {"max_steps", [](auto& c, auto& k, auto& v) { c.dagger.max_steps = static_cast<int>(to_int(k, v)); }},
      {"scenarios", [](auto& c, auto& k, auto& v) {
         if (v != "indoor" && v != "outdoor") fail(ErrorCode::ConfigError, k + ": expected indoor or outdoor");
         c.scenarios = v;
       }},
      {"n_worlds", [](auto& c, auto& k, auto& v) { c.n_worlds = static_cast<int>(to_int(k, v)); }},
      {"world_seed", [](auto& c, auto& k, auto& v) { c.world_seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"world_length", [](auto& c, auto& k, auto& v) { c.world_length = to_double(k, v); }},
      {"world_width", [](auto& c, auto& k, auto& v) { c.world_width = to_double(k, v); }},
      {"density", [](auto& c, auto& k, auto& v) { c.density = to_double(k, v); }},
      {"min_clearance", [](auto& c, auto& k, auto& v) { c.min_clearance = to_double(k, v); }},
  };
  return table;
}

}  // namespace

std::vector<sim::World> outdoor_worlds(std::uint64_t seed, int count, double length, double width, double density,
                                       double min_clearance) {
  if (count < 1) fail(ErrorCode::ConfigError, "n_worlds must be >= 1");
  sim::ForestParams p;
  p.density = density;
  p.bounds = {0.0, length, -0.5 * width, 0.5 * width};
  p.min_clearance = min_clearance;
  std::vector<sim::World> out;
  for (int i = 0; i < count; ++i) out.push_back(sim::generate_forest(seed * 1000 + static_cast<std::uint64_t>(i), p));
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  bool speed_given = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) fail(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
    speed_given = speed_given || key == "v_forward";
  }
  if (cfg.scenarios == "indoor") {
    cfg.dagger.worlds = sim::indoor_scenarios();
  } else {
    if (!speed_given) cfg.dagger.v_forward = 2.0;
    cfg.dagger.worlds = outdoor_worlds(cfg.world_seed, cfg.n_worlds, cfg.world_length, cfg.world_width, cfg.density,
                                       cfg.min_clearance);
  }
  dagger::validate(cfg.dagger);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string default_config_text() {
  return R"(# scenario set: indoor (fixed 11-scenario suite) or outdoor (seeded forests)
scenarios = indoor
n_iterations = 5
seed = 7
lambda_base = 0.1
holdout_fraction = 0.2
d_safe = 0.8
t_safe = 1.2
takeover_release = 0.5
include_takeover_frames = true
label_noise = 0
label_latency = 0
# forward speed, m/s; defaults to 1.0 indoor and 2.0 outdoor
# v_forward = 1.0
v_lat_max = 1.0
tau = 0.3
dt = 0.1
hfov = 1.6232
max_range = 25
lookahead = 6
grid_nx = 15
grid_ny = 7
max_steps = 3000
# outdoor only
n_worlds = 20
world_seed = 1
world_length = 100
world_width = 20
density = 0.08
min_clearance = 1.5
)";
}

}  // namespace rd::eval
