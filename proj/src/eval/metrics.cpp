#include <cmath>
#include <cstdio>
#include <sstream>

#include "rd/error.hpp"
#include "rd/evalcli.hpp"

namespace rd::eval {

namespace {

const char* const kFailureNames[] = {"VisibleTree", "NarrowFOV", "Other"};

std::optional<double> ratio(double num, int den) {
  if (den <= 0) return std::nullopt;
  return num / static_cast<double>(den);
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

MetricsReport compute_metrics(const std::vector<sim::EpisodeLog>& logs, const std::vector<sim::World>& worlds,
                              const sim::CameraModel& camera) {
  if (logs.size() != worlds.size()) fail(ErrorCode::DimensionMismatch, "one world per episode log required");
  MetricsReport m;
  for (const char* name : kFailureNames) m.crashes_by_type[name] = 0;
  int left = 0, right = 0, middle = 0, active = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& log = logs[i];
    ++m.episodes;
    m.distance += log.distance;
    if (!log.steps.empty()) m.duration += log.steps.back().t - log.steps.front().t;
    if (log.status == sim::Status::Crashed) {
      ++m.crashes;
      ++m.crashes_by_type[sim::failure_name(sim::classify_failure(log, worlds[i], camera))];
    }
    for (const auto& e : sim::tree_events(log, worlds[i], camera)) {
      if (e.side == sim::Side::Middle) {
        ++middle;
        continue;
      }
      (e.side == sim::Side::Left ? left : right) += 1;
      active += e.active;
    }
  }
  m.distance_per_failure = ratio(m.distance, m.crashes);
  m.time_per_failure = ratio(m.duration, m.crashes);
  for (const auto& [name, count] : m.crashes_by_type) m.distance_per_failure_by_type[name] = ratio(m.distance, count);
  m.distance_per_failure_non_fov = ratio(m.distance, m.crashes - m.crashes_by_type["NarrowFOV"]);
  m.trees_avoided = left + right;
  m.trees_middle = middle;
  m.trees_avoided_per_meter = m.distance > 0.0 ? m.trees_avoided / m.distance : 0.0;
  m.active_fraction = m.trees_avoided > 0 ? static_cast<double>(active) / m.trees_avoided : 0.0;
  const int passes = left + right + middle;
  if (passes > 0) {
    m.side_left = static_cast<double>(left) / passes;
    m.side_right = static_cast<double>(right) / passes;
    m.side_middle = static_cast<double>(middle) / passes;
  }
  return m;
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json by_type = nlohmann::json::object(), dpf_type = nlohmann::json::object();
  for (const auto& [k, v] : m.crashes_by_type) by_type[k] = v;
  for (const auto& [k, v] : m.distance_per_failure_by_type) dpf_type[k] = opt(v);
  return {{"episodes", m.episodes},
          {"distance", m.distance},
          {"duration", m.duration},
          {"crashes", m.crashes},
          {"distance_per_failure", opt(m.distance_per_failure)},
          {"time_per_failure", opt(m.time_per_failure)},
          {"crashes_by_type", by_type},
          {"distance_per_failure_by_type", dpf_type},
          {"distance_per_failure_non_fov", opt(m.distance_per_failure_non_fov)},
          {"trees_avoided", m.trees_avoided},
          {"trees_middle", m.trees_middle},
          {"trees_avoided_per_meter", m.trees_avoided_per_meter},
          {"active_fraction", m.active_fraction},
          {"side_fractions", {{"left", m.side_left}, {"right", m.side_right}, {"middle", m.side_middle}}},
          {"intervention_rate", m.intervention_rate},
          {"imitation_loss", m.imitation_loss}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  try {
    m.episodes = j.at("episodes").get<int>();
    m.distance = j.at("distance").get<double>();
    m.duration = j.at("duration").get<double>();
    m.crashes = j.at("crashes").get<int>();
    m.distance_per_failure = opt_from(j.at("distance_per_failure"));
    m.time_per_failure = opt_from(j.at("time_per_failure"));
    for (const auto& [k, v] : j.at("crashes_by_type").items()) m.crashes_by_type[k] = v.get<int>();
    for (const auto& [k, v] : j.at("distance_per_failure_by_type").items()) m.distance_per_failure_by_type[k] = opt_from(v);
    m.distance_per_failure_non_fov = opt_from(j.at("distance_per_failure_non_fov"));
    m.trees_avoided = j.at("trees_avoided").get<int>();
    m.trees_middle = j.at("trees_middle").get<int>();
    m.trees_avoided_per_meter = j.at("trees_avoided_per_meter").get<double>();
    m.active_fraction = j.at("active_fraction").get<double>();
    m.side_left = j.at("side_fractions").at("left").get<double>();
    m.side_right = j.at("side_fractions").at("right").get<double>();
    m.side_middle = j.at("side_fractions").at("middle").get<double>();
    m.intervention_rate = j.at("intervention_rate").get<std::vector<double>>();
    m.imitation_loss = j.at("imitation_loss").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("bad metrics json: ") + e.what());
  }
  return m;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : "none"; }

}  // namespace

// Two columns, metric,value; absent ratios are written as "none".
std::string metrics_to_csv(const MetricsReport& m) {
  std::ostringstream out;
  out << "metric,value\n";
  out << "episodes," << m.episodes << '\n';
  out << "distance," << num(m.distance) << '\n';
  out << "duration," << num(m.duration) << '\n';
  out << "crashes," << m.crashes << '\n';
  out << "distance_per_failure," << num(m.distance_per_failure) << '\n';
  out << "time_per_failure," << num(m.time_per_failure) << '\n';
  for (const auto& [k, v] : m.crashes_by_type) out << "crashes." << k << ',' << v << '\n';
  for (const auto& [k, v] : m.distance_per_failure_by_type) out << "distance_per_failure." << k << ',' << num(v) << '\n';
  out << "distance_per_failure_non_fov," << num(m.distance_per_failure_non_fov) << '\n';
  out << "trees_avoided," << m.trees_avoided << '\n';
  out << "trees_middle," << m.trees_middle << '\n';
  out << "trees_avoided_per_meter," << num(m.trees_avoided_per_meter) << '\n';
  out << "active_fraction," << num(m.active_fraction) << '\n';
  out << "side_left," << num(m.side_left) << '\n';
  out << "side_right," << num(m.side_right) << '\n';
  out << "side_middle," << num(m.side_middle) << '\n';
  for (std::size_t i = 0; i < m.intervention_rate.size(); ++i) {
    out << "intervention_rate." << i + 1 << ',' << num(m.intervention_rate[i]) << '\n';
  }
  for (std::size_t i = 0; i < m.imitation_loss.size(); ++i) {
    out << "imitation_loss." << i + 1 << ',' << num(m.imitation_loss[i]) << '\n';
  }
  return out.str();
}

MetricsReport metrics_from_csv(const std::string& csv) {
  MetricsReport m;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "metric,value") fail(ErrorCode::FormatError, "missing metrics CSV header");
  auto real = [](const std::string& v) -> std::optional<double> {
    if (v == "none") return std::nullopt;
    return std::stod(v);
  };
  try {
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) fail(ErrorCode::FormatError, "bad metrics CSV line: " + line);
      const std::string key = line.substr(0, comma), v = line.substr(comma + 1);
      if (key == "episodes") m.episodes = std::stoi(v);
      else if (key == "distance") m.distance = std::stod(v);
      else if (key == "duration") m.duration = std::stod(v);
      else if (key == "crashes") m.crashes = std::stoi(v);
      else if (key == "distance_per_failure") m.distance_per_failure = real(v);
      else if (key == "time_per_failure") m.time_per_failure = real(v);
      else if (key.rfind("crashes.", 0) == 0) m.crashes_by_type[key.substr(8)] = std::stoi(v);
      else if (key.rfind("distance_per_failure.", 0) == 0) m.distance_per_failure_by_type[key.substr(21)] = real(v);
      else if (key == "distance_per_failure_non_fov") m.distance_per_failure_non_fov = real(v);
      else if (key == "trees_avoided") m.trees_avoided = std::stoi(v);
      else if (key == "trees_middle") m.trees_middle = std::stoi(v);
      else if (key == "trees_avoided_per_meter") m.trees_avoided_per_meter = std::stod(v);
      else if (key == "active_fraction") m.active_fraction = std::stod(v);
      else if (key == "side_left") m.side_left = std::stod(v);
      else if (key == "side_right") m.side_right = std::stod(v);
      else if (key == "side_middle") m.side_middle = std::stod(v);
      else if (key.rfind("intervention_rate.", 0) == 0) m.intervention_rate.push_back(std::stod(v));
      else if (key.rfind("imitation_loss.", 0) == 0) m.imitation_loss.push_back(std::stod(v));
      else fail(ErrorCode::FormatError, "unknown metrics CSV key: " + key);
    }
  } catch (const std::logic_error& e) {
    fail(ErrorCode::FormatError, std::string("bad number in metrics CSV: ") + e.what());
  }
  return m;
}

std::vector<sim::EpisodeLog> evaluate(const dagger::Runner& runner, const learner::RidgeModel& model,
                                      const std::vector<sim::World>& worlds) {
  dagger::EpisodeSpec spec;
  spec.model = &model;
  spec.collect = false;
  auto episodes = runner.run_all(worlds, spec, 0);
  std::vector<sim::EpisodeLog> logs;
  for (auto& e : episodes) logs.push_back(std::move(e.log));
  return logs;
}

}  // namespace rd::eval
