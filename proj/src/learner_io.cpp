#include <fstream>
#include <string>

#include "binio.hpp"
#include "rd/error.hpp"
#include "rd/learner.hpp"

namespace rd::learner {

using features::FeatureLayout;
using features::Group;
using nlohmann::json;

json layout_to_json(const FeatureLayout& layout) {
  json groups = json::array();
  for (Group g : layout.groups()) groups.push_back(std::string(features::group_name(g)));
  json entries = json::array();
  for (const auto& e : layout.entries()) {
    entries.push_back({{"group", std::string(features::group_name(e.group))},
                       {"window", e.window},
                       {"start", e.start},
                       {"length", e.length}});
  }
  return {{"n_windows", layout.n_windows()},
          {"groups", groups},
          {"total_dim", layout.total_dim()},
          {"entries", entries}};
}

FeatureLayout layout_from_json(const json& j) {
  try {
    std::vector<Group> groups;
    for (const auto& g : j.at("groups")) groups.push_back(features::parse_group(g.get<std::string>()));
    FeatureLayout layout(j.at("n_windows").get<int>(), groups);
    if (j.contains("total_dim") && j.at("total_dim").get<std::size_t>() != layout.total_dim()) {
      fail(ErrorCode::FormatError, "layout total_dim disagrees with its groups");
    }
    return layout;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("bad layout json: ") + e.what());
  }
}

json model_to_json(const RidgeModel& model) {
  return {{"lambda_base", model.lambda_base},
          {"b", model.b},
          {"w", model.w},
          {"mean", model.normalizer.mean},
          {"std", model.normalizer.std},
          {"layout", layout_to_json(model.layout)}};
}

RidgeModel model_from_json(const json& j) {
  RidgeModel m;
  try {
    m.lambda_base = j.at("lambda_base").get<double>();
    m.b = j.at("b").get<double>();
    m.w = j.at("w").get<std::vector<double>>();
    m.normalizer.mean = j.at("mean").get<std::vector<double>>();
    m.normalizer.std = j.at("std").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("bad model json: ") + e.what());
  }
  m.layout = layout_from_json(j.at("layout"));
  const std::size_t d = m.layout.total_dim();
  if (m.w.size() != d || m.normalizer.mean.size() != d || m.normalizer.std.size() != d) {
    fail(ErrorCode::DimensionMismatch, "model vectors do not match the layout dimension");
  }
  return m;
}

void save_model(const std::filesystem::path& path, const RidgeModel& model) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string());
  out << model_to_json(model).dump() << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

RidgeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

namespace {
constexpr char kMagic[4] = {'D', 'G', 'R', 'D'};
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string());
  out.write(kMagic, 4);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim()));
  detail::put_le<std::uint64_t>(out, data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (float v : data.row(r)) detail::put_le<float>(out, v);
    const auto& m = data.meta(r);
    detail::put_le<float>(out, m.label);
    detail::put_le<std::uint16_t>(out, m.iteration);
    detail::put_le<std::uint32_t>(out, m.episode);
    detail::put_le<std::uint8_t>(out, m.takeover ? 1 : 0);
  }
  if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, const FeatureLayout& layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kMagic, 4)) {
    fail(ErrorCode::FormatError, "bad dataset magic in " + path.string());
  }
  const auto dim = detail::get_le<std::uint32_t>(in);
  const auto rows = detail::get_le<std::uint64_t>(in);
  if (dim != layout.total_dim()) {
    fail(ErrorCode::DimensionMismatch, "dataset dimension " + std::to_string(dim) + " does not match layout");
  }
  Dataset data(layout);
  std::vector<double> x(dim);
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (auto& v : x) v = detail::get_le<float>(in);
    RowMeta m;
    m.label = detail::get_le<float>(in);
    m.iteration = detail::get_le<std::uint16_t>(in);
    m.episode = detail::get_le<std::uint32_t>(in);
    m.takeover = detail::get_le<std::uint8_t>(in) != 0;
    data.add(x, m);
  }
  return data;
}

}  // namespace rd::learner
