#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rd/error.hpp"
#include "rd/evalcli.hpp"

namespace rd::eval {

using features::Group;

std::vector<Group> parse_groups(const std::string& list) {
  std::vector<Group> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (item.empty()) continue;
    const Group g = features::parse_group(item);
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

Ablation ablate(const learner::Dataset& data, const learner::RowSelection& train_rows,
                const learner::RowSelection& holdout_rows, double lambda_base, const std::vector<Group>& drop) {
  std::vector<Group> keep;
  for (Group g : data.layout().groups()) {
    if (std::find(drop.begin(), drop.end(), g) == drop.end()) keep.push_back(g);
  }
  if (keep.empty()) fail(ErrorCode::InvalidArgument, "ablation would drop every feature group");
  Ablation a;
  a.full = learner::fit(data, train_rows, lambda_base);
  a.loss_full = learner::imitation_loss(a.full, data, holdout_rows);
  const auto projected = data.project(keep);
  a.dropped = learner::fit(projected, train_rows, lambda_base);
  a.loss_dropped = learner::imitation_loss(a.dropped, projected, holdout_rows);
  a.relative_change = a.loss_full > 0.0 ? (a.loss_dropped - a.loss_full) / a.loss_full : 0.0;
  return a;
}

Overlay contribution_overlay(const learner::RidgeModel& model, std::span<const double> x) {
  const auto c = learner::contributions(model, x);
  const auto& layout = model.layout;
  Overlay o;
  o.intercept = c.intercept;
  o.unclipped = c.unclipped;
  o.window.assign(static_cast<std::size_t>(layout.n_windows()), 0.0);
  for (Group g : features::kVisualGroups) {
    if (layout.has_group(g)) o.group[g].assign(static_cast<std::size_t>(layout.n_windows()), 0.0);
  }
  for (std::size_t k = 0; k < layout.entries().size(); ++k) {
    const auto& e = layout.entries()[k];
    if (e.group == Group::NonVisual) {
      o.non_visual += c.per_entry[k];
    } else {
      o.group[e.group][static_cast<std::size_t>(e.window)] = c.per_entry[k];
    }
  }
  for (std::size_t w = 0; w < o.window.size(); ++w) {
    double s = 0.0;
    for (const auto& [g, values] : o.group) s += values[w];
    o.window[w] = s;
  }
  return o;
}

std::string base64(std::span<const std::uint8_t> bytes) {
  static const char* table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (static_cast<unsigned>(bytes[i]) << 16) | (static_cast<unsigned>(bytes[i + 1]) << 8) |
                       static_cast<unsigned>(bytes[i + 2]);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += table[v & 63];
  }
  if (i < bytes.size()) {
    unsigned v = static_cast<unsigned>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) v |= static_cast<unsigned>(bytes[i + 1]) << 8;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? table[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string overlay_svg(const imaging::Raster& frame, const imaging::WindowGrid& grid, const std::vector<double>& values,
                        const std::string& title) {
  if (values.size() != static_cast<std::size_t>(grid.count())) {
    fail(ErrorCode::DimensionMismatch, "one overlay value per window required");
  }
  if (frame.width() != grid.image_width || frame.height() != grid.image_height) {
    fail(ErrorCode::DimensionMismatch, "frame size does not match the window grid");
  }
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.0 ? 30.0 / peak : 0.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << frame.width() << "\" height=\""
      << frame.height() + 20 << "\">\n";
  svg << "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">"
         "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#ff3030\"/></marker></defs>\n";
  svg << "<image x=\"0\" y=\"0\" width=\"" << frame.width() << "\" height=\"" << frame.height()
      << "\" href=\"data:image/x-portable-pixmap;base64," << base64(imaging::encode_ppm(frame)) << "\"/>\n";
  char buf[256];
  for (int i = 0; i < grid.count(); ++i) {
    const auto r = grid.window(i);
    const double cx = r.x + 0.5 * r.width, cy = r.y + 0.5 * r.height;
    const double len = values[static_cast<std::size_t>(i)] * scale;  // positive (left) points towards -x
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#ff3030\" stroke-width=\"1.5\"%s/>\n",
                  cx, cy, cx - len, cy, len != 0.0 ? " marker-end=\"url(#head)\"" : "");
    svg << buf;
  }
  svg << "<text x=\"4\" y=\"" << frame.height() + 15 << "\" font-family=\"monospace\" font-size=\"12\">" << title
      << "</text>\n</svg>\n";
  return svg.str();
}

std::vector<RunRow> read_run(const std::filesystem::path& run_dir) {
  std::vector<RunRow> rows;
  for (int k = 1;; ++k) {
    const auto path = run_dir / ("iter" + std::to_string(k)) / "report.json";
    if (!std::filesystem::exists(path)) break;
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
      rows.push_back({j.at("iteration").get<int>(), j.at("intervention_rate").get<double>(),
                      j.at("imitation_loss").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
  }
  if (rows.empty()) fail(ErrorCode::IoError, "no iteration reports under " + run_dir.string());
  return rows;
}

std::string run_csv(const std::vector<RunRow>& rows) {
  std::ostringstream out;
  out << "iteration,intervention_rate,imitation_loss\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.iteration, r.intervention_rate, r.imitation_loss);
    out << buf;
  }
  return out.str();
}

// Interventions (% of scenarios, left axis) and imitation loss (right axis)
// against the DAgger iteration.
std::string run_svg(const std::vector<RunRow>& rows) {
  const double W = 480, H = 320, L = 60, R = 60, T = 30, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  double max_loss = 0.0;
  for (const auto& r : rows) max_loss = std::max(max_loss, r.imitation_loss);
  if (max_loss <= 0.0) max_loss = 1.0;
  const int n = static_cast<int>(rows.size());
  auto px = [&](int i) { return L + (n > 1 ? pw * i / (n - 1) : pw / 2); };
  auto py_rate = [&](double v) { return T + ph * (1.0 - v); };
  auto py_loss = [&](double v) { return T + ph * (1.0 - v / max_loss); };

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" "
      << "font-family=\"sans-serif\" font-size=\"11\">\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"#000\"/>\n",
                L, T, pw, ph);
  svg << buf;
  for (int k = 0; k <= 4; ++k) {
    const double f = k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%d%%</text>\n", L - 5,
                  py_rate(f) + 4, static_cast<int>(f * 100));
    svg << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\">%.3g</text>\n", L + pw + 5, py_loss(f * max_loss) + 4,
                  f * max_loss);
    svg << buf;
  }
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%d</text>\n", px(i), T + ph + 15,
                  rows[static_cast<std::size_t>(i)].iteration);
    svg << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">DAgger iteration</text>\n",
                L + pw / 2, H - 12);
  svg << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"14\" y=\"%g\" transform=\"rotate(-90 14 %g)\" text-anchor=\"middle\">"
                "interventions (%% of scenarios)</text>\n",
                T + ph / 2, T + ph / 2);
  svg << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" transform=\"rotate(90 %g %g)\" text-anchor=\"middle\">imitation loss</text>\n",
                W - 12, T + ph / 2, W - 12, T + ph / 2);
  svg << buf;

  auto series = [&](auto y_of, const char* colour, const char* id) {
    svg << "<polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(i), y_of(rows[static_cast<std::size_t>(i)]));
      svg << buf;
    }
    svg << "\"/>\n";
  };
  series([&](const RunRow& r) { return py_rate(r.intervention_rate); }, "#1f77b4", "intervention_rate");
  series([&](const RunRow& r) { return py_loss(r.imitation_loss); }, "#d62728", "imitation_loss");
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace rd::eval
