#include <algorithm>
#include <cmath>

#include "rd/simworld.hpp"

namespace rd::sim {

// Gap steering: every tree ahead inside the lookahead pushes the drone away
// from its side, weighted by proximity and by how close it sits to the path.
ExpertDecision expert_decision(const World& world, const DroneState& s, const ExpertParams& p) {
  const double c = std::cos(s.heading), sn = std::sin(s.heading);
  const double cone = std::tan(p.half_angle);
  double repulse = 0.0;
  double centred = 0.0;
  for (const auto& t : world.trees) {
    const double dx = t.x - s.x, dy = t.y - s.y;
    const double fwd = c * dx + sn * dy;
    const double lat = -sn * dx + c * dy;
    if (fwd <= 0.0 || std::abs(lat) > cone * fwd) continue;
    const double d = std::max(std::hypot(dx, dy) - t.r, 0.05);
    if (d > p.lookahead) continue;
    const double weight = std::max(0.0, 1.0 / d - 1.0 / p.lookahead) *
                          std::max(0.0, 1.0 - std::abs(lat) / p.corridor);
    if (weight == 0.0) continue;
    if (lat == 0.0) {
      centred += weight;
      continue;
    }
    repulse += lat > 0.0 ? -weight : weight;
  }

  ExpertDecision out;
  if (centred > 0.0) {
    out.tie_break = true;
    // A dead-centre tree pushes left; an exact cancellation also resolves left.
    repulse += centred;
    if (repulse == 0.0) repulse = centred;
  }
  double attract = 0.0;
  if (world.mode == Mode::Indoor) attract = std::clamp((s.heading - world.start.heading) / p.yaw_scale, -1.0, 1.0);
  out.command = std::clamp(p.gain_repulse * repulse + p.gain_attract * attract, -1.0, 1.0);
  return out;
}

}  // namespace rd::sim
