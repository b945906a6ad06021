#include <cmath>
#include <string>

#include "rd/error.hpp"
#include "rd/features.hpp"

namespace rd::features {

ControlContext update_context(const ControlContext& ctx, double executed_command, double lateral_velocity,
                              double yaw_dev) {
  if (!(executed_command >= -1.0 && executed_command <= 1.0)) {
    fail(ErrorCode::CommandOutOfRange, "command " + std::to_string(executed_command) + " outside [-1,1]");
  }
  ControlContext next = ctx;
  for (std::size_t k = 0; k < kHistoryLength; ++k) {
    const double a = kHistoryDecay[k];
    next.history[k] = a * ctx.history[k] + (1.0 - a) * executed_command;
  }
  next.drift = lateral_velocity;
  next.yaw_dev = yaw_dev;
  return next;
}

}  // namespace rd::features
