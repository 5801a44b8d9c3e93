#pragma once

#include <string>

#include "ocnav/bench.hpp"

namespace ocnav {

/// Renders workspace, obstacles, goal disc and the executed trajectory.
/// Path segments are colored by controller mode (blue goal-seeking, orange
/// exploratory, red fail-safe). Output formatting is deterministic.
std::string trajectory_svg(const Environment& env, const EpisodeLog& log, double goal_radius);

void save_trajectory_svg(const Environment& env, const EpisodeLog& log, double goal_radius,
                         const std::string& path);

}  // namespace ocnav
