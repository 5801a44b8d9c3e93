#pragma once

#include <utility>

#include "ocnav/certificates.hpp"
#include "ocnav/dynamics.hpp"
#include "ocnav/geometry.hpp"

namespace ocnav {

/// A full sensor observation: Lidar scan plus range/bearing to the goal.
struct Observation {
    LidarScan scan;
    double rho = 0.0;
    double phi = 0.0;
};

/// Ground-truth observation of an environment from a pose: simulated Lidar
/// plus range/bearing to the goal in the robot frame.
Observation observe(const Environment& env, const Pose& pose, int n_rays, double d_o);

/// Rigidly maps every scan point by inverse(t). Saturation flags are
/// preserved; no re-raycasting happens here, so the prediction carries the
/// usual discontinuity error near occlusion boundaries.
LidarScan predict_scan(const LidarScan& scan, const Transform& t);

/// Exact rigid update of the goal point in the local frame.
std::pair<double, double> predict_goal(double rho, double phi, const Transform& t);

/// One-step predicted certificate values after applying u for dt.
std::pair<double, double> predict_certificates(const CertificateModel& model,
                                               const Observation& obs, const ControlInput& u,
                                               double dt);

}  // namespace ocnav
