#pragma once

#include <vector>

#include "ocnav/geometry.hpp"

namespace ocnav {

struct ControlInput {
    double v = 0.0;      // forward velocity, m/s
    double omega = 0.0;  // angular rate, rad/s

    double norm() const { return std::hypot(v, omega); }
    bool operator==(const ControlInput&) const = default;
};

/// Finite candidate set covering [0, v_max] x [-omega_max, omega_max].
struct ControlGrid {
    std::vector<ControlInput> candidates;

    static ControlGrid make(double v_max, double omega_max, int n_v, int n_omega);
};

/// Exact unicycle arc integration over dt.
Pose dubins_step(const Pose& pose, const ControlInput& u, double dt);

/// The body-frame motion implied by u over dt, independent of global state.
Transform local_transform(const ControlInput& u, double dt);

}  // namespace ocnav
