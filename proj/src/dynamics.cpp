#include "ocnav/dynamics.hpp"

#include <algorithm>

namespace ocnav {

ControlGrid ControlGrid::make(double v_max, double omega_max, int n_v, int n_omega) {
    ControlGrid grid;
    for (int i = 0; i < n_v; ++i) {
        const double v = n_v == 1 ? 0.0 : v_max * i / (n_v - 1);
        for (int j = 0; j < n_omega; ++j) {
            const double w = n_omega == 1 ? 0.0 : -omega_max + 2.0 * omega_max * j / (n_omega - 1);
            const ControlInput u{v, w};
            if (std::find(grid.candidates.begin(), grid.candidates.end(), u) == grid.candidates.end())
                grid.candidates.push_back(u);
        }
    }
    return grid;
}

Transform local_transform(const ControlInput& u, double dt) {
    if (std::abs(u.omega) < 1e-9) {
        return {u.v * dt, 0.0, 0.0};
    }
    const double th = u.omega * dt;
    const double r = u.v / u.omega;
    return {r * std::sin(th), r * (1.0 - std::cos(th)), wrap_angle(th)};
}

Pose dubins_step(const Pose& pose, const ControlInput& u, double dt) {
    return transform_as_pose(compose(pose_as_transform(pose), local_transform(u, dt)));
}

}  // namespace ocnav
