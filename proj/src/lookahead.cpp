#include "ocnav/lookahead.hpp"

namespace ocnav {

Observation observe(const Environment& env, const Pose& pose, int n_rays, double d_o) {
    Observation obs;
    obs.scan = raycast(env, pose, n_rays, d_o);
    const Vec2 d = env.goal - Vec2{pose.x, pose.y};
    obs.rho = d.norm();
    obs.phi = obs.rho > 0.0 ? wrap_angle(std::atan2(d.y, d.x) - pose.theta) : 0.0;
    return obs;
}

LidarScan predict_scan(const LidarScan& scan, const Transform& t) {
    const Transform inv = inverse(t);
    LidarScan out;
    out.points.resize(scan.size());
    out.saturated = scan.saturated;
    for (std::size_t i = 0; i < scan.size(); ++i) out.points[i] = apply(inv, scan.points[i]);
    return out;
}

std::pair<double, double> predict_goal(double rho, double phi, const Transform& t) {
    const Vec2 g{rho * std::cos(phi), rho * std::sin(phi)};
    const Vec2 g1 = apply(inverse(t), g);
    const double rho1 = g1.norm();
    const double phi1 = rho1 > 0.0 ? std::atan2(g1.y, g1.x) : 0.0;
    return {rho1, wrap_angle(phi1)};
}

std::pair<double, double> predict_certificates(const CertificateModel& model,
                                               const Observation& obs, const ControlInput& u,
                                               double dt) {
    const Transform t = local_transform(u, dt);
    const double h_next = cbf_value(model, predict_scan(obs.scan, t));
    const auto [rho1, phi1] = predict_goal(obs.rho, obs.phi, t);
    const double v_next = clf_value(model, rho1, phi1);
    return {h_next, v_next};
}

}  // namespace ocnav
