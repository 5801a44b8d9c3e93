#include "ocnav/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace ocnav {

Transform compose(const Transform& a, const Transform& b) {
    const double c = std::cos(a.dtheta);
    const double s = std::sin(a.dtheta);
    return {a.dx + c * b.dx - s * b.dy,
            a.dy + s * b.dx + c * b.dy,
            wrap_angle(a.dtheta + b.dtheta)};
}

Transform inverse(const Transform& t) {
    const double c = std::cos(t.dtheta);
    const double s = std::sin(t.dtheta);
    return {-(c * t.dx + s * t.dy), -(-s * t.dx + c * t.dy), wrap_angle(-t.dtheta)};
}

Vec2 apply(const Transform& t, const Vec2& p) {
    const double c = std::cos(t.dtheta);
    const double s = std::sin(t.dtheta);
    return {t.dx + c * p.x - s * p.y, t.dy + s * p.x + c * p.y};
}

namespace {

double ray_circle(const CircleObstacle& o, const Vec2& origin, const Vec2& dir) {
    const Vec2 oc = origin - o.center;
    const double d2 = oc.dot(oc);
    if (d2 <= o.radius * o.radius) return 0.0;  // already in contact
    const double b = oc.dot(dir);
    const double disc = b * b - (d2 - o.radius * o.radius);
    if (disc < 0.0) return -1.0;
    const double t = -b - std::sqrt(disc);
    return t >= 0.0 ? t : -1.0;
}

double ray_box(const BoxObstacle& o, const Vec2& origin, const Vec2& dir) {
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    const double op[2] = {origin.x, origin.y};
    const double dp[2] = {dir.x, dir.y};
    const double lo[2] = {o.min.x, o.min.y};
    const double hi[2] = {o.max.x, o.max.y};
    for (int k = 0; k < 2; ++k) {
        if (std::abs(dp[k]) < 1e-300) {
            if (op[k] < lo[k] || op[k] > hi[k]) return -1.0;
        } else {
            double t1 = (lo[k] - op[k]) / dp[k];
            double t2 = (hi[k] - op[k]) / dp[k];
            if (t1 > t2) std::swap(t1, t2);
            tmin = std::max(tmin, t1);
            tmax = std::min(tmax, t2);
        }
    }
    if (tmax < tmin || tmax < 0.0) return -1.0;
    return tmin <= 0.0 ? 0.0 : tmin;
}

}  // namespace

double ray_hit_distance(const Obstacle& obs, const Vec2& origin, const Vec2& dir) {
    return std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, CircleObstacle>) return ray_circle(o, origin, dir);
            else return ray_box(o, origin, dir);
        },
        obs);
}

LidarScan raycast(const Environment& env, const Pose& pose, int n_rays, double d_o) {
    LidarScan scan;
    scan.points.resize(static_cast<std::size_t>(n_rays));
    scan.saturated.resize(static_cast<std::size_t>(n_rays));
    const Vec2 origin{pose.x, pose.y};
    for (int i = 0; i < n_rays; ++i) {
        const double bearing = 2.0 * kPi * i / n_rays;
        const double world_angle = pose.theta + bearing;
        const Vec2 dir{std::cos(world_angle), std::sin(world_angle)};
        double best = d_o;
        bool hit = false;
        for (const auto& obs : env.obstacles) {
            const double t = ray_hit_distance(obs, origin, dir);
            if (t >= 0.0 && t < best) {
                best = t;
                hit = true;
            }
        }
        scan.points[i] = Vec2{std::cos(bearing), std::sin(bearing)} * best;
        scan.saturated[i] = hit ? 0 : 1;
    }
    return scan;
}

double min_range(const LidarScan& scan) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : scan.points) best = std::min(best, p.norm());
    return best;
}

double signed_distance(const Obstacle& obs, const Vec2& p) {
    return std::visit(
        [&](const auto& o) -> double {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, CircleObstacle>) {
                return (p - o.center).norm() - o.radius;
            } else {
                const Vec2 c{(o.min.x + o.max.x) / 2, (o.min.y + o.max.y) / 2};
                const Vec2 h{(o.max.x - o.min.x) / 2, (o.max.y - o.min.y) / 2};
                const Vec2 q{std::abs(p.x - c.x) - h.x, std::abs(p.y - c.y) - h.y};
                const Vec2 outside{std::max(q.x, 0.0), std::max(q.y, 0.0)};
                return outside.norm() + std::min(std::max(q.x, q.y), 0.0);
            }
        },
        obs);
}

double min_obstacle_distance(const Environment& env, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& obs : env.obstacles) best = std::min(best, signed_distance(obs, p));
    return best;
}

void add_boundary_walls(Environment& env, double thickness) {
    const Box& b = env.workspace_bounds;
    const double t = thickness;
    env.obstacles.push_back(BoxObstacle{{b.min.x - t, b.min.y - t}, {b.max.x + t, b.min.y}});
    env.obstacles.push_back(BoxObstacle{{b.min.x - t, b.max.y}, {b.max.x + t, b.max.y + t}});
    env.obstacles.push_back(BoxObstacle{{b.min.x - t, b.min.y - t}, {b.min.x, b.max.y + t}});
    env.obstacles.push_back(BoxObstacle{{b.max.x, b.min.y - t}, {b.max.x + t, b.max.y + t}});
}

namespace {

using nlohmann::json;

json obstacle_to_json(const Obstacle& obs) {
    return std::visit(
        [](const auto& o) -> json {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, CircleObstacle>) {
                return {{"kind", "circle"}, {"center", {o.center.x, o.center.y}}, {"radius", o.radius}};
            } else {
                return {{"kind", "box"}, {"min", {o.min.x, o.min.y}}, {"max", {o.max.x, o.max.y}}};
            }
        },
        obs);
}

Obstacle obstacle_from_json(const json& j) {
    const std::string kind = j.at("kind");
    if (kind == "circle") {
        return CircleObstacle{{j.at("center")[0], j.at("center")[1]}, j.at("radius")};
    }
    if (kind == "box") {
        return BoxObstacle{{j.at("min")[0], j.at("min")[1]}, {j.at("max")[0], j.at("max")[1]}};
    }
    throw std::runtime_error("unknown obstacle kind: " + kind);
}

}  // namespace

std::string environment_to_json(const Environment& env) {
    json j;
    j["obstacles"] = json::array();
    for (const auto& o : env.obstacles) j["obstacles"].push_back(obstacle_to_json(o));
    j["bounds"] = {{"min", {env.workspace_bounds.min.x, env.workspace_bounds.min.y}},
                   {"max", {env.workspace_bounds.max.x, env.workspace_bounds.max.y}}};
    j["start"] = {{"x", env.start.x}, {"y", env.start.y}, {"theta", env.start.theta}};
    j["goal"] = {env.goal.x, env.goal.y};
    return j.dump(2);
}

Environment environment_from_json(const std::string& text) {
    const json j = json::parse(text);
    Environment env;
    for (const auto& o : j.at("obstacles")) env.obstacles.push_back(obstacle_from_json(o));
    env.workspace_bounds = {{j.at("bounds").at("min")[0], j.at("bounds").at("min")[1]},
                            {j.at("bounds").at("max")[0], j.at("bounds").at("max")[1]}};
    env.start = {j.at("start").at("x"), j.at("start").at("y"), j.at("start").at("theta")};
    env.goal = {j.at("goal")[0], j.at("goal")[1]};
    return env;
}

void save_environment(const Environment& env, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << environment_to_json(env) << "\n";
}

Environment load_environment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return environment_from_json(text);
}

}  // namespace ocnav
