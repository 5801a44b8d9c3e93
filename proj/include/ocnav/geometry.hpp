#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ocnav/util.hpp"

namespace ocnav {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

/// Robot configuration in SE(2). theta is kept in (-pi, pi].
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

/// Rigid motion in SE(2): p -> R(dtheta) p + (dx, dy). dtheta in (-pi, pi].
struct Transform {
    double dx = 0.0;
    double dy = 0.0;
    double dtheta = 0.0;

    static Transform identity() { return {0.0, 0.0, 0.0}; }
};

Transform compose(const Transform& a, const Transform& b);
Transform inverse(const Transform& t);
Vec2 apply(const Transform& t, const Vec2& p);

inline Transform pose_as_transform(const Pose& p) { return {p.x, p.y, p.theta}; }
inline Pose transform_as_pose(const Transform& t) { return {t.dx, t.dy, wrap_angle(t.dtheta)}; }

struct CircleObstacle {
    Vec2 center;
    double radius = 0.0;
};

struct BoxObstacle {
    Vec2 min;
    Vec2 max;
};

using Obstacle = std::variant<CircleObstacle, BoxObstacle>;

struct Box {
    Vec2 min;
    Vec2 max;
};

struct Environment {
    std::vector<Obstacle> obstacles;
    Box workspace_bounds;
    Pose start;
    Vec2 goal;
};

/// One Lidar sweep. points[i] lies along bearing 2*pi*i/n_rays in the robot
/// frame; norm is capped at the sensor range d_o.
struct LidarScan {
    std::vector<Vec2> points;
    std::vector<std::uint8_t> saturated;

    std::size_t size() const { return points.size(); }
};

/// Distance along the ray (origin, dir) to the first contact with the
/// obstacle, or a negative value when there is none. A ray starting inside
/// the obstacle is already in contact (distance 0).
double ray_hit_distance(const Obstacle& obs, const Vec2& origin, const Vec2& dir);

LidarScan raycast(const Environment& env, const Pose& pose, int n_rays, double d_o);

double min_range(const LidarScan& scan);

/// Signed distance from a point to the obstacle boundary (negative inside).
double signed_distance(const Obstacle& obs, const Vec2& p);

/// Ground-truth clearance: smallest signed distance over all obstacles.
/// Returns +inf for an empty environment.
double min_obstacle_distance(const Environment& env, const Vec2& p);

/// Appends four box obstacles hugging the workspace bounds so the
/// environment is closed.
void add_boundary_walls(Environment& env, double thickness = 0.1);

std::string environment_to_json(const Environment& env);
Environment environment_from_json(const std::string& text);
void save_environment(const Environment& env, const std::string& path);
Environment load_environment(const std::string& path);

}  // namespace ocnav
