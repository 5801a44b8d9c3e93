#include "ocnav/svg.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ocnav {

namespace {

constexpr double kScale = 200.0;  // px per meter
constexpr double kPad = 20.0;

struct Mapper {
    Box bounds;
    double sx(double x) const { return kPad + (x - bounds.min.x) * kScale; }
    double sy(double y) const { return kPad + (bounds.max.y - y) * kScale; }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

const char* mode_color(Mode m) {
    switch (m) {
        case Mode::GoalSeeking: return "#1f77b4";
        case Mode::Exploratory: return "#ff7f0e";
        case Mode::FailSafe: return "#d62728";
    }
    return "#000000";
}

void circle(std::string& out, const Mapper& m, const Vec2& c, double r, const char* style) {
    out += "  <circle cx=\"" + fmt(m.sx(c.x)) + "\" cy=\"" + fmt(m.sy(c.y)) + "\" r=\"" +
           fmt(r * kScale) + "\" " + style + "/>\n";
}

}  // namespace

std::string trajectory_svg(const Environment& env, const EpisodeLog& log, double goal_radius) {
    const Mapper m{env.workspace_bounds};
    const double w = (env.workspace_bounds.max.x - env.workspace_bounds.min.x) * kScale + 2 * kPad;
    const double h = (env.workspace_bounds.max.y - env.workspace_bounds.min.y) * kScale + 2 * kPad;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" +
           fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";
    out += "  <rect x=\"" + fmt(m.sx(env.workspace_bounds.min.x)) + "\" y=\"" +
           fmt(m.sy(env.workspace_bounds.max.y)) + "\" width=\"" + fmt(w - 2 * kPad) +
           "\" height=\"" + fmt(h - 2 * kPad) +
           "\" fill=\"#fafafa\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    for (const Obstacle& obs : env.obstacles) {
        if (const auto* c = std::get_if<CircleObstacle>(&obs)) {
            circle(out, m, c->center, c->radius, "fill=\"#9e9e9e\" stroke=\"#616161\"");
        } else {
            const auto& b = std::get<BoxObstacle>(obs);
            out += "  <rect x=\"" + fmt(m.sx(b.min.x)) + "\" y=\"" + fmt(m.sy(b.max.y)) +
                   "\" width=\"" + fmt((b.max.x - b.min.x) * kScale) + "\" height=\"" +
                   fmt((b.max.y - b.min.y) * kScale) +
                   "\" fill=\"#9e9e9e\" stroke=\"#616161\"/>\n";
        }
    }

    circle(out, m, env.goal, goal_radius, "fill=\"#c8e6c9\" stroke=\"#2e7d32\"");
    circle(out, m, {env.start.x, env.start.y}, 0.03, "fill=\"#2e7d32\"");

    // Path: consecutive step poses, one polyline per run of equal mode.
    std::size_t i = 0;
    while (i < log.steps.size()) {
        const Mode mode = log.steps[i].mode;
        std::size_t j = i;
        while (j + 1 < log.steps.size() && log.steps[j + 1].mode == mode) ++j;
        std::string pts;
        for (std::size_t k = i; k <= j; ++k) {
            const Pose& p = log.steps[k].pose;
            pts += fmt(m.sx(p.x)) + "," + fmt(m.sy(p.y)) + " ";
        }
        // Extend into the next segment's first pose so runs join up.
        if (j + 1 < log.steps.size()) {
            const Pose& p = log.steps[j + 1].pose;
            pts += fmt(m.sx(p.x)) + "," + fmt(m.sy(p.y)) + " ";
        }
        out += std::string("  <polyline points=\"") + pts + "\" fill=\"none\" stroke=\"" +
               mode_color(mode) + "\" stroke-width=\"2\"/>\n";
        i = j + 1;
    }

    out += "</svg>\n";
    return out;
}

void save_trajectory_svg(const Environment& env, const EpisodeLog& log, double goal_radius,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << trajectory_svg(env, log, goal_radius);
}

}  // namespace ocnav
