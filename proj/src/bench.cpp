#include "ocnav/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ocnav {

EpisodeLog run_episode(const CertificateModel& model, const Environment& env, PolicyKind policy,
                       const ControllerConfig& ccfg, const SimConfig& scfg, std::uint64_t seed) {
    EpisodeLog log;
    log.env_seed = seed;
    log.outcome = Outcome::Timeout;
    log.t_end = scfg.t_max;

    Pose pose = env.start;
    ControllerState state(derive_seed(seed, 0xC7ull));
    const int max_ticks = static_cast<int>(std::ceil(scfg.t_max / ccfg.dt - 1e-9));
    const double dt_inner = ccfg.dt / scfg.inner_substeps;

    // Ground-truth termination checks at the start state.
    if (min_obstacle_distance(env, {pose.x, pose.y}) <= scfg.d_c) {
        log.outcome = Outcome::Collided;
        log.t_end = 0.0;
        return log;
    }
    if ((env.goal - Vec2{pose.x, pose.y}).norm() <= ccfg.goal_radius) {
        log.outcome = Outcome::ReachedGoal;
        log.t_end = 0.0;
        return log;
    }

    for (int tick = 0; tick < max_ticks; ++tick) {
        const Observation obs = observe(env, pose, scfg.n_rays, scfg.d_o);

        const auto t0 = std::chrono::steady_clock::now();
        StepResult sr;
        if (policy == PolicyKind::Hybrid) {
            sr = hybrid_step(state, model, obs, ccfg);
        } else {
            const GoalSeekAction a = clf_greedy_action(model, obs, ccfg);
            sr.u = a.u;
            sr.mode = Mode::GoalSeeking;
            sr.h = cbf_value(model, obs.scan);
            sr.V = clf_value(model, obs.rho, obs.phi);
            sr.h_next = a.h_next;
            sr.V_next = a.V_next;
            sr.clf_feasible = a.clf_feasible;
            sr.cbf_feasible = a.cbf_feasible;
        }
        const auto t1 = std::chrono::steady_clock::now();
        log.latency_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

        log.steps.push_back({tick, pose, sr.u, sr.mode, sr.h, sr.V, sr.h_next, sr.V_next,
                             min_range(obs.scan), obs.rho, sr.clf_feasible, sr.cbf_feasible, sr.h0,
                             sr.V0});

        if (sr.mode == Mode::FailSafe) {
            log.outcome = Outcome::FailSafe;
            log.t_end = tick * ccfg.dt;
            return log;
        }

        for (int k = 1; k <= scfg.inner_substeps; ++k) {
            pose = dubins_step(pose, sr.u, dt_inner);
            const double t_now = tick * ccfg.dt + k * dt_inner;
            if (min_obstacle_distance(env, {pose.x, pose.y}) <= scfg.d_c) {
                log.outcome = Outcome::Collided;
                log.t_end = t_now;
                return log;
            }
            if ((env.goal - Vec2{pose.x, pose.y}).norm() <= ccfg.goal_radius) {
                log.outcome = Outcome::ReachedGoal;
                log.t_end = t_now;
                return log;
            }
        }
    }
    return log;
}

Environment random_env(std::uint64_t seed, int n_obstacles, const EnvGenConfig& cfg) {
    if (n_obstacles < 0) throw std::invalid_argument("random_env: n_obstacles must be >= 0");
    Rng rng(derive_seed(seed, 0xE5ull));
    Environment env;
    env.workspace_bounds = cfg.bounds;
    const Vec2 d = cfg.goal - cfg.start;
    const double bearing = std::atan2(d.y, d.x);
    env.start = {cfg.start.x, cfg.start.y,
                 wrap_angle(bearing + rng.symmetric(cfg.heading_range))};
    env.goal = cfg.goal;

    for (int i = 0; i < n_obstacles; ++i) {
        bool placed = false;
        for (int tries = 0; tries < cfg.max_tries && !placed; ++tries) {
            Obstacle obs;
            const double kind = rng.uniform();
            if (kind < cfg.wall_fraction) {
                const Vec2 c{rng.uniform(cfg.bounds.min.x, cfg.bounds.max.x),
                             rng.uniform(cfg.bounds.min.y, cfg.bounds.max.y)};
                const double hl = rng.uniform(cfg.wall_half_len_min, cfg.wall_half_len_max);
                const double ht = rng.uniform(cfg.wall_half_thick_min, cfg.wall_half_thick_max);
                const bool horizontal = rng.uniform() < 0.5;
                const double hx = horizontal ? hl : ht;
                const double hy = horizontal ? ht : hl;
                obs = BoxObstacle{{c.x - hx, c.y - hy}, {c.x + hx, c.y + hy}};
            } else if (kind < cfg.wall_fraction + (1.0 - cfg.wall_fraction) * cfg.circle_fraction) {
                const Vec2 c{rng.uniform(cfg.bounds.min.x, cfg.bounds.max.x),
                             rng.uniform(cfg.bounds.min.y, cfg.bounds.max.y)};
                obs = CircleObstacle{c, rng.uniform(cfg.radius_min, cfg.radius_max)};
            } else {
                const Vec2 c{rng.uniform(cfg.bounds.min.x, cfg.bounds.max.x),
                             rng.uniform(cfg.bounds.min.y, cfg.bounds.max.y)};
                const double hx = rng.uniform(cfg.box_half_min, cfg.box_half_max);
                const double hy = rng.uniform(cfg.box_half_min, cfg.box_half_max);
                obs = BoxObstacle{{c.x - hx, c.y - hy}, {c.x + hx, c.y + hy}};
            }
            if (signed_distance(obs, cfg.start) > cfg.clearance &&
                signed_distance(obs, cfg.goal) > cfg.clearance) {
                env.obstacles.push_back(obs);
                placed = true;
            }
        }
        if (!placed) throw std::runtime_error("random_env: rejection budget exceeded");
    }
    if (cfg.boundary_walls) add_boundary_walls(env);
    return env;
}

Environment bugtrap_env() {
    Environment env;
    env.workspace_bounds = {{-1.4, -1.1}, {1.4, 1.1}};
    env.start = {-0.3, 0.0, 0.0};
    env.goal = {1.0, 0.0};
    env.obstacles.push_back(BoxObstacle{{0.05, -0.5}, {0.15, 0.5}});   // wall facing the goal
    env.obstacles.push_back(BoxObstacle{{-0.7, 0.4}, {0.15, 0.5}});    // upper arm
    env.obstacles.push_back(BoxObstacle{{-0.7, -0.5}, {0.15, -0.4}});  // lower arm
    add_boundary_walls(env);
    return env;
}

LatencyStats latency_stats(const std::vector<double>& samples_ms) {
    LatencyStats s;
    s.n = static_cast<long long>(samples_ms.size());
    if (samples_ms.empty()) return s;
    std::vector<double> sorted = samples_ms;
    std::sort(sorted.begin(), sorted.end());
    s.median_ms = sorted[sorted.size() / 2];
    double sum = 0.0;
    for (double x : sorted) sum += x;
    s.mean_ms = sum / static_cast<double>(sorted.size());
    return s;
}

BenchmarkReport report_from_logs(const std::vector<EpisodeLog>& logs) {
    BenchmarkReport r;
    r.n_envs = static_cast<int>(logs.size());
    int safe = 0;
    int reached = 0;
    double time_sum = 0.0;
    for (const auto& log : logs) {
        r.outcomes.push_back(log.outcome);
        r.episode_t_end.push_back(log.t_end);
        r.env_seeds.push_back(log.env_seed);
        if (log.outcome != Outcome::Collided) ++safe;
        if (log.outcome == Outcome::ReachedGoal) {
            ++reached;
            time_sum += log.t_end;
        }
    }
    if (r.n_envs > 0) {
        r.safety_rate = static_cast<double>(safe) / r.n_envs;
        r.goal_rate = static_cast<double>(reached) / r.n_envs;
    }
    r.mean_time_to_goal = reached > 0 ? time_sum / reached : 0.0;
    return r;
}

BenchmarkRun benchmark(const CertificateModel& model, int n_envs, std::uint64_t base_seed,
                       int n_obstacles, const EnvGenConfig& egen, PolicyKind policy,
                       const ControllerConfig& ccfg, const SimConfig& scfg) {
    if (n_envs < 1) throw std::invalid_argument("benchmark: n_envs must be >= 1");
    BenchmarkRun run;
    run.logs.resize(static_cast<std::size_t>(n_envs));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_envs; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        const Environment env = random_env(seed, n_obstacles, egen);
        run.logs[static_cast<std::size_t>(i)] = run_episode(model, env, policy, ccfg, scfg, seed);
    }
    run.report = report_from_logs(run.logs);
    std::vector<double> lat;
    for (const auto& log : run.logs)
        lat.insert(lat.end(), log.latency_ms.begin(), log.latency_ms.end());
    run.latency = latency_stats(lat);
    return run;
}

TraceCheck check_trace(const EpisodeLog& log, double alpha_V, double eps_h, double band_slack,
                       double tol) {
    TraceCheck c;
    bool have_bound = false;
    double bound = 0.0;
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
        const StepRecord& s = log.steps[i];
        if (s.mode == Mode::GoalSeeking) {
            if (s.V_next > alpha_V * s.V + tol) ++c.goal_seek_decay_violations;
            if (!have_bound) {
                bound = s.V;
                have_bound = true;
            } else {
                bound *= alpha_V;
                if (s.V > bound + tol) ++c.geometric_bound_violations;
            }
        }
        if (s.mode == Mode::Exploratory) {
            if (std::abs(s.h - s.h0) >= eps_h + band_slack + tol) ++c.band_violations;
        }
        if (i > 0) {
            const StepRecord& p = log.steps[i - 1];
            const bool exited = p.mode == Mode::Exploratory && s.mode == Mode::GoalSeeking;
            const bool reanchored =
                p.mode == Mode::Exploratory && s.mode == Mode::Exploratory && s.V0 != p.V0;
            if ((exited || reanchored) && s.V > alpha_V * p.V0 + tol) ++c.explore_exit_violations;
        }
    }
    return c;
}

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::ReachedGoal: return "reached_goal";
        case Outcome::Collided: return "collided";
        case Outcome::Timeout: return "timeout";
        case Outcome::FailSafe: return "fail_safe";
    }
    return "unknown";
}

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::GoalSeeking: return "goal_seeking";
        case Mode::Exploratory: return "exploratory";
        case Mode::FailSafe: return "fail_safe";
    }
    return "unknown";
}

namespace {

using nlohmann::json;

Outcome outcome_from_name(const std::string& s) {
    if (s == "reached_goal") return Outcome::ReachedGoal;
    if (s == "collided") return Outcome::Collided;
    if (s == "timeout") return Outcome::Timeout;
    if (s == "fail_safe") return Outcome::FailSafe;
    throw std::runtime_error("unknown outcome: " + s);
}

Mode mode_from_name(const std::string& s) {
    if (s == "goal_seeking") return Mode::GoalSeeking;
    if (s == "exploratory") return Mode::Exploratory;
    if (s == "fail_safe") return Mode::FailSafe;
    throw std::runtime_error("unknown mode: " + s);
}

json step_to_json(const StepRecord& s) {
    json j;
    j["t"] = s.t;
    j["pose"] = {s.pose.x, s.pose.y, s.pose.theta};
    j["u"] = {s.u.v, s.u.omega};
    j["mode"] = mode_name(s.mode);
    j["h"] = s.h;
    j["V"] = s.V;
    j["h_next"] = s.h_next;
    j["V_next"] = s.V_next;
    j["min_range"] = s.min_range;
    j["rho"] = s.rho;
    j["clf_feasible"] = s.clf_feasible;
    j["cbf_feasible"] = s.cbf_feasible;
    j["h0"] = s.h0;
    j["V0"] = s.V0;
    return j;
}

StepRecord step_from_json(const json& j) {
    StepRecord s;
    s.t = j.at("t");
    s.pose = {j.at("pose")[0], j.at("pose")[1], j.at("pose")[2]};
    s.u = {j.at("u")[0], j.at("u")[1]};
    s.mode = mode_from_name(j.at("mode"));
    s.h = j.at("h");
    s.V = j.at("V");
    s.h_next = j.at("h_next");
    s.V_next = j.at("V_next");
    s.min_range = j.at("min_range");
    s.rho = j.at("rho");
    s.clf_feasible = j.at("clf_feasible");
    s.cbf_feasible = j.at("cbf_feasible");
    s.h0 = j.at("h0");
    s.V0 = j.at("V0");
    return s;
}

}  // namespace

std::string episode_to_json(const EpisodeLog& log) {
    // JSON-lines: one header object, then one object per step.
    std::string out;
    json header;
    header["env_seed"] = log.env_seed;
    header["outcome"] = outcome_name(log.outcome);
    header["t_end"] = log.t_end;
    header["n_steps"] = log.steps.size();
    out += header.dump() + "\n";
    for (const auto& s : log.steps) out += step_to_json(s).dump() + "\n";
    return out;
}

EpisodeLog episode_from_json(const std::string& text) {
    EpisodeLog log;
    std::size_t at = 0;
    bool header_done = false;
    while (at < text.size()) {
        std::size_t end = text.find('\n', at);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(at, end - at);
        at = end + 1;
        if (line.empty()) continue;
        const json j = json::parse(line);
        if (!header_done) {
            log.env_seed = j.at("env_seed");
            log.outcome = outcome_from_name(j.at("outcome"));
            log.t_end = j.at("t_end");
            header_done = true;
        } else {
            log.steps.push_back(step_from_json(j));
        }
    }
    return log;
}

void save_episode(const EpisodeLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << episode_to_json(log);
}

EpisodeLog load_episode(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return episode_from_json(text);
}

std::string report_to_json(const BenchmarkReport& report) {
    json j;
    j["n_envs"] = report.n_envs;
    j["safety_rate"] = report.safety_rate;
    j["goal_rate"] = report.goal_rate;
    j["mean_time_to_goal"] = report.mean_time_to_goal;
    json eps = json::array();
    for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
        eps.push_back({{"env_seed", report.env_seeds[i]},
                       {"outcome", outcome_name(report.outcomes[i])},
                       {"t_end", report.episode_t_end[i]}});
    }
    j["episodes"] = eps;
    return j.dump(2);
}

void save_report(const BenchmarkReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << report_to_json(report) << "\n";
}

std::string latency_to_json(const LatencyStats& serial, const LatencyStats& parallel) {
    json j;
    j["serial"] = {{"median_ms", serial.median_ms}, {"mean_ms", serial.mean_ms}, {"n", serial.n}};
    j["parallel"] = {
        {"median_ms", parallel.median_ms}, {"mean_ms", parallel.mean_ms}, {"n", parallel.n}};
    return j.dump(2);
}

}  // namespace ocnav
