#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ocnav/controller.hpp"

namespace ocnav {

enum class Outcome { ReachedGoal, Collided, Timeout, FailSafe };

struct StepRecord {
    int t = 0;  // control tick index
    Pose pose;
    ControlInput u;
    Mode mode = Mode::GoalSeeking;
    double h = 0.0;
    double V = 0.0;
    double h_next = 0.0;  // predicted values under the executed u
    double V_next = 0.0;
    double min_range = 0.0;
    double rho = 0.0;
    bool clf_feasible = false;
    bool cbf_feasible = false;
    double h0 = 0.0;  // exploration anchor, meaningful while mode == Exploratory
    double V0 = 0.0;
};

struct EpisodeLog {
    std::vector<StepRecord> steps;
    Outcome outcome = Outcome::Timeout;
    double t_end = 0.0;  // simulated seconds at termination
    std::uint64_t env_seed = 0;
    // Wall-clock controller latency per tick. Kept out of the canonical JSON
    // so that episode artifacts are byte-reproducible; serialized separately.
    std::vector<double> latency_ms;
};

enum class PolicyKind { Hybrid, ClfGreedy };

struct SimConfig {
    int n_rays = 32;
    double d_o = 3.0;
    double d_c = 0.2;
    double t_max = 10.0;
    int inner_substeps = 10;  // 100 Hz integration under 10 Hz control
};

/// Zero-order-hold control at 1/dt Hz over exact-arc inner steps. Collision
/// uses exact geometric distance (never the scan), so safety metrics cannot
/// be inflated by lookahead error.
EpisodeLog run_episode(const CertificateModel& model, const Environment& env, PolicyKind policy,
                       const ControllerConfig& ccfg, const SimConfig& scfg, std::uint64_t seed);

struct EnvGenConfig {
    Box bounds{{-1.5, -1.5}, {1.5, 1.5}};
    Vec2 start{-0.6, 0.0};
    Vec2 goal{0.6, 0.0};
    double heading_range = kPi / 3.0;  // start heading within +-range of goal bearing
    // Long thin axis-aligned boxes. Without them the scan encoder never sees
    // extended flat/concave geometry during training and its one-step
    // prediction drifts along walls (e.g. dead-end traps).
    double wall_fraction = 0.15;
    double wall_half_len_min = 0.20;
    double wall_half_len_max = 0.50;
    double wall_half_thick_min = 0.03;
    double wall_half_thick_max = 0.06;
    // Of the remaining draws: circles vs compact boxes.
    double circle_fraction = 0.7;
    double radius_min = 0.10;
    double radius_max = 0.20;
    double box_half_min = 0.08;
    double box_half_max = 0.16;
    double clearance = 0.45;  // required start/goal clearance, > d_c + margin
    bool boundary_walls = true;
    int max_tries = 1000;
};

/// Deterministic randomized environment. Throws std::runtime_error
/// ("rejection budget exceeded") when the clearance constraints cannot be
/// met within cfg.max_tries draws per obstacle.
Environment random_env(std::uint64_t seed, int n_obstacles, const EnvGenConfig& cfg);

/// C-shaped cavity opening away from the goal; the straight start-goal
/// segment is blocked while a safe path around the trap exists.
Environment bugtrap_env();

struct LatencyStats {
    double median_ms = 0.0;
    double mean_ms = 0.0;
    long long n = 0;
};

struct BenchmarkReport {
    int n_envs = 0;
    double safety_rate = 0.0;
    double goal_rate = 0.0;
    double mean_time_to_goal = 0.0;  // over successful episodes only
    std::vector<Outcome> outcomes;
    std::vector<double> episode_t_end;
    std::vector<std::uint64_t> env_seeds;
};

BenchmarkReport report_from_logs(const std::vector<EpisodeLog>& logs);

struct BenchmarkRun {
    BenchmarkReport report;
    LatencyStats latency;
    std::vector<EpisodeLog> logs;
};

BenchmarkRun benchmark(const CertificateModel& model, int n_envs, std::uint64_t base_seed,
                       int n_obstacles, const EnvGenConfig& egen, PolicyKind policy,
                       const ControllerConfig& ccfg, const SimConfig& scfg);

LatencyStats latency_stats(const std::vector<double>& samples_ms);

/// Counts of executable-proof violations over one trace (all zero on a
/// correct controller, up to a small numerical tolerance).
struct TraceCheck {
    int goal_seek_decay_violations = 0;   // predicted V_{t+1} <= alpha_V V_t in G mode
    int explore_exit_violations = 0;      // V at E->G exit <= alpha_V * V0 at entry
    int geometric_bound_violations = 0;   // V over cumulative G steps <= V0 * alpha_V^t
    int band_violations = 0;              // |h - h0| < eps_h + slack while exploring

    bool clean() const {
        return goal_seek_decay_violations == 0 && explore_exit_violations == 0 &&
               geometric_bound_violations == 0 && band_violations == 0;
    }
};

TraceCheck check_trace(const EpisodeLog& log, double alpha_V, double eps_h,
                       double band_slack, double tol = 1e-9);

std::string episode_to_json(const EpisodeLog& log);
EpisodeLog episode_from_json(const std::string& text);
void save_episode(const EpisodeLog& log, const std::string& path);
EpisodeLog load_episode(const std::string& path);

std::string report_to_json(const BenchmarkReport& report);
void save_report(const BenchmarkReport& report, const std::string& path);
std::string latency_to_json(const LatencyStats& serial, const LatencyStats& parallel);

std::string outcome_name(Outcome o);
std::string mode_name(Mode m);

}  // namespace ocnav
