#pragma once

#include <optional>

#include "ocnav/scoring.hpp"
#include "ocnav/util.hpp"

namespace ocnav {

enum class Mode { GoalSeeking, Exploratory, FailSafe };

struct ControllerConfig {
    // Goal-seeking penalty coefficients (lambda3 >> lambda1 >> lambda2).
    double lambda_g1 = 0.01;
    double lambda_g2 = 1.0;
    double lambda_g3 = 1e3;
    // Exploration coefficients; negative lambda_e3 rewards forward speed.
    double lambda_e1 = 1e3;
    double lambda_e2 = 1e3;
    double lambda_e3 = -0.1;
    // Turn-smoothness penalty on (omega - previous omega)^2. Uncorrelated
    // exploration diffuses and keeps re-covering the same ground; persistence
    // makes the walk ballistic, so it circulates along an obstacle's level
    // band instead of pacing back and forth on one stretch of it.
    double lambda_e4 = 0.0;
    // Width of the explored barrier level band. Sized a few times the
    // one-step lookahead error of the learned barrier (~0.02); much wider
    // bands let the explorer creep to the h = 0 boundary, where almost no
    // candidate stays admissible and the robot strands or collides.
    double eps_h = 0.1;
    double gamma_V = 0.0;   // lookahead robustness margins
    double gamma_h = 0.0;
    double dt = 0.1;
    double goal_radius = 0.2;
    // When false, exploration decays h by (1 - alpha_h): for h < 0 that
    // bound permits jumping ~90% of the way to the boundary in one step, and
    // the speed-rewarding explorer sprints to h = 0 and strands there. The
    // unified alpha_h form limits each step to a 10% rise instead, matching
    // the goal-seeking decay.
    bool unify_decay_forms = true;
    bool parallel_scoring = false;
    ControlGrid grid;
};

struct ControllerState {
    Mode mode = Mode::GoalSeeking;
    double h0 = 0.0;  // barrier value recorded at the most recent G->E switch
    double V0 = 0.0;  // Lyapunov value recorded at the same instant
    // Last commanded turn rate; keeps the stationary recovery rotation
    // sweeping in one direction instead of random-walking the heading.
    double prev_omega = 0.0;
    Rng rng;

    explicit ControllerState(std::uint64_t seed) : rng(seed) {}
};

struct GoalSeekAction {
    ControlInput u;
    bool clf_feasible = false;  // some candidate satisfies both margined constraints
    bool cbf_feasible = false;  // some candidate satisfies the margined CBF constraint
    double h_next = 0.0;
    double V_next = 0.0;
};

/// Barrier decay bound for goal seeking. For h <= 0 this is the geometric
/// contraction alpha_h * h (limits the per-step approach rate); for h > 0 the
/// binding form is the rapid-recovery bound (1 - alpha_h) * h, without which
/// a contraction toward zero would let the robot linger on the unsafe side
/// whenever lookahead error lands it there.
inline double cbf_decay_bound(double h_t, double alpha_h) {
    return h_t > 0.0 ? (1.0 - alpha_h) * h_t : alpha_h * h_t;
}

/// Penalty objective of the relaxed goal-seeking problem for one candidate.
double goal_seek_objective(const ControlInput& u, double h_next, double V_next, double h_t,
                           double V_t, const CertificateModel& model, const ControllerConfig& cfg);

/// One-step optimal control: the minimum-norm candidate satisfying both
/// margined decay constraints when one exists, otherwise the penalty-method
/// argmin over the whole grid. Ties break to smaller ||u||, then grid order.
GoalSeekAction goal_seeking_action(const CertificateModel& model, const Observation& obs,
                                   const ControllerConfig& cfg);

struct ExploreAction {
    ControlInput u;
    double h_next = 0.0;
    double V_next = 0.0;
};

/// Samples the constrained stochastic exploration policy over translating
/// candidates (v > 0); stationary rotations never advance exploration, so
/// they are excluded from the support. Candidates that fail the decay test
/// or leave the h0 level band get probability exactly 0. Empty support
/// (AllCandidatesExcluded) is reported as nullopt; the caller recovers by
/// rotating in place (see hybrid_step).
std::optional<ExploreAction> exploratory_action(const CertificateModel& model,
                                                const Observation& obs, double h0,
                                                const ControllerConfig& cfg, Rng& rng,
                                                double prev_omega = 0.0);

struct StepResult {
    ControlInput u;
    Mode mode = Mode::GoalSeeking;  // mode the action was taken in
    double h = 0.0;
    double V = 0.0;
    double h_next = 0.0;  // predicted value under the returned u
    double V_next = 0.0;
    bool clf_feasible = false;
    bool cbf_feasible = false;
    double h0 = 0.0;  // exploration anchor, valid while mode == Exploratory
    double V0 = 0.0;
};

/// One tick of the hybrid supervisor: handles G<->E switching (acting in the
/// new mode within the same tick) and absorbs faults into FailSafe.
StepResult hybrid_step(ControllerState& state, const CertificateModel& model,
                       const Observation& obs, const ControllerConfig& cfg);

/// Relaxed-CLF baseline: the penalty argmin with no mode switching ever.
GoalSeekAction clf_greedy_action(const CertificateModel& model, const Observation& obs,
                                 const ControllerConfig& cfg);

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double leaky_relu(double x) { return std::max(x, 0.001 * x); }

}  // namespace ocnav
