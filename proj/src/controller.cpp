#include "ocnav/controller.hpp"

#include <algorithm>
#include <numeric>

namespace ocnav {

namespace {

std::vector<std::size_t> norm_order(const ControlGrid& grid) {
    std::vector<std::size_t> idx(grid.candidates.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return grid.candidates[a].norm() < grid.candidates[b].norm();
    });
    return idx;
}

}  // namespace

double goal_seek_objective(const ControlInput& u, double h_next, double V_next, double h_t,
                           double V_t, const CertificateModel& model, const ControllerConfig& cfg) {
    const double clf_res = V_next - model.alpha_V * V_t + cfg.gamma_V;
    const double cbf_res = h_next - cbf_decay_bound(h_t, model.alpha_h) + cfg.gamma_h;
    return cfg.lambda_g1 * u.norm() + cfg.lambda_g2 * relu(clf_res) + cfg.lambda_g3 * relu(cbf_res);
}

GoalSeekAction goal_seeking_action(const CertificateModel& model, const Observation& obs,
                                   const ControllerConfig& cfg) {
    const double h_t = cbf_value(model, obs.scan);
    const double V_t = clf_value(model, obs.rho, obs.phi);
    const auto& cands = cfg.grid.candidates;
    const std::vector<std::size_t> order = norm_order(cfg.grid);

    std::vector<CandidateScore> scores(cands.size());
    std::vector<std::uint8_t> have(cands.size(), 0);
    auto score_of = [&](std::size_t i) -> const CandidateScore& {
        if (!have[i]) {
            const auto [h, v] = predict_certificates(model, obs, cands[i], cfg.dt);
            scores[i] = {h, v};
            have[i] = 1;
        }
        return scores[i];
    };

    // Minimum-norm fully feasible candidate, if any: candidates are visited
    // in increasing ||u||, so the first hit is the constrained optimum.
    for (std::size_t i : order) {
        const CandidateScore& s = score_of(i);
        const bool cbf_ok = s.h_next - cbf_decay_bound(h_t, model.alpha_h) + cfg.gamma_h <= 0.0;
        const bool clf_ok = s.V_next - model.alpha_V * V_t + cfg.gamma_V <= 0.0;
        if (cbf_ok && clf_ok) {
            return {cands[i], true, true, s.h_next, s.V_next};
        }
    }

    // Infeasible: fall back to the penalty-method argmin over the full grid.
    bool cbf_feasible = false;
    std::size_t best = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const CandidateScore& s = score_of(i);
        if (s.h_next - cbf_decay_bound(h_t, model.alpha_h) + cfg.gamma_h <= 0.0)
            cbf_feasible = true;
        const double obj = goal_seek_objective(cands[i], s.h_next, s.V_next, h_t, V_t, model, cfg);
        const bool better =
            obj < best_obj ||
            (obj == best_obj && cands[i].norm() < cands[best].norm());
        if (better) {
            best = i;
            best_obj = obj;
        }
    }
    return {cands[best], false, cbf_feasible, scores[best].h_next, scores[best].V_next};
}

std::optional<ExploreAction> exploratory_action(const CertificateModel& model,
                                                const Observation& obs, double h0,
                                                const ControllerConfig& cfg, Rng& rng,
                                                double prev_omega) {
    const double h_t = cbf_value(model, obs.scan);
    const auto& cands = cfg.grid.candidates;
    const std::vector<CandidateScore> scores =
        score_candidates(model, obs, cfg.grid, cfg.dt, cfg.parallel_scoring);

    const double decay = cfg.unify_decay_forms ? model.alpha_h : 1.0 - model.alpha_h;
    std::vector<double> weight(cands.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        // Stationary rotations never advance exploration and their predicted
        // h carries an angular ripple that the tight decay bound rejects
        // asymmetrically, pinning the heading in a spurious angular well.
        // Sample only among translating candidates; when none is admissible
        // the caller sweeps the heading instead (see hybrid_step).
        if (cands[i].v == 0.0) continue;
        const double x1 = scores[i].h_next - decay * h_t;
        const double band = std::abs(scores[i].h_next - h0) - cfg.eps_h;
        if (x1 >= 0.0 || band >= 0.0) continue;  // probability exactly 0
        const double dw = cands[i].omega - prev_omega;
        const double cost = cfg.lambda_e1 * leaky_relu(x1) + cfg.lambda_e2 * leaky_relu(band) +
                            cfg.lambda_e3 * cands[i].v * cands[i].v + cfg.lambda_e4 * dw * dw;
        weight[i] = std::exp(-cost);
        total += weight[i];
    }
    if (total <= 0.0) return std::nullopt;  // AllCandidatesExcluded

    const double pick = rng.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = cands.size() - 1;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        acc += weight[i];
        if (weight[i] > 0.0 && pick < acc) {
            chosen = i;
            break;
        }
    }
    return ExploreAction{cands[chosen], scores[chosen].h_next, scores[chosen].V_next};
}

StepResult hybrid_step(ControllerState& state, const CertificateModel& model,
                       const Observation& obs, const ControllerConfig& cfg) {
    StepResult out;
    out.h = cbf_value(model, obs.scan);
    out.V = clf_value(model, obs.rho, obs.phi);

    if (state.mode == Mode::FailSafe) {
        out.mode = Mode::FailSafe;
        out.u = {0.0, 0.0};
        return out;
    }

    Mode mode = state.mode;
    if (mode == Mode::Exploratory && out.V <= model.alpha_V * state.V0) {
        mode = Mode::GoalSeeking;
    }

    if (mode == Mode::GoalSeeking) {
        const GoalSeekAction gs = goal_seeking_action(model, obs, cfg);
        out.clf_feasible = gs.clf_feasible;
        out.cbf_feasible = gs.cbf_feasible;
        if (!gs.cbf_feasible) {
            state.mode = Mode::FailSafe;
            out.mode = Mode::FailSafe;
            out.u = {0.0, 0.0};
            return out;
        }
        if (gs.clf_feasible) {
            state.mode = Mode::GoalSeeking;
            state.prev_omega = gs.u.omega;
            out.mode = Mode::GoalSeeking;
            out.u = gs.u;
            out.h_next = gs.h_next;
            out.V_next = gs.V_next;
            return out;
        }
        // oCLF constraint infeasible: record switch values and explore
        // within this same tick. The anchor cap keeps the explored band's
        // top at least eps_h/2 below the boundary even when the switch
        // happens close to it.
        state.h0 = std::min(out.h, -1.5 * cfg.eps_h);
        state.V0 = out.V;
    }

    // Lookahead drift can pin the running h outside the anchored band, where
    // no reachable candidate returns in one step and exploration stalls.
    // Slide the anchor just far enough to readmit the current level set; the
    // upward cap keeps the band top at least eps_h/2 below the boundary, and
    // the decay constraint still limits each step's rise.
    if (out.h > state.h0 + cfg.eps_h)
        state.h0 = std::min(out.h - cfg.eps_h, -1.5 * cfg.eps_h);
    else if (out.h < state.h0 - cfg.eps_h)
        state.h0 = out.h + cfg.eps_h;

    const auto ex = exploratory_action(model, obs, state.h0, cfg, state.rng, state.prev_omega);
    if (!ex) {
        // Empty support means no admissible translation: every escape needs
        // a retreat the robot must first rotate toward. A stationary
        // rotation cannot collide, so sweep the heading toward the farthest
        // scan return (the most open direction) until a translating
        // candidate becomes admissible. When the open direction is almost
        // directly behind, its bearing sign is unstable across steps, so
        // keep the previous sweep direction instead.
        double omega_max = 0.0;
        for (const ControlInput& c : cfg.grid.candidates)
            omega_max = std::max(omega_max, std::abs(c.omega));
        double best_r2 = -1.0, bearing = 0.0;
        for (const Vec2& p : obs.scan.points) {
            const double r2 = p.dot(p);
            if (r2 > best_r2) {
                best_r2 = r2;
                bearing = std::atan2(p.y, p.x);
            }
        }
        const double sign = std::abs(bearing) > 2.8
                                ? (state.prev_omega < 0.0 ? -1.0 : 1.0)
                                : (bearing < 0.0 ? -1.0 : 1.0);
        const ControlInput u{0.0, sign * omega_max};
        const auto [h_next, V_next] = predict_certificates(model, obs, u, cfg.dt);
        state.mode = Mode::Exploratory;
        state.prev_omega = u.omega;
        out.mode = Mode::Exploratory;
        out.u = u;
        out.h_next = h_next;
        out.V_next = V_next;
        out.h0 = state.h0;
        out.V0 = state.V0;
        return out;
    }
    state.mode = Mode::Exploratory;
    state.prev_omega = ex->u.omega;
    out.mode = Mode::Exploratory;
    out.u = ex->u;
    out.h_next = ex->h_next;
    out.V_next = ex->V_next;
    out.h0 = state.h0;
    out.V0 = state.V0;
    return out;
}

GoalSeekAction clf_greedy_action(const CertificateModel& model, const Observation& obs,
                                 const ControllerConfig& cfg) {
    const double h_t = cbf_value(model, obs.scan);
    const double V_t = clf_value(model, obs.rho, obs.phi);
    const auto& cands = cfg.grid.candidates;
    const std::vector<CandidateScore> scores =
        score_candidates(model, obs, cfg.grid, cfg.dt, cfg.parallel_scoring);

    bool clf_feasible = false;
    bool cbf_feasible = false;
    std::size_t best = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const double clf_res = scores[i].V_next - model.alpha_V * V_t;
        const double cbf_res = scores[i].h_next - cbf_decay_bound(h_t, model.alpha_h);
        if (cbf_res <= 0.0) cbf_feasible = true;
        if (cbf_res <= 0.0 && clf_res <= 0.0) clf_feasible = true;
        const double obj = cfg.lambda_g1 * cands[i].norm() + cfg.lambda_g2 * relu(clf_res) +
                           cfg.lambda_g3 * relu(cbf_res);
        const bool better =
            obj < best_obj || (obj == best_obj && cands[i].norm() < cands[best].norm());
        if (better) {
            best = i;
            best_obj = obj;
        }
    }
    return {cands[best], clf_feasible, cbf_feasible, scores[best].h_next, scores[best].V_next};
}

}  // namespace ocnav
