#include "ocnav/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace ocnav {

Label label_for(double min_range, double d_c, double label_margin) {
    if (min_range <= d_c) return Label::Unsafe;
    if (min_range >= d_c + label_margin) return Label::Safe;
    return Label::Boundary;
}

namespace {

Pose sample_pose(const Environment& env, Rng& rng) {
    const Box& b = env.workspace_bounds;
    return {rng.uniform(b.min.x, b.max.x), rng.uniform(b.min.y, b.max.y),
            wrap_angle(rng.uniform(-kPi, kPi))};
}

}  // namespace

std::vector<LabeledSample> sample_dataset(const std::vector<Environment>& envs, int n_rays,
                                          double d_o, double d_c, const TrainConfig& cfg) {
    if (envs.empty()) throw std::invalid_argument("sample_dataset: no environments");
    std::vector<LabeledSample> samples(static_cast<std::size_t>(cfg.n_samples));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < cfg.n_samples; ++i) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        const int env_id = i % static_cast<int>(envs.size());
        const Environment& env = envs[static_cast<std::size_t>(env_id)];
        LabeledSample s;
        s.env_id = env_id;
        s.pose = sample_pose(env, rng);
        s.obs = observe(env, s.pose, n_rays, d_o);
        s.label = label_for(min_range(s.obs.scan), d_c + cfg.label_buffer, cfg.label_margin);
        samples[static_cast<std::size_t>(i)] = std::move(s);
    }
    return samples;
}

double relaxed_goal_cost(const CertificateModel& model, const Observation& obs,
                         const ControllerConfig& cfg, ModelGrad* grad, double coeff) {
    const double h_t = cbf_value(model, obs.scan);
    const double V_t = clf_value(model, obs.rho, obs.phi);
    const auto& cands = cfg.grid.candidates;

    const std::vector<CandidateScore> scores =
        score_candidates(model, obs, cfg.grid, cfg.dt, cfg.parallel_scoring);
    // The geometric-contraction residual (not the controller's rapid-recovery
    // bound for h > 0): with the recovery bound, every unsafe-region sample
    // carries a large active residual at weight lambda_g3 and SGD diverges.
    auto objective = [&](std::size_t i) {
        const double clf_res = scores[i].V_next - model.alpha_V * V_t + cfg.gamma_V;
        const double cbf_res = scores[i].h_next - model.alpha_h * h_t + cfg.gamma_h;
        return cfg.lambda_g1 * cands[i].norm() + cfg.lambda_g2 * relu(clf_res) +
               cfg.lambda_g3 * relu(cbf_res);
    };
    std::size_t best = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const double obj = objective(i);
        const bool better =
            obj < best_obj || (obj == best_obj && cands[i].norm() < cands[best].norm());
        if (better) {
            best = i;
            best_obj = obj;
        }
    }

    if (grad) {
        // Differentiate holding the argmin candidate fixed.
        const Transform t = local_transform(cands[best], cfg.dt);
        const double clf_res = scores[best].V_next - model.alpha_V * V_t + cfg.gamma_V;
        const double cbf_res = scores[best].h_next - model.alpha_h * h_t + cfg.gamma_h;
        if (clf_res > 0.0) {
            const auto [rho1, phi1] = predict_goal(obs.rho, obs.phi, t);
            const double c = coeff * cfg.lambda_g2;
            accumulate_clf_grad(model, rho1, phi1, c, *grad);
            accumulate_clf_grad(model, obs.rho, obs.phi, -c * model.alpha_V, *grad);
        }
        if (cbf_res > 0.0) {
            const double c = coeff * cfg.lambda_g3;
            accumulate_cbf_grad(model, predict_scan(obs.scan, t), c, *grad);
            accumulate_cbf_grad(model, obs.scan, -c * model.alpha_h, *grad);
        }
    }
    return best_obj;
}

double certificate_loss(const CertificateModel& model, const std::vector<LabeledSample>& batch,
                        const TrainConfig& cfg, const ControllerConfig& ctrl, ModelGrad* grad) {
    if (batch.empty()) throw std::invalid_argument("certificate_loss: empty batch");
    const int n = static_cast<int>(batch.size());
    const double inv_n = 1.0 / n;

    std::vector<double> losses(static_cast<std::size_t>(n), 0.0);
    std::vector<ModelGrad> grads;
    if (grad) grads.assign(static_cast<std::size_t>(n), ModelGrad::zeros_like(model));

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const LabeledSample& s = batch[static_cast<std::size_t>(i)];
        ModelGrad* g = grad ? &grads[static_cast<std::size_t>(i)] : nullptr;
        double loss = 0.0;
        const double h = cbf_value(model, s.obs.scan);
        if (s.label == Label::Safe) {
            loss += cfg.a1 * relu(cfg.eps_h + h);
            if (g && cfg.eps_h + h > 0.0) accumulate_cbf_grad(model, s.obs.scan, cfg.a1 * inv_n, *g);
        } else if (s.label == Label::Unsafe) {
            loss += cfg.a2 * relu(cfg.eps_h - h);
            if (g && cfg.eps_h - h > 0.0)
                accumulate_cbf_grad(model, s.obs.scan, -cfg.a2 * inv_n, *g);
        }
        loss += cfg.a3 * relaxed_goal_cost(model, s.obs, ctrl, g, cfg.a3 * inv_n);
        // Positive-definiteness pressure: keep the learned correction on top
        // of the rho^2 + (1 - cos phi)/2 prior nonnegative, so V > 0 away
        // from the goal and the decay constraint stays binding at u = 0.
        const double v_prior = s.obs.rho * s.obs.rho + (1.0 - std::cos(s.obs.phi)) / 2.0;
        const double v_w = clf_value(model, s.obs.rho, s.obs.phi) - v_prior;
        loss += cfg.a4 * relu(-v_w);
        if (g && v_w < 0.0) accumulate_clf_grad(model, s.obs.rho, s.obs.phi, -cfg.a4 * inv_n, *g);
        // Keep the learned barrier correction small around its min-range
        // prior (see TrainConfig::a6).
        const double h_w = h - (model.d_c - min_range(s.obs.scan));
        loss += cfg.a6 * h_w * h_w;
        if (g) accumulate_cbf_grad(model, s.obs.scan, 2.0 * cfg.a6 * h_w * inv_n, *g);
        // Lookahead consistency (see TrainConfig::a7); inactive when the
        // sample carries no probe pair.
        if (!s.pred_next_scan.points.empty()) {
            const double dh =
                cbf_value(model, s.pred_next_scan) - cbf_value(model, s.true_next_scan);
            loss += cfg.a7 * dh * dh + cfg.a8 * relu(-dh) * relu(-dh);
            if (g) {
                const double c = (2.0 * cfg.a7 * dh - 2.0 * cfg.a8 * relu(-dh)) * inv_n;
                accumulate_cbf_grad(model, s.pred_next_scan, c, *g);
                accumulate_cbf_grad(model, s.true_next_scan, -c, *g);
            }
        }
        losses[static_cast<std::size_t>(i)] = loss;
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) total += losses[static_cast<std::size_t>(i)];
    total *= inv_n;

    // Anchor: V must vanish at the goal observation (rho = 0, phi = 0).
    const double v_goal = clf_value(model, 0.0, 0.0);
    total += cfg.a5 * v_goal * v_goal;
    if (grad) accumulate_clf_grad(model, 0.0, 0.0, 2.0 * cfg.a5 * v_goal, *grad);

    const double head_sq = flatten_parameters(model.barrier_head).squaredNorm();
    const double lyap_sq = flatten_parameters(model.lyapunov).squaredNorm();
    total += cfg.l2 * (head_sq + lyap_sq);

    if (grad) {
        for (int i = 0; i < n; ++i) grad->axpy(1.0, grads[static_cast<std::size_t>(i)]);
        // d/dp of l2*||p||^2
        for (std::size_t l = 0; l < model.barrier_head.layers.size(); ++l) {
            grad->barrier_head.grads[l].W += 2.0 * cfg.l2 * model.barrier_head.layers[l].W;
            grad->barrier_head.grads[l].b += 2.0 * cfg.l2 * model.barrier_head.layers[l].b;
        }
        for (std::size_t l = 0; l < model.lyapunov.layers.size(); ++l) {
            grad->lyapunov.grads[l].W += 2.0 * cfg.l2 * model.lyapunov.layers[l].W;
            grad->lyapunov.grads[l].b += 2.0 * cfg.l2 * model.lyapunov.layers[l].b;
        }
    }
    return total;
}

TrainResult train(const std::vector<Environment>& envs, int n_rays, double d_o,
                  const CertificateModel& initial, const TrainConfig& cfg,
                  const ControllerConfig& ctrl) {
    TrainResult result;
    result.model = initial;

    ControllerConfig tctrl = ctrl;
    tctrl.lambda_g2 = cfg.lg_clf_weight;

    std::vector<LabeledSample> dataset = sample_dataset(envs, n_rays, d_o, initial.d_c, cfg);

    // Attach one lookahead-consistency probe pair per sample: a grid input
    // applied for dt, observed both through the rigid-transform prediction
    // and through a fresh raycast at the resulting pose.
    const auto& probe_cands = tctrl.grid.candidates;
    if (cfg.a7 > 0.0 && !probe_cands.empty()) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < static_cast<int>(dataset.size()); ++i) {
            LabeledSample& s = dataset[static_cast<std::size_t>(i)];
            Rng rng(derive_seed(cfg.seed, 0x9e0bau + static_cast<std::uint64_t>(i)));
            const ControlInput u = probe_cands[rng.uniform_int(probe_cands.size())];
            s.pred_next_scan = predict_scan(s.obs.scan, local_transform(u, tctrl.dt));
            const Pose next = dubins_step(s.pose, u, tctrl.dt);
            s.true_next_scan =
                raycast(envs[static_cast<std::size_t>(s.env_id)], next, n_rays, d_o);
        }
    }

    // Deterministic split and batch order, all derived from the seed.
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5eedull));
    std::vector<std::size_t> idx(dataset.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[shuffle_rng.uniform_int(i)]);
    const std::size_t n_val =
        static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(idx.size()));
    std::vector<std::size_t> val_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());

    std::vector<LabeledSample> val;
    val.reserve(val_idx.size());
    for (std::size_t i : val_idx) val.push_back(dataset[i]);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = train_idx.size(); i > 1; --i)
            std::swap(train_idx[i - 1], train_idx[shuffle_rng.uniform_int(i)]);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t at = 0; at < train_idx.size(); at += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end =
                std::min(at + static_cast<std::size_t>(cfg.batch), train_idx.size());
            std::vector<LabeledSample> batch;
            batch.reserve(end - at);
            for (std::size_t k = at; k < end; ++k) batch.push_back(dataset[train_idx[k]]);

            ModelGrad grad = ModelGrad::zeros_like(result.model);
            const double loss = certificate_loss(result.model, batch, cfg, tctrl, &grad);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += batch.size();

            sgd_step(result.model.encoder, grad.encoder, cfg.lr, 0.0);
            sgd_step(result.model.barrier_head, grad.barrier_head, cfg.lr, 0.0);
            sgd_step(result.model.lyapunov, grad.lyapunov, cfg.lr, 0.0);
        }

        result.history.train_loss.push_back(seen > 0 ? epoch_loss / static_cast<double>(seen) : 0.0);
        result.history.val_loss.push_back(
            val.empty() ? 0.0 : certificate_loss(result.model, val, cfg, tctrl));
    }
    return result;
}

FeasibilityReport verify(const CertificateModel& model, const std::vector<Environment>& envs,
                         long long m, std::uint64_t seed, int n_rays, double d_o,
                         const ControlGrid& grid, double dt) {
    if (m < 1) throw std::invalid_argument("verify: m must be >= 1");
    FeasibilityReport report;
    report.n_samples = m;

    std::vector<std::uint8_t> feasible(static_cast<std::size_t>(m), 0);
    std::vector<double> residuals(static_cast<std::size_t>(m), 0.0);
    std::vector<Pose> poses(static_cast<std::size_t>(m));
    std::vector<int> env_ids(static_cast<std::size_t>(m), 0);
    std::vector<double> h_values(static_cast<std::size_t>(m), 0.0);

#pragma omp parallel for schedule(static)
    for (long long i = 0; i < m; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const int env_id = static_cast<int>(i % static_cast<long long>(envs.size()));
        const Environment& env = envs[static_cast<std::size_t>(env_id)];
        const Pose pose = sample_pose(env, rng);
        const Observation obs = observe(env, pose, n_rays, d_o);
        const double h = cbf_value(model, obs.scan);

        bool ok = false;
        double best_res = std::numeric_limits<double>::infinity();
        for (const ControlInput& u : grid.candidates) {
            const auto [h_next, v_next] = predict_certificates(model, obs, u, dt);
            (void)v_next;
            const double res = h_next - model.alpha_h * h;
            best_res = std::min(best_res, res);
            if (res <= 0.0) {
                ok = true;
                break;
            }
        }
        feasible[static_cast<std::size_t>(i)] = ok ? 1 : 0;
        residuals[static_cast<std::size_t>(i)] = best_res;
        poses[static_cast<std::size_t>(i)] = pose;
        env_ids[static_cast<std::size_t>(i)] = env_id;
        h_values[static_cast<std::size_t>(i)] = h;
    }

    for (long long i = 0; i < m; ++i) {
        if (feasible[static_cast<std::size_t>(i)]) {
            ++report.n_feasible;
        } else if (report.counterexamples.size() < 100) {
            report.counterexamples.push_back({env_ids[static_cast<std::size_t>(i)],
                                              poses[static_cast<std::size_t>(i)],
                                              h_values[static_cast<std::size_t>(i)],
                                              residuals[static_cast<std::size_t>(i)]});
        }
    }
    report.fraction_feasible =
        static_cast<double>(report.n_feasible) / static_cast<double>(report.n_samples);
    return report;
}

namespace {

using nlohmann::json;

json scan_to_json(const LidarScan& scan) {
    json j;
    json pts = json::array();
    json sat = json::array();
    for (std::size_t i = 0; i < scan.size(); ++i) {
        pts.push_back({scan.points[i].x, scan.points[i].y});
        sat.push_back(static_cast<bool>(scan.saturated[i]));
    }
    j["points"] = pts;
    j["saturated"] = sat;
    return j;
}

LidarScan scan_from_json(const json& j) {
    LidarScan scan;
    for (const auto& p : j.at("points")) scan.points.push_back({p[0], p[1]});
    for (const auto& b : j.at("saturated")) scan.saturated.push_back(b.get<bool>() ? 1 : 0);
    return scan;
}

json sample_to_json(const LabeledSample& s) {
    json j;
    json pts = json::array();
    json sat = json::array();
    for (std::size_t i = 0; i < s.obs.scan.size(); ++i) {
        pts.push_back({s.obs.scan.points[i].x, s.obs.scan.points[i].y});
        sat.push_back(static_cast<bool>(s.obs.scan.saturated[i]));
    }
    j["scan"] = pts;
    j["saturated"] = sat;
    if (!s.pred_next_scan.points.empty()) {
        j["pred_next_scan"] = scan_to_json(s.pred_next_scan);
        j["true_next_scan"] = scan_to_json(s.true_next_scan);
    }
    j["rho"] = s.obs.rho;
    j["phi"] = s.obs.phi;
    j["label"] = s.label == Label::Safe ? "safe" : (s.label == Label::Unsafe ? "unsafe" : "boundary");
    j["env_id"] = s.env_id;
    j["pose"] = {s.pose.x, s.pose.y, s.pose.theta};
    return j;
}

LabeledSample sample_from_json(const json& j) {
    LabeledSample s;
    for (const auto& p : j.at("scan")) s.obs.scan.points.push_back({p[0], p[1]});
    for (const auto& b : j.at("saturated")) s.obs.scan.saturated.push_back(b.get<bool>() ? 1 : 0);
    s.obs.rho = j.at("rho");
    s.obs.phi = j.at("phi");
    const std::string label = j.at("label");
    s.label = label == "safe" ? Label::Safe : (label == "unsafe" ? Label::Unsafe : Label::Boundary);
    s.env_id = j.at("env_id");
    s.pose = {j.at("pose")[0], j.at("pose")[1], j.at("pose")[2]};
    if (j.contains("pred_next_scan")) {
        s.pred_next_scan = scan_from_json(j.at("pred_next_scan"));
        s.true_next_scan = scan_from_json(j.at("true_next_scan"));
    }
    return s;
}

}  // namespace

void save_dataset(const std::vector<LabeledSample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& s : samples) out << sample_to_json(s).dump() << "\n";
}

std::vector<LabeledSample> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<LabeledSample> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        samples.push_back(sample_from_json(json::parse(line)));
    }
    return samples;
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
        out << i << "," << json(history.train_loss[i]).dump() << ","
            << json(history.val_loss[i]).dump() << "\n";
    }
}

std::string feasibility_report_to_json(const FeasibilityReport& report) {
    json j;
    j["n_samples"] = report.n_samples;
    j["n_feasible"] = report.n_feasible;
    j["fraction_feasible"] = report.fraction_feasible;
    j["counterexamples"] = json::array();
    for (const auto& c : report.counterexamples) {
        j["counterexamples"].push_back({{"env_index", c.env_index},
                                        {"pose", {c.pose.x, c.pose.y, c.pose.theta}},
                                        {"h", c.h},
                                        {"best_residual", c.best_residual}});
    }
    return j.dump(2);
}

void save_feasibility_report(const FeasibilityReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << feasibility_report_to_json(report) << "\n";
}

}  // namespace ocnav
