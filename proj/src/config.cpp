#include "ocnav/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ocnav {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("config: " + msg); }

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) fail("unknown key \"" + it.key() + "\" in " + section);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(std::string("bad value for \"") + key + "\"");
    }
}

void require_positive(double v, const char* key) {
    if (!(v > 0.0)) fail(std::string("\"") + key + "\" must be > 0");
}

void require_unit(double v, const char* key) {
    if (!(v > 0.0 && v < 1.0)) fail(std::string("\"") + key + "\" must be in (0, 1)");
}

}  // namespace

ControlGrid make_grid(const RunConfig& cfg) {
    return ControlGrid::make(cfg.v_max, cfg.omega_max, cfg.n_v, cfg.n_omega);
}

ControllerConfig make_controller(const RunConfig& cfg) {
    ControllerConfig c = cfg.controller;
    c.grid = make_grid(cfg);
    return c;
}

CertificateModel make_model(const RunConfig& cfg) {
    return CertificateModel::init(cfg.d_c, cfg.alpha_h, cfg.alpha_V, cfg.n_rays, cfg.seed,
                                  cfg.hidden);
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["sensing"] = {{"n_rays", cfg.n_rays}, {"d_o", cfg.d_o}, {"d_c", cfg.d_c},
                    {"alpha_h", cfg.alpha_h}, {"alpha_V", cfg.alpha_V}, {"hidden", cfg.hidden}};
    j["grid"] = {{"v_max", cfg.v_max},
                 {"omega_max", cfg.omega_max},
                 {"n_v", cfg.n_v},
                 {"n_omega", cfg.n_omega}};
    const ControllerConfig& c = cfg.controller;
    j["controller"] = {{"lambda_g1", c.lambda_g1}, {"lambda_g2", c.lambda_g2},
                       {"lambda_g3", c.lambda_g3}, {"lambda_e1", c.lambda_e1},
                       {"lambda_e2", c.lambda_e2}, {"lambda_e3", c.lambda_e3},
                       {"lambda_e4", c.lambda_e4}, {"eps_h", c.eps_h},         {"gamma_V", c.gamma_V},
                       {"gamma_h", c.gamma_h},     {"dt", c.dt},
                       {"goal_radius", c.goal_radius}, {"unify_decay_forms", c.unify_decay_forms},
                       {"parallel_scoring", c.parallel_scoring}};
    const TrainConfig& t = cfg.training;
    j["training"] = {{"n_samples", t.n_samples},
                     {"validation_fraction", t.validation_fraction},
                     {"epochs", t.epochs},
                     {"a1", t.a1},
                     {"a2", t.a2},
                     {"a3", t.a3},
                     {"lg_clf_weight", t.lg_clf_weight},
                     {"a4", t.a4},
                     {"a5", t.a5},
                     {"a6", t.a6},
                     {"a7", t.a7},
                     {"a8", t.a8},
                     {"eps_h", t.eps_h},
                     {"label_margin", t.label_margin},
                     {"label_buffer", t.label_buffer},
                     {"l2", t.l2},
                     {"lr", t.lr},
                     {"batch", t.batch},
                     {"envs", cfg.train_envs},
                     {"grid_n_v", cfg.train_grid_n_v},
                     {"grid_n_omega", cfg.train_grid_n_omega}};
    const EnvGenConfig& e = cfg.envgen;
    j["envgen"] = {{"bounds_min", {e.bounds.min.x, e.bounds.min.y}},
                   {"bounds_max", {e.bounds.max.x, e.bounds.max.y}},
                   {"start", {e.start.x, e.start.y}},
                   {"goal", {e.goal.x, e.goal.y}},
                   {"heading_range", e.heading_range},
                   {"wall_fraction", e.wall_fraction},
                   {"wall_half_len_min", e.wall_half_len_min},
                   {"wall_half_len_max", e.wall_half_len_max},
                   {"wall_half_thick_min", e.wall_half_thick_min},
                   {"wall_half_thick_max", e.wall_half_thick_max},
                   {"circle_fraction", e.circle_fraction},
                   {"radius_min", e.radius_min},
                   {"radius_max", e.radius_max},
                   {"box_half_min", e.box_half_min},
                   {"box_half_max", e.box_half_max},
                   {"clearance", e.clearance},
                   {"boundary_walls", e.boundary_walls},
                   {"n_obstacles", cfg.n_obstacles}};
    j["bench"] = {{"envs", cfg.bench_envs},
                  {"t_max", cfg.sim.t_max},
                  {"bugtrap_t_max", cfg.bugtrap_t_max},
                  {"inner_substeps", cfg.sim.inner_substeps}};
    j["verify"] = {{"samples", cfg.verify_samples}};
    return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("top level must be a JSON object");
    check_keys(j, "top level",
               {"seed", "sensing", "grid", "controller", "training", "envgen", "bench", "verify"});

    RunConfig cfg;
    read(j, "seed", cfg.seed);

    if (j.contains("sensing")) {
        const json& s = j["sensing"];
        check_keys(s, "sensing", {"n_rays", "d_o", "d_c", "alpha_h", "alpha_V", "hidden"});
        read(s, "n_rays", cfg.n_rays);
        read(s, "d_o", cfg.d_o);
        read(s, "d_c", cfg.d_c);
        read(s, "alpha_h", cfg.alpha_h);
        read(s, "alpha_V", cfg.alpha_V);
        read(s, "hidden", cfg.hidden);
        if (cfg.n_rays < 3) fail("\"n_rays\" must be >= 3");
        require_positive(cfg.d_o, "d_o");
        require_positive(cfg.d_c, "d_c");
        require_unit(cfg.alpha_h, "alpha_h");
        require_unit(cfg.alpha_V, "alpha_V");
        if (cfg.hidden < 1) fail("\"hidden\" must be >= 1");
        if (cfg.d_c >= cfg.d_o) fail("\"d_c\" must be < \"d_o\"");
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        check_keys(g, "grid", {"v_max", "omega_max", "n_v", "n_omega"});
        read(g, "v_max", cfg.v_max);
        read(g, "omega_max", cfg.omega_max);
        read(g, "n_v", cfg.n_v);
        read(g, "n_omega", cfg.n_omega);
        require_positive(cfg.v_max, "v_max");
        require_positive(cfg.omega_max, "omega_max");
        if (cfg.n_v < 2 || cfg.n_omega < 2) fail("grid sizes must be >= 2");
    }
    if (j.contains("controller")) {
        const json& c = j["controller"];
        check_keys(c, "controller",
                   {"lambda_g1", "lambda_g2", "lambda_g3", "lambda_e1", "lambda_e2", "lambda_e3",
                    "lambda_e4", "eps_h", "gamma_V", "gamma_h", "dt", "goal_radius", "unify_decay_forms",
                    "parallel_scoring"});
        ControllerConfig& cc = cfg.controller;
        read(c, "lambda_g1", cc.lambda_g1);
        read(c, "lambda_g2", cc.lambda_g2);
        read(c, "lambda_g3", cc.lambda_g3);
        read(c, "lambda_e1", cc.lambda_e1);
        read(c, "lambda_e2", cc.lambda_e2);
        read(c, "lambda_e3", cc.lambda_e3);
        read(c, "lambda_e4", cc.lambda_e4);
        read(c, "eps_h", cc.eps_h);
        read(c, "gamma_V", cc.gamma_V);
        read(c, "gamma_h", cc.gamma_h);
        read(c, "dt", cc.dt);
        read(c, "goal_radius", cc.goal_radius);
        read(c, "unify_decay_forms", cc.unify_decay_forms);
        read(c, "parallel_scoring", cc.parallel_scoring);
        require_positive(cc.dt, "dt");
        require_positive(cc.eps_h, "eps_h");
        require_positive(cc.goal_radius, "goal_radius");
    }
    if (j.contains("training")) {
        const json& t = j["training"];
        check_keys(t, "training",
                   {"n_samples", "validation_fraction", "epochs", "a1", "a2", "a3", "a4", "a5",
                    "a6", "a7", "a8", "lg_clf_weight", "eps_h", "label_margin", "label_buffer", "l2",
                    "lr", "batch", "envs", "grid_n_v", "grid_n_omega"});
        TrainConfig& tc = cfg.training;
        read(t, "n_samples", tc.n_samples);
        read(t, "validation_fraction", tc.validation_fraction);
        read(t, "epochs", tc.epochs);
        read(t, "a1", tc.a1);
        read(t, "a2", tc.a2);
        read(t, "a3", tc.a3);
        read(t, "lg_clf_weight", tc.lg_clf_weight);
        read(t, "a4", tc.a4);
        read(t, "a5", tc.a5);
        read(t, "a6", tc.a6);
        read(t, "a7", tc.a7);
        read(t, "a8", tc.a8);
        read(t, "eps_h", tc.eps_h);
        read(t, "label_margin", tc.label_margin);
        read(t, "label_buffer", tc.label_buffer);
        read(t, "l2", tc.l2);
        read(t, "lr", tc.lr);
        read(t, "batch", tc.batch);
        read(t, "envs", cfg.train_envs);
        read(t, "grid_n_v", cfg.train_grid_n_v);
        read(t, "grid_n_omega", cfg.train_grid_n_omega);
        if (tc.n_samples < 1) fail("\"n_samples\" must be >= 1");
        if (!(tc.validation_fraction >= 0.0 && tc.validation_fraction < 1.0))
            fail("\"validation_fraction\" must be in [0, 1)");
        if (tc.epochs < 0) fail("\"epochs\" must be >= 0");
        require_positive(tc.lr, "lr");
        if (tc.batch < 1) fail("\"batch\" must be >= 1");
        if (cfg.train_envs < 1) fail("\"envs\" must be >= 1");
    }
    if (j.contains("envgen")) {
        const json& e = j["envgen"];
        check_keys(e, "envgen",
                   {"bounds_min", "bounds_max", "start", "goal", "heading_range",
                    "wall_fraction", "wall_half_len_min", "wall_half_len_max",
                    "wall_half_thick_min", "wall_half_thick_max", "circle_fraction", "radius_min",
                    "radius_max", "box_half_min", "box_half_max", "clearance", "boundary_walls",
                    "n_obstacles"});
        EnvGenConfig& g = cfg.envgen;
        std::vector<double> v2;
        if (e.contains("bounds_min")) {
            read(e, "bounds_min", v2);
            if (v2.size() != 2) fail("\"bounds_min\" must be [x, y]");
            g.bounds.min = {v2[0], v2[1]};
        }
        if (e.contains("bounds_max")) {
            read(e, "bounds_max", v2);
            if (v2.size() != 2) fail("\"bounds_max\" must be [x, y]");
            g.bounds.max = {v2[0], v2[1]};
        }
        if (e.contains("start")) {
            read(e, "start", v2);
            if (v2.size() != 2) fail("\"start\" must be [x, y]");
            g.start = {v2[0], v2[1]};
        }
        if (e.contains("goal")) {
            read(e, "goal", v2);
            if (v2.size() != 2) fail("\"goal\" must be [x, y]");
            g.goal = {v2[0], v2[1]};
        }
        read(e, "heading_range", g.heading_range);
        read(e, "wall_fraction", g.wall_fraction);
        read(e, "wall_half_len_min", g.wall_half_len_min);
        read(e, "wall_half_len_max", g.wall_half_len_max);
        read(e, "wall_half_thick_min", g.wall_half_thick_min);
        read(e, "wall_half_thick_max", g.wall_half_thick_max);
        read(e, "circle_fraction", g.circle_fraction);
        read(e, "radius_min", g.radius_min);
        read(e, "radius_max", g.radius_max);
        read(e, "box_half_min", g.box_half_min);
        read(e, "box_half_max", g.box_half_max);
        read(e, "clearance", g.clearance);
        read(e, "boundary_walls", g.boundary_walls);
        read(e, "n_obstacles", cfg.n_obstacles);
        if (!(g.bounds.min.x < g.bounds.max.x && g.bounds.min.y < g.bounds.max.y))
            fail("envgen bounds must have min < max");
        if (!(g.circle_fraction >= 0.0 && g.circle_fraction <= 1.0))
            fail("\"circle_fraction\" must be in [0, 1]");
        if (!(g.wall_fraction >= 0.0 && g.wall_fraction <= 1.0))
            fail("\"wall_fraction\" must be in [0, 1]");
        if (g.wall_half_len_min > g.wall_half_len_max)
            fail("\"wall_half_len_min\" must be <= \"wall_half_len_max\"");
        if (g.wall_half_thick_min > g.wall_half_thick_max)
            fail("\"wall_half_thick_min\" must be <= \"wall_half_thick_max\"");
        if (g.radius_min > g.radius_max) fail("\"radius_min\" must be <= \"radius_max\"");
        if (g.box_half_min > g.box_half_max) fail("\"box_half_min\" must be <= \"box_half_max\"");
        if (cfg.n_obstacles < 0) fail("\"n_obstacles\" must be >= 0");
    }
    if (j.contains("bench")) {
        const json& b = j["bench"];
        check_keys(b, "bench", {"envs", "t_max", "bugtrap_t_max", "inner_substeps"});
        read(b, "envs", cfg.bench_envs);
        read(b, "t_max", cfg.sim.t_max);
        read(b, "bugtrap_t_max", cfg.bugtrap_t_max);
        read(b, "inner_substeps", cfg.sim.inner_substeps);
        if (cfg.bench_envs < 1) fail("\"envs\" must be >= 1");
        require_positive(cfg.sim.t_max, "t_max");
        require_positive(cfg.bugtrap_t_max, "bugtrap_t_max");
        if (cfg.sim.inner_substeps < 1) fail("\"inner_substeps\" must be >= 1");
    }
    if (j.contains("verify")) {
        const json& v = j["verify"];
        check_keys(v, "verify", {"samples"});
        read(v, "samples", cfg.verify_samples);
        if (cfg.verify_samples < 1) fail("\"samples\" must be >= 1");
    }

    // Keep the simulation view of sensing in sync with the model fields.
    cfg.sim.n_rays = cfg.n_rays;
    cfg.sim.d_o = cfg.d_o;
    cfg.sim.d_c = cfg.d_c;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    out << config_to_json(cfg) << "\n";
}

}  // namespace ocnav
