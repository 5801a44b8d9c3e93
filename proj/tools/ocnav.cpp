// Command-line front end: train / verify / run / bench.
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ocnav/config.hpp"
#include "ocnav/svg.hpp"

using namespace ocnav;

namespace {

std::vector<Environment> training_envs(const RunConfig& cfg) {
    std::vector<Environment> envs;
    envs.reserve(cfg.train_envs);
    for (int i = 0; i < cfg.train_envs; ++i)
        envs.push_back(random_env(derive_seed(cfg.seed, 0x7EA1u + static_cast<std::uint64_t>(i)),
                                  cfg.n_obstacles, cfg.envgen));
    return envs;
}

ControllerConfig training_controller(const RunConfig& cfg) {
    ControllerConfig ctrl = make_controller(cfg);
    ctrl.grid =
        ControlGrid::make(cfg.v_max, cfg.omega_max, cfg.train_grid_n_v, cfg.train_grid_n_omega);
    return ctrl;
}

int cmd_train(const RunConfig& cfg, const std::string& model_path,
              const std::string& history_path) {
    const std::vector<Environment> envs = training_envs(cfg);
    CertificateModel init = make_model(cfg);
    TrainConfig tc = cfg.training;
    tc.seed = cfg.seed;
    const TrainResult result = train(envs, cfg.n_rays, cfg.d_o, init, tc, training_controller(cfg));
    save_model(result.model, model_path);
    save_history_csv(result.history, history_path);
    if (!result.history.val_loss.empty())
        std::printf("trained %d epochs, final val loss %.6f\n", tc.epochs,
                    result.history.val_loss.back());
    std::printf("model -> %s\nhistory -> %s\n", model_path.c_str(), history_path.c_str());
    return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& model_path, const std::string& report_path,
               long long samples) {
    const CertificateModel model = load_model(model_path);
    const std::vector<Environment> envs = training_envs(cfg);
    const FeasibilityReport report = verify(model, envs, samples, cfg.seed, cfg.n_rays, cfg.d_o,
                                            make_grid(cfg), cfg.controller.dt);
    save_feasibility_report(report, report_path);
    std::printf("feasible %lld / %lld (fraction %.6f)\nreport -> %s\n", report.n_feasible,
                report.n_samples, report.fraction_feasible, report_path.c_str());
    return 0;
}

int cmd_run(const RunConfig& cfg, const std::string& model_path, const std::string& env_name,
            std::uint64_t env_seed, const std::string& policy_name, const std::string& log_path,
            const std::string& svg_path, double t_max) {
    const CertificateModel model = load_model(model_path);
    Environment env;
    SimConfig sim = cfg.sim;
    if (env_name == "bugtrap") {
        env = bugtrap_env();
        sim.t_max = cfg.bugtrap_t_max;
    } else if (env_name == "random") {
        env = random_env(env_seed, cfg.n_obstacles, cfg.envgen);
    } else {
        env = load_environment(env_name);
    }
    if (t_max > 0.0) sim.t_max = t_max;
    const PolicyKind policy =
        policy_name == "clf_greedy" ? PolicyKind::ClfGreedy : PolicyKind::Hybrid;
    const EpisodeLog log =
        run_episode(model, env, policy, make_controller(cfg), sim, env_seed);
    save_episode(log, log_path);
    save_trajectory_svg(env, log, cfg.controller.goal_radius, svg_path);
    std::printf("outcome %s after %.2f s (%zu steps)\nlog -> %s\nsvg -> %s\n",
                outcome_name(log.outcome).c_str(), log.t_end, log.steps.size(), log_path.c_str(),
                svg_path.c_str());
    return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& model_path, const std::string& policy_name,
              int n_envs, const std::string& report_path, const std::string& latency_path) {
    const CertificateModel model = load_model(model_path);
    const PolicyKind policy =
        policy_name == "clf_greedy" ? PolicyKind::ClfGreedy : PolicyKind::Hybrid;
    const BenchmarkRun run = benchmark(model, n_envs, cfg.seed, cfg.n_obstacles, cfg.envgen,
                                       policy, make_controller(cfg), cfg.sim);
    save_report(run.report, report_path);
    if (!latency_path.empty()) {
        std::ofstream out(latency_path);
        out << latency_to_json(run.latency, run.latency) << "\n";
    }

    int counts[4] = {0, 0, 0, 0};
    for (Outcome o : run.report.outcomes) ++counts[static_cast<int>(o)];
    std::printf("%-18s %10s\n", "metric", "value");
    std::printf("%-18s %10d\n", "environments", run.report.n_envs);
    std::printf("%-18s %10.4f\n", "safety_rate", run.report.safety_rate);
    std::printf("%-18s %10.4f\n", "goal_rate", run.report.goal_rate);
    std::printf("%-18s %10.2f\n", "mean_time_to_goal", run.report.mean_time_to_goal);
    std::printf("%-18s %10d\n", "reached_goal", counts[0]);
    std::printf("%-18s %10d\n", "collided", counts[1]);
    std::printf("%-18s %10d\n", "timeout", counts[2]);
    std::printf("%-18s %10d\n", "fail_safe", counts[3]);
    std::printf("%-18s %10.3f\n", "median_latency_ms", run.latency.median_ms);
    std::printf("report -> %s\n", report_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"observation-space certificate navigation"};
    app.require_subcommand(1);
    app.fallthrough();  // let --config/--seed appear after the subcommand too

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "override config seed")->each([&](const std::string&) {
        seed_set = true;
    });

    auto* train_cmd = app.add_subcommand("train", "train certificates, write checkpoint + history");
    std::string model_path = "model.json";
    std::string history_path = "history.csv";
    int epochs = -1, samples_i = -1;
    train_cmd->add_option("--model", model_path, "output checkpoint path");
    train_cmd->add_option("--history", history_path, "output history CSV path");
    train_cmd->add_option("--epochs", epochs, "override training epochs");
    train_cmd->add_option("--samples", samples_i, "override dataset size");

    auto* verify_cmd = app.add_subcommand("verify", "check decay feasibility over sampled states");
    std::string v_model = "model.json", v_report = "feasibility.json";
    long long v_samples = -1;
    verify_cmd->add_option("--model", v_model, "checkpoint to verify");
    verify_cmd->add_option("--report", v_report, "output report path");
    verify_cmd->add_option("--samples", v_samples, "override sample count");

    auto* run_cmd = app.add_subcommand("run", "run one episode, write log + SVG");
    std::string r_model = "model.json", r_env = "random", r_policy = "hybrid";
    std::string r_log = "episode.jsonl", r_svg = "trajectory.svg";
    std::uint64_t r_env_seed = 0;
    double r_tmax = -1.0;
    run_cmd->add_option("--model", r_model, "checkpoint to run");
    run_cmd->add_option("--env", r_env, "'random', 'bugtrap', or an environment JSON path");
    run_cmd->add_option("--env-seed", r_env_seed, "seed for --env random");
    run_cmd->add_option("--policy", r_policy, "hybrid | clf_greedy")
        ->check(CLI::IsMember({"hybrid", "clf_greedy"}));
    run_cmd->add_option("--log", r_log, "output episode log path");
    run_cmd->add_option("--svg", r_svg, "output trajectory SVG path");
    run_cmd->add_option("--t-max", r_tmax, "override episode time cap (s)");

    auto* bench_cmd = app.add_subcommand("bench", "randomized-environment benchmark");
    std::string b_model = "model.json", b_policy = "hybrid";
    std::string b_report = "benchmark.json", b_latency;
    int b_envs = -1;
    bench_cmd->add_option("--model", b_model, "checkpoint to benchmark");
    bench_cmd->add_option("--policy", b_policy, "hybrid | clf_greedy")
        ->check(CLI::IsMember({"hybrid", "clf_greedy"}));
    bench_cmd->add_option("--n-envs", b_envs, "override environment count");
    bench_cmd->add_option("--report", b_report, "output report path");
    bench_cmd->add_option("--latency", b_latency, "optional wall-clock latency sidecar path");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed_set) cfg.seed = seed;

        if (app.got_subcommand(train_cmd)) {
            if (epochs >= 0) cfg.training.epochs = epochs;
            if (samples_i > 0) cfg.training.n_samples = samples_i;
            return cmd_train(cfg, model_path, history_path);
        }
        if (app.got_subcommand(verify_cmd)) {
            return cmd_verify(cfg, v_model, v_report,
                              v_samples > 0 ? v_samples : cfg.verify_samples);
        }
        if (app.got_subcommand(run_cmd)) {
            return cmd_run(cfg, r_model, r_env, r_env_seed, r_policy, r_log, r_svg, r_tmax);
        }
        if (app.got_subcommand(bench_cmd)) {
            return cmd_bench(cfg, b_model, b_policy, b_envs > 0 ? b_envs : cfg.bench_envs,
                             b_report, b_latency);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
