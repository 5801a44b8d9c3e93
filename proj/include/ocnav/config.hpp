#pragma once

#include <string>

#include "ocnav/bench.hpp"
#include "ocnav/training.hpp"

namespace ocnav {

/// Everything the CLI needs, loadable from one JSON file. Every field has a
/// working default so an empty config is valid.
struct RunConfig {
    std::uint64_t seed = 0;

    // Sensing / model.
    int n_rays = 32;
    double d_o = 3.0;
    double d_c = 0.2;
    double alpha_h = 0.9;
    double alpha_V = 0.93;
    int hidden = 48;

    // Control candidate grid.
    double v_max = 0.5;
    double omega_max = 1.5;
    int n_v = 7;
    int n_omega = 15;

    ControllerConfig controller;
    TrainConfig training;
    int train_envs = 20;          // environments the dataset is sampled from
    int train_grid_n_v = 3;       // coarser candidate grid inside the training loss
    int train_grid_n_omega = 5;

    SimConfig sim;
    EnvGenConfig envgen;
    int n_obstacles = 8;
    int bench_envs = 500;
    double bugtrap_t_max = 60.0;

    long long verify_samples = 100000;
};

/// Grid built from the top-level dynamics fields.
ControlGrid make_grid(const RunConfig& cfg);

/// Controller config with the grid attached and dt/eps_h consistent.
ControllerConfig make_controller(const RunConfig& cfg);

CertificateModel make_model(const RunConfig& cfg);

std::string config_to_json(const RunConfig& cfg);

/// Parses and validates. Throws std::runtime_error with a field-specific
/// message on unknown keys, wrong types, or out-of-range values.
RunConfig config_from_json(const std::string& text);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

}  // namespace ocnav
