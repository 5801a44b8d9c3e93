#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ocnav/controller.hpp"

namespace ocnav {

enum class Label { Safe, Unsafe, Boundary };

struct LabeledSample {
    Observation obs;
    Label label = Label::Boundary;
    int env_id = 0;
    Pose pose;
    // Lookahead-consistency pair for one probe input drawn from the training
    // grid: the rigid-transform scan prediction and the re-raycast scan at
    // the resulting pose. Empty scans disable the consistency loss term.
    LidarScan pred_next_scan;
    LidarScan true_next_scan;
};

struct TrainConfig {
    int n_samples = 10000;
    double validation_fraction = 0.10;
    int epochs = 72;
    double a1 = 100.0;
    double a2 = 100.0;
    double a3 = 1.0;
    // Weight of the Lyapunov decay residual inside the goal cost during
    // training only (the runtime controller keeps its own lambda_g2). The
    // decay residual competes against terms weighted 100-1000x higher; left
    // at the controller's 1.0 the learned V stays too rough for the decay to
    // be feasible over much of the workspace.
    double lg_clf_weight = 100.0;
    double a4 = 100.0;          // penalty on a negative learned Lyapunov correction
    double a5 = 100.0;          // anchor pulling V at the goal observation to zero
    // Quadratic anchor on the learned barrier correction (h minus its
    // d_c - min_range prior). Without it the goal-cost term rewards drifting
    // h downward in free space, which steepens h until one-step scan
    // prediction noise swamps the decay constraint near obstacles.
    double a6 = 1.0;
    // Lookahead-consistency weight: penalizes (h on the rigid-transform scan
    // prediction minus h on the re-raycast scan)^2 for one probe input per
    // sample. The controller plans against predicted scans, so a barrier
    // that is sensitive to ray re-binning gives systematically wrong h_next
    // exactly where the decay constraint must brake the robot.
    double a7 = 10.0;
    // Extra penalty on the optimistic side of the consistency gap (predicted
    // h below the re-raycast h). The controller trusts h on predicted scans;
    // symmetric residual noise then lets it pick inputs whose real barrier
    // rise exceeds the decay allowance. Skewing the penalty biases the
    // lookahead conservative, so braking errs early instead of late.
    double a8 = 80.0;
    double eps_h = 0.1;         // classification margin (shared symbol with the band width)
    double label_margin = 0.05; // boundary band excluded from classification
    // Conservative labeling: states within d_c + label_buffer of an obstacle
    // are treated as unsafe for training, so the learned barrier crosses zero
    // with a clearance buffer that absorbs one-step lookahead error. The
    // simulator's collision radius stays at d_c. Sized to the lookahead-
    // consistency residual (~0.02 near the boundary); oversizing it strands
    // the robot in a band where only rotation is feasible.
    double label_buffer = 0.03;
    double l2 = 1e-4;
    double lr = 1e-3;
    int batch = 64;
    std::uint64_t seed = 0;
};

/// Poses drawn uniformly over each environment's workspace x heading,
/// observed through the simulated Lidar and labeled by ground-truth
/// min-range against d_c. Deterministic given the seed.
std::vector<LabeledSample> sample_dataset(const std::vector<Environment>& envs, int n_rays,
                                          double d_o, double d_c, const TrainConfig& cfg);

Label label_for(double min_range, double d_c, double label_margin);

/// L_g: optimal cost of the relaxed (penalty-method) goal-seeking policy.
/// When grad is given, backpropagates through the argmin candidate only,
/// scaled by coeff.
double relaxed_goal_cost(const CertificateModel& model, const Observation& obs,
                         const ControllerConfig& cfg, ModelGrad* grad = nullptr,
                         double coeff = 1.0);

/// Mean of a1*ReLU(eps_h + h)*1_safe + a2*ReLU(eps_h - h)*1_unsafe + a3*L_g
/// + a4*ReLU(-(V - V_prior)) + a6*(h - h_prior)^2 over the batch, plus
/// a5*V(goal)^2 and
/// l2*(||barrier_head||^2 + ||lyapunov||^2). Boundary samples skip the
/// classification terms. The a4/a5 terms keep V positive definite with its
/// zero at the goal; without them the goal-cost term rewards shifting V down
/// uniformly (a constant drop of c slackens every decay residual by
/// c*(1 - alpha_V)), after which the min-norm controller rests at u = 0
/// forever. When grad is given it receives the full gradient, including the
/// regularization term.
double certificate_loss(const CertificateModel& model, const std::vector<LabeledSample>& batch,
                        const TrainConfig& cfg, const ControllerConfig& ctrl,
                        ModelGrad* grad = nullptr);

struct TrainHistory {
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;
};

struct TrainResult {
    CertificateModel model;
    TrainHistory history;
};

/// Mini-batch SGD for cfg.epochs over a dataset sampled from envs.
/// Throws std::runtime_error if the loss becomes non-finite.
TrainResult train(const std::vector<Environment>& envs, int n_rays, double d_o,
                  const CertificateModel& initial, const TrainConfig& cfg,
                  const ControllerConfig& ctrl);

struct Counterexample {
    int env_index = 0;
    Pose pose;
    double h = 0.0;
    double best_residual = 0.0;  // min over candidates of h_next - alpha_h * h
};

struct FeasibilityReport {
    long long n_samples = 0;
    long long n_feasible = 0;
    double fraction_feasible = 0.0;
    std::vector<Counterexample> counterexamples;  // capped at 100
};

/// Samples M poses from the environment family and checks whether some grid
/// candidate satisfies h_next - alpha_h * h <= 0 under one-step lookahead.
FeasibilityReport verify(const CertificateModel& model, const std::vector<Environment>& envs,
                         long long m, std::uint64_t seed, int n_rays, double d_o,
                         const ControlGrid& grid, double dt);

void save_dataset(const std::vector<LabeledSample>& samples, const std::string& path);
std::vector<LabeledSample> load_dataset(const std::string& path);
void save_history_csv(const TrainHistory& history, const std::string& path);
std::string feasibility_report_to_json(const FeasibilityReport& report);
void save_feasibility_report(const FeasibilityReport& report, const std::string& path);

}  // namespace ocnav
