#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocnav/util.hpp"

namespace ocnav {

/// Fully-connected network, rectifier hidden layers, linear output.
/// All parameters are 64-bit; tiny networks, determinism over speed.
struct MlpLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out
};

struct Mlp {
    std::vector<MlpLayer> layers;

    int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
    int output_dim() const { return static_cast<int>(layers.back().W.rows()); }

    /// He-style uniform fan-in initialization, biases zero.
    static Mlp init(const std::vector<int>& dims, Rng& rng);
    static Mlp zeros(const std::vector<int>& dims);

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

    /// Rows of X are samples; returns one row per sample.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X) const;
};

/// Per-parameter gradient buffers mirroring an Mlp's shape.
struct GradientTape {
    std::vector<MlpLayer> grads;

    static GradientTape zeros_like(const Mlp& net);
    void axpy(double a, const GradientTape& other);
    void scale(double a);
    double squared_norm() const;
};

/// Reverse-mode gradients of upstream^T forward(net, x) w.r.t. all
/// parameters; optionally also w.r.t. x.
GradientTape backward(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& upstream,
                      Eigen::VectorXd* dx = nullptr);

/// Batch version: accumulates parameter gradients over all rows. Upstream has
/// one row per sample. Optionally returns per-row input gradients.
GradientTape backward_batch(const Mlp& net, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& upstream, Eigen::MatrixXd* dX = nullptr);

/// Accumulating variant used by training inner loops to avoid reallocation.
void backward_batch_into(const Mlp& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& upstream,
                         GradientTape& tape, Eigen::MatrixXd* dX = nullptr);

/// p <- p - lr * (grad + l2 * p) for every parameter.
void sgd_step(Mlp& net, const GradientTape& tape, double lr, double l2);

/// Collects every parameter into one flat vector (tests, regularization).
Eigen::VectorXd flatten_parameters(const Mlp& net);
void set_parameters(Mlp& net, const Eigen::VectorXd& flat);

std::string mlp_to_json(const Mlp& net);
Mlp mlp_from_json_text(const std::string& text);

}  // namespace ocnav
