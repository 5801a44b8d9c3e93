#pragma once

#include <cstdint>
#include <string>

#include "ocnav/geometry.hpp"
#include "ocnav/nn.hpp"

namespace ocnav {

/// Learned observation-space certificate pair. The barrier combines a
/// permutation-invariant encoding of the scan with a min-range prior; the
/// Lyapunov head combines a network with a goal-distance prior.
struct CertificateModel {
    Mlp encoder;       // 2 -> 48 -> 48 -> 48
    Mlp barrier_head;  // 48 -> 48 -> 48 -> 1
    Mlp lyapunov;      // 3 -> 48 -> 48 -> 1
    double d_c = 0.2;
    double alpha_h = 0.9;
    double alpha_V = 0.93;
    int n_rays = 32;
    std::uint64_t seed = 0;

    static CertificateModel init(double d_c, double alpha_h, double alpha_V, int n_rays,
                                 std::uint64_t seed, int hidden = 48);
    /// All-zero networks: the certificates reduce to their analytic priors.
    static CertificateModel zeroed(double d_c, double alpha_h, double alpha_V, int n_rays,
                                   int hidden = 48);
};

/// Element-wise maximum of the per-point embeddings (permutation-invariant).
Eigen::VectorXd encode(const CertificateModel& model, const LidarScan& scan);

/// encode plus the row index that achieved the max in each coordinate
/// (needed to route gradients through the max-pool).
Eigen::VectorXd encode_with_argmax(const CertificateModel& model, const LidarScan& scan,
                                   std::vector<int>& argmax_rows);

/// h(o) = head(encode(o)) - min_i ||o_i|| + d_c. h <= 0 safe, h >= 0 unsafe.
double cbf_value(const CertificateModel& model, const LidarScan& scan);

/// V = net(rho, sin phi, cos phi) + rho^2 + (1 - cos phi)/2.
double clf_value(const CertificateModel& model, double rho, double phi);

/// Gradients of the three networks' parameters, accumulated across loss terms.
struct ModelGrad {
    GradientTape encoder;
    GradientTape barrier_head;
    GradientTape lyapunov;

    static ModelGrad zeros_like(const CertificateModel& model);
    void axpy(double a, const ModelGrad& other);
    void scale(double a);
};

/// Adds coeff * d(cbf_value)/d(params) into grad.
void accumulate_cbf_grad(const CertificateModel& model, const LidarScan& scan, double coeff,
                         ModelGrad& grad);

/// Adds coeff * d(clf_value)/d(params) into grad.
void accumulate_clf_grad(const CertificateModel& model, double rho, double phi, double coeff,
                         ModelGrad& grad);

std::string model_to_json(const CertificateModel& model);
CertificateModel model_from_json(const std::string& text);
void save_model(const CertificateModel& model, const std::string& path);
CertificateModel load_model(const std::string& path);

}  // namespace ocnav
