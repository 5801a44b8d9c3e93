#include "ocnav/certificates.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ocnav {

CertificateModel CertificateModel::init(double d_c, double alpha_h, double alpha_V, int n_rays,
                                        std::uint64_t seed, int hidden) {
    CertificateModel m;
    Rng rng(seed);
    m.encoder = Mlp::init({2, hidden, hidden, hidden}, rng);
    m.barrier_head = Mlp::init({hidden, hidden, hidden, 1}, rng);
    m.lyapunov = Mlp::init({3, hidden, hidden, 1}, rng);
    m.d_c = d_c;
    m.alpha_h = alpha_h;
    m.alpha_V = alpha_V;
    m.n_rays = n_rays;
    m.seed = seed;
    return m;
}

CertificateModel CertificateModel::zeroed(double d_c, double alpha_h, double alpha_V, int n_rays,
                                          int hidden) {
    CertificateModel m;
    m.encoder = Mlp::zeros({2, hidden, hidden, hidden});
    m.barrier_head = Mlp::zeros({hidden, hidden, hidden, 1});
    m.lyapunov = Mlp::zeros({3, hidden, hidden, 1});
    m.d_c = d_c;
    m.alpha_h = alpha_h;
    m.alpha_V = alpha_V;
    m.n_rays = n_rays;
    return m;
}

namespace {

Eigen::MatrixXd scan_matrix(const LidarScan& scan) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(scan.size()), 2);
    for (std::size_t i = 0; i < scan.size(); ++i) {
        X(static_cast<Eigen::Index>(i), 0) = scan.points[i].x;
        X(static_cast<Eigen::Index>(i), 1) = scan.points[i].y;
    }
    return X;
}

}  // namespace

Eigen::VectorXd encode_with_argmax(const CertificateModel& model, const LidarScan& scan,
                                   std::vector<int>& argmax_rows) {
    if (scan.size() == 0) throw std::invalid_argument("encode: empty scan");
    const Eigen::MatrixXd E = model.encoder.forward_batch(scan_matrix(scan));
    const Eigen::Index d = E.cols();
    Eigen::VectorXd feat(d);
    argmax_rows.assign(static_cast<std::size_t>(d), 0);
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < E.rows(); ++i)
            if (E(i, j) > E(best, j)) best = i;
        feat[j] = E(best, j);
        argmax_rows[static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
    return feat;
}

Eigen::VectorXd encode(const CertificateModel& model, const LidarScan& scan) {
    std::vector<int> rows;
    return encode_with_argmax(model, scan, rows);
}

double cbf_value(const CertificateModel& model, const LidarScan& scan) {
    const Eigen::VectorXd feat = encode(model, scan);
    return model.barrier_head.forward(feat)[0] - min_range(scan) + model.d_c;
}

double clf_value(const CertificateModel& model, double rho, double phi) {
    Eigen::Vector3d in(rho, std::sin(phi), std::cos(phi));
    return model.lyapunov.forward(in)[0] + rho * rho + (1.0 - std::cos(phi)) / 2.0;
}

ModelGrad ModelGrad::zeros_like(const CertificateModel& model) {
    return {GradientTape::zeros_like(model.encoder), GradientTape::zeros_like(model.barrier_head),
            GradientTape::zeros_like(model.lyapunov)};
}

void ModelGrad::axpy(double a, const ModelGrad& other) {
    encoder.axpy(a, other.encoder);
    barrier_head.axpy(a, other.barrier_head);
    lyapunov.axpy(a, other.lyapunov);
}

void ModelGrad::scale(double a) {
    encoder.scale(a);
    barrier_head.scale(a);
    lyapunov.scale(a);
}

void accumulate_cbf_grad(const CertificateModel& model, const LidarScan& scan, double coeff,
                         ModelGrad& grad) {
    std::vector<int> argmax_rows;
    const Eigen::VectorXd feat = encode_with_argmax(model, scan, argmax_rows);

    Eigen::VectorXd dfeat;
    Eigen::VectorXd up1(1);
    up1[0] = coeff;
    GradientTape head_tape = backward(model.barrier_head, feat, up1, &dfeat);
    grad.barrier_head.axpy(1.0, head_tape);

    // Route the feature gradient to the argmax point of each coordinate.
    const Eigen::MatrixXd X = scan_matrix(scan);
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(X.rows(), dfeat.size());
    for (Eigen::Index j = 0; j < dfeat.size(); ++j)
        upstream(argmax_rows[static_cast<std::size_t>(j)], j) += dfeat[j];
    backward_batch_into(model.encoder, X, upstream, grad.encoder);
    // The -min_range + d_c prior carries no parameters.
}

void accumulate_clf_grad(const CertificateModel& model, double rho, double phi, double coeff,
                         ModelGrad& grad) {
    Eigen::Vector3d in(rho, std::sin(phi), std::cos(phi));
    Eigen::VectorXd up1(1);
    up1[0] = coeff;
    GradientTape tape = backward(model.lyapunov, in, up1);
    grad.lyapunov.axpy(1.0, tape);
}

std::string model_to_json(const CertificateModel& model) {
    nlohmann::json j;
    j["meta"] = {{"n_rays", model.n_rays}, {"d_c", model.d_c},     {"alpha_h", model.alpha_h},
                 {"alpha_V", model.alpha_V}, {"seed", model.seed}};
    j["encoder"] = nlohmann::json::parse(mlp_to_json(model.encoder));
    j["barrier_head"] = nlohmann::json::parse(mlp_to_json(model.barrier_head));
    j["lyapunov"] = nlohmann::json::parse(mlp_to_json(model.lyapunov));
    return j.dump();
}

CertificateModel model_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    CertificateModel m;
    m.n_rays = j.at("meta").at("n_rays");
    m.d_c = j.at("meta").at("d_c");
    m.alpha_h = j.at("meta").at("alpha_h");
    m.alpha_V = j.at("meta").at("alpha_V");
    m.seed = j.at("meta").at("seed");
    m.encoder = mlp_from_json_text(j.at("encoder").dump());
    m.barrier_head = mlp_from_json_text(j.at("barrier_head").dump());
    m.lyapunov = mlp_from_json_text(j.at("lyapunov").dump());
    return m;
}

void save_model(const CertificateModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << model_to_json(model) << "\n";
}

CertificateModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

}  // namespace ocnav
