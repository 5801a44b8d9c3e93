#include "ocnav/nn.hpp"

#include <stdexcept>

#include <json.hpp>

namespace ocnav {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Mlp Mlp::init(const std::vector<int>& dims, Rng& rng) {
    check(dims.size() >= 2, "Mlp::init: need at least one layer");
    Mlp net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MlpLayer layer;
        layer.W.resize(dims[l + 1], dims[l]);
        const double limit = std::sqrt(6.0 / dims[l]);
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = rng.symmetric(limit);
        layer.b = Eigen::VectorXd::Zero(dims[l + 1]);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Mlp Mlp::zeros(const std::vector<int>& dims) {
    check(dims.size() >= 2, "Mlp::zeros: need at least one layer");
    Mlp net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        net.layers.push_back({Eigen::MatrixXd::Zero(dims[l + 1], dims[l]),
                              Eigen::VectorXd::Zero(dims[l + 1])});
    }
    return net;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
    check(x.size() == input_dim(), "Mlp::forward: input dimension mismatch");
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        a = (layers[l].W * a + layers[l].b).eval();
        if (l + 1 < layers.size()) a = a.cwiseMax(0.0);
    }
    return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& X) const {
    check(X.cols() == input_dim(), "Mlp::forward_batch: input dimension mismatch");
    // Row-by-row matvec, not one GEMM: keeps each row bit-identical to
    // forward() regardless of its position in the batch, which the
    // permutation-invariance contract of the scan encoder relies on.
    Eigen::MatrixXd A(X.rows(), output_dim());
    Eigen::VectorXd a;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        a = X.row(r).transpose();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            a = (layers[l].W * a + layers[l].b).eval();
            if (l + 1 < layers.size()) a = a.cwiseMax(0.0);
        }
        A.row(r) = a.transpose();
    }
    return A;
}

GradientTape GradientTape::zeros_like(const Mlp& net) {
    GradientTape tape;
    for (const auto& layer : net.layers) {
        tape.grads.push_back({Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()),
                              Eigen::VectorXd::Zero(layer.b.size())});
    }
    return tape;
}

void GradientTape::axpy(double a, const GradientTape& other) {
    for (std::size_t l = 0; l < grads.size(); ++l) {
        grads[l].W += a * other.grads[l].W;
        grads[l].b += a * other.grads[l].b;
    }
}

void GradientTape::scale(double a) {
    for (auto& g : grads) {
        g.W *= a;
        g.b *= a;
    }
}

double GradientTape::squared_norm() const {
    double s = 0.0;
    for (const auto& g : grads) s += g.W.squaredNorm() + g.b.squaredNorm();
    return s;
}

GradientTape backward(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& upstream,
                      Eigen::VectorXd* dx) {
    Eigen::MatrixXd dX;
    GradientTape tape = backward_batch(net, x.transpose(), upstream.transpose(), dx ? &dX : nullptr);
    if (dx) *dx = dX.row(0).transpose();
    return tape;
}

GradientTape backward_batch(const Mlp& net, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& upstream, Eigen::MatrixXd* dX) {
    GradientTape tape = GradientTape::zeros_like(net);
    backward_batch_into(net, X, upstream, tape, dX);
    return tape;
}

void backward_batch_into(const Mlp& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& upstream,
                         GradientTape& tape, Eigen::MatrixXd* dX) {
    check(X.cols() == net.input_dim(), "backward: input dimension mismatch");
    check(upstream.cols() == net.output_dim() && upstream.rows() == X.rows(),
          "backward: upstream dimension mismatch");
    const std::size_t L = net.layers.size();

    // Forward pass keeping post-activation values per layer, row-by-row so
    // the activations (and rectifier masks) match forward()/forward_batch()
    // exactly.
    std::vector<Eigen::MatrixXd> acts(L + 1);
    acts[0] = X;
    for (std::size_t l = 0; l < L; ++l) {
        acts[l + 1].resize(X.rows(), net.layers[l].W.rows());
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            Eigen::VectorXd a = net.layers[l].W * acts[l].row(r).transpose() + net.layers[l].b;
            if (l + 1 < L) a = a.cwiseMax(0.0);
            acts[l + 1].row(r) = a.transpose();
        }
    }

    Eigen::MatrixXd delta = upstream;
    for (std::size_t l = L; l-- > 0;) {
        tape.grads[l].W.noalias() += delta.transpose() * acts[l];
        tape.grads[l].b += delta.colwise().sum().transpose();
        if (l > 0 || dX) {
            Eigen::MatrixXd prev = delta * net.layers[l].W;
            if (l > 0) {
                // relu' via the stored post-activation (positive iff active)
                prev = prev.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
            }
            delta = std::move(prev);
        }
    }
    if (dX) *dX = delta;
}

void sgd_step(Mlp& net, const GradientTape& tape, double lr, double l2) {
    check(tape.grads.size() == net.layers.size(), "sgd_step: tape shape mismatch");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        net.layers[l].W -= lr * (tape.grads[l].W + l2 * net.layers[l].W);
        net.layers[l].b -= lr * (tape.grads[l].b + l2 * net.layers[l].b);
    }
}

Eigen::VectorXd flatten_parameters(const Mlp& net) {
    Eigen::Index n = 0;
    for (const auto& l : net.layers) n += l.W.size() + l.b.size();
    Eigen::VectorXd flat(n);
    Eigen::Index at = 0;
    for (const auto& l : net.layers) {
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
            for (Eigen::Index j = 0; j < l.W.cols(); ++j) flat[at++] = l.W(i, j);
        for (Eigen::Index i = 0; i < l.b.size(); ++i) flat[at++] = l.b[i];
    }
    return flat;
}

void set_parameters(Mlp& net, const Eigen::VectorXd& flat) {
    Eigen::Index at = 0;
    for (auto& l : net.layers) {
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
            for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = flat[at++];
        for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = flat[at++];
    }
    check(at == flat.size(), "set_parameters: size mismatch");
}

std::string mlp_to_json(const Mlp& net) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& l : net.layers) {
        nlohmann::json layer;
        layer["rows"] = l.W.rows();
        layer["cols"] = l.W.cols();
        std::vector<double> w(static_cast<std::size_t>(l.W.size()));
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
            for (Eigen::Index k = 0; k < l.W.cols(); ++k)
                w[static_cast<std::size_t>(i * l.W.cols() + k)] = l.W(i, k);  // row-major
        layer["weights"] = w;
        layer["biases"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
        j.push_back(layer);
    }
    return j.dump();
}

Mlp mlp_from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Mlp net;
    for (const auto& layer : j) {
        const Eigen::Index rows = layer.at("rows");
        const Eigen::Index cols = layer.at("cols");
        MlpLayer l;
        l.W.resize(rows, cols);
        const auto& w = layer.at("weights");
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index k = 0; k < cols; ++k)
                l.W(i, k) = w.at(static_cast<std::size_t>(i * cols + k));
        const auto& b = layer.at("biases");
        l.b.resize(rows);
        for (Eigen::Index i = 0; i < rows; ++i) l.b[i] = b.at(static_cast<std::size_t>(i));
        net.layers.push_back(std::move(l));
    }
    return net;
}

}  // namespace ocnav
