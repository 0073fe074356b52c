#ifndef ASG_MLP_HPP
#define ASG_MLP_HPP

#include "asg/core.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace asg {

/// Fully connected network: tanh hidden layers, linear output.
/// Layer l maps a_{l-1} to W_l a_{l-1} + b_l; samples are columns.
struct MlpParams {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    std::size_t layers() const { return weights.size(); }

    std::vector<int> layer_sizes() const {
        std::vector<int> s;
        if (weights.empty()) return s;
        s.push_back(static_cast<int>(weights.front().cols()));
        for (const auto& w : weights) s.push_back(static_cast<int>(w.rows()));
        return s;
    }

    void validate() const {
        if (weights.empty() || weights.size() != biases.size())
            throw Error(Errc::invalid_params, "MLP needs matching weight and bias lists");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (biases[l].size() != weights[l].rows())
                throw Error(Errc::dimension_mismatch, "bias size does not match layer output");
            if (l > 0 && weights[l].cols() != weights[l - 1].rows())
                throw Error(Errc::dimension_mismatch, "consecutive layer dimensions disagree");
            if (!weights[l].allFinite() || !biases[l].allFinite())
                throw Error(Errc::numerical_error, "non-finite MLP parameters");
        }
    }

    /// Zero-valued parameters with the same shapes.
    MlpParams zeros_like() const {
        MlpParams z;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            z.weights.push_back(Matrix::Zero(weights[l].rows(), weights[l].cols()));
            z.biases.push_back(Vector::Zero(biases[l].size()));
        }
        return z;
    }

    /// Glorot-uniform weights, zero biases.
    static MlpParams init(const std::vector<int>& sizes, Rng& rng) {
        if (sizes.size() < 2) throw Error(Errc::invalid_params, "MLP needs input and output sizes");
        MlpParams p;
        for (std::size_t l = 1; l < sizes.size(); ++l) {
            if (sizes[l] < 1 || sizes[l - 1] < 1) throw Error(Errc::invalid_params, "layer sizes must be positive");
            const double limit = std::sqrt(6.0 / (sizes[l] + sizes[l - 1]));
            std::uniform_real_distribution<double> u(-limit, limit);
            Matrix w(sizes[l], sizes[l - 1]);
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
            p.weights.push_back(std::move(w));
            p.biases.push_back(Vector::Zero(sizes[l]));
        }
        return p;
    }
};

namespace detail {

/// Forward pass keeping every layer activation; acts[0] is the input.
inline std::vector<Matrix> mlp_activations(const MlpParams& p, const Matrix& x) {
    std::vector<Matrix> acts;
    acts.reserve(p.layers() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < p.layers(); ++l) {
        Matrix z = (p.weights[l] * acts.back()).colwise() + p.biases[l];
        if (l + 1 < p.layers()) z = z.array().tanh().matrix();
        acts.push_back(std::move(z));
    }
    return acts;
}

} // namespace detail

inline Matrix mlp_forward(const MlpParams& p, const Matrix& x) {
    if (p.weights.empty()) throw Error(Errc::invalid_params, "empty MLP");
    require_dims(x.rows(), p.weights.front().cols(), "MLP input");
    return detail::mlp_activations(p, x).back();
}

/// Mean over samples of the squared prediction error summed over outputs.
inline double mse_loss(const MlpParams& p, const Matrix& x, const Matrix& y) {
    const Matrix r = mlp_forward(p, x) - y;
    return r.squaredNorm() / static_cast<double>(x.cols());
}

/// Exact gradient of mse_loss with respect to every weight and bias.
inline MlpParams backprop_gradient(const MlpParams& p, const Matrix& x, const Matrix& y) {
    if (x.cols() == 0) throw Error(Errc::insufficient_data, "empty batch");
    require_dims(y.cols(), x.cols(), "MLP target batch");
    const auto acts = detail::mlp_activations(p, x);
    require_dims(y.rows(), acts.back().rows(), "MLP target");

    MlpParams g = p.zeros_like();
    Matrix delta = (acts.back() - y) * (2.0 / static_cast<double>(x.cols()));
    for (std::size_t l = p.layers(); l-- > 0;) {
        g.weights[l] = delta * acts[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Matrix back = p.weights[l].transpose() * delta;
            delta = back.array() * (1.0 - acts[l].array().square());
        }
    }
    return g;
}

struct MlpHyper {
    std::vector<int> hidden{32, 32};
    double learning_rate = 0.01;
    int epochs = 3000;
    int batch_size = 8;
    double weight_decay = 1e-4;  ///< L2 penalty on weights, added to the gradient
    std::uint64_t seed = 1;
};

/// Mini-batch gradient descent with Adam moment estimates. Deterministic for a
/// given seed. `loss_history[e]` is the full-set loss before epoch e; the
/// last entry is the loss after training.
inline MlpParams fit_mlp(const Matrix& x, const Matrix& y, const MlpHyper& hyper,
                         std::vector<double>* loss_history = nullptr) {
    if (x.cols() == 0) throw Error(Errc::insufficient_data, "no training samples");
    require_dims(y.cols(), x.cols(), "MLP targets");
    if (hyper.batch_size < 1 || hyper.epochs < 0 || !(hyper.learning_rate > 0) || hyper.weight_decay < 0)
        throw Error(Errc::invalid_params, "invalid MLP hyperparameters");

    Rng rng(hyper.seed);
    std::vector<int> sizes{static_cast<int>(x.rows())};
    sizes.insert(sizes.end(), hyper.hidden.begin(), hyper.hidden.end());
    sizes.push_back(static_cast<int>(y.rows()));
    MlpParams p = MlpParams::init(sizes, rng);

    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    MlpParams m = p.zeros_like();
    MlpParams v = p.zeros_like();
    long step = 0;

    const auto n = static_cast<std::size_t>(x.cols());
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    auto check = [](double loss) {
        if (!std::isfinite(loss)) throw Error(Errc::divergence, "training loss became non-finite");
        return loss;
    };
    if (loss_history) loss_history->push_back(check(mse_loss(p, x, y)));

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hyper.batch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(hyper.batch_size));
            const auto bn = static_cast<Eigen::Index>(end - start);
            Matrix xb(x.rows(), bn), yb(y.rows(), bn);
            for (Eigen::Index j = 0; j < bn; ++j) {
                xb.col(j) = x.col(order[start + static_cast<std::size_t>(j)]);
                yb.col(j) = y.col(order[start + static_cast<std::size_t>(j)]);
            }
            MlpParams g = backprop_gradient(p, xb, yb);
            if (hyper.weight_decay > 0)
                for (std::size_t l = 0; l < p.layers(); ++l) g.weights[l] += hyper.weight_decay * p.weights[l];
            ++step;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
            auto adam = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
                mom = b1 * mom + (1 - b1) * grad;
                vel = b2 * vel + (1 - b2) * grad.cwiseProduct(grad);
                param.array() -= hyper.learning_rate * (mom.array() / c1) / ((vel.array() / c2).sqrt() + eps);
            };
            for (std::size_t l = 0; l < p.layers(); ++l) {
                adam(p.weights[l], m.weights[l], v.weights[l], g.weights[l]);
                adam(p.biases[l], m.biases[l], v.biases[l], g.biases[l]);
            }
        }
        if (loss_history) loss_history->push_back(check(mse_loss(p, x, y)));
        else if (epoch + 1 == hyper.epochs) check(mse_loss(p, x, y));
    }
    return p;
}

} // namespace asg

#endif
