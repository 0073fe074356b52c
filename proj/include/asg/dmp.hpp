#ifndef ASG_DMP_HPP
#define ASG_DMP_HPP

#include "asg/core.hpp"

#include <vector>

namespace asg {

/// Discrete dynamic movement primitive constants.
///
/// Transformation system per output dimension, with duration d:
///   d * dz/dt = alpha * (beta * (g - y) - z) + f(x)
///   d * dy/dt = z
/// Canonical system: d * dx/dt = -alpha_c * x, x(0) = 1.
/// Forcing term: f(x) = x * sum_i psi_i(x) w_i / sum_i psi_i(x) with Gaussian
/// basis psi_i(x) = exp(-h_i (x - c_i)^2).
struct DmpConfig {
    int n_basis = 5;
    double alpha = 25.0;
    double beta = 25.0 / 4.0;
    double alpha_c = 8.0;
    double dt = 1e-3;
    /// Integration horizon as a multiple of the duration.
    double horizon = 1.2;
    /// Lower bound applied when a duration is decoded from a raw parameter vector.
    double min_duration = 0.05;

    void validate() const {
        if (n_basis < 1) throw Error(Errc::invalid_params, "DMP needs at least one basis function");
        if (!(alpha > 0 && beta > 0 && alpha_c > 0))
            throw Error(Errc::invalid_params, "DMP gains must be positive");
        if (!(dt > 0 && dt <= 0.01)) throw Error(Errc::invalid_params, "DMP dt must be in (0, 0.01]");
        if (!(horizon >= 1.0)) throw Error(Errc::invalid_params, "DMP horizon must be >= 1");
    }

    /// Basis centres, spaced evenly in normalised time and mapped through the
    /// canonical system.
    Vector centers() const {
        Vector c(n_basis);
        for (int i = 0; i < n_basis; ++i) {
            double s = n_basis == 1 ? 0.0 : static_cast<double>(i) / (n_basis - 1);
            c[i] = std::exp(-alpha_c * s);
        }
        return c;
    }

    /// Widths chosen so neighbouring Gaussians cross at 0.5.
    Vector widths() const {
        Vector c = centers();
        Vector h(n_basis);
        if (n_basis == 1) {
            h[0] = 1.0;
            return h;
        }
        for (int i = 0; i < n_basis; ++i) {
            double gap = i + 1 < n_basis ? c[i] - c[i + 1] : c[i - 1] - c[i];
            h[i] = 4.0 * std::log(2.0) / (gap * gap);
        }
        return h;
    }

    /// Length of the flattened parameter vector: weights, goal offset, duration.
    int param_count() const { return 2 * n_basis + 3; }
};

struct DmpParams {
    Eigen::MatrixXd weights;  ///< 2 x n_basis
    Eigen::Vector2d goal = Eigen::Vector2d::Zero();
    double duration = 1.0;

    /// Decode the flat layout [w_x(n), w_y(n), goal_offset(2), duration] with the
    /// goal expressed relative to `anchor`.
    static DmpParams from_policy(const PolicyParams& theta, const Eigen::Vector2d& anchor,
                                 const DmpConfig& cfg) {
        require_dims(theta.size(), cfg.param_count(), "DMP parameter vector");
        if (!theta.all_finite()) throw Error(Errc::invalid_params, "non-finite DMP parameters");
        const int n = cfg.n_basis;
        DmpParams p;
        p.weights.resize(2, n);
        for (int i = 0; i < n; ++i) {
            p.weights(0, i) = theta[i];
            p.weights(1, i) = theta[n + i];
        }
        p.goal = anchor + Eigen::Vector2d(theta[2 * n], theta[2 * n + 1]);
        p.duration = std::max(theta[2 * n + 2], cfg.min_duration);
        return p;
    }

    PolicyParams to_policy(const Eigen::Vector2d& anchor) const {
        const auto n = weights.cols();
        Vector v(2 * n + 3);
        v.head(n) = weights.row(0).transpose();
        v.segment(n, n) = weights.row(1).transpose();
        v.segment(2 * n, 2) = goal - anchor;
        v[2 * n + 2] = duration;
        return PolicyParams(v);
    }
};

struct PathPoint {
    double t;
    Eigen::Vector2d pos;
    Eigen::Vector2d vel;
};

namespace detail {

struct DmpState {
    Eigen::Vector2d y;
    Eigen::Vector2d z;
    double x;
};

inline DmpState dmp_derivative(const DmpState& s, const DmpParams& p, const DmpConfig& cfg,
                               const Vector& c, const Vector& h) {
    Eigen::Vector2d f = Eigen::Vector2d::Zero();
    double psi_sum = 0.0;
    for (int i = 0; i < cfg.n_basis; ++i) {
        double psi = std::exp(-h[i] * (s.x - c[i]) * (s.x - c[i]));
        psi_sum += psi;
        f += psi * p.weights.col(i);
    }
    if (psi_sum > 1e-300) f *= s.x / psi_sum;
    else f.setZero();

    DmpState d;
    d.x = -cfg.alpha_c * s.x / p.duration;
    d.y = s.z / p.duration;
    d.z = (cfg.alpha * (cfg.beta * (p.goal - s.y) - s.z) + f) / p.duration;
    return d;
}

inline DmpState axpy(const DmpState& s, double a, const DmpState& d) {
    return {s.y + a * d.y, s.z + a * d.z, s.x + a * d.x};
}

} // namespace detail

/// Integrate the DMP from `start` at rest. RK4 with step `cfg.dt` over
/// `cfg.horizon * duration` seconds.
inline std::vector<PathPoint> execute_dmp(const DmpParams& params, const Eigen::Vector2d& start,
                                          const DmpConfig& cfg = {}) {
    cfg.validate();
    if (params.weights.rows() != 2 || params.weights.cols() != cfg.n_basis)
        throw Error(Errc::dimension_mismatch, "DMP weights must be 2 x n_basis");
    if (!(params.duration > 0)) throw Error(Errc::invalid_params, "DMP duration must be positive");
    if (!params.weights.allFinite() || !params.goal.allFinite() || !start.allFinite())
        throw Error(Errc::invalid_params, "non-finite DMP parameters");

    const Vector c = cfg.centers();
    const Vector h = cfg.widths();
    const double t_end = cfg.horizon * params.duration;
    const auto steps = static_cast<long>(std::ceil(t_end / cfg.dt - 1e-9));

    std::vector<PathPoint> path;
    path.reserve(static_cast<std::size_t>(steps) + 1);
    detail::DmpState s{start, Eigen::Vector2d::Zero(), 1.0};
    path.push_back({0.0, s.y, Eigen::Vector2d::Zero()});
    const double dt = cfg.dt;
    for (long k = 1; k <= steps; ++k) {
        auto k1 = detail::dmp_derivative(s, params, cfg, c, h);
        auto k2 = detail::dmp_derivative(detail::axpy(s, dt / 2, k1), params, cfg, c, h);
        auto k3 = detail::dmp_derivative(detail::axpy(s, dt / 2, k2), params, cfg, c, h);
        auto k4 = detail::dmp_derivative(detail::axpy(s, dt, k3), params, cfg, c, h);
        s.y += dt / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
        s.z += dt / 6 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
        s.x += dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        path.push_back({static_cast<double>(k) * dt, s.y, s.z / params.duration});
    }
    return path;
}

} // namespace asg

#endif
