#ifndef ASG_SEARCH_HPP
#define ASG_SEARCH_HPP

#include "asg/core.hpp"
#include "asg/envsim.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

namespace asg {

/// Gaussian sampling distribution over task space.
struct SearchDistribution {
    Vector mean;
    Matrix covariance;

    void validate() const {
        if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
            throw Error(Errc::dimension_mismatch, "covariance shape does not match mean");
        if (!mean.allFinite() || !covariance.allFinite())
            throw Error(Errc::numerical_error, "non-finite search distribution");
    }
};

struct SearchConfig {
    int samples_per_update = 10;  ///< K
    int elites = 10;              ///< K_e, CEM only
    double temperature = 10.0;    ///< h, PI2-CMA only
    double variance_floor = 1e-6;
    int max_updates = 100;
    double epsilon = 0.5;
    double step_scale = 1.0;  ///< ASG update multiplier
    /// Samples and ASG iterates are clipped into this box when set.
    std::optional<Box> bounds;

    void validate() const {
        if (samples_per_update < 1) throw Error(Errc::invalid_params, "K must be >= 1");
        if (elites < 1 || elites > samples_per_update)
            throw Error(Errc::invalid_params, "elite count must be in [1, K]");
        if (!(temperature > 0)) throw Error(Errc::invalid_params, "temperature must be positive");
        if (!(epsilon > 0)) throw Error(Errc::invalid_params, "epsilon must be positive");
        if (!(variance_floor > 0)) throw Error(Errc::invalid_params, "variance floor must be positive");
        if (max_updates < 0) throw Error(Errc::invalid_params, "max_updates must be >= 0");
    }
};

enum class Algorithm { pi2cma, cem };

inline const char* algorithm_name(Algorithm a) { return a == Algorithm::pi2cma ? "pi2cma" : "cem"; }

/// One environment rollout. `objective` is NaN for episodes that carry no
/// reward (ASG rounds); `error` is NaN when no measurement was available.
struct EpisodeRecord {
    long episode = 0;
    TaskParam tau;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double error = std::numeric_limits<double>::quiet_NaN();
    Vector mean_after;
};

struct SearchTrace {
    std::vector<EpisodeRecord> records;
    /// Error of the policy in force at each counted episode.
    std::vector<double> error_curve;
    long total_episodes = 0;
    long updates = 0;
    bool converged = false;
    TaskParam final_tau;
    double final_error = std::numeric_limits<double>::quiet_NaN();
};

struct StepResult {
    SearchDistribution dist;
    std::vector<EpisodeRecord> records;
};

using Objective = std::function<double(const TaskParam&)>;

inline constexpr double kObjectiveRangeEps = 1e-12;

/// PI2-style probability weights, exp(h (J - J_min) / (J_max - J_min + eps))
/// normalised to sum to one. Equal J gives uniform weights.
inline Vector pi2_weights(const std::vector<double>& J, double h) {
    if (J.empty()) throw Error(Errc::invalid_params, "no objective values");
    for (double j : J)
        if (!std::isfinite(j)) throw Error(Errc::numerical_error, "non-finite objective value");
    const auto [lo, hi] = std::minmax_element(J.begin(), J.end());
    const double range = *hi - *lo + kObjectiveRangeEps;
    Vector w(static_cast<Eigen::Index>(J.size()));
    for (std::size_t i = 0; i < J.size(); ++i)
        w[static_cast<Eigen::Index>(i)] = std::exp(h * (J[i] - *lo) / range - h);
    return w / w.sum();
}

/// Hard elite weights: the top K_e samples by J (ties broken by index) get 1/K_e.
inline Vector cem_weights(const std::vector<double>& J, int elites) {
    if (J.empty()) throw Error(Errc::invalid_params, "no objective values");
    for (double j : J)
        if (!std::isfinite(j)) throw Error(Errc::numerical_error, "non-finite objective value");
    std::vector<std::size_t> order(J.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return J[a] > J[b]; });
    Vector w = Vector::Zero(static_cast<Eigen::Index>(J.size()));
    const auto ke = std::min<std::size_t>(static_cast<std::size_t>(elites), J.size());
    for (std::size_t i = 0; i < ke; ++i) w[static_cast<Eigen::Index>(order[i])] = 1.0 / static_cast<double>(ke);
    return w;
}

/// Symmetrise and clamp every eigenvalue to at least `floor`.
inline Matrix floor_covariance(const Matrix& c, double floor) {
    Matrix sym = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw Error(Errc::numerical_error, "eigendecomposition failed");
    Vector ev = es.eigenvalues().cwiseMax(floor);
    Matrix out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

namespace detail {

inline std::vector<Vector> draw_samples(const SearchDistribution& dist, const SearchConfig& cfg, Rng& rng) {
    Eigen::LLT<Matrix> llt(dist.covariance);
    if (llt.info() != Eigen::Success) throw Error(Errc::numerical_error, "covariance not positive definite");
    const Matrix L = llt.matrixL();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(cfg.samples_per_update));
    for (int k = 0; k < cfg.samples_per_update; ++k) {
        Vector z(dist.mean.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
        Vector x = dist.mean + L * z;
        if (cfg.bounds) x = cfg.bounds->clip(x);
        out.push_back(std::move(x));
    }
    return out;
}

/// Shared reweighting: new mean is the weighted sample mean; new covariance is
/// the weighted scatter about the previous mean, floored.
inline StepResult reweight(const SearchDistribution& dist, const std::vector<Vector>& samples,
                           const std::vector<double>& J, const Vector& w, const SearchConfig& cfg,
                           long first_episode) {
    const Eigen::Index d = dist.mean.size();
    Vector mean = Vector::Zero(d);
    Matrix cov = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        mean += wi * samples[i];
        const Vector diff = samples[i] - dist.mean;
        cov += wi * diff * diff.transpose();
    }
    StepResult r{{mean, floor_covariance(cov, cfg.variance_floor)}, {}};
    r.records.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        EpisodeRecord rec;
        rec.episode = first_episode + static_cast<long>(i);
        rec.tau = TaskParam(samples[i]);
        rec.objective = J[i];
        rec.mean_after = mean;
        r.records.push_back(std::move(rec));
    }
    return r;
}

template <typename WeightFn>
StepResult search_step(const SearchDistribution& dist, const Objective& objective, const SearchConfig& cfg,
                       Rng& rng, long first_episode, WeightFn&& weights) {
    cfg.validate();
    dist.validate();
    std::vector<Vector> samples = draw_samples(dist, cfg, rng);
    std::vector<double> J;
    J.reserve(samples.size());
    for (const Vector& s : samples) {
        const double j = objective(TaskParam(s));
        if (!std::isfinite(j)) throw Error(Errc::numerical_error, "objective returned a non-finite value");
        J.push_back(j);
    }
    return reweight(dist, samples, J, weights(J), cfg, first_episode);
}

} // namespace detail

/// One PI2-CMA update: K samples, soft-max weights, probability-weighted mean
/// and covariance. Exactly K objective evaluations.
inline StepResult pi2cma_step(const SearchDistribution& dist, const Objective& objective,
                              const SearchConfig& cfg, Rng& rng, long first_episode = 0) {
    return detail::search_step(dist, objective, cfg, rng, first_episode,
                               [&](const std::vector<double>& J) { return pi2_weights(J, cfg.temperature); });
}

/// One CEM update with hard elite selection.
inline StepResult cem_step(const SearchDistribution& dist, const Objective& objective, const SearchConfig& cfg,
                           Rng& rng, long first_episode = 0) {
    return detail::search_step(dist, objective, cfg, rng, first_episode,
                               [&](const std::vector<double>& J) { return cem_weights(J, cfg.elites); });
}

/// Executes the skill at tau and returns the observed outcome in task space.
using OutcomeFn = std::function<TaskParam(const TaskParam&)>;

/// Initial covariance diag((fraction * width)^2) over the task box.
inline Matrix default_initial_covariance(const Box& t, double fraction = 0.25) {
    if (!(fraction > 0)) throw Error(Errc::invalid_params, "initial spread fraction must be positive");
    Vector sd = t.width() * fraction;
    return sd.cwiseProduct(sd).asDiagonal();
}

/// Reward-driven search. The mean is checked against the target before every
/// update (not counted as an episode); each sampled tau costs one episode.
inline SearchTrace run_reward_search(const OutcomeFn& outcome, const TaskParam& target, const SearchConfig& cfg,
                                     Algorithm algorithm, Rng& rng, const TaskParam& tau0,
                                     const Matrix& initial_covariance) {
    cfg.validate();
    require_dims(tau0.size(), target.size(), "initial task parameter");
    SearchDistribution dist{tau0.values, initial_covariance};
    const Objective objective = [&](const TaskParam& tau) { return -task_error(outcome(tau), target); };

    SearchTrace trace;
    for (int u = 0;; ++u) {
        const double err = task_error(outcome(TaskParam(dist.mean)), target);
        trace.final_tau = TaskParam(dist.mean);
        trace.final_error = err;
        if (err < cfg.epsilon) {
            trace.converged = true;
            break;
        }
        if (u == cfg.max_updates) break;
        StepResult step = algorithm == Algorithm::pi2cma
                              ? pi2cma_step(dist, objective, cfg, rng, trace.total_episodes)
                              : cem_step(dist, objective, cfg, rng, trace.total_episodes);
        for (auto& rec : step.records) {
            rec.error = -rec.objective;
            trace.error_curve.push_back(err);
            trace.records.push_back(std::move(rec));
        }
        trace.total_episodes += cfg.samples_per_update;
        trace.updates += 1;
        dist = std::move(step.dist);
    }
    return trace;
}

using RolloutFn = std::function<Trajectory(const TaskParam&)>;
/// Lambda(l, tau): the learned adjustment for feedback l at tau.
using GroundingFn = std::function<Vector(const TaskParam&, const AdverbEmbedding&)>;
/// Produces adverb feedback for the latest execution.
using FeedbackFn = std::function<AdverbEmbedding(const Trajectory&)>;
/// Experimenter-side error measurement; never fed back into the update.
using ErrorProbe = std::function<double(const Trajectory&)>;

/// Reward-free refinement: roll out, ask for feedback, apply
/// tau <- clip(tau + step_scale * Lambda(l, tau)). Stops on the zero phrase,
/// when the probe reports error below epsilon, or after max_updates rounds.
/// Without a probe, the zero phrase counts as convergence.
inline SearchTrace run_asg_search(const RolloutFn& rollout, const GroundingFn& grounding,
                                  const FeedbackFn& feedback, const SearchConfig& cfg, const TaskParam& tau0,
                                  const ErrorProbe& probe = {}) {
    cfg.validate();
    SearchTrace trace;
    TaskParam tau = tau0;
    const int max_rounds = std::max(cfg.max_updates, 1);
    for (int round = 0; round < max_rounds; ++round) {
        const Trajectory traj = rollout(tau);
        trace.total_episodes += 1;
        EpisodeRecord rec;
        rec.episode = round;
        rec.tau = tau;
        if (probe) rec.error = probe(traj);
        trace.final_tau = tau;
        trace.final_error = rec.error;
        trace.error_curve.push_back(rec.error);

        if (probe && rec.error < cfg.epsilon) {
            rec.mean_after = tau.values;
            trace.records.push_back(std::move(rec));
            trace.converged = true;
            break;
        }
        const AdverbEmbedding l = feedback(traj);
        if (l.values.isZero(0.0)) {
            rec.mean_after = tau.values;
            trace.records.push_back(std::move(rec));
            trace.converged = !probe;
            break;
        }
        const Vector delta = grounding(tau, l);
        require_dims(delta.size(), tau.size(), "grounding output");
        if (!delta.allFinite()) throw Error(Errc::numerical_error, "grounding produced a non-finite step");
        Vector next = tau.values + cfg.step_scale * delta;
        if (cfg.bounds) next = cfg.bounds->clip(next);
        tau = TaskParam(next);
        rec.mean_after = next;
        trace.records.push_back(std::move(rec));
        trace.updates += 1;
    }
    return trace;
}

/// CSV: episode,error,mean_0..mean_{d-1}
inline void write_trace_csv(std::ostream& out, const SearchTrace& trace) {
    const Eigen::Index d = trace.records.empty() ? 0 : trace.records.front().mean_after.size();
    out << "episode,error";
    for (Eigen::Index i = 0; i < d; ++i) out << ",mean_" << i;
    out << '\n';
    char buf[64];
    for (const auto& r : trace.records) {
        out << r.episode;
        std::snprintf(buf, sizeof buf, ",%.9g", r.error);
        out << buf;
        for (Eigen::Index i = 0; i < r.mean_after.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.9g", r.mean_after[i]);
            out << buf;
        }
        out << '\n';
    }
}

} // namespace asg

#endif
