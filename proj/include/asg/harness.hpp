#ifndef ASG_HARNESS_HPP
#define ASG_HARNESS_HPP

#include "asg/dataset.hpp"
#include "asg/model.hpp"
#include "asg/search.hpp"
#include "asg/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace asg {

enum class TaskKind { ball_throw, puck_slide };

inline TaskKind parse_task_kind(const std::string& s) {
    if (s == "ball_throw") return TaskKind::ball_throw;
    if (s == "puck_slide") return TaskKind::puck_slide;
    throw Error(Errc::config_error, "task must be 'ball_throw' or 'puck_slide', got '" + s + "'");
}

/// Seed streams derived from the experiment seed.
namespace streams {
inline constexpr std::uint64_t dataset = 1;
inline constexpr std::uint64_t training = 2;
inline constexpr std::uint64_t trials = 3;
inline constexpr std::uint64_t pretrain = 4;
} // namespace streams

struct PretrainConfig {
    int goals = 100;
    int k = 3;
    double min_success = 0.8;
    /// Initial search sd for forcing weights, goal offset and duration.
    double weight_sd = 2.0;
    double goal_sd = 0.02;
    double duration_sd = 0.02;
    SearchConfig search = default_search();

    static SearchConfig default_search() {
        SearchConfig c;
        c.samples_per_update = 10;
        c.elites = 10;
        c.temperature = 10.0;
        c.epsilon = 0.02;
        c.max_updates = 60;
        return c;
    }
};

struct ExperimentConfig {
    TaskKind task = TaskKind::ball_throw;
    std::uint64_t seed = 1;
    int trials = 100;
    std::size_t dataset_size = 30;
    double zero_augmentation = 0.2;
    double target_interior = 0.8;
    double initial_spread = 0.15;  ///< reward-search initial sd as a fraction of the task-box width
    RegressorKind regressor = RegressorKind::mlp;
    MlpHyper mlp;
    KrrHyper krr;
    int knn_k = 3;
    Algorithm algorithm = Algorithm::pi2cma;
    SearchConfig search;
    unsigned workers = 1;
    PretrainConfig pretrain;
    std::string skill_file;
    KeyValueConfig raw;

    void validate() const {
        if (trials < 1) throw Error(Errc::config_error, "trials must be >= 1");
        if (dataset_size < 10) throw Error(Errc::config_error, "dataset_size must be >= 10");
        if (!(target_interior > 0 && target_interior <= 1))
            throw Error(Errc::config_error, "target_interior must be in (0, 1]");
        search.validate();
    }

    /// Defaults per task, then overridden by any keys present in `kv`.
    static ExperimentConfig from_config(const KeyValueConfig& kv) {
        ExperimentConfig c;
        c.raw = kv;
        c.task = parse_task_kind(kv.get_string("task", "ball_throw"));
        const bool ball = c.task == TaskKind::ball_throw;
        c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
        c.trials = static_cast<int>(kv.get_int("trials", ball ? 100 : 18));
        c.dataset_size = static_cast<std::size_t>(kv.get_int("dataset_size", ball ? 30 : 50));
        c.zero_augmentation = kv.get_double("zero_augmentation", c.zero_augmentation);
        c.target_interior = kv.get_double("target_interior", c.target_interior);
        c.initial_spread = kv.get_double("initial_spread", ball ? 0.15 : 0.25);
        c.regressor = parse_regressor(kv.get_string("regressor", ball ? "mlp" : "krr"));

        std::vector<double> hidden = kv.get_list("mlp_hidden", {32, 32});
        c.mlp.hidden.assign(hidden.begin(), hidden.end());
        c.mlp.learning_rate = kv.get_double("mlp_learning_rate", c.mlp.learning_rate);
        c.mlp.epochs = static_cast<int>(kv.get_int("mlp_epochs", c.mlp.epochs));
        c.mlp.batch_size = static_cast<int>(kv.get_int("mlp_batch_size", c.mlp.batch_size));
        c.mlp.weight_decay = kv.get_double("mlp_weight_decay", c.mlp.weight_decay);
        c.krr.width = kv.get_double("krr_width", ball ? 1.0 : 2.0);
        c.krr.ridge = kv.get_double("krr_ridge", ball ? 1e-2 : 5e-2);
        c.knn_k = static_cast<int>(kv.get_int("knn_k", c.knn_k));

        const std::string alg = kv.get_string("algorithm", "pi2cma");
        if (alg == "pi2cma") c.algorithm = Algorithm::pi2cma;
        else if (alg == "cem") c.algorithm = Algorithm::cem;
        else throw Error(Errc::config_error, "algorithm must be 'pi2cma' or 'cem'");

        c.workers = static_cast<unsigned>(kv.get_int("workers", 1));
        c.skill_file = kv.get_string("skill_file", "");
        c.pretrain.goals = static_cast<int>(kv.get_int("pretrain_goals", c.pretrain.goals));
        c.pretrain.k = static_cast<int>(kv.get_int("skill_k", c.pretrain.k));
        c.pretrain.search.epsilon = kv.get_double("pretrain_epsilon", c.pretrain.search.epsilon);
        c.pretrain.search.max_updates =
            static_cast<int>(kv.get_int("pretrain_max_updates", c.pretrain.search.max_updates));
        return c;
    }

    /// Task defaults with this config's search overrides applied.
    SearchConfig search_for(const Task& task) const {
        SearchConfig s = task.default_search();
        s.samples_per_update = static_cast<int>(raw.get_int("samples_per_update", s.samples_per_update));
        s.elites = static_cast<int>(raw.get_int("elites", s.elites));
        s.temperature = raw.get_double("temperature", s.temperature);
        s.epsilon = raw.get_double("epsilon", s.epsilon);
        s.max_updates = static_cast<int>(raw.get_int("max_updates", s.max_updates));
        s.variance_floor = raw.get_double("variance_floor", s.variance_floor);
        s.step_scale = raw.get_double("step_scale", s.step_scale);
        s.validate();
        return s;
    }
};

/// Bounded worker pool over [0, n); results must be written by index.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline AsgModel train_model(const ExperimentConfig& cfg, const std::vector<AsgSample>& data, const ModelContext& ctx,
                            std::vector<double>* loss_history = nullptr) {
    switch (cfg.regressor) {
    case RegressorKind::mlp: {
        MlpHyper h = cfg.mlp;
        h.seed = mix_seed(cfg.seed, streams::training);
        return train_mlp(data, h, ctx, loss_history);
    }
    case RegressorKind::knn: return train_knn(data, cfg.knn_k, ctx);
    case RegressorKind::krr: return train_krr(data, cfg.krr, ctx);
    }
    throw Error(Errc::config_error, "unknown regressor");
}

// ---------------------------------------------------------------------------
// Puck skill pre-training

/// Straight-line strike whose first contact has its normal along the
/// puck-to-goal direction and whose normal speed slides the puck onto the
/// goal. Zero forcing weights.
inline PolicyParams initial_strike(const PuckSlideEnv& env, const Eigen::Vector2d& goal, double overshoot = 0.15) {
    const Eigen::Vector2d to_goal = goal - env.puck_start;
    const double dist = to_goal.norm();
    const Eigen::Vector2d dir = dist > 0 ? Eigen::Vector2d(to_goal / dist) : Eigen::Vector2d(1, 0);
    const Eigen::Vector2d contact = env.puck_start - env.contact_radius * dir;
    const Eigen::Vector2d approach = contact - env.pusher_start;
    const Eigen::Vector2d u = approach.normalized();
    const double cosine = std::max(u.dot(dir), 0.2);
    const double v_needed = std::sqrt(2.0 * env.deceleration() * dist) / cosine;

    const Eigen::Vector2d goal_point = contact + overshoot * u;
    const double travel = approach.norm() + overshoot;
    const double frac = approach.norm() / travel;

    // Unforced critically damped DMP: fraction covered by phase s is
    // 1 - (1 + w s) e^{-w s}, speed is travel * w^2 s e^{-w s} / duration.
    const double w = 0.5 * env.dmp.alpha;
    double lo = 0.0, hi = 5.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (1.0 - (1.0 + w * mid) * std::exp(-w * mid) < frac ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    const double duration =
        std::max(env.dmp.min_duration, travel * w * w * s * std::exp(-w * s) / std::max(v_needed, 1e-6));

    DmpParams p;
    p.weights = Eigen::MatrixXd::Zero(2, env.dmp.n_basis);
    p.goal = goal_point;
    p.duration = duration;
    return p.to_policy(env.puck_start);
}

struct PretrainReport {
    KnnSkill skill;
    int attempted = 0;
    int succeeded = 0;
    bool degenerate = false;
    std::vector<TaskParam> failed_goals;
    std::vector<TaskParam> excluded_goals;
    std::vector<std::string> warnings;
    long episodes = 0;
};

/// Optimise DMP parameters per goal with PI2-CMA, keep the converged strikes,
/// and fit a KNN skill mapping achieved puck positions to parameters.
/// Fails unless at least `min_success` of the reachable goals converge.
inline PretrainReport pretrain_puck_skill(const PuckSlideEnv& env, const std::vector<TaskParam>& goals,
                                          const PretrainConfig& cfg, std::uint64_t seed) {
    env.validate();
    PretrainReport rep;
    std::vector<KnnExemplar> exemplars;
    const int dim = env.dmp.param_count();
    const int n = env.dmp.n_basis;
    Vector sd(dim);
    sd.head(2 * n).setConstant(cfg.weight_sd);
    sd.segment(2 * n, 2).setConstant(cfg.goal_sd);
    sd[2 * n + 2] = cfg.duration_sd;
    const Matrix cov0 = sd.cwiseProduct(sd).asDiagonal();

    for (std::size_t gi = 0; gi < goals.size(); ++gi) {
        const TaskParam& goal = goals[gi];
        require_dims(goal.size(), 2, "pretraining goal");
        const Eigen::Vector2d g(goal[0], goal[1]);
        if (!env.table_bounds.contains(g)) {
            rep.excluded_goals.push_back(goal);
            rep.warnings.push_back("goal (" + std::to_string(g.x()) + ", " + std::to_string(g.y()) +
                                   ") is off the table; excluded");
            continue;
        }
        ++rep.attempted;
        Rng rng(mix_seed(seed, gi));
        const Objective objective = [&](const TaskParam& theta) {
            return -task_error(rollout_puck(env, PolicyParams(theta.values)).terminal, goal);
        };
        SearchDistribution dist{initial_strike(env, g).values, cov0};
        bool ok = false;
        Vector best = dist.mean;
        for (int u = 0; u <= cfg.search.max_updates; ++u) {
            const double err = -objective(TaskParam(dist.mean));
            if (err < cfg.search.epsilon) {
                ok = true;
                best = dist.mean;
                break;
            }
            if (u == cfg.search.max_updates) break;
            dist = pi2cma_step(dist, objective, cfg.search, rng).dist;
            rep.episodes += cfg.search.samples_per_update;
        }
        if (!ok) {
            rep.failed_goals.push_back(goal);
            continue;
        }
        const PolicyParams theta(best);
        const TaskParam reached = rollout_puck(env, theta).terminal;
        bool duplicate = false;
        for (const auto& e : exemplars) duplicate = duplicate || e.tau == reached;
        if (!duplicate) exemplars.push_back({reached, theta});
        ++rep.succeeded;
    }
    if (rep.attempted == 0) throw Error(Errc::insufficient_data, "no reachable pretraining goals");
    if (static_cast<double>(rep.succeeded) < cfg.min_success * rep.attempted)
        throw Error(Errc::insufficient_data, "only " + std::to_string(rep.succeeded) + " of " +
                                                 std::to_string(rep.attempted) + " pretraining goals converged");
    const int k = std::min<int>(cfg.k, static_cast<int>(exemplars.size()));
    rep.degenerate = exemplars.size() < 2 || k < cfg.k;
    if (rep.degenerate) rep.warnings.push_back("skill is degenerate: too few exemplars for k neighbours");
    rep.skill = fit_knn_skill(std::move(exemplars), k);
    return rep;
}

inline std::vector<TaskParam> sample_goals(const Box& region, int count, Rng& rng) {
    std::vector<TaskParam> goals;
    for (int i = 0; i < count; ++i) goals.emplace_back(region.sample(rng));
    return goals;
}

/// Goals drawn uniformly from the goal region on the pretraining seed stream.
inline PretrainReport pretrain_from_config(const ExperimentConfig& cfg, const PuckSlideEnv& env) {
    if (cfg.pretrain.goals < 1) throw Error(Errc::config_error, "pretrain_goals must be >= 1");
    Rng rng(mix_seed(cfg.seed, streams::pretrain));
    const auto goals = sample_goals(env.goal_region.box(), cfg.pretrain.goals, rng);
    return pretrain_puck_skill(env, goals, cfg.pretrain, mix_seed(cfg.seed, streams::pretrain + 100));
}

/// Task described by the config. Puck tasks need a fitted skill.
inline std::unique_ptr<Task> make_task(const ExperimentConfig& cfg, const KnnSkill* skill = nullptr) {
    if (cfg.task == TaskKind::ball_throw) return BallThrowTask::from_config(cfg.raw);
    if (!skill) throw Error(Errc::empty_skill, "puck_slide needs a skill; set skill_file or run pretrain-skill");
    return std::make_unique<PuckSlideTask>(PuckSlideEnv::from_config(cfg.raw), *skill);
}

/// Everything `compare` builds before the trials run.
struct Pipeline {
    std::optional<PretrainReport> pretrain;  ///< set when the puck skill was fitted here
    std::unique_ptr<Task> task;
    Dataset data;
    AsgModel model;
};

/// Skill (loaded from skill_file or pretrained), dataset and trained model.
inline Pipeline build_pipeline(const ExperimentConfig& cfg) {
    Pipeline p;
    std::optional<KnnSkill> skill;
    if (cfg.task == TaskKind::puck_slide) {
        if (cfg.skill_file.empty()) {
            p.pretrain = pretrain_from_config(cfg, PuckSlideEnv::from_config(cfg.raw));
            skill = p.pretrain->skill;
        } else {
            skill = load_knn_skill(cfg.skill_file);
        }
    }
    p.task = make_task(cfg, skill ? &*skill : nullptr);
    Rng rng(mix_seed(cfg.seed, streams::dataset));
    p.data = gen_dataset(*p.task, cfg.dataset_size, rng, cfg.zero_augmentation);
    p.model = train_model(cfg, p.data.samples, p.task->context());
    return p;
}

// ---------------------------------------------------------------------------
// Comparison

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    std::string algorithm;
    long episodes = 0;  ///< episodes consumed; equals episodes to converge when converged
    bool converged = false;
    double final_error = 0.0;
    std::vector<double> error_curve;
};

struct AlgorithmSummary {
    std::string algorithm;
    int trials = 0;
    int converged = 0;
    double mean_converged = 0.0;  ///< over converged trials only
    double mean_imputed = 0.0;    ///< non-converged trials count as the episode cap
    double median_imputed = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    long episode_cap = 0;
};

struct ComparisonResult {
    std::string task;
    double epsilon = 0.0;
    std::vector<TrialResult> asg;
    std::vector<TrialResult> reward;
    AlgorithmSummary asg_summary;
    AlgorithmSummary reward_summary;
    /// Reward-search episodes per ASG episode: ratio of imputed means.
    double adverb_worth = 0.0;
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace detail

inline AlgorithmSummary summarize(const std::string& name, const std::vector<TrialResult>& trials, long cap) {
    AlgorithmSummary s;
    s.algorithm = name;
    s.trials = static_cast<int>(trials.size());
    s.episode_cap = cap;
    std::vector<double> imputed;
    double conv_sum = 0.0;
    for (const auto& t : trials) {
        if (t.converged) {
            ++s.converged;
            conv_sum += static_cast<double>(t.episodes);
            imputed.push_back(static_cast<double>(t.episodes));
        } else {
            imputed.push_back(static_cast<double>(cap));
        }
    }
    s.mean_converged = s.converged > 0 ? conv_sum / s.converged : 0.0;
    double sum = 0.0;
    for (double v : imputed) sum += v;
    s.mean_imputed = imputed.empty() ? 0.0 : sum / static_cast<double>(imputed.size());
    s.median_imputed = detail::quantile(imputed, 0.5);
    s.q1 = detail::quantile(imputed, 0.25);
    s.q3 = detail::quantile(imputed, 0.75);
    return s;
}

/// The synthetic human: labels the observed outcome against the hidden target.
inline FeedbackFn oracle_feedback(const Task& task, const TaskParam& target) {
    return [&task, target](const Trajectory& traj) {
        return normalize_grades(task.axes(), task.label(traj.terminal, target));
    };
}

/// Run both searches on every trial. Each trial draws its target from the
/// interior of T and a uniform start, and the two searches share that seed
/// stream. The reward search receives only the objective; the ASG search
/// receives only feedback and the grounding.
inline ComparisonResult run_comparison(const ExperimentConfig& cfg, const Task& task, const AsgModel& model) {
    cfg.validate();
    const SearchConfig search = cfg.search_for(task);
    const ModelContext ctx = task.context();
    const Box targets = task.space().interior(cfg.target_interior);
    const Matrix cov0 = default_initial_covariance(task.space(), cfg.initial_spread);
    const std::uint64_t trial_base = mix_seed(cfg.seed, streams::trials);

    ComparisonResult res;
    res.task = task.name();
    res.epsilon = search.epsilon;
    res.asg.resize(static_cast<std::size_t>(cfg.trials));
    res.reward.resize(static_cast<std::size_t>(cfg.trials));

    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t i) {
        const std::uint64_t seed = mix_seed(trial_base, i);
        Rng rng(seed);
        const TaskParam target(targets.sample(rng));
        const TaskParam tau0(task.space().sample(rng));
        Rng search_rng(mix_seed(seed, 1));

        const ErrorProbe probe = [&](const Trajectory& tr) { return task_error(tr.terminal, target); };
        const SearchTrace asg_trace = run_asg_search(
            [&](const TaskParam& tau) { return task.rollout(tau); },
            [&](const TaskParam& tau, const AdverbEmbedding& l) { return predict(model, ctx, tau, l); },
            oracle_feedback(task, target), search, tau0, probe);

        const SearchTrace reward_trace = run_reward_search([&](const TaskParam& tau) { return task.outcome(tau); },
                                                           target, search, cfg.algorithm, search_rng, tau0, cov0);

        auto fill = [&](const SearchTrace& tr, const std::string& name) {
            TrialResult t;
            t.trial = static_cast<int>(i);
            t.seed = seed;
            t.algorithm = name;
            t.episodes = tr.total_episodes;
            t.converged = tr.converged;
            t.final_error = tr.final_error;
            t.error_curve = tr.error_curve;
            return t;
        };
        res.asg[i] = fill(asg_trace, "asg");
        res.reward[i] = fill(reward_trace, algorithm_name(cfg.algorithm));
    });

    res.asg_summary = summarize("asg", res.asg, search.max_updates);
    res.reward_summary = summarize(algorithm_name(cfg.algorithm), res.reward,
                                   static_cast<long>(search.max_updates) * search.samples_per_update);
    res.adverb_worth =
        res.asg_summary.mean_imputed > 0 ? res.reward_summary.mean_imputed / res.asg_summary.mean_imputed : 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace detail

inline void write_summary_csv(std::ostream& out, const ComparisonResult& r) {
    out << "task,algorithm,trials,converged,mean_converged,mean_imputed,median,q1,q3,episode_cap,epsilon,adverb_worth\n";
    for (const auto* s : {&r.reward_summary, &r.asg_summary}) {
        out << r.task << ',' << s->algorithm << ',' << s->trials << ',' << s->converged << ','
            << detail::fmt(s->mean_converged) << ',' << detail::fmt(s->mean_imputed) << ','
            << detail::fmt(s->median_imputed) << ',' << detail::fmt(s->q1) << ',' << detail::fmt(s->q3) << ','
            << s->episode_cap << ',' << detail::fmt(r.epsilon) << ',' << detail::fmt(r.adverb_worth) << '\n';
    }
}

inline void write_trials_csv(std::ostream& out, const ComparisonResult& r) {
    out << "trial,seed,algorithm,converged,episodes,final_error\n";
    for (std::size_t i = 0; i < r.asg.size(); ++i) {
        for (const auto* t : {&r.reward[i], &r.asg[i]}) {
            out << t->trial << ',' << t->seed << ',' << t->algorithm << ',' << (t->converged ? 1 : 0) << ','
                << t->episodes << ',' << detail::fmt(t->final_error) << '\n';
        }
    }
}

inline void write_curves_csv(std::ostream& out, const ComparisonResult& r) {
    out << "trial,algorithm,episode,error\n";
    for (std::size_t i = 0; i < r.asg.size(); ++i) {
        for (const auto* t : {&r.reward[i], &r.asg[i]}) {
            for (std::size_t e = 0; e < t->error_curve.size(); ++e)
                out << t->trial << ',' << t->algorithm << ',' << e << ',' << detail::fmt(t->error_curve[e]) << '\n';
        }
    }
}

/// Error-vs-episode line plot with the convergence threshold dashed.
inline std::string error_curve_svg(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                                   double epsilon, const std::string& title) {
    constexpr double W = 480, H = 300, L = 50, R = 20, T = 30, B = 40;
    double max_x = 1, max_y = epsilon * 1.2;
    for (const auto& [_, ys] : series) {
        max_x = std::max(max_x, static_cast<double>(ys.size()));
        for (double y : ys)
            if (std::isfinite(y)) max_y = std::max(max_y, y);
    }
    auto px = [&](double x) { return L + (W - L - R) * x / max_x; };
    auto py = [&](double y) { return H - B - (H - T - B) * y / max_y; };
    static const char* colors[] = {"#2a9d4b", "#1f4fd1", "#c0392b", "#8e44ad"};

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    s << "<text x=\"" << L << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << detail::fmt(py(epsilon)) << "\" x2=\"" << W - R << "\" y2=\""
      << detail::fmt(py(epsilon)) << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" font-family=\"sans-serif\" font-size=\"11\">episode ("
      << detail::fmt(max_x) << ")</text>\n";
    s << "<text x=\"4\" y=\"" << T + 10 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << detail::fmt(max_y) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& [name, ys] = series[k];
        const char* color = colors[k % 4];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t e = 0; e < ys.size(); ++e)
            if (std::isfinite(ys[e])) s << detail::fmt(px(static_cast<double>(e))) << ',' << detail::fmt(py(ys[e])) << ' ';
        s << "\"/>\n";
        s << "<text x=\"" << W - R - 90 << "\" y=\"" << T + 14 * (k + 1) << "\" fill=\"" << color
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << name << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

/// Aligned text table: imputed mean, converged-only mean and median per method.
inline std::string format_summary_table(const ComparisonResult& r) {
    std::ostringstream s;
    char line[160];
    std::snprintf(line, sizeof line, "%-10s | %-12s | %9s | %9s | %7s | %10s\n", "", "Episodes to", "mean", "mean", "median",
                  "converged");
    s << "Task: " << r.task << "   (epsilon = " << detail::fmt(r.epsilon) << ")\n" << line;
    std::snprintf(line, sizeof line, "%-10s | %-12s | %9s | %9s | %7s | %10s\n", "", "Converge", "(imputed)",
                  "(conv.)", "", "");
    s << line << std::string(72, '-') << '\n';
    for (const auto* a : {&r.reward_summary, &r.asg_summary}) {
        std::snprintf(line, sizeof line, "%-10s | %-12s | %9.1f | %9.1f | %7.1f | %4d / %-4d\n",
                      a->algorithm == "asg" ? "ASG" : (a->algorithm == "pi2cma" ? "PI2-CMA" : "CEM"), "", a->mean_imputed,
                      a->mean_converged, a->median_imputed, a->converged, a->trials);
        s << line;
    }
    std::snprintf(line, sizeof line, "adverb worth: %.1f reward episodes per ASG episode\n", r.adverb_worth);
    s << line;
    return s.str();
}

/// Write summary.csv, trials.csv, curves.csv, summary.txt and one SVG per trial.
inline void write_comparison(const ComparisonResult& r, const std::filesystem::path& dir, bool plots = true) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::filesystem::path& p) {
        std::ofstream f(p);
        if (!f) throw Error(Errc::config_error, "cannot write " + p.string());
        return f;
    };
    {
        auto f = open(dir / "summary.csv");
        write_summary_csv(f, r);
    }
    {
        auto f = open(dir / "trials.csv");
        write_trials_csv(f, r);
    }
    {
        auto f = open(dir / "curves.csv");
        write_curves_csv(f, r);
    }
    {
        auto f = open(dir / "summary.txt");
        f << format_summary_table(r);
    }
    if (!plots) return;
    std::filesystem::create_directories(dir / "plots");
    for (std::size_t i = 0; i < r.asg.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "trial_%03zu.svg", i);
        auto f = open(dir / "plots" / name);
        f << error_curve_svg({{r.reward[i].algorithm, r.reward[i].error_curve}, {"asg", r.asg[i].error_curve}},
                             r.epsilon, r.task + " trial " + std::to_string(i));
    }
}

} // namespace asg

#endif
