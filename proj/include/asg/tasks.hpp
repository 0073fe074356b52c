#ifndef ASG_TASKS_HPP
#define ASG_TASKS_HPP

#include "asg/adverbs.hpp"
#include "asg/config.hpp"
#include "asg/envsim.hpp"
#include "asg/model.hpp"
#include "asg/search.hpp"
#include "asg/skills.hpp"

#include <memory>
#include <string>

namespace asg {

enum class OracleMode { corrected, verbatim };

inline OracleMode parse_oracle_mode(const std::string& s) {
    if (s == "corrected") return OracleMode::corrected;
    if (s == "verbatim") return OracleMode::verbatim;
    throw Error(Errc::config_error, "oracle must be 'corrected' or 'verbatim', got '" + s + "'");
}

/// A skill bound to its environment: task space, adverb axes, the synthetic
/// labeller and default search settings.
class Task {
public:
    virtual ~Task() = default;

    virtual std::string name() const = 0;
    virtual const Box& space() const = 0;
    virtual const AxisConfig& axes() const = 0;
    virtual std::string skill_id() const = 0;
    /// Execute the skill at tau: Theta(tau) followed by an environment rollout.
    virtual Trajectory rollout(const TaskParam& tau) const = 0;
    /// Raw grades describing how `after` differs from `before`.
    virtual Grades label(const TaskParam& before, const TaskParam& after) const = 0;
    virtual SearchConfig default_search() const = 0;
    /// Scene description for clients drawing trajectories.
    virtual nlohmann::json arena() const = 0;

    TaskParam outcome(const TaskParam& tau) const { return rollout(tau).terminal; }
    ModelContext context() const { return {axes().hash(), skill_id()}; }
};

class BallThrowTask final : public Task {
public:
    explicit BallThrowTask(BallThrowEnv env = {}, OracleMode mode = OracleMode::corrected,
                           Box space = default_space())
        : env_(env), mode_(mode), space_(std::move(space)), axes_(AxisConfig::ball_throw()) {
        env_.validate();
        require_dims(space_.dim(), 2, "ball task space");
        if (!(space_.lo[0] > 0)) throw Error(Errc::invalid_params, "ball task times must be positive");
        if (space_.hi[0] > env_.max_t) throw Error(Errc::invalid_params, "max_t must cover the task time range");
    }

    /// t_goal in [0.5, 4] s, y_goal in [-15, 15].
    static Box default_space() { return {Vector(Eigen::Vector2d(0.5, -15.0)), Vector(Eigen::Vector2d(4.0, 15.0))}; }

    static std::unique_ptr<BallThrowTask> from_config(const KeyValueConfig& kv) {
        Box space = default_space();
        if (kv.has("task_bounds")) {
            auto b = kv.get_list("task_bounds", {});
            if (b.size() != 4) throw Error(Errc::config_error, "task_bounds needs tmin ymin tmax ymax");
            space = Box(Vector(Eigen::Vector2d(b[0], b[1])), Vector(Eigen::Vector2d(b[2], b[3])));
        }
        return std::make_unique<BallThrowTask>(BallThrowEnv::from_config(kv),
                                               parse_oracle_mode(kv.get_string("oracle", "corrected")), space);
    }

    std::string name() const override { return "ball_throw"; }
    const Box& space() const override { return space_; }
    const AxisConfig& axes() const override { return axes_; }
    std::string skill_id() const override { return "ball_throw"; }
    const BallThrowEnv& env() const { return env_; }

    Trajectory rollout(const TaskParam& tau) const override { return rollout_ball(env_, ball_skill(tau, env_)); }

    Grades label(const TaskParam& before, const TaskParam& after) const override {
        return mode_ == OracleMode::corrected ? oracle_label_ball(before, after)
                                              : oracle_label_ball_verbatim(before, after);
    }

    SearchConfig default_search() const override {
        SearchConfig c;
        c.samples_per_update = 10;
        c.elites = 3;
        c.temperature = 2.0;
        c.epsilon = 4.5;
        c.max_updates = 100;
        c.bounds = space_;
        return c;
    }

    nlohmann::json arena() const override {
        return {{"task", name()}, {"gravity", env_.gravity}, {"wall_x", env_.wall_x}, {"max_t", env_.max_t},
                {"task_lo", detail::vec_to_json(space_.lo)}, {"task_hi", detail::vec_to_json(space_.hi)}};
    }

private:
    BallThrowEnv env_;
    OracleMode mode_;
    Box space_;
    AxisConfig axes_;
};

class PuckSlideTask final : public Task {
public:
    PuckSlideTask(PuckSlideEnv env, KnnSkill skill, BandConfig bands = {})
        : env_(std::move(env)), skill_(std::move(skill)), bands_(bands), space_(env_.goal_region.box()),
          axes_(AxisConfig::puck_slide()), skill_id_("puck_slide:knn:" + skill_.hash()) {
        env_.validate();
        if (skill_.exemplars.empty()) throw Error(Errc::empty_skill, "puck task needs a fitted skill");
        require_dims(skill_.exemplars.front().theta.size(), env_.dmp.param_count(), "puck skill output");
    }

    std::string name() const override { return "puck_slide"; }
    const Box& space() const override { return space_; }
    const AxisConfig& axes() const override { return axes_; }
    std::string skill_id() const override { return skill_id_; }
    const PuckSlideEnv& env() const { return env_; }
    const KnnSkill& skill() const { return skill_; }

    Trajectory rollout(const TaskParam& tau) const override { return rollout_puck(env_, knn_predict(skill_, tau)); }

    Grades label(const TaskParam& before, const TaskParam& after) const override {
        return oracle_label_puck(before, after, bands_);
    }

    SearchConfig default_search() const override {
        SearchConfig c;
        c.samples_per_update = 10;
        c.elites = 3;
        c.temperature = 10.0;
        c.epsilon = 0.05 * env_.table_bounds.diagonal();
        c.max_updates = 100;
        c.bounds = space_;
        return c;
    }

    nlohmann::json arena() const override {
        return {{"task", name()},
                {"table_lo", detail::vec_to_json(env_.table_bounds.lo)},
                {"table_hi", detail::vec_to_json(env_.table_bounds.hi)},
                {"puck_start", detail::vec_to_json(env_.puck_start)},
                {"pusher_start", detail::vec_to_json(env_.pusher_start)},
                {"task_lo", detail::vec_to_json(space_.lo)},
                {"task_hi", detail::vec_to_json(space_.hi)}};
    }

private:
    PuckSlideEnv env_;
    KnnSkill skill_;
    BandConfig bands_;
    Box space_;
    AxisConfig axes_;
    std::string skill_id_;
};

} // namespace asg

#endif
