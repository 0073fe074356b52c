#ifndef ASG_ENVSIM_HPP
#define ASG_ENVSIM_HPP

#include "asg/config.hpp"
#include "asg/core.hpp"
#include "asg/dmp.hpp"

#include <optional>
#include <vector>

namespace asg {

enum class OutcomeKind {
    hit,         ///< ball reached the wall
    at_rest,     ///< puck stopped on the table
    off_table,   ///< puck left the table bounds
    timeout,     ///< episode cutoff reached
    no_contact,  ///< pusher never touched the puck
};

inline const char* outcome_name(OutcomeKind k) {
    switch (k) {
    case OutcomeKind::hit: return "hit";
    case OutcomeKind::at_rest: return "at_rest";
    case OutcomeKind::off_table: return "off_table";
    case OutcomeKind::timeout: return "timeout";
    case OutcomeKind::no_contact: return "no_contact";
    }
    return "unknown";
}

struct TrajectorySample {
    double t;
    Eigen::Vector2d pos;
    Eigen::Vector2d vel;
};

/// One episode. `samples` track the ball or puck; `effector` holds the pusher
/// path for the puck task and is empty otherwise. `terminal` is always finite.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<PathPoint> effector;
    OutcomeKind kind = OutcomeKind::timeout;
    TaskParam terminal;
};

struct Rect {
    Eigen::Vector2d lo = Eigen::Vector2d::Zero();
    Eigen::Vector2d hi = Eigen::Vector2d::Zero();

    bool contains(const Eigen::Vector2d& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
    Box box() const { return {Vector(lo), Vector(hi)}; }
    double diagonal() const { return (hi - lo).norm(); }
};

namespace detail {

inline Rect rect_from_list(const std::vector<double>& v, const std::string& key) {
    if (v.size() != 4) throw Error(Errc::config_error, key + " needs 4 numbers: xmin ymin xmax ymax");
    Rect r{{v[0], v[1]}, {v[2], v[3]}};
    if (r.hi.x() < r.lo.x() || r.hi.y() < r.lo.y())
        throw Error(Errc::config_error, key + " has max below min");
    return r;
}

inline Eigen::Vector2d point_from_list(const std::vector<double>& v, const std::string& key) {
    if (v.size() != 2) throw Error(Errc::config_error, key + " needs 2 numbers");
    return {v[0], v[1]};
}

} // namespace detail

/// Ball launched from the origin towards a vertical wall under constant gravity.
struct BallThrowEnv {
    double gravity = 10.0;
    double wall_x = 1.0;
    double dt = 1e-3;
    double max_t = 5.0;

    /// Range of reachable target times; `max_t` must cover its upper end.
    static constexpr double kMaxGoalTime = 4.0;

    void validate() const {
        if (!(gravity > 0)) throw Error(Errc::invalid_params, "gravity must be positive");
        if (!(wall_x > 0)) throw Error(Errc::invalid_params, "wall_x must be positive");
        if (!(dt > 0 && dt <= 0.01)) throw Error(Errc::invalid_params, "dt must be in (0, 0.01]");
        if (!(max_t >= kMaxGoalTime))
            throw Error(Errc::invalid_params, "max_t must cover the target time range");
    }

    static BallThrowEnv from_config(const KeyValueConfig& kv) {
        BallThrowEnv e;
        e.gravity = kv.get_double("gravity", e.gravity);
        e.wall_x = kv.get_double("wall_x", e.wall_x);
        e.dt = kv.get_double("dt", e.dt);
        e.max_t = kv.get_double("max_t", e.max_t);
        e.validate();
        return e;
    }
};

/// Desk-scale puck strike: a point pusher follows a DMP path and, on first
/// contact, hands the puck the normal component of its velocity. The puck
/// then decelerates under Coulomb friction.
struct PuckSlideEnv {
    double friction_coeff = 0.3;
    double gravity = 9.81;
    Eigen::Vector2d puck_start{0.6, 0.0};
    Eigen::Vector2d pusher_start{0.2, 0.0};
    double contact_radius = 0.05;
    Rect strike_region{{0.0, -0.4}, {0.7, 0.4}};
    double dt = 1e-3;
    double max_t = 20.0;
    Rect table_bounds{{0.0, -1.0}, {3.0, 1.0}};
    /// Targets the skill is asked to reach; the task-parameter space.
    Rect goal_region{{1.0, -0.8}, {2.6, 0.8}};
    DmpConfig dmp;

    void validate() const {
        if (!(friction_coeff > 0)) throw Error(Errc::invalid_params, "friction_coeff must be positive");
        if (!(gravity > 0)) throw Error(Errc::invalid_params, "gravity must be positive");
        if (!table_bounds.contains(puck_start))
            throw Error(Errc::invalid_params, "puck_start outside table_bounds");
        if (!(dt > 0 && dt <= 0.01)) throw Error(Errc::invalid_params, "dt must be in (0, 0.01]");
        if (!(contact_radius > 0)) throw Error(Errc::invalid_params, "contact_radius must be positive");
        if (!table_bounds.contains(goal_region.lo) || !table_bounds.contains(goal_region.hi))
            throw Error(Errc::invalid_params, "goal_region must lie on the table");
        dmp.validate();
    }

    static PuckSlideEnv from_config(const KeyValueConfig& kv) {
        PuckSlideEnv e;
        e.friction_coeff = kv.get_double("friction_coeff", e.friction_coeff);
        e.gravity = kv.get_double("gravity", e.gravity);
        e.dt = kv.get_double("dt", e.dt);
        e.dmp.dt = e.dt;
        e.max_t = kv.get_double("max_t", e.max_t);
        e.contact_radius = kv.get_double("contact_radius", e.contact_radius);
        if (kv.has("bounds")) e.table_bounds = detail::rect_from_list(kv.get_list("bounds", {}), "bounds");
        if (kv.has("goal_region"))
            e.goal_region = detail::rect_from_list(kv.get_list("goal_region", {}), "goal_region");
        if (kv.has("strike_region"))
            e.strike_region = detail::rect_from_list(kv.get_list("strike_region", {}), "strike_region");
        if (kv.has("puck_start"))
            e.puck_start = detail::point_from_list(kv.get_list("puck_start", {}), "puck_start");
        if (kv.has("pusher_start"))
            e.pusher_start = detail::point_from_list(kv.get_list("pusher_start", {}), "pusher_start");
        e.validate();
        return e;
    }

    double deceleration() const { return friction_coeff * gravity; }
};

/// Launch from the origin with velocity theta = [v_x, v_y]; stop at the wall or
/// the cutoff. Positions advance with the exact constant-acceleration update,
/// and the wall crossing is linearly interpolated between bracketing samples.
inline Trajectory rollout_ball(const BallThrowEnv& env, const PolicyParams& theta) {
    env.validate();
    require_dims(theta.size(), 2, "ball policy parameters");
    if (!theta.all_finite()) throw Error(Errc::invalid_params, "non-finite ball policy parameters");

    const double vx = theta[0];
    const double g = env.gravity;
    const double dt = env.dt;
    double x = 0.0, y = 0.0, vy = theta[1], t = 0.0;

    Trajectory traj;
    traj.samples.push_back({0.0, {0.0, 0.0}, {vx, vy}});
    const auto steps = static_cast<long>(std::floor(env.max_t / dt + 1e-9));
    for (long k = 1; k <= steps; ++k) {
        const double t_next = static_cast<double>(k) * dt;
        const double x_next = vx * t_next;
        const double y_next = y + vy * dt - 0.5 * g * dt * dt;
        const double vy_next = vy - g * dt;
        if (x_next >= env.wall_x && vx > 0) {
            const double frac = (env.wall_x - x) / (x_next - x);
            const double t_hit = t + frac * dt;
            const double y_hit = y + frac * (y_next - y);
            const double vy_hit = vy + frac * (vy_next - vy);
            if (t_hit > t) traj.samples.push_back({t_hit, {env.wall_x, y_hit}, {vx, vy_hit}});
            traj.kind = OutcomeKind::hit;
            traj.terminal = TaskParam{t_hit, y_hit};
            return traj;
        }
        x = x_next;
        y = y_next;
        vy = vy_next;
        t = t_next;
        traj.samples.push_back({t, {x, y}, {vx, vy}});
    }
    traj.kind = OutcomeKind::timeout;
    traj.terminal = TaskParam{t, y};
    return traj;
}

/// Coulomb slide from `pos` with initial velocity `v0`, starting at time `t0`.
/// Each step applies the exact constant-deceleration update, so the resting
/// point matches |v0|^2 / (2 mu g) up to rounding.
inline void slide_puck(const PuckSlideEnv& env, Eigen::Vector2d pos, const Eigen::Vector2d& v0,
                       double t0, Trajectory& traj) {
    const double a = env.deceleration();
    double speed = v0.norm();
    const Eigen::Vector2d dir = speed > 0 ? Eigen::Vector2d(v0 / speed) : Eigen::Vector2d::Zero();
    double t = t0;
    const double dt = env.dt;
    while (speed > 0) {
        if (t - t0 >= env.max_t) {
            traj.kind = OutcomeKind::timeout;
            traj.terminal = TaskParam{pos.x(), pos.y()};
            return;
        }
        if (speed <= a * dt) {
            const double tau = speed / a;
            pos += dir * (speed * speed / (2.0 * a));
            t += tau;
            speed = 0.0;
        } else {
            pos += dir * (speed * dt - 0.5 * a * dt * dt);
            speed -= a * dt;
            t += dt;
        }
        traj.samples.push_back({t, pos, dir * speed});
        if (!env.table_bounds.contains(pos)) {
            traj.kind = OutcomeKind::off_table;
            traj.terminal = TaskParam{pos.x(), pos.y()};
            return;
        }
    }
    traj.kind = OutcomeKind::at_rest;
    traj.terminal = TaskParam{pos.x(), pos.y()};
}

/// Execute the 13-parameter DMP strike (goal offset relative to the puck).
inline Trajectory rollout_puck(const PuckSlideEnv& env, const PolicyParams& theta) {
    const DmpParams params = DmpParams::from_policy(theta, env.puck_start, env.dmp);
    Trajectory traj;
    traj.effector = execute_dmp(params, env.pusher_start, env.dmp);
    traj.samples.push_back({0.0, env.puck_start, Eigen::Vector2d::Zero()});

    const double r2 = env.contact_radius * env.contact_radius;
    for (const PathPoint& p : traj.effector) {
        const Eigen::Vector2d gap = env.puck_start - p.pos;
        if (gap.squaredNorm() > r2 || !env.strike_region.contains(p.pos)) continue;
        const double dist = gap.norm();
        const Eigen::Vector2d normal =
            dist > 1e-12 ? Eigen::Vector2d(gap / dist)
                         : (p.vel.norm() > 0 ? Eigen::Vector2d(p.vel.normalized()) : Eigen::Vector2d(1, 0));
        const double vn = std::max(0.0, p.vel.dot(normal));
        const Eigen::Vector2d v0 = vn * normal;
        if (p.t > 0) traj.samples.push_back({p.t, env.puck_start, v0});
        slide_puck(env, env.puck_start, v0, p.t, traj);
        return traj;
    }
    const double t_end = traj.effector.back().t;
    if (t_end > 0) traj.samples.push_back({t_end, env.puck_start, Eigen::Vector2d::Zero()});
    traj.kind = OutcomeKind::no_contact;
    traj.terminal = TaskParam{env.puck_start.x(), env.puck_start.y()};
    return traj;
}

/// Euclidean distance between an observed outcome and a target; the
/// negated value is the reward R(tau).
inline double task_error(const TaskParam& outcome, const TaskParam& target) {
    require_dims(outcome.size(), target.size(), "task_error");
    return (outcome.values - target.values).norm();
}

} // namespace asg

#endif
