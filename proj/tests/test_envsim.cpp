#include "asg/envsim.hpp"
#include "asg/skills.hpp"

#include <catch_amalgamated.hpp>

using namespace asg;
using Catch::Approx;

namespace {

// Closed form for a throw from the origin: t = wall_x / vx, y = vy t - g t^2 / 2.
std::pair<double, double> ballistic(double vx, double vy, double g = 10.0, double wall = 1.0) {
    const double t = wall / vx;
    return {t, vy * t - 0.5 * g * t * t};
}

} // namespace

TEST_CASE("ball rollout matches the closed form on known throws") {
    BallThrowEnv env;
    auto a = rollout_ball(env, PolicyParams{1.0, 5.0});
    CHECK(a.kind == OutcomeKind::hit);
    CHECK(a.terminal[0] == Approx(1.0).margin(1e-3));
    CHECK(a.terminal[1] == Approx(0.0).margin(1e-3));

    auto b = rollout_ball(env, PolicyParams{2.0, 0.0});
    CHECK(b.terminal[0] == Approx(0.5).margin(1e-3));
    CHECK(b.terminal[1] == Approx(-1.25).margin(1e-3));
}

TEST_CASE("ball thrown away from the wall times out with a finite outcome") {
    auto tr = rollout_ball(BallThrowEnv{}, PolicyParams{-1.0, 5.0});
    CHECK(tr.kind == OutcomeKind::timeout);
    CHECK(tr.terminal.all_finite());
}

TEST_CASE("ball rollout over random throws stays within 1e-3 of the closed form") {
    Rng rng(42);
    std::uniform_real_distribution<double> vx(0.25, 2.0), vy(-20.0, 30.0);
    BallThrowEnv env;
    for (int i = 0; i < 1000; ++i) {
        const double a = vx(rng), b = vy(rng);
        const auto [t, y] = ballistic(a, b);
        const auto tr = rollout_ball(env, PolicyParams{a, b});
        REQUIRE(tr.kind == OutcomeKind::hit);
        CHECK(std::abs(tr.terminal[0] - t) < 1e-3);
        CHECK(std::abs(tr.terminal[1] - y) < 1e-3);
    }
}

TEST_CASE("halving dt moves ball outcomes by less than 1e-4") {
    Rng rng(5);
    std::uniform_real_distribution<double> vx(0.25, 2.0), vy(-20.0, 30.0);
    BallThrowEnv fine;
    fine.dt = 5e-4;
    for (int i = 0; i < 200; ++i) {
        PolicyParams th{vx(rng), vy(rng)};
        const auto a = rollout_ball(BallThrowEnv{}, th).terminal;
        const auto b = rollout_ball(fine, th).terminal;
        CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("trajectory samples start at zero and increase strictly") {
    auto check = [](const Trajectory& tr) {
        REQUIRE(!tr.samples.empty());
        CHECK(tr.samples.front().t == 0.0);
        for (std::size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].t > tr.samples[i - 1].t);
    };
    check(rollout_ball(BallThrowEnv{}, PolicyParams{0.7, 3.0}));
    PuckSlideEnv env;
    check(rollout_puck(env, PolicyParams(Vector::Zero(env.dmp.param_count()))));
}

TEST_CASE("rollouts are pure") {
    const auto a = rollout_ball(BallThrowEnv{}, PolicyParams{0.9, 4.0});
    const auto b = rollout_ball(BallThrowEnv{}, PolicyParams{0.9, 4.0});
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].t == b.samples[i].t);
        CHECK(a.samples[i].pos == b.samples[i].pos);
    }
    CHECK(a.terminal == b.terminal);
}

TEST_CASE("env validation") {
    BallThrowEnv e;
    e.gravity = 0;
    CHECK_THROWS_AS(e.validate(), Error);
    e = {};
    e.dt = 0.02;
    CHECK_THROWS_AS(e.validate(), Error);
    e = {};
    e.max_t = 3.0;
    CHECK_THROWS_AS(e.validate(), Error);

    PuckSlideEnv p;
    p.friction_coeff = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.puck_start = {5.0, 0.0};
    CHECK_THROWS_AS(p.validate(), Error);
    CHECK_THROWS_AS(rollout_ball(BallThrowEnv{}, PolicyParams{NAN, 1.0}), Error);
}

TEST_CASE("Coulomb slide distance is |v|^2 / (2 mu g) along v") {
    PuckSlideEnv env;
    for (Eigen::Vector2d v : {Eigen::Vector2d(2.0, 0.0), Eigen::Vector2d(1.5, 0.4), Eigen::Vector2d(0.3, -0.9)}) {
        Trajectory tr;
        tr.samples.push_back({0.0, env.puck_start, v});
        slide_puck(env, env.puck_start, v, 0.0, tr);
        const double d = v.squaredNorm() / (2.0 * env.friction_coeff * env.gravity);
        const Eigen::Vector2d want = env.puck_start + d * v.normalized();
        CHECK(tr.kind == OutcomeKind::at_rest);
        CHECK(std::abs(tr.terminal[0] - want.x()) < 1e-3);
        CHECK(std::abs(tr.terminal[1] - want.y()) < 1e-3);
    }
}

TEST_CASE("zero contact velocity leaves the puck where it was") {
    PuckSlideEnv env;
    Trajectory tr;
    slide_puck(env, env.puck_start, Eigen::Vector2d::Zero(), 0.0, tr);
    CHECK(tr.terminal == TaskParam{env.puck_start.x(), env.puck_start.y()});
}

TEST_CASE("head-on strike slides the expected distance") {
    // A straight push along +x: the contact velocity comes out of the
    // trajectory, and the puck must then travel |v|^2 / (2 mu g).
    PuckSlideEnv env;
    DmpParams p;
    p.weights = Eigen::MatrixXd::Zero(2, env.dmp.n_basis);
    p.goal = {env.puck_start.x() + 0.1, 0.0};
    p.duration = 0.4;
    const auto tr = rollout_puck(env, p.to_policy(env.puck_start));
    REQUIRE(tr.kind == OutcomeKind::at_rest);
    const auto contact = std::find_if(tr.samples.begin(), tr.samples.end(),
                                      [](const TrajectorySample& s) { return s.vel.norm() > 0; });
    REQUIRE(contact != tr.samples.end());
    const double v = contact->vel.norm();
    CHECK(std::abs(contact->vel.y()) < 1e-12);
    const double expect = env.puck_start.x() + v * v / (2.0 * env.deceleration());
    CHECK(std::abs(tr.terminal[0] - expect) < 1e-3);
    CHECK(std::abs(tr.terminal[1]) < 1e-12);
}

TEST_CASE("pusher path that misses the puck reports no contact") {
    PuckSlideEnv env;
    DmpParams p;
    p.weights = Eigen::MatrixXd::Zero(2, env.dmp.n_basis);
    p.goal = {0.2, 0.3};  // moves sideways, never near the puck
    p.duration = 0.5;
    const auto tr = rollout_puck(env, p.to_policy(env.puck_start));
    CHECK(tr.kind == OutcomeKind::no_contact);
    CHECK(tr.terminal == TaskParam{env.puck_start.x(), env.puck_start.y()});
}

TEST_CASE("task error is Euclidean distance") {
    CHECK(task_error(TaskParam{1, 0}, TaskParam{1, 0}) == 0.0);
    CHECK(task_error(TaskParam{2, 3}, TaskParam{2, 7}) == Approx(4.0));
    CHECK(task_error(TaskParam{0, 0}, TaskParam{3, 4}) == Approx(5.0));
    CHECK_THROWS_AS(task_error(TaskParam{0, 0}, TaskParam{0, 0, 0}), Error);
}

TEST_CASE("DMP reaches its goal for bounded random weights") {
    DmpConfig cfg;
    Rng rng(3);
    std::uniform_real_distribution<double> w(-50.0, 50.0), g(-1.0, 1.0), d(0.2, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        DmpParams p;
        p.weights = Eigen::MatrixXd(2, cfg.n_basis);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < cfg.n_basis; ++j) p.weights(i, j) = w(rng);
        p.goal = {g(rng), g(rng)};
        p.duration = d(rng);
        const auto path = execute_dmp(p, Eigen::Vector2d::Zero(), cfg);
        CHECK((path.back().pos - p.goal).norm() < 1e-2);
    }
}

TEST_CASE("DMP duration rescales time without changing the path shape") {
    DmpConfig cfg;
    DmpParams p;
    p.weights = Eigen::MatrixXd::Constant(2, cfg.n_basis, 10.0);
    p.goal = {0.5, -0.2};
    p.duration = 0.5;
    DmpParams q = p;
    q.duration = 1.0;
    const auto a = execute_dmp(p, Eigen::Vector2d::Zero(), cfg);
    const auto b = execute_dmp(q, Eigen::Vector2d::Zero(), cfg);
    // Same phase reached at twice the time.
    for (std::size_t i = 0; i < a.size(); i += 50) CHECK((a[i].pos - b[2 * i].pos).norm() < 1e-3);
}

TEST_CASE("DMP policy layout has 13 parameters and round-trips") {
    PuckSlideEnv env;
    CHECK(env.dmp.param_count() == 13);
    Vector theta = Vector::LinSpaced(13, -1.0, 1.0);
    theta[12] = 0.7;
    const auto p = DmpParams::from_policy(PolicyParams(theta), env.puck_start, env.dmp);
    CHECK(p.to_policy(env.puck_start).values.isApprox(theta));
    CHECK_THROWS_AS(DmpParams::from_policy(PolicyParams(Vector::Zero(12)), env.puck_start, env.dmp), Error);
}

TEST_CASE("puck env reads overrides from config") {
    auto kv = KeyValueConfig::parse("friction_coeff = 0.2\ngoal_region = 1.2 -0.5 2.0 0.5\n");
    const auto env = PuckSlideEnv::from_config(kv);
    CHECK(env.friction_coeff == 0.2);
    CHECK(env.goal_region.lo.x() == 1.2);
    CHECK(env.goal_region.hi.y() == 0.5);
    CHECK_THROWS_AS(PuckSlideEnv::from_config(KeyValueConfig::parse("bounds = 0 0 1\n")), Error);
}
