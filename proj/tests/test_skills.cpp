#include "asg/harness.hpp"
#include "asg/skills.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

using namespace asg;
using Catch::Approx;

TEST_CASE("ball skill inverts the dynamics over the task box") {
    BallThrowEnv env;
    const Box t{Vector(Eigen::Vector2d(0.5, -15.0)), Vector(Eigen::Vector2d(4.0, 15.0))};
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const TaskParam tau(t.sample(rng));
        const auto out = rollout_ball(env, ball_skill(tau, env)).terminal;
        CHECK((out.values - tau.values).cwiseAbs().maxCoeff() < 1e-2);
    }
}

TEST_CASE("ball skill formula and domain") {
    const auto th = ball_skill(TaskParam{2.0, 4.0});
    CHECK(th[0] == Approx(0.5));
    CHECK(th[1] == Approx(12.0));
    CHECK_THROWS_AS(ball_skill(TaskParam{0.0, 1.0}), Error);
    try {
        ball_skill(TaskParam{-1.0, 1.0});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::domain_error);
    }
}

namespace {

KnnSkill line_skill(int k) {
    std::vector<KnnExemplar> ex;
    for (int i = 0; i < 4; ++i)
        ex.push_back({TaskParam{static_cast<double>(i), 0.0}, PolicyParams{10.0 * i, -1.0 * i}});
    return fit_knn_skill(ex, k);
}

} // namespace

TEST_CASE("knn returns an exemplar exactly at its site") {
    const auto s = line_skill(3);
    for (const auto& e : s.exemplars) CHECK(knn_predict(s, e.tau) == e.theta);
}

TEST_CASE("knn with k = 1 is nearest neighbour") {
    const auto s = line_skill(1);
    CHECK(knn_predict(s, TaskParam{1.3, 0.2}) == s.exemplars[1].theta);
}

TEST_CASE("knn with k = 2 halfway between two exemplars averages them") {
    const auto s = line_skill(2);
    const auto p = knn_predict(s, TaskParam{1.5, 0.0});
    CHECK(p[0] == Approx(15.0));
    CHECK(p[1] == Approx(-1.5));
}

TEST_CASE("knn is continuous off exemplar sites") {
    const auto s = line_skill(3);
    const TaskParam a{1.2, 0.3};
    TaskParam b = a;
    b[0] += 1e-7;
    CHECK((knn_predict(s, a).values - knn_predict(s, b).values).norm() < 1e-4);
}

TEST_CASE("knn single exemplar is a constant skill") {
    const auto s = fit_knn_skill({{TaskParam{1.0, 1.0}, PolicyParams{2.0, 3.0}}}, 1);
    CHECK(knn_predict(s, TaskParam{-4.0, 9.0}) == PolicyParams{2.0, 3.0});
}

TEST_CASE("knn fitting errors") {
    CHECK_THROWS_AS(fit_knn_skill({}, 1), Error);
    try {
        fit_knn_skill({{TaskParam{1, 1}, PolicyParams{0}}, {TaskParam{1, 1}, PolicyParams{1}}}, 1);
        FAIL("duplicate accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::duplicate_task);
    }
    KnnSkill empty;
    try {
        knn_predict(empty, TaskParam{0, 0});
        FAIL("empty skill accepted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_skill);
    }
}

TEST_CASE("knn skill JSON round trip keeps predictions and hash") {
    const auto s = line_skill(3);
    const auto path = std::filesystem::temp_directory_path() / "asg_test.skill.json";
    save_knn_skill(s, path.string());
    const auto back = load_knn_skill(path.string());
    CHECK(back.hash() == s.hash());
    CHECK(knn_predict(back, TaskParam{0.7, 0.1}) == knn_predict(s, TaskParam{0.7, 0.1}));
    std::filesystem::remove(path);
}

TEST_CASE("path CSV has a header and one row per point") {
    DmpParams p;
    p.weights = Eigen::MatrixXd::Zero(2, 5);
    p.goal = {1.0, 0.0};
    p.duration = 0.1;
    const auto path = execute_dmp(p, Eigen::Vector2d::Zero(), DmpConfig{});
    std::ostringstream out;
    write_path_csv(out, path);
    const std::string s = out.str();
    CHECK(s.rfind("time,x,y\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(path.size()) + 1);
}

TEST_CASE("analytic strike lands near its goal") {
    PuckSlideEnv env;
    Rng rng(2);
    double total = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Vector g = env.goal_region.box().sample(rng);
        const auto tr = rollout_puck(env, initial_strike(env, {g[0], g[1]}));
        total += task_error(tr.terminal, TaskParam(g));
    }
    CHECK(total / 20 < 0.15);
}

TEST_CASE("pretrained puck skill beats the no-skill baseline on held-out goals") {
    PuckSlideEnv env;
    Rng rng(9);
    const auto goals = sample_goals(env.goal_region.box(), 25, rng);
    PretrainConfig cfg;
    const auto rep = pretrain_puck_skill(env, goals, cfg, 17);
    CHECK(rep.succeeded >= 20);
    CHECK(rep.skill.k == 3);
    CHECK_FALSE(rep.degenerate);

    // Baseline: zero parameters, whatever the goal.
    const PolicyParams none(Vector::Zero(env.dmp.param_count()));
    double skill_err = 0.0, base_err = 0.0;
    for (int i = 0; i < 30; ++i) {
        const TaskParam g(env.goal_region.box().interior(0.8).sample(rng));
        skill_err += task_error(rollout_puck(env, knn_predict(rep.skill, g)).terminal, g);
        base_err += task_error(rollout_puck(env, none).terminal, g);
    }
    CHECK(skill_err < base_err);
}

TEST_CASE("single-goal pretraining is flagged degenerate") {
    PuckSlideEnv env;
    PretrainConfig cfg;
    const auto rep = pretrain_puck_skill(env, {TaskParam{1.5, 0.1}}, cfg, 1);
    CHECK(rep.degenerate);
    CHECK(rep.skill.exemplars.size() == 1);
}

TEST_CASE("off-table goals are excluded with a warning") {
    PuckSlideEnv env;
    PretrainConfig cfg;
    const auto rep = pretrain_puck_skill(env, {TaskParam{1.5, 0.1}, TaskParam{1.8, -0.2}, TaskParam{9.0, 0.0}}, cfg, 1);
    CHECK(rep.excluded_goals.size() == 1);
    CHECK(rep.attempted == 2);
    CHECK_FALSE(rep.warnings.empty());
    CHECK_THROWS_AS(pretrain_puck_skill(env, {TaskParam{9.0, 0.0}}, cfg, 1), Error);
}
