#include "asg/adverbs.hpp"

#include <catch_amalgamated.hpp>

using namespace asg;
using Catch::Approx;

namespace {

AdverbEmbedding emb(double a, double b) { return AdverbEmbedding{a, b}; }

Errc error_code(const std::function<void()>& fn, std::string* detail = nullptr) {
    try {
        fn();
    } catch (const Error& e) {
        if (detail) *detail = e.detail();
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::config_error;
}

} // namespace

TEST_CASE("compound phrase embeds as raw [1, -3]") {
    const auto puck = AxisConfig::puck_slide();
    CHECK(parse_grades(puck, "a little higher and much more to the left") == Grades{1, -3});
    const auto e = parse_phrase(puck, "a little higher and much more to the left");
    CHECK(e[0] == Approx(1.0 / 3));
    CHECK(e[1] == -1.0);
}

TEST_CASE("empty phrase and the null phrase are zero") {
    const auto ball = AxisConfig::ball_throw();
    CHECK(parse_grades(ball, "") == Grades{0, 0});
    CHECK(parse_grades(ball, "  ") == Grades{0, 0});
    CHECK(parse_grades(ball, "perfect") == Grades{0, 0});
}

TEST_CASE("unmodified pole takes the default magnitude") {
    const auto ball = AxisConfig::ball_throw();
    const auto e = parse_phrase(ball, "slower");
    CHECK(e[0] == Approx(-2.0 / 3));
    CHECK(e[1] == 0.0);
}

TEST_CASE("synonyms, fillers, commas and case") {
    const auto ball = AxisConfig::ball_throw();
    CHECK(parse_grades(ball, "Much Quicker, a little more down") == Grades{3, -1});
    CHECK(parse_grades(ball, "later and up!") == Grades{-2, 2});
    const auto puck = AxisConfig::puck_slide();
    CHECK(parse_grades(puck, "more to the left") == parse_grades(puck, "left"));
}

TEST_CASE("unknown words echo the offending token") {
    const auto ball = AxisConfig::ball_throw();
    std::string detail;
    CHECK(error_code([&] { parse_grades(ball, "much zoomier"); }, &detail) == Errc::unknown_word);
    CHECK(detail == "zoomier");
    CHECK(error_code([&] { parse_grades(ball, "higher and"); }) == Errc::unknown_word);
    CHECK(error_code([&] { parse_grades(ball, "much"); }) == Errc::unknown_word);
}

TEST_CASE("two clauses on one axis conflict") {
    const auto ball = AxisConfig::ball_throw();
    CHECK(error_code([&] { parse_grades(ball, "higher and a little lower"); }) == Errc::conflicting_clause);
}

TEST_CASE("rendering picks modifiers and the null phrase") {
    const auto ball = AxisConfig::ball_throw();
    CHECK(render_phrase(ball, emb(1.0 / 3, -1.0)) == "a little faster and much lower");
    CHECK(render_phrase(AxisConfig::puck_slide(), emb(1.0 / 3, -1.0)) == "a little higher and much left");
    CHECK(render_phrase(ball, emb(0, 0)) == "perfect");
    CHECK(render_phrase(ball, emb(0, 2.0 / 3)) == "higher");
    CHECK(error_code([&] { render_phrase(ball, emb(0.5, 0)); }) == Errc::unrenderable_magnitude);
}

TEST_CASE("render then parse is the identity on every grid point") {
    for (const auto& cfg : {AxisConfig::ball_throw(), AxisConfig::puck_slide()}) {
        for (int a = -3; a <= 3; ++a)
            for (int b = -3; b <= 3; ++b) {
                const auto e = normalize_grades(cfg, {a, b});
                CHECK(parse_phrase(cfg, render_phrase(cfg, e)) == e);
            }
    }
}

TEST_CASE("parsed embeddings stay in [-1, 1]") {
    const auto cfg = AxisConfig::ball_throw();
    for (const std::string m : {"", "a little ", "much "})
        for (const std::string w : {"faster", "slower", "higher", "lower", "quicker", "down"}) {
            const auto e = parse_phrase(cfg, m + w);
            CHECK(e.values.cwiseAbs().maxCoeff() <= 1.0);
        }
}

TEST_CASE("axis config validation and JSON round trip") {
    auto cfg = AxisConfig::ball_throw();
    const auto back = AxisConfig::from_json(cfg.to_json());
    CHECK(back.hash() == cfg.hash());
    CHECK(AxisConfig::ball_throw().hash() != AxisConfig::puck_slide().hash());

    auto swapped = cfg;
    std::swap(swapped.axes[0], swapped.axes[1]);
    CHECK(swapped.hash() != cfg.hash());

    auto dup = cfg;
    dup.axes[1].positive = "faster";
    CHECK_THROWS_AS(dup.validate(), Error);
    auto badmod = cfg;
    badmod.modifiers["hugely"] = 9;
    CHECK_THROWS_AS(badmod.validate(), Error);
}

// ---------------------------------------------------------------------------
// Labelling oracles

TEST_CASE("ball oracle examples") {
    CHECK(oracle_label_ball(TaskParam{2.0, 0.0}, TaskParam{2.0, 0.0}) == Grades{0, 0});
    CHECK(oracle_label_ball(TaskParam{2.0, 0.0}, TaskParam{2.0, 14.0}) == Grades{0, 2});
    CHECK(oracle_label_ball(TaskParam{3.0, 0.0}, TaskParam{3.2, 0.0}) == Grades{0, 0});
    // Time later by a middle-band amount reads as "slower".
    CHECK(oracle_label_ball(TaskParam{2.0, 0.0}, TaskParam{3.0, 0.0}) == Grades{-2, 0});
    CHECK(oracle_label_ball(TaskParam{3.5, 0.0}, TaskParam{0.5, 0.0}) == Grades{3, 0});
}

TEST_CASE("ball oracle sign coherence, zero consistency and monotonicity") {
    Rng rng(123);
    const Box t{Vector(Eigen::Vector2d(0.5, -15.0)), Vector(Eigen::Vector2d(4.0, 15.0))};
    for (int i = 0; i < 5000; ++i) {
        const TaskParam a(t.sample(rng)), b(t.sample(rng));
        const double d0 = b[0] - a[0], d1 = b[1] - a[1];
        const auto g = oracle_label_ball(a, b);
        if (d0 < 0) CHECK(g[0] >= 0);
        if (d1 > 0) CHECK(g[1] >= 0);
        const double inner0 = 0.05 + 0.15 * (4.0 - a[0]);
        const double inner1 = 0.5 + 0.15 * (a[1] + 15.0);
        const bool below = std::abs(d0) <= inner0 && std::abs(d1) <= inner1;
        CHECK((g == Grades{0, 0}) == below);

        // Scaling the displacement up never lowers a grade magnitude.
        const TaskParam further(a.values + 1.5 * (b.values - a.values));
        const auto g2 = oracle_label_ball(a, further);
        CHECK(std::abs(g2[0]) >= std::abs(g[0]));
        CHECK(std::abs(g2[1]) >= std::abs(g[1]));
    }
}

TEST_CASE("verbatim oracle keeps the reference slips") {
    // y band from the time axis: |d0| = 0 never passes the middle test.
    CHECK(oracle_label_ball_verbatim(TaskParam{2.0, 0.0}, TaskParam{2.0, 14.0})[1] == -1);
    // Time grade never gets a sign.
    CHECK(oracle_label_ball_verbatim(TaskParam{2.0, 0.0}, TaskParam{3.0, 0.0})[0] == 2);
}

TEST_CASE("puck oracle examples") {
    CHECK(oracle_label_puck(TaskParam{1.5, 0.0}, TaskParam{1.5, 0.0}) == Grades{0, 0});
    CHECK(oracle_label_puck(TaskParam{1.0, 0.0}, TaskParam{2.0, 0.0}) == Grades{0, 3});
    CHECK(oracle_label_puck(TaskParam{1.5, 0.0}, TaskParam{1.1, 0.5}) == Grades{2, -2});
    CHECK(oracle_label_puck(TaskParam{1.5, 0.0}, TaskParam{1.55, -0.1}) == Grades{-1, 0});
}
