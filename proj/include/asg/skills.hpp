#ifndef ASG_SKILLS_HPP
#define ASG_SKILLS_HPP

#include "asg/core.hpp"
#include "asg/dmp.hpp"
#include "asg/envsim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

namespace asg {

/// Closed-form ballistic skill: tau = [t_goal, y_goal] to the launch velocity
/// that reaches height y_goal on the wall at time t_goal. With g = 10 and a
/// wall at x = 1 this is [1/t, 5t + y/t].
inline PolicyParams ball_skill(const TaskParam& tau, const BallThrowEnv& env = {}) {
    require_dims(tau.size(), 2, "ball task parameter");
    if (!tau.all_finite()) throw Error(Errc::invalid_params, "non-finite task parameter");
    const double t_goal = tau[0];
    const double y_goal = tau[1];
    if (!(t_goal > 0)) throw Error(Errc::domain_error, "t_goal must be positive");
    return PolicyParams{env.wall_x / t_goal, 0.5 * env.gravity * t_goal + y_goal / t_goal};
}

struct KnnExemplar {
    TaskParam tau;
    PolicyParams theta;
};

/// Lazy nearest-neighbour skill over task space with a per-axis weighted
/// Euclidean distance.
struct KnnSkill {
    int k = 3;
    std::vector<KnnExemplar> exemplars;
    Vector axis_weights;  ///< empty means unit weights

    double distance(const TaskParam& a, const TaskParam& b) const {
        Vector d = a.values - b.values;
        if (axis_weights.size() == d.size()) d = d.cwiseProduct(axis_weights);
        return d.norm();
    }

    std::string hash() const;
};

inline constexpr double kKnnDistanceEps = 1e-8;

/// Inverse-distance-weighted average of the k nearest exemplars' values.
/// Exemplars at zero distance are returned exactly.
template <typename DistFn, typename ValueFn>
Vector idw_average(std::size_t count, int k, DistFn&& dist, ValueFn&& value) {
    std::vector<std::pair<double, std::size_t>> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = {dist(i), i};
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), count);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end());

    Vector exact;
    int n_exact = 0;
    for (std::size_t j = 0; j < kk && order[j].first == 0.0; ++j) {
        const Vector& v = value(order[j].second);
        exact = n_exact == 0 ? v : Vector(exact + v);
        ++n_exact;
    }
    if (n_exact > 0) return exact / n_exact;

    Vector acc;
    double wsum = 0.0;
    for (std::size_t j = 0; j < kk; ++j) {
        const double w = 1.0 / (order[j].first + kKnnDistanceEps);
        const Vector& v = value(order[j].second);
        acc = j == 0 ? Vector(w * v) : Vector(acc + w * v);
        wsum += w;
    }
    return acc / wsum;
}

inline PolicyParams knn_predict(const KnnSkill& skill, const TaskParam& tau) {
    if (skill.exemplars.empty()) throw Error(Errc::empty_skill, "KNN skill has no exemplars");
    require_dims(tau.size(), skill.exemplars.front().tau.size(), "KNN query");
    return PolicyParams(idw_average(
        skill.exemplars.size(), skill.k,
        [&](std::size_t i) { return skill.distance(skill.exemplars[i].tau, tau); },
        [&](std::size_t i) -> const Vector& { return skill.exemplars[i].theta.values; }));
}

inline KnnSkill fit_knn_skill(std::vector<KnnExemplar> episodes, int k) {
    if (k < 1) throw Error(Errc::invalid_params, "k must be at least 1");
    if (episodes.size() < static_cast<std::size_t>(k))
        throw Error(Errc::insufficient_data, "need at least k episodes to fit a KNN skill");
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        if (!episodes[i].tau.all_finite() || !episodes[i].theta.all_finite())
            throw Error(Errc::invalid_params, "non-finite exemplar");
        require_dims(episodes[i].tau.size(), episodes[0].tau.size(), "exemplar task parameter");
        require_dims(episodes[i].theta.size(), episodes[0].theta.size(), "exemplar policy parameter");
        for (std::size_t j = 0; j < i; ++j)
            if (episodes[i].tau == episodes[j].tau)
                throw Error(Errc::duplicate_task, "duplicate task parameter in KNN training set");
    }
    KnnSkill s;
    s.k = k;
    s.exemplars = std::move(episodes);
    return s;
}

namespace detail {

inline nlohmann::json vec_to_json(const Vector& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector vec_from_json(const nlohmann::json& j) {
    auto xs = j.get<std::vector<double>>();
    return Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

} // namespace detail

inline nlohmann::json to_json(const KnnSkill& s) {
    nlohmann::json ex = nlohmann::json::array();
    for (const auto& e : s.exemplars)
        ex.push_back({{"tau", detail::vec_to_json(e.tau.values)},
                      {"theta", detail::vec_to_json(e.theta.values)}});
    nlohmann::json j{{"k", s.k}, {"exemplars", ex}};
    if (s.axis_weights.size() > 0) j["axis_weights"] = detail::vec_to_json(s.axis_weights);
    return j;
}

inline KnnSkill knn_skill_from_json(const nlohmann::json& j) {
    try {
        std::vector<KnnExemplar> ex;
        for (const auto& e : j.at("exemplars"))
            ex.push_back({TaskParam(detail::vec_from_json(e.at("tau"))),
                          PolicyParams(detail::vec_from_json(e.at("theta")))});
        KnnSkill s = fit_knn_skill(std::move(ex), j.at("k").get<int>());
        if (j.contains("axis_weights")) s.axis_weights = detail::vec_from_json(j["axis_weights"]);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_file, std::string("malformed KNN skill: ") + e.what());
    }
}

inline std::string KnnSkill::hash() const { return fnv1a_hex(to_json(*this).dump()); }

inline void save_knn_skill(const KnnSkill& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(Errc::config_error, "cannot write " + path);
    f << to_json(s).dump(2) << '\n';
}

inline KnnSkill load_knn_skill(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::corrupt_file, "cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_file, path + ": " + e.what());
    }
    return knn_skill_from_json(j);
}

/// CSV export of a DMP path: time,x,y.
inline void write_path_csv(std::ostream& out, const std::vector<PathPoint>& path) {
    out << "time,x,y\n";
    char buf[96];
    for (const auto& p : path) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p.t, p.pos.x(), p.pos.y());
        out << buf;
    }
}

} // namespace asg

#endif
