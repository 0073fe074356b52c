#ifndef ASG_ADVERBS_HPP
#define ASG_ADVERBS_HPP

#include "asg/core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace asg {

/// One antonym pair. The positive pole maps to +grade.
struct AdverbAxis {
    std::string positive;
    std::string negative;
    /// synonym -> pole word ("quicker" -> "faster")
    std::map<std::string, std::string> synonyms;
};

/// Raw signed integer grades, one per axis, in [-max_magnitude, max_magnitude].
using Grades = std::vector<int>;

struct AxisConfig {
    std::vector<AdverbAxis> axes;
    std::map<std::string, int> modifiers{{"a little", 1}, {"much", 3}};
    int default_magnitude = 2;
    int max_magnitude = 3;
    /// Phrase that means "no change"; renders the zero embedding.
    std::string null_phrase = "perfect";
    /// Words skipped inside a clause ("more to the left" == "left").
    std::set<std::string> fillers{"more", "to", "the"};

    std::size_t dim() const { return axes.size(); }

    void validate() const {
        if (axes.empty()) throw Error(Errc::config_error, "axis config needs at least one axis");
        std::set<std::string> seen;
        auto claim = [&](const std::string& w) {
            if (w.empty()) throw Error(Errc::config_error, "empty axis word");
            if (!seen.insert(w).second) throw Error(Errc::config_error, "axis word used twice: " + w);
        };
        for (const auto& a : axes) {
            claim(a.positive);
            claim(a.negative);
            for (const auto& [syn, pole] : a.synonyms) {
                claim(syn);
                if (pole != a.positive && pole != a.negative)
                    throw Error(Errc::config_error, "synonym '" + syn + "' maps to a word outside its axis");
            }
        }
        if (max_magnitude < 1) throw Error(Errc::config_error, "max_magnitude must be >= 1");
        if (default_magnitude < 1 || default_magnitude > max_magnitude)
            throw Error(Errc::config_error, "default magnitude out of range");
        for (const auto& [word, mag] : modifiers)
            if (mag < 1 || mag > max_magnitude)
                throw Error(Errc::config_error, "modifier '" + word + "' magnitude out of range");
    }

    nlohmann::json to_json() const {
        nlohmann::json ax = nlohmann::json::array();
        for (const auto& a : axes) ax.push_back({{"pos", a.positive}, {"neg", a.negative}, {"synonyms", a.synonyms}});
        return {{"axes", ax},
                {"modifiers", modifiers},
                {"default_magnitude", default_magnitude},
                {"max_magnitude", max_magnitude},
                {"null_phrase", null_phrase},
                {"fillers", fillers}};
    }

    static AxisConfig from_json(const nlohmann::json& j) {
        try {
            AxisConfig c;
            c.axes.clear();
            for (const auto& a : j.at("axes")) {
                AdverbAxis axis;
                axis.positive = a.at("pos").get<std::string>();
                axis.negative = a.at("neg").get<std::string>();
                if (a.contains("synonyms")) axis.synonyms = a["synonyms"].get<std::map<std::string, std::string>>();
                c.axes.push_back(std::move(axis));
            }
            if (j.contains("modifiers")) c.modifiers = j["modifiers"].get<std::map<std::string, int>>();
            c.default_magnitude = j.value("default_magnitude", c.default_magnitude);
            c.max_magnitude = j.value("max_magnitude", c.max_magnitude);
            c.null_phrase = j.value("null_phrase", c.null_phrase);
            if (j.contains("fillers")) c.fillers = j["fillers"].get<std::set<std::string>>();
            c.validate();
            return c;
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::config_error, std::string("malformed axis config: ") + e.what());
        }
    }

    static AxisConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw Error(Errc::config_error, "cannot open axis config " + path);
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::config_error, path + ": " + e.what());
        }
        return from_json(j);
    }

    /// Stable hash of the canonical JSON form; stamped into datasets and models.
    std::string hash() const { return fnv1a_hex(to_json().dump()); }

    /// faster-slower, higher-lower
    static AxisConfig ball_throw() {
        AxisConfig c;
        c.axes = {{"faster", "slower", {{"quicker", "faster"}, {"sooner", "faster"}, {"later", "slower"}}},
                  {"higher", "lower", {{"up", "higher"}, {"down", "lower"}}}};
        return c;
    }

    /// higher-lower, right-left
    static AxisConfig puck_slide() {
        AxisConfig c;
        c.axes = {{"higher", "lower", {{"up", "higher"}, {"down", "lower"}}}, {"right", "left", {}}};
        return c;
    }
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& phrase) {
    std::string s;
    s.reserve(phrase.size() + 8);
    for (char ch : phrase) {
        const auto c = static_cast<unsigned char>(ch);
        if (ch == ',') s += " , ";
        else if (std::isalpha(c) || ch == '\'' || ch == '-') s += static_cast<char>(std::tolower(c));
        else if (std::isspace(c) || ch == '.' || ch == '!' || ch == '?' || ch == '"') s += ' ';
        else s += ch;
    }
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline std::string join(const std::vector<std::string>& toks, std::size_t from = 0) {
    std::string out;
    for (std::size_t i = from; i < toks.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += toks[i];
    }
    return out;
}

} // namespace detail

/// Parse a conjunction of adverb clauses into raw grades. Each clause is
/// `[modifier] [fillers] pole`; unmodified clauses take the default magnitude.
inline Grades parse_grades(const AxisConfig& cfg, const std::string& phrase) {
    Grades grades(cfg.dim(), 0);
    const auto tokens = detail::tokenize(phrase);
    if (tokens.empty()) return grades;
    if (detail::join(tokens) == cfg.null_phrase) return grades;

    struct PoleRef {
        std::size_t axis;
        int sign;
    };
    std::map<std::string, PoleRef> poles;
    std::set<std::string> vocabulary(cfg.fillers.begin(), cfg.fillers.end());
    for (std::size_t i = 0; i < cfg.axes.size(); ++i) {
        const auto& a = cfg.axes[i];
        poles[a.positive] = {i, +1};
        poles[a.negative] = {i, -1};
        for (const auto& [syn, pole] : a.synonyms) poles[syn] = {i, pole == a.positive ? +1 : -1};
    }
    for (const auto& [w, _] : poles)
        for (const auto& t : detail::tokenize(w)) vocabulary.insert(t);
    std::vector<std::pair<std::vector<std::string>, int>> mods;
    for (const auto& [w, m] : cfg.modifiers) {
        mods.emplace_back(detail::tokenize(w), m);
        for (const auto& t : mods.back().first) vocabulary.insert(t);
    }
    std::sort(mods.begin(), mods.end(), [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

    std::vector<std::vector<std::string>> clauses(1);
    for (const auto& t : tokens) {
        if (t == "and" || t == ",") clauses.emplace_back();
        else clauses.back().push_back(t);
    }
    std::vector<bool> mentioned(cfg.dim(), false);
    for (const auto& clause : clauses) {
        if (clause.empty()) throw Error(Errc::unknown_word, "dangling conjunction in '" + phrase + "'", "and");

        std::size_t pos = 0;
        int magnitude = cfg.default_magnitude;
        for (const auto& [mtoks, m] : mods) {
            if (mtoks.size() <= clause.size() && std::equal(mtoks.begin(), mtoks.end(), clause.begin())) {
                magnitude = m;
                pos = mtoks.size();
                break;
            }
        }
        std::vector<std::string> rest;
        for (std::size_t i = pos; i < clause.size(); ++i)
            if (!cfg.fillers.count(clause[i])) rest.push_back(clause[i]);

        for (const auto& t : clause)
            if (!vocabulary.count(t)) throw Error(Errc::unknown_word, "unknown word '" + t + "'", t);
        const auto it = poles.find(detail::join(rest));
        if (it == poles.end()) {
            const std::string bad = rest.empty() ? detail::join(clause) : detail::join(rest);
            throw Error(Errc::unknown_word, "no adverb recognised in clause '" + detail::join(clause) + "'", bad);
        }
        const PoleRef ref = it->second;
        if (mentioned[ref.axis])
            throw Error(Errc::conflicting_clause, "axis '" + cfg.axes[ref.axis].positive + "-" +
                                                      cfg.axes[ref.axis].negative + "' mentioned twice");
        mentioned[ref.axis] = true;
        grades[ref.axis] = ref.sign * magnitude;
    }
    return grades;
}

inline AdverbEmbedding normalize_grades(const AxisConfig& cfg, const Grades& g) {
    require_dims(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(cfg.dim()), "grades");
    Vector v(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = static_cast<double>(g[i]) / cfg.max_magnitude;
    return AdverbEmbedding(v);
}

/// Phrase to normalised embedding, entries in [-1, 1].
inline AdverbEmbedding parse_phrase(const AxisConfig& cfg, const std::string& phrase) {
    return normalize_grades(cfg, parse_grades(cfg, phrase));
}

/// Canonical phrase for an on-grid embedding; parse_phrase inverts it.
inline std::string render_phrase(const AxisConfig& cfg, const AdverbEmbedding& e) {
    require_dims(e.size(), static_cast<Eigen::Index>(cfg.dim()), "embedding");
    std::vector<std::string> clauses;
    for (std::size_t i = 0; i < cfg.dim(); ++i) {
        const double scaled = e[static_cast<Eigen::Index>(i)] * cfg.max_magnitude;
        const double r = std::round(scaled);
        if (!std::isfinite(scaled) || std::abs(scaled - r) > 1e-9 || std::abs(r) > cfg.max_magnitude)
            throw Error(Errc::unrenderable_magnitude,
                        "embedding value " + std::to_string(e[static_cast<Eigen::Index>(i)]) + " is off-grid");
        const int grade = static_cast<int>(r);
        if (grade == 0) continue;
        const int mag = std::abs(grade);
        std::string clause;
        if (mag != cfg.default_magnitude) {
            auto it = std::find_if(cfg.modifiers.begin(), cfg.modifiers.end(),
                                   [&](const auto& kv) { return kv.second == mag; });
            if (it == cfg.modifiers.end())
                throw Error(Errc::unrenderable_magnitude, "no modifier for magnitude " + std::to_string(mag));
            clause = it->first + " ";
        }
        clause += grade > 0 ? cfg.axes[i].positive : cfg.axes[i].negative;
        clauses.push_back(std::move(clause));
    }
    if (clauses.empty()) return cfg.null_phrase;
    std::string out = clauses.front();
    for (std::size_t i = 1; i < clauses.size(); ++i) out += " and " + clauses[i];
    return out;
}

namespace detail {

/// Differences within this distance of a band edge count as on the edge, so
/// decimal inputs such as 3.2 - 3.0 land where exact arithmetic puts them.
inline constexpr double kBandTolerance = 1e-9;

inline bool exceeds(double magnitude, double band) { return magnitude > band + kBandTolerance; }

inline int band_grade(double magnitude, double inner, double middle, double outer) {
    if (!exceeds(magnitude, inner)) return 0;
    if (exceeds(magnitude, outer)) return 3;
    if (exceeds(magnitude, middle)) return 2;
    return 1;
}

} // namespace detail

/// Ball-Throw labeller, with the reference slips repaired: the
/// y-axis middle band tests |d_y| against 6 + 0.15 (tau_y + 15), and each sign
/// flip applies to its own axis. Returns [time grade, height grade] with
/// "faster" and "higher" positive.
inline Grades oracle_label_ball(const TaskParam& tau, const TaskParam& tau_prime) {
    require_dims(tau.size(), 2, "oracle tau");
    require_dims(tau_prime.size(), 2, "oracle tau'");
    const double d0 = tau_prime[0] - tau[0];
    const double d1 = tau_prime[1] - tau[1];
    const double s0 = -tau[0] + 4.0;
    const double s1 = tau[1] + 15.0;
    int t_adv = detail::band_grade(std::abs(d0), 0.05 + 0.15 * s0, 0.6 + 0.15 * s0, 1.2 + 0.17 * s0);
    int y_adv = detail::band_grade(std::abs(d1), 0.5 + 0.15 * s1, 6.0 + 0.15 * s1, 12.0 + 0.17 * s1);
    if (d0 >= 0.0) t_adv = -t_adv;  // slower
    if (d1 <= 0.0) y_adv = -y_adv;  // lower
    return {t_adv, y_adv};
}

/// The reference labeller with its three slips left in: the y middle band
/// tests the time delta, and both sign flips hit y. Kept for audit runs
/// (`--oracle=verbatim`).
inline Grades oracle_label_ball_verbatim(const TaskParam& tau, const TaskParam& tau_prime) {
    require_dims(tau.size(), 2, "oracle tau");
    require_dims(tau_prime.size(), 2, "oracle tau'");
    const double d0 = tau_prime[0] - tau[0];
    const double d1 = tau_prime[1] - tau[1];
    const double s0 = -tau[0] + 4.0;
    const double s1 = tau[1] + 15.0;
    int t_adv = 0, y_adv = 0;
    if (detail::exceeds(std::abs(d0), 0.05 + 0.15 * s0)) {
        if (detail::exceeds(std::abs(d0), 1.2 + 0.17 * s0)) t_adv = 3;
        else if (detail::exceeds(std::abs(d0), 0.6 + 0.15 * s0)) t_adv = 2;
        else t_adv = 1;
    }
    if (detail::exceeds(std::abs(d1), 0.5 + 0.15 * s1)) {
        if (detail::exceeds(std::abs(d1), 12.0 + 0.17 * s1)) y_adv = 3;
        else if (detail::exceeds(std::abs(d0), 0.6 + 0.15 * s0)) y_adv = 2;
        else y_adv = 1;
    }
    if (d0 >= 0.0) y_adv = -y_adv;
    if (d1 <= 0.0) y_adv = -y_adv;
    return {t_adv, y_adv};
}

/// Affine threshold c0 + c1 * x, x being the base coordinate on that axis.
struct Band {
    double c0 = 0.0;
    double c1 = 0.0;
    double at(double x) const { return c0 + c1 * x; }
};

struct AxisBands {
    Band inner;
    Band middle;
    Band outer;
};

/// Bands for the puck labeller, in table units.
struct BandConfig {
    AxisBands vertical{{0.06, 0.0}, {0.3, 0.0}, {0.7, 0.0}};
    AxisBands horizontal{{0.06, 0.0}, {0.3, 0.0}, {0.7, 0.0}};
};

/// Puck-Slide labeller over (higher-lower, right-left): +y is higher, +x is right.
inline Grades oracle_label_puck(const TaskParam& tau, const TaskParam& tau_prime, const BandConfig& bands = {}) {
    require_dims(tau.size(), 2, "oracle tau");
    require_dims(tau_prime.size(), 2, "oracle tau'");
    auto grade = [](double delta, double base, const AxisBands& b) {
        const int g = detail::band_grade(std::abs(delta), b.inner.at(base), b.middle.at(base), b.outer.at(base));
        return delta < 0.0 ? -g : g;
    };
    const double dx = tau_prime[0] - tau[0];
    const double dy = tau_prime[1] - tau[1];
    return {grade(dy, tau[1], bands.vertical), grade(dx, tau[0], bands.horizontal)};
}

} // namespace asg

#endif
