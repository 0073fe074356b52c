#ifndef ASG_CORE_HPP
#define ASG_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace asg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class Errc {
    invalid_params,
    domain_error,
    dimension_mismatch,
    unknown_word,
    conflicting_clause,
    unrenderable_magnitude,
    insufficient_data,
    duplicate_task,
    empty_skill,
    singular_kernel,
    divergence,
    numerical_error,
    schema_version_mismatch,
    corrupt_file,
    stale_config,
    feedback_timeout,
    config_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::invalid_params: return "InvalidParams";
    case Errc::domain_error: return "DomainError";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::unknown_word: return "UnknownWord";
    case Errc::conflicting_clause: return "ConflictingClause";
    case Errc::unrenderable_magnitude: return "UnrenderableMagnitude";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::duplicate_task: return "DuplicateTask";
    case Errc::empty_skill: return "EmptySkill";
    case Errc::singular_kernel: return "SingularKernel";
    case Errc::divergence: return "DivergenceError";
    case Errc::numerical_error: return "NumericalError";
    case Errc::schema_version_mismatch: return "SchemaVersionMismatch";
    case Errc::corrupt_file: return "CorruptFile";
    case Errc::stale_config: return "StaleConfig";
    case Errc::feedback_timeout: return "FeedbackTimeout";
    case Errc::config_error: return "ConfigError";
    }
    return "Unknown";
}

/// Library error. `detail()` carries the offending token for parse errors.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, std::string detail = {})
        : std::runtime_error(std::string(errc_name(code)) + ": " + what),
          code_(code), detail_(std::move(detail)) {}

    Errc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

/// Real vector tagged with the domain concept it represents, so a task
/// parameter cannot be passed where policy parameters are expected.
template <typename Tag>
struct Tagged {
    Vector values;

    Tagged() = default;
    explicit Tagged(Vector v) : values(std::move(v)) {}
    Tagged(std::initializer_list<double> xs) : values(static_cast<Eigen::Index>(xs.size())) {
        Eigen::Index i = 0;
        for (double x : xs) values[i++] = x;
    }

    Eigen::Index size() const { return values.size(); }
    double operator[](Eigen::Index i) const { return values[i]; }
    double& operator[](Eigen::Index i) { return values[i]; }
    bool all_finite() const { return values.allFinite(); }

    friend bool operator==(const Tagged& a, const Tagged& b) {
        return a.values.size() == b.values.size() && a.values == b.values;
    }
};

using TaskParam = Tagged<struct TaskParamTag>;
using PolicyParams = Tagged<struct PolicyParamsTag>;
using AdverbEmbedding = Tagged<struct AdverbEmbeddingTag>;

/// Axis-aligned box; the task-parameter space T of every skill is one.
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector l, Vector h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size())
            throw Error(Errc::dimension_mismatch, "box bounds differ in dimension");
        if ((hi.array() < lo.array()).any())
            throw Error(Errc::invalid_params, "box upper bound below lower bound");
    }

    Eigen::Index dim() const { return lo.size(); }
    Vector width() const { return hi - lo; }
    double diagonal() const { return width().norm(); }

    bool contains(const Vector& x, double tol = 0.0) const {
        return x.size() == lo.size() && (x.array() >= lo.array() - tol).all() &&
               (x.array() <= hi.array() + tol).all();
    }

    Vector clip(const Vector& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

    /// Central sub-box holding `fraction` of each side.
    Box interior(double fraction) const {
        Vector margin = 0.5 * (1.0 - fraction) * width();
        return {lo + margin, hi - margin};
    }

    Vector sample(Rng& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vector x(lo.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = lo[i] + u(rng) * (hi[i] - lo[i]);
        return x;
    }
};

inline void require_dims(Eigen::Index got, Eigen::Index want, std::string_view what) {
    if (got != want)
        throw Error(Errc::dimension_mismatch, std::string(what) + ": expected dimension " +
                                                  std::to_string(want) + ", got " +
                                                  std::to_string(got));
}

/// 64-bit FNV-1a, rendered as 16 hex digits. Stable across platforms.
inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

/// Derive an independent stream seed from a base seed and an index.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace asg

#endif
