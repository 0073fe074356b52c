#ifndef ASG_MODEL_HPP
#define ASG_MODEL_HPP

#include "asg/core.hpp"
#include "asg/mlp.hpp"
#include "asg/skills.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace asg {

/// One grounding example: feedback l observed between tau and tau + delta_tau.
struct AsgSample {
    AdverbEmbedding l;
    TaskParam tau;
    Vector delta_tau;
    bool augmented = false;  ///< synthetic zero-feedback sample
};

enum class RegressorKind { mlp, knn, krr };

inline const char* regressor_name(RegressorKind k) {
    switch (k) {
    case RegressorKind::mlp: return "mlp";
    case RegressorKind::knn: return "knn";
    case RegressorKind::krr: return "krr";
    }
    return "unknown";
}

inline RegressorKind parse_regressor(const std::string& s) {
    if (s == "mlp") return RegressorKind::mlp;
    if (s == "knn") return RegressorKind::knn;
    if (s == "krr") return RegressorKind::krr;
    throw Error(Errc::config_error, "unknown regressor kind '" + s + "'");
}

/// Per-feature affine maps applied before and after the regressor.
struct NormStats {
    Vector in_mean, in_scale;
    Vector out_mean, out_scale;

    Vector normalize_input(const Vector& x) const { return (x - in_mean).cwiseQuotient(in_scale); }
    Vector denormalize_output(const Vector& z) const { return z.cwiseProduct(out_scale) + out_mean; }
};

/// Nearest neighbours in the standardised joint (tau, l) space.
struct KnnRegressor {
    int k = 3;
    Matrix inputs;   ///< features x samples, standardised
    Matrix targets;  ///< outputs x samples, raw
};

/// Gaussian-kernel ridge regression, fitted per output on standardised targets.
struct KrrRegressor {
    double width = 1.0;
    double ridge = 1e-2;
    Matrix inputs;  ///< features x samples, standardised
    Matrix dual;    ///< outputs x samples
};

inline constexpr int kModelSchemaVersion = 1;

/// Identifies what a model was trained against; predictions are refused when
/// the caller's context differs.
struct ModelContext {
    std::string axis_config_hash;
    std::string skill_id;
};

struct AsgModel {
    RegressorKind kind = RegressorKind::mlp;
    std::variant<MlpParams, KnnRegressor, KrrRegressor> regressor;
    NormStats norm;
    ModelContext context;
    int task_dim = 0;
    int embed_dim = 0;
};

namespace detail {

inline Vector features(const TaskParam& tau, const AdverbEmbedding& l) {
    Vector f(tau.size() + l.size());
    f << tau.values, l.values;
    return f;
}

inline void check_dataset(const std::vector<AsgSample>& data, std::size_t min_size) {
    if (data.size() < min_size)
        throw Error(Errc::insufficient_data, "need at least " + std::to_string(min_size) + " samples, got " +
                                                 std::to_string(data.size()));
    for (const auto& s : data) {
        require_dims(s.tau.size(), data.front().tau.size(), "sample tau");
        require_dims(s.l.size(), data.front().l.size(), "sample embedding");
        require_dims(s.delta_tau.size(), s.tau.size(), "sample delta_tau");
        if (!s.tau.all_finite() || !s.l.all_finite() || !s.delta_tau.allFinite())
            throw Error(Errc::invalid_params, "non-finite training sample");
    }
}

struct Design {
    Matrix x;  ///< features x n
    Matrix y;  ///< outputs x n
};

inline Design raw_design(const std::vector<AsgSample>& data) {
    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index din = data.front().tau.size() + data.front().l.size();
    Design d{Matrix(din, n), Matrix(data.front().delta_tau.size(), n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        d.x.col(j) = features(data[static_cast<std::size_t>(j)].tau, data[static_cast<std::size_t>(j)].l);
        d.y.col(j) = data[static_cast<std::size_t>(j)].delta_tau;
    }
    return d;
}

inline void standardize_stats(const Matrix& m, Vector& mean, Vector& scale) {
    mean = m.rowwise().mean();
    scale.resize(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double var = (m.row(i).array() - mean[i]).square().mean();
        scale[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
}

inline Matrix apply_input_norm(const NormStats& s, const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = s.normalize_input(x.col(j));
    return out;
}

inline AsgModel model_shell(RegressorKind kind, const std::vector<AsgSample>& data, const ModelContext& ctx,
                            bool standardize_outputs, Design& design) {
    AsgModel m;
    m.kind = kind;
    m.context = ctx;
    m.task_dim = static_cast<int>(data.front().tau.size());
    m.embed_dim = static_cast<int>(data.front().l.size());
    design = raw_design(data);
    standardize_stats(design.x, m.norm.in_mean, m.norm.in_scale);
    if (standardize_outputs) {
        standardize_stats(design.y, m.norm.out_mean, m.norm.out_scale);
    } else {
        m.norm.out_mean = Vector::Zero(design.y.rows());
        m.norm.out_scale = Vector::Ones(design.y.rows());
    }
    design.x = apply_input_norm(m.norm, design.x);
    for (Eigen::Index j = 0; j < design.y.cols(); ++j)
        design.y.col(j) = (design.y.col(j) - m.norm.out_mean).cwiseQuotient(m.norm.out_scale);
    return m;
}

inline Matrix gaussian_gram(const Matrix& a, const Matrix& b, double width) {
    Matrix g(a.cols(), b.cols());
    const double inv = 1.0 / (2.0 * width * width);
    for (Eigen::Index j = 0; j < b.cols(); ++j)
        for (Eigen::Index i = 0; i < a.cols(); ++i) g(i, j) = std::exp(-(a.col(i) - b.col(j)).squaredNorm() * inv);
    return g;
}

} // namespace detail

/// Train the grounding as an MLP on standardised inputs and targets.
inline AsgModel train_mlp(const std::vector<AsgSample>& data, const MlpHyper& hyper, const ModelContext& ctx,
                          std::vector<double>* loss_history = nullptr) {
    detail::check_dataset(data, 10);
    detail::Design d;
    AsgModel m = detail::model_shell(RegressorKind::mlp, data, ctx, true, d);
    m.regressor = fit_mlp(d.x, d.y, hyper, loss_history);
    return m;
}

inline AsgModel train_knn(const std::vector<AsgSample>& data, int k, const ModelContext& ctx) {
    if (k < 1) throw Error(Errc::invalid_params, "k must be at least 1");
    detail::check_dataset(data, static_cast<std::size_t>(k));
    detail::Design d;
    AsgModel m = detail::model_shell(RegressorKind::knn, data, ctx, false, d);
    m.regressor = KnnRegressor{k, d.x, d.y};
    return m;
}

struct KrrHyper {
    double width = 1.0;
    double ridge = 1e-2;
};

/// Closed-form kernel ridge fit, (G + ridge I)^{-1} y per output.
inline AsgModel train_krr(const std::vector<AsgSample>& data, const KrrHyper& hyper, const ModelContext& ctx) {
    detail::check_dataset(data, 2);
    if (!(hyper.width > 0) || hyper.ridge < 0) throw Error(Errc::invalid_params, "invalid KRR hyperparameters");
    detail::Design d;
    AsgModel m = detail::model_shell(RegressorKind::krr, data, ctx, true, d);
    // Duplicate rows make the unregularised Gram matrix exactly singular.
    if (hyper.ridge == 0.0) {
        for (Eigen::Index i = 0; i < d.x.cols(); ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                if (d.x.col(i) == d.x.col(j))
                    throw Error(Errc::singular_kernel, "duplicate inputs with zero ridge");
    }
    Matrix g = detail::gaussian_gram(d.x, d.x, hyper.width);
    g.diagonal().array() += hyper.ridge;
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success)
        throw Error(Errc::singular_kernel, "kernel matrix is singular; use a positive ridge or distinct inputs");
    Matrix dual = llt.solve(d.y.transpose()).transpose();
    if (!dual.allFinite()) throw Error(Errc::singular_kernel, "kernel solve produced non-finite coefficients");
    m.regressor = KrrRegressor{hyper.width, hyper.ridge, d.x, dual};
    return m;
}

/// Lambda(l, tau): predicted adjustment. Callers apply tau + delta and clip.
inline Vector predict(const AsgModel& m, const ModelContext& ctx, const TaskParam& tau, const AdverbEmbedding& l) {
    if (ctx.axis_config_hash != m.context.axis_config_hash)
        throw Error(Errc::stale_config, "model trained for axis config " + m.context.axis_config_hash + ", caller has " +
                                            ctx.axis_config_hash);
    if (ctx.skill_id != m.context.skill_id)
        throw Error(Errc::stale_config, "model trained for skill " + m.context.skill_id + ", caller has " + ctx.skill_id);
    require_dims(tau.size(), m.task_dim, "tau");
    require_dims(l.size(), m.embed_dim, "embedding");
    const Vector x = m.norm.normalize_input(detail::features(tau, l));

    Vector z = std::visit(
        [&](const auto& r) -> Vector {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, MlpParams>) {
                return mlp_forward(r, x);
            } else if constexpr (std::is_same_v<R, KnnRegressor>) {
                return idw_average(
                    static_cast<std::size_t>(r.inputs.cols()), r.k,
                    [&](std::size_t i) { return (r.inputs.col(static_cast<Eigen::Index>(i)) - x).norm(); },
                    [&](std::size_t i) -> Vector { return r.targets.col(static_cast<Eigen::Index>(i)); });
            } else {
                const Matrix kx = detail::gaussian_gram(r.inputs, x, r.width);
                return r.dual * kx.col(0);
            }
        },
        m.regressor);
    Vector out = m.norm.denormalize_output(z);
    if (!out.allFinite()) throw Error(Errc::numerical_error, "prediction is not finite");
    return out;
}

namespace detail {

inline nlohmann::json mat_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

inline Matrix mat_from_json(const nlohmann::json& j) {
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    Matrix m(r, c);
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != r) throw Error(Errc::corrupt_file, "matrix row count mismatch");
    for (Eigen::Index i = 0; i < r; ++i) {
        Vector row = vec_from_json(data.at(static_cast<std::size_t>(i)));
        if (row.size() != c) throw Error(Errc::corrupt_file, "matrix column count mismatch");
        m.row(i) = row.transpose();
    }
    return m;
}

} // namespace detail

inline nlohmann::json to_json(const AsgModel& m) {
    using detail::mat_to_json;
    using detail::vec_to_json;
    nlohmann::json params = std::visit(
        [](const auto& r) -> nlohmann::json {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, MlpParams>) {
                nlohmann::json w = nlohmann::json::array(), b = nlohmann::json::array();
                for (const auto& x : r.weights) w.push_back(mat_to_json(x));
                for (const auto& x : r.biases) b.push_back(vec_to_json(x));
                return {{"layer_sizes", r.layer_sizes()}, {"activation", "tanh"}, {"weights", w}, {"biases", b}};
            } else if constexpr (std::is_same_v<R, KnnRegressor>) {
                return {{"k", r.k}, {"inputs", mat_to_json(r.inputs)}, {"targets", mat_to_json(r.targets)}};
            } else {
                return {{"width", r.width}, {"ridge", r.ridge}, {"inputs", mat_to_json(r.inputs)},
                        {"dual", mat_to_json(r.dual)}};
            }
        },
        m.regressor);
    return {{"schema_version", kModelSchemaVersion},
            {"kind", regressor_name(m.kind)},
            {"axis_config_hash", m.context.axis_config_hash},
            {"skill_id", m.context.skill_id},
            {"task_dim", m.task_dim},
            {"embed_dim", m.embed_dim},
            {"norm_stats",
             {{"in_mean", vec_to_json(m.norm.in_mean)},
              {"in_scale", vec_to_json(m.norm.in_scale)},
              {"out_mean", vec_to_json(m.norm.out_mean)},
              {"out_scale", vec_to_json(m.norm.out_scale)}}},
            {"params", params}};
}

inline AsgModel model_from_json(const nlohmann::json& j) {
    using detail::mat_from_json;
    using detail::vec_from_json;
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != kModelSchemaVersion)
            throw Error(Errc::schema_version_mismatch, "model schema version " + std::to_string(version) +
                                                           ", expected " + std::to_string(kModelSchemaVersion));
        AsgModel m;
        m.kind = parse_regressor(j.at("kind").get<std::string>());
        m.context.axis_config_hash = j.at("axis_config_hash").get<std::string>();
        m.context.skill_id = j.at("skill_id").get<std::string>();
        m.task_dim = j.at("task_dim").get<int>();
        m.embed_dim = j.at("embed_dim").get<int>();
        const auto& ns = j.at("norm_stats");
        m.norm.in_mean = vec_from_json(ns.at("in_mean"));
        m.norm.in_scale = vec_from_json(ns.at("in_scale"));
        m.norm.out_mean = vec_from_json(ns.at("out_mean"));
        m.norm.out_scale = vec_from_json(ns.at("out_scale"));
        const auto& p = j.at("params");
        switch (m.kind) {
        case RegressorKind::mlp: {
            MlpParams mp;
            for (const auto& w : p.at("weights")) mp.weights.push_back(mat_from_json(w));
            for (const auto& b : p.at("biases")) mp.biases.push_back(vec_from_json(b));
            mp.validate();
            m.regressor = std::move(mp);
            break;
        }
        case RegressorKind::knn:
            m.regressor = KnnRegressor{p.at("k").get<int>(), mat_from_json(p.at("inputs")), mat_from_json(p.at("targets"))};
            break;
        case RegressorKind::krr:
            m.regressor = KrrRegressor{p.at("width").get<double>(), p.at("ridge").get<double>(),
                                       mat_from_json(p.at("inputs")), mat_from_json(p.at("dual"))};
            break;
        }
        const Eigen::Index din = m.task_dim + m.embed_dim;
        if (m.norm.in_mean.size() != din || m.norm.in_scale.size() != din || m.norm.out_mean.size() != m.task_dim ||
            m.norm.out_scale.size() != m.task_dim)
            throw Error(Errc::corrupt_file, "normalisation stats do not match model dimensions");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_file, std::string("malformed model: ") + e.what());
    }
}

inline void save_model(const AsgModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(Errc::config_error, "cannot write " + path);
    f << to_json(m).dump() << '\n';
    if (!f) throw Error(Errc::config_error, "write failed for " + path);
}

inline AsgModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::corrupt_file, "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_file, path + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace asg

#endif
