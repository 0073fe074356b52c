#ifndef ASG_DATASET_HPP
#define ASG_DATASET_HPP

#include "asg/model.hpp"
#include "asg/tasks.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace asg {

inline constexpr int kDatasetSchemaVersion = 1;

/// First line of a dataset file. Axis order and the axis-config hash travel
/// with the data so a reordered config is caught at load time.
struct DatasetHeader {
    std::string task;
    std::string skill_id;
    std::string axis_config_hash;
    std::vector<std::string> axes;  ///< "positive-negative" per axis, in embedding order
    Box space;
};

struct Dataset {
    DatasetHeader header;
    std::vector<AsgSample> samples;

    std::size_t labelled_count() const {
        std::size_t n = 0;
        for (const auto& s : samples) n += s.augmented ? 0 : 1;
        return n;
    }
};

inline DatasetHeader header_for(const Task& task) {
    DatasetHeader h;
    h.task = task.name();
    h.skill_id = task.skill_id();
    h.axis_config_hash = task.axes().hash();
    for (const auto& a : task.axes().axes) h.axes.push_back(a.positive + "-" + a.negative);
    h.space = task.space();
    return h;
}

/// Grounding data by the pair procedure: draw (tau, tau') uniformly from T,
/// execute both, have the task's labeller describe the observed difference,
/// and record delta_tau = tau' - tau. Then append round(aug_fraction * size)
/// zero-feedback samples (l = 0, delta_tau = 0) at fresh uniform tau.
inline Dataset gen_dataset(const Task& task, std::size_t size, Rng& rng, double aug_fraction = 0.2) {
    if (size == 0) throw Error(Errc::insufficient_data, "dataset size must be positive");
    if (aug_fraction < 0) throw Error(Errc::invalid_params, "augmentation fraction must be non-negative");
    Dataset d;
    d.header = header_for(task);
    const Box& space = task.space();
    for (std::size_t i = 0; i < size; ++i) {
        const TaskParam tau(space.sample(rng));
        const TaskParam tau_prime(space.sample(rng));
        const TaskParam seen = task.outcome(tau);
        const TaskParam seen_prime = task.outcome(tau_prime);
        AsgSample s;
        s.l = normalize_grades(task.axes(), task.label(seen, seen_prime));
        s.tau = tau;
        s.delta_tau = tau_prime.values - tau.values;
        d.samples.push_back(std::move(s));
    }
    const auto n_aug = static_cast<std::size_t>(std::lround(aug_fraction * static_cast<double>(size)));
    for (std::size_t i = 0; i < n_aug; ++i) {
        AsgSample s;
        s.l = AdverbEmbedding(Vector::Zero(static_cast<Eigen::Index>(task.axes().dim())));
        s.tau = TaskParam(space.sample(rng));
        s.delta_tau = Vector::Zero(space.dim());
        s.augmented = true;
        d.samples.push_back(std::move(s));
    }
    return d;
}

inline void write_dataset_jsonl(std::ostream& out, const Dataset& d) {
    using detail::vec_to_json;
    nlohmann::json h{{"type", "header"},
                     {"schema_version", kDatasetSchemaVersion},
                     {"task", d.header.task},
                     {"skill_id", d.header.skill_id},
                     {"axis_config_hash", d.header.axis_config_hash},
                     {"axes", d.header.axes},
                     {"bounds", {{"lo", vec_to_json(d.header.space.lo)}, {"hi", vec_to_json(d.header.space.hi)}}}};
    out << h.dump() << '\n';
    for (const auto& s : d.samples) {
        nlohmann::json line{{"l", vec_to_json(s.l.values)},
                            {"tau", vec_to_json(s.tau.values)},
                            {"delta_tau", vec_to_json(s.delta_tau)},
                            {"augmented", s.augmented}};
        out << line.dump() << '\n';
    }
}

inline void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error(Errc::config_error, "cannot write " + path);
    write_dataset_jsonl(f, d);
}

inline Dataset read_dataset_jsonl(std::istream& in) {
    using detail::vec_from_json;
    Dataset d;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    try {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto j = nlohmann::json::parse(line);
            if (!have_header) {
                if (j.value("type", "") != "header")
                    throw Error(Errc::corrupt_file, "dataset must start with a header line");
                if (j.at("schema_version").get<int>() != kDatasetSchemaVersion)
                    throw Error(Errc::schema_version_mismatch, "unsupported dataset schema version");
                d.header.task = j.at("task").get<std::string>();
                d.header.skill_id = j.at("skill_id").get<std::string>();
                d.header.axis_config_hash = j.at("axis_config_hash").get<std::string>();
                d.header.axes = j.at("axes").get<std::vector<std::string>>();
                d.header.space = Box(vec_from_json(j.at("bounds").at("lo")), vec_from_json(j.at("bounds").at("hi")));
                have_header = true;
                continue;
            }
            AsgSample s;
            s.l = AdverbEmbedding(vec_from_json(j.at("l")));
            s.tau = TaskParam(vec_from_json(j.at("tau")));
            s.delta_tau = vec_from_json(j.at("delta_tau"));
            s.augmented = j.value("augmented", false);
            require_dims(s.l.size(), static_cast<Eigen::Index>(d.header.axes.size()), "dataset embedding");
            require_dims(s.tau.size(), d.header.space.dim(), "dataset tau");
            d.samples.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_file, "dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) throw Error(Errc::corrupt_file, "dataset is empty");
    return d;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::corrupt_file, "cannot open " + path);
    return read_dataset_jsonl(f);
}

} // namespace asg

#endif
