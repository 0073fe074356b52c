// asg: dataset generation, skill pretraining, training, comparisons and the
// coaching service.

#include "asg/asg.hpp"
#include "asg/http.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace asg;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::string oracle;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
    cmd->add_option("--config", c.config, "key = value experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "overrides the config seed");
    cmd->add_option("--set", c.overrides, "extra key=value overrides, repeatable");
    cmd->add_option("--oracle", c.oracle, "Ball-Throw labeller: corrected (default) or verbatim")
        ->check(CLI::IsMember({"corrected", "verbatim"}));
    cmd->add_option("--out", c.out, out_help)->required();
}

ExperimentConfig load_config(const Common& c) {
    KeyValueConfig kv = c.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config);
    for (const auto& o : c.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw Error(Errc::config_error, "--set expects key=value, got '" + o + "'");
        kv.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (c.seed) kv.set("seed", std::to_string(*c.seed));
    if (!c.oracle.empty()) kv.set("oracle", c.oracle);
    return ExperimentConfig::from_config(kv);
}

std::optional<KnnSkill> skill_for(const ExperimentConfig& cfg, const std::string& skill_path) {
    if (cfg.task != TaskKind::puck_slide) return std::nullopt;
    const std::string path = skill_path.empty() ? cfg.skill_file : skill_path;
    if (path.empty()) throw Error(Errc::empty_skill, "puck_slide needs --skill or skill_file");
    return load_knn_skill(path);
}

void print_pretrain(const PretrainReport& rep) {
    std::cout << "pretraining: " << rep.succeeded << " of " << rep.attempted << " goals converged, "
              << rep.skill.exemplars.size() << " exemplars, k = " << rep.skill.k << ", " << rep.episodes
              << " episodes\n";
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
}

fs::path ensure_parent(const std::string& out) {
    fs::path p(out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
}

KnnSkill pretrain_to(const ExperimentConfig& cfg, const fs::path& path) {
    const PretrainReport rep = pretrain_from_config(cfg, PuckSlideEnv::from_config(cfg.raw));
    print_pretrain(rep);
    save_knn_skill(rep.skill, path.string());
    return rep.skill;
}

void run_and_write(const ExperimentConfig& cfg, const Task& task, const AsgModel& model, const fs::path& out) {
    const ComparisonResult r = run_comparison(cfg, task, model);
    write_comparison(r, out, cfg.raw.get_int("plots", 1) != 0);
    std::cout << format_summary_table(r);
}

std::atomic<httplib::Server*> g_server{nullptr};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adverb-skill grounding experiments and coaching service"};
    app.require_subcommand(1);

    Common gen_opts, pre_opts, train_opts, cmp_opts, eval_opts;
    std::string gen_skill, train_skill, train_data, eval_model, eval_skill;

    auto* gen = app.add_subcommand("gen-data", "generate a grounding dataset (JSONL)");
    add_common(gen, gen_opts, "dataset path");
    gen->add_option("--skill", gen_skill, "puck skill file");

    auto* pre = app.add_subcommand("pretrain-skill", "fit the puck KNN skill from optimised strikes");
    add_common(pre, pre_opts, "skill path");

    auto* train = app.add_subcommand("train", "train the grounding regressor");
    add_common(train, train_opts, "model path (*.model.json)");
    train->add_option("--data", train_data, "dataset from gen-data")->required()->check(CLI::ExistingFile);
    train->add_option("--skill", train_skill, "puck skill file");

    auto* cmp = app.add_subcommand("compare", "full pipeline: skill, data, model, ASG vs reward search");
    add_common(cmp, cmp_opts, "output directory");

    auto* eval = app.add_subcommand("eval", "compare using an existing model");
    add_common(eval, eval_opts, "output directory");
    eval->add_option("--model", eval_model, "model file")->required()->check(CLI::ExistingFile);
    eval->add_option("--skill", eval_skill, "puck skill file");

    int port = 8750;
    std::string model_dir = "models", data_dir = "sessions", cors_origin, host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "run the HTTP coaching service");
    serve->add_option("--port", port, "listen port")->capture_default_str();
    serve->add_option("--host", host, "bind address")->capture_default_str();
    serve->add_option("--model-dir", model_dir, "directory of *.model.json and *.skill.json")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "session logs")->capture_default_str();
    serve->add_option("--cors-origin", cors_origin, "Access-Control-Allow-Origin value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const ExperimentConfig cfg = load_config(gen_opts);
            const auto skill = skill_for(cfg, gen_skill);
            const auto task = make_task(cfg, skill ? &*skill : nullptr);
            Rng rng(mix_seed(cfg.seed, streams::dataset));
            const Dataset d = gen_dataset(*task, cfg.dataset_size, rng, cfg.zero_augmentation);
            save_dataset(d, ensure_parent(gen_opts.out).string());
            std::cout << "wrote " << d.samples.size() << " samples (" << d.labelled_count() << " labelled) to "
                      << gen_opts.out << '\n';
        } else if (*pre) {
            const ExperimentConfig cfg = load_config(pre_opts);
            if (cfg.task != TaskKind::puck_slide) throw Error(Errc::config_error, "pretrain-skill needs task = puck_slide");
            pretrain_to(cfg, ensure_parent(pre_opts.out));
            std::cout << "wrote " << pre_opts.out << '\n';
        } else if (*train) {
            const ExperimentConfig cfg = load_config(train_opts);
            const auto skill = skill_for(cfg, train_skill);
            const auto task = make_task(cfg, skill ? &*skill : nullptr);
            const Dataset d = load_dataset(train_data);
            if (d.header.axis_config_hash != task->axes().hash() || d.header.skill_id != task->skill_id())
                throw Error(Errc::stale_config, "dataset was generated for a different axis config or skill");
            std::vector<double> loss;
            const AsgModel m = train_model(cfg, d.samples, task->context(), &loss);
            save_model(m, ensure_parent(train_opts.out).string());
            std::cout << "trained " << regressor_name(m.kind) << " on " << d.samples.size() << " samples";
            if (!loss.empty()) std::cout << ", final loss " << loss.back();
            std::cout << "\nwrote " << train_opts.out << '\n';
        } else if (*cmp) {
            const ExperimentConfig cfg = load_config(cmp_opts);
            const fs::path out(cmp_opts.out);
            fs::create_directories(out);
            const Pipeline p = build_pipeline(cfg);
            if (p.pretrain) {
                print_pretrain(*p.pretrain);
                save_knn_skill(p.pretrain->skill, (out / "puck.skill.json").string());
            }
            save_dataset(p.data, (out / "dataset.jsonl").string());
            save_model(p.model, (out / (p.task->name() + ".model.json")).string());
            run_and_write(cfg, *p.task, p.model, out);
        } else if (*eval) {
            const ExperimentConfig cfg = load_config(eval_opts);
            const auto skill = skill_for(cfg, eval_skill);
            const auto task = make_task(cfg, skill ? &*skill : nullptr);
            run_and_write(cfg, *task, load_model(eval_model), fs::path(eval_opts.out));
        } else if (*serve) {
            ModelRegistry reg = ModelRegistry::scan(model_dir);
            for (const auto& [file, why] : reg.problems()) std::cerr << "warning: skipped " << file << ": " << why << '\n';
            std::cout << "loaded " << reg.models().size() << " model(s) from " << model_dir << '\n';
            ServiceConfig scfg;
            scfg.data_dir = data_dir;
            SessionManager mgr(std::move(reg), scfg);
            httplib::Server server;
            bind_routes(server, mgr, cors_origin);
            g_server = &server;
            std::signal(SIGINT, [](int) {
                if (auto* s = g_server.load()) s->stop();
            });
            std::signal(SIGTERM, [](int) {
                if (auto* s = g_server.load()) s->stop();
            });
            std::cout << "listening on " << host << ':' << port << '\n' << std::flush;
            if (!server.listen(host, port)) throw Error(Errc::config_error, "cannot bind port " + std::to_string(port));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
