#ifndef ASG_SERVICE_HPP
#define ASG_SERVICE_HPP

#include "asg/harness.hpp"
#include "asg/model.hpp"
#include "asg/tasks.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace asg {

using nlohmann::json;

inline constexpr int kServiceSchemaVersion = 1;
inline constexpr std::size_t kMaxTrajectoryPoints = 500;

/// Indices of at most `max_points` samples spread evenly over [0, n), always
/// including the first and last.
inline std::vector<std::size_t> decimate_indices(std::size_t n, std::size_t max_points) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    if (n <= max_points || max_points < 2) {
        const std::size_t m = n <= max_points ? n : 1;
        for (std::size_t i = 0; i < m; ++i) idx.push_back(i);
        return idx;
    }
    for (std::size_t i = 0; i < max_points; ++i)
        idx.push_back(static_cast<std::size_t>(
            std::llround(static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(max_points - 1))));
    return idx;
}

inline json trajectory_json(const Trajectory& tr, std::size_t max_points = kMaxTrajectoryPoints) {
    json samples = json::array();
    for (std::size_t i : decimate_indices(tr.samples.size(), max_points)) {
        const auto& s = tr.samples[i];
        samples.push_back({s.t, s.pos.x(), s.pos.y()});
    }
    json effector = json::array();
    for (std::size_t i : decimate_indices(tr.effector.size(), max_points)) {
        const auto& p = tr.effector[i];
        effector.push_back({p.t, p.pos.x(), p.pos.y()});
    }
    return {{"samples", samples},
            {"effector", effector},
            {"outcome", outcome_name(tr.kind)},
            {"terminal", detail::vec_to_json(tr.terminal.values)}};
}

/// A trained model bound to the task it was trained for.
struct LoadedModel {
    std::string id;
    std::string path;
    std::string hash;  ///< FNV-1a of the model file contents
    AsgModel model;
    std::shared_ptr<const Task> task;
};

/// Loads every `*.model.json` in a directory. Puck models are paired with the
/// `*.skill.json` whose hash matches their skill id; an optional
/// `<id>.task.cfg` overrides environment settings.
class ModelRegistry {
public:
    ModelRegistry() = default;

    static ModelRegistry scan(const std::filesystem::path& dir) {
        ModelRegistry reg;
        if (!std::filesystem::is_directory(dir)) throw Error(Errc::config_error, "model dir not found: " + dir.string());
        std::vector<std::filesystem::path> models, skills;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (ends_with(name, ".model.json")) models.push_back(entry.path());
            if (ends_with(name, ".skill.json")) skills.push_back(entry.path());
        }
        std::sort(models.begin(), models.end());
        std::sort(skills.begin(), skills.end());

        std::map<std::string, KnnSkill> skill_by_hash;
        for (const auto& p : skills) {
            try {
                KnnSkill s = load_knn_skill(p.string());
                skill_by_hash.emplace(s.hash(), std::move(s));
            } catch (const Error& e) {
                reg.problems_.push_back({p.filename().string(), e.what()});
            }
        }
        for (const auto& p : models) {
            const std::string file = p.filename().string();
            const std::string id = file.substr(0, file.size() - std::string(".model.json").size());
            try {
                KeyValueConfig task_cfg;
                const auto cfg_path = p.parent_path() / (id + ".task.cfg");
                if (std::filesystem::exists(cfg_path)) task_cfg = KeyValueConfig::load(cfg_path.string());
                reg.add(id, p.string(), load_model(p.string()), skill_by_hash, task_cfg, file_hash(p));
            } catch (const Error& e) {
                reg.problems_.push_back({file, e.what()});
            }
        }
        return reg;
    }

    /// Register an in-memory model, building its task from the skill id.
    void add(const std::string& id, const std::string& path, AsgModel model,
             const std::map<std::string, KnnSkill>& skills, const KeyValueConfig& task_cfg = {},
             std::string hash = {}) {
        std::shared_ptr<const Task> task;
        const std::string& sid = model.context.skill_id;
        if (sid == "ball_throw") {
            task = BallThrowTask::from_config(task_cfg);
        } else if (sid.rfind("puck_slide:knn:", 0) == 0) {
            const std::string skill_hash = sid.substr(std::string("puck_slide:knn:").size());
            auto it = skills.find(skill_hash);
            if (it == skills.end())
                throw Error(Errc::stale_config, "no skill file with hash " + skill_hash + " for model " + id);
            task = std::make_shared<PuckSlideTask>(PuckSlideEnv::from_config(task_cfg), it->second);
        } else {
            throw Error(Errc::config_error, "model " + id + " has unknown skill id '" + sid + "'");
        }
        // Refuses models whose axis config or skill no longer match.
        const ModelContext ctx = task->context();
        if (ctx.axis_config_hash != model.context.axis_config_hash || ctx.skill_id != model.context.skill_id)
            throw Error(Errc::stale_config, "model " + id + " does not match its task context");
        if (hash.empty()) hash = fnv1a_hex(to_json(model).dump());
        models_[id] = LoadedModel{id, path, std::move(hash), std::move(model), std::move(task)};
    }

    void add_task(const std::string& id, AsgModel model, std::shared_ptr<const Task> task) {
        const ModelContext ctx = task->context();
        if (ctx.axis_config_hash != model.context.axis_config_hash || ctx.skill_id != model.context.skill_id)
            throw Error(Errc::stale_config, "model " + id + " does not match its task context");
        std::string hash = fnv1a_hex(to_json(model).dump());
        models_[id] = LoadedModel{id, "", std::move(hash), std::move(model), std::move(task)};
    }

    const LoadedModel* find(const std::string& id) const {
        auto it = models_.find(id);
        return it == models_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, LoadedModel>& models() const { return models_; }
    const std::vector<std::pair<std::string, std::string>>& problems() const { return problems_; }

private:
    static bool ends_with(const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    }

    static std::string file_hash(const std::filesystem::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return fnv1a_hex(bytes);
    }

    std::map<std::string, LoadedModel> models_;
    std::vector<std::pair<std::string, std::string>> problems_;
};

enum class SessionStatus { active, satisfied, expired };

inline const char* status_name(SessionStatus s) {
    switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::satisfied: return "satisfied";
    case SessionStatus::expired: return "expired";
    }
    return "unknown";
}

struct HistoryEntry {
    int episode = 0;
    TaskParam tau;
    std::optional<std::string> phrase;  ///< empty for the initial rollout
    std::optional<AdverbEmbedding> l;
    std::optional<Vector> delta_tau;
    TaskParam terminal;
    std::string outcome;
    std::string request_id;
    double time = 0.0;
};

struct Session {
    std::string id;
    std::string model_id;
    std::string task;
    std::uint64_t seed = 0;
    TaskParam tau;
    SessionStatus status = SessionStatus::active;
    double created = 0.0;
    double updated = 0.0;
    std::string create_request_id;
    std::string satisfied_request_id;
    std::vector<HistoryEntry> history;
    std::mutex guard;
};

struct HttpResponse {
    int status = 200;
    json body;
};

struct ServiceConfig {
    std::size_t max_sessions = 64;
    double idle_expiry_s = 30.0 * 60.0;
    std::string data_dir;  ///< empty disables persistence
};

/// Session bookkeeping behind the HTTP routes; usable without sockets.
class SessionManager {
public:
    using Clock = std::function<double()>;

    SessionManager(ModelRegistry registry, ServiceConfig cfg = {}, Clock clock = wall_clock())
        : registry_(std::move(registry)), cfg_(std::move(cfg)), clock_(std::move(clock)) {
        if (!cfg_.data_dir.empty()) {
            std::filesystem::create_directories(cfg_.data_dir);
            restore();
        }
    }

    static Clock wall_clock() {
        return [] {
            return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
        };
    }

    const ModelRegistry& registry() const { return registry_; }

    /// POST /sessions
    HttpResponse create(const json& body) {
        try {
            const std::string model_id = body.value("model_id", "");
            const std::string request_id = body.value("request_id", "");
            std::lock_guard lock(mu_);
            if (!request_id.empty()) {
                if (auto it = create_requests_.find(request_id); it != create_requests_.end()) {
                    auto s = sessions_.at(it->second);
                    std::lock_guard sl(s->guard);
                    return {201, session_json(*s, true)};
                }
            }
            const LoadedModel* m = registry_.find(model_id);
            if (!m) return error(404, Errc::config_error, "unknown model '" + model_id + "'", model_id);
            if (body.contains("task") && body.at("task").get<std::string>() != m->task->name())
                return error(404, Errc::config_error, "model '" + model_id + "' is not a " +
                                                          body.at("task").get<std::string>() + " model",
                             model_id);
            expire_idle_locked();
            std::size_t active = 0;
            for (auto& [_, s] : sessions_) active += s->status == SessionStatus::active ? 1 : 0;
            if (active >= cfg_.max_sessions)
                return error(429, Errc::config_error, "session limit reached", std::to_string(cfg_.max_sessions));

            auto s = std::make_shared<Session>();
            s->id = new_id();
            s->model_id = model_id;
            s->task = m->task->name();
            s->seed = body.contains("seed") && !body.at("seed").is_null() ? body.at("seed").get<std::uint64_t>()
                                                                            : std::random_device{}();
            Rng rng(s->seed);
            s->tau = TaskParam(m->task->space().sample(rng));
            s->created = s->updated = clock_();
            s->create_request_id = request_id;

            const Trajectory tr = m->task->rollout(s->tau);
            HistoryEntry e;
            e.tau = s->tau;
            e.terminal = tr.terminal;
            e.outcome = outcome_name(tr.kind);
            e.time = s->created;
            s->history.push_back(e);

            persist(*s, {{"type", "session"},
                         {"schema_version", kServiceSchemaVersion},
                         {"id", s->id},
                         {"model_id", s->model_id},
                         {"model_hash", m->hash},
                         {"task", s->task},
                         {"seed", s->seed},
                         {"tau0", detail::vec_to_json(s->tau.values)},
                         {"request_id", request_id},
                         {"time", s->created}});
            sessions_[s->id] = s;
            if (!request_id.empty()) create_requests_[request_id] = s->id;
            json out = session_json(*s, false);
            out["trajectory"] = trajectory_json(tr);
            return {201, out};
        } catch (const Error& e) {
            return error(400, e.code(), e.what(), e.detail());
        } catch (const json::exception& e) {
            return error(400, Errc::config_error, e.what(), "");
        }
    }

    /// POST /sessions/{id}/feedback
    HttpResponse feedback(const std::string& id, const json& body) {
        auto s = lookup(id);
        if (!s) return error(404, Errc::config_error, "unknown session '" + id + "'", id);
        std::lock_guard sl(s->guard);
        const LoadedModel* m = registry_.find(s->model_id);
        if (!m) return error(404, Errc::config_error, "model '" + s->model_id + "' is no longer loaded", s->model_id);
        try {
            const std::string request_id = body.value("request_id", "");
            if (!request_id.empty()) {
                for (const auto& e : s->history)
                    if (e.request_id == request_id) return {200, entry_response(*s, *m, e)};
                if (s->satisfied_request_id == request_id) return {200, session_json(*s, false)};
            }
            const double now = clock_();
            if (s->status == SessionStatus::active && now - s->updated > cfg_.idle_expiry_s) {
                s->status = SessionStatus::expired;
                persist(*s, {{"type", "expired"}, {"time", now}});
            }
            if (s->status != SessionStatus::active)
                return error(409, Errc::config_error, std::string("session is ") + status_name(s->status),
                             status_name(s->status));

            const std::string phrase = body.value("phrase", "");
            if (body.value("satisfied", false) || phrase == "satisfied") {
                s->status = SessionStatus::satisfied;
                s->satisfied_request_id = request_id;
                s->updated = now;
                persist(*s, {{"type", "satisfied"}, {"request_id", request_id}, {"time", now}});
                return {200, session_json(*s, false)};
            }
            if (!body.contains("phrase"))
                return error(400, Errc::config_error, "body needs 'phrase' or 'satisfied'", "");

            AdverbEmbedding l;
            try {
                l = parse_phrase(m->task->axes(), phrase);
            } catch (const Error& e) {
                if (e.code() == Errc::unknown_word || e.code() == Errc::conflicting_clause)
                    return error(422, e.code(), e.what(), e.detail());
                throw;
            }
            HistoryEntry e = step(*m, s->tau, l);
            e.episode = static_cast<int>(s->history.size());
            e.phrase = phrase;
            e.request_id = request_id;
            e.time = now;
            s->tau = e.tau;
            s->updated = now;
            s->history.push_back(e);
            persist(*s, {{"type", "feedback"},
                         {"request_id", request_id},
                         {"episode", e.episode},
                         {"phrase", phrase},
                         {"l", detail::vec_to_json(l.values)},
                         {"tau", detail::vec_to_json(s->history[s->history.size() - 2].tau.values)},
                         {"delta_tau", detail::vec_to_json(*e.delta_tau)},
                         {"new_tau", detail::vec_to_json(e.tau.values)},
                         {"time", now}});
            return {200, entry_response(*s, *m, s->history.back())};
        } catch (const Error& e) {
            return error(400, e.code(), e.what(), e.detail());
        } catch (const json::exception& e) {
            return error(400, Errc::config_error, e.what(), "");
        }
    }

    /// GET /sessions/{id}
    HttpResponse get(const std::string& id) {
        auto s = lookup(id);
        if (!s) return error(404, Errc::config_error, "unknown session '" + id + "'", id);
        std::lock_guard sl(s->guard);
        return {200, session_json(*s, true)};
    }

    /// GET /models
    HttpResponse models() const {
        json list = json::array();
        for (const auto& [id, m] : registry_.models()) {
            const AxisConfig& axes = m.task->axes();
            list.push_back({{"id", id},
                            {"task", m.task->name()},
                            {"regressor", regressor_name(m.model.kind)},
                            {"hash", m.hash},
                            {"skill_id", m.model.context.skill_id},
                            {"axes", axes.to_json()},
                            {"arena", m.task->arena()}});
        }
        json problems = json::array();
        for (const auto& [file, why] : registry_.problems()) problems.push_back({{"file", file}, {"error", why}});
        return {200, {{"models", list}, {"unloadable", problems}}};
    }

    /// GET /healthz
    HttpResponse health() const {
        json hashes = json::object();
        for (const auto& [id, m] : registry_.models()) hashes[id] = m.hash;
        std::lock_guard lock(mu_);
        return {200,
                {{"status", "ok"},
                 {"schema_version", kServiceSchemaVersion},
                 {"model_schema_version", kModelSchemaVersion},
                 {"models", hashes},
                 {"sessions", sessions_.size()}}};
    }

    /// One feedback round: tau' = clip(tau + Lambda(l, tau)), then execute tau'.
    static HistoryEntry step(const LoadedModel& m, const TaskParam& tau, const AdverbEmbedding& l) {
        const Vector delta = predict(m.model, m.task->context(), tau, l);
        HistoryEntry e;
        e.l = l;
        e.delta_tau = delta;
        e.tau = TaskParam(m.task->space().clip(tau.values + delta));
        const Trajectory tr = m.task->rollout(e.tau);
        e.terminal = tr.terminal;
        e.outcome = outcome_name(tr.kind);
        return e;
    }

private:
    static HttpResponse error(int status, Errc code, const std::string& message, const std::string& detail) {
        return {status, {{"error", errc_name(code)}, {"message", message}, {"detail", detail}}};
    }

    std::shared_ptr<Session> lookup(const std::string& id) {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    std::string new_id() {
        std::uniform_int_distribution<std::uint64_t> u;
        char buf[20];
        for (;;) {
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(u(id_rng_)));
            if (!sessions_.count(buf)) return buf;
        }
    }

    void expire_idle_locked() {
        const double now = clock_();
        for (auto& [_, s] : sessions_) {
            std::lock_guard sl(s->guard);
            if (s->status == SessionStatus::active && now - s->updated > cfg_.idle_expiry_s) {
                s->status = SessionStatus::expired;
                persist(*s, {{"type", "expired"}, {"time", now}});
            }
        }
    }

    static json entry_json(const HistoryEntry& e) {
        json j{{"episode", e.episode},
               {"tau", detail::vec_to_json(e.tau.values)},
               {"terminal", detail::vec_to_json(e.terminal.values)},
               {"outcome", e.outcome},
               {"phrase", e.phrase ? json(*e.phrase) : json(nullptr)},
               {"l", e.l ? detail::vec_to_json(e.l->values) : json(nullptr)},
               {"delta_tau", e.delta_tau ? detail::vec_to_json(*e.delta_tau) : json(nullptr)}};
        return j;
    }

    static json session_json(const Session& s, bool with_history) {
        json j{{"id", s.id},
               {"model_id", s.model_id},
               {"task", s.task},
               {"seed", s.seed},
               {"tau", detail::vec_to_json(s.tau.values)},
               {"status", status_name(s.status)},
               {"created", s.created},
               {"updated", s.updated},
               {"episodes", s.history.size()}};
        if (with_history) {
            json h = json::array();
            for (const auto& e : s.history) h.push_back(entry_json(e));
            j["history"] = h;
        }
        return j;
    }

    /// Rollouts are deterministic, so a retried request re-renders its entry.
    static json entry_response(const Session& s, const LoadedModel& m, const HistoryEntry& e) {
        json j = entry_json(e);
        j["session_id"] = s.id;
        j["status"] = status_name(s.status);
        j["trajectory"] = trajectory_json(m.task->rollout(e.tau));
        return j;
    }

    void persist(const Session& s, const json& record) const {
        if (cfg_.data_dir.empty()) return;
        const auto path = std::filesystem::path(cfg_.data_dir) / (s.id + ".jsonl");
        std::ofstream f(path, std::ios::app);
        if (!f) throw Error(Errc::config_error, "cannot append to " + path.string());
        f << record.dump() << '\n';
    }

    /// Rebuild sessions from their logs; records are applied as stored.
    void restore() {
        for (const auto& entry : std::filesystem::directory_iterator(cfg_.data_dir)) {
            if (entry.path().extension() != ".jsonl") continue;
            try {
                auto s = load_session_log(entry.path());
                if (!registry_.find(s->model_id)) continue;
                if (!s->create_request_id.empty()) create_requests_[s->create_request_id] = s->id;
                const std::string id = s->id;
                sessions_[id] = std::move(s);
            } catch (const std::exception&) {
                // A damaged log only loses its own session.
            }
        }
    }

    std::shared_ptr<Session> load_session_log(const std::filesystem::path& path) const {
        std::ifstream f(path);
        std::string line;
        auto s = std::make_shared<Session>();
        bool header = false;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            const std::string type = j.at("type");
            if (type == "session") {
                s->id = j.at("id");
                s->model_id = j.at("model_id");
                s->task = j.at("task");
                s->seed = j.at("seed");
                s->tau = TaskParam(detail::vec_from_json(j.at("tau0")));
                s->created = s->updated = j.at("time");
                s->create_request_id = j.value("request_id", "");
                HistoryEntry e;
                e.tau = s->tau;
                e.time = s->created;
                s->history.push_back(e);
                header = true;
            } else if (!header) {
                throw Error(Errc::corrupt_file, "session log without header");
            } else if (type == "feedback") {
                HistoryEntry e;
                e.episode = j.at("episode");
                e.phrase = j.at("phrase").get<std::string>();
                e.l = AdverbEmbedding(detail::vec_from_json(j.at("l")));
                e.delta_tau = detail::vec_from_json(j.at("delta_tau"));
                e.tau = TaskParam(detail::vec_from_json(j.at("new_tau")));
                e.request_id = j.value("request_id", "");
                e.time = j.at("time");
                s->tau = e.tau;
                s->updated = e.time;
                s->history.push_back(e);
            } else if (type == "satisfied") {
                s->status = SessionStatus::satisfied;
                s->satisfied_request_id = j.value("request_id", "");
                s->updated = j.at("time");
            } else if (type == "expired") {
                s->status = SessionStatus::expired;
            }
        }
        if (!header) throw Error(Errc::corrupt_file, "empty session log");
        if (const LoadedModel* m = registry_.find(s->model_id)) {
            for (auto& e : s->history) {
                const Trajectory tr = m->task->rollout(e.tau);
                e.terminal = tr.terminal;
                e.outcome = outcome_name(tr.kind);
            }
        }
        return s;
    }

    ModelRegistry registry_;
    ServiceConfig cfg_;
    Clock clock_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::string> create_requests_;
    Rng id_rng_{std::random_device{}()};
};

/// A recorded session: starting tau and the phrases sent, with the tau
/// sequence the service produced.
struct SessionRecording {
    std::string model_id;
    std::string model_hash;
    TaskParam tau0;
    std::vector<std::string> phrases;
    std::vector<TaskParam> recorded;  ///< tau0 followed by every post-feedback tau
};

inline SessionRecording read_session_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::corrupt_file, "cannot open " + path);
    SessionRecording r;
    std::string line;
    try {
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            const std::string type = j.at("type");
            if (type == "session") {
                r.model_id = j.at("model_id");
                r.model_hash = j.value("model_hash", "");
                r.tau0 = TaskParam(detail::vec_from_json(j.at("tau0")));
                r.recorded.push_back(r.tau0);
            } else if (type == "feedback") {
                r.phrases.push_back(j.at("phrase"));
                r.recorded.emplace_back(detail::vec_from_json(j.at("new_tau")));
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::corrupt_file, path + ": " + e.what());
    }
    if (r.recorded.empty()) throw Error(Errc::corrupt_file, path + ": no session header");
    return r;
}

/// Re-apply the phrases from tau0 through the model; returns the tau sequence.
inline std::vector<TaskParam> replay_session(const LoadedModel& m, const TaskParam& tau0,
                                             const std::vector<std::string>& phrases) {
    std::vector<TaskParam> taus{tau0};
    for (const auto& p : phrases)
        taus.push_back(SessionManager::step(m, taus.back(), parse_phrase(m.task->axes(), p)).tau);
    return taus;
}

} // namespace asg

#endif
