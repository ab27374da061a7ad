#pragma once
// HTTP+JSON service: domain uploads, asynchronous generation/adaptation
// jobs, and playtest sessions. Requests are handled by `Service::handle`,
// which is independent of the transport; `bind` attaches it to httplib.

#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "mechgen/domain_io.hpp"
#include "mechgen/generator.hpp"
#include "mechgen/play.hpp"
#include "mechgen/store.hpp"

namespace mechgen {

/// Error surfaced to clients as {code, message} with an HTTP status.
class ApiError : public Error {
public:
    ApiError(int status, std::string code, const std::string& message)
        : Error(message), status_(status), code_(std::move(code)) {}
    int status() const noexcept { return status_; }
    const std::string& code() const noexcept { return code_; }

private:
    int status_;
    std::string code_;
};

inline std::string domain_id(const DomainSpec& spec) {
    return "d" + Signature{"", detail::fnv1a64(serialize_domain(spec))}.hex();
}

/// Applies an RFC 7386 merge patch to the domain's JSON encoding.
inline DomainSpec apply_overlay(const DomainSpec& spec, const json& overlay) {
    if (overlay.is_null()) return spec;
    if (!overlay.is_object()) throw ParseError("overlay must be a JSON object");
    json j = to_json(spec);
    j.merge_patch(overlay);
    return domain_from_json(j);
}

inline std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct ServiceConfig {
    std::filesystem::path data_dir = "mechgen-data";
    int workers = 2;
    std::function<void(const std::string&)> log;
};

enum class JobStatus { Queued, Running, Done, Failed };

inline const char* to_string(JobStatus s) {
    switch (s) {
        case JobStatus::Queued: return "queued";
        case JobStatus::Running: return "running";
        case JobStatus::Done: return "done";
        case JobStatus::Failed: return "failed";
    }
    return "?";
}

inline JobStatus job_status_from(const std::string& s) {
    if (s == "queued") return JobStatus::Queued;
    if (s == "running") return JobStatus::Running;
    if (s == "done") return JobStatus::Done;
    if (s == "failed") return JobStatus::Failed;
    throw ParseError("unknown job status '" + s + "'");
}

struct GenerationJob {
    std::string id;
    std::string kind;  // generate | adapt
    std::string domain;
    json seed;  // adapt only
    JobStatus status = JobStatus::Queued;
    std::string result;  // serialized GenerationResult when Done
    std::string error;
    std::string submitted, finished;

    json to_json() const {
        return {{"id", id},
                {"kind", kind},
                {"domain", domain},
                {"seed", seed},
                {"status", mechgen::to_string(status)},
                {"result", result.empty() ? json(nullptr) : json::parse(result)},
                {"error", error.empty() ? json(nullptr) : json(error)},
                {"submitted", submitted},
                {"finished", finished.empty() ? json(nullptr) : json(finished)}};
    }

    static GenerationJob from_json(const json& j) {
        GenerationJob g;
        g.id = j.at("id").get<std::string>();
        g.kind = j.at("kind").get<std::string>();
        g.domain = j.at("domain").get<std::string>();
        g.seed = j.value("seed", json());
        g.status = job_status_from(j.at("status").get<std::string>());
        if (!j.at("result").is_null()) g.result = serialize_result_json(j.at("result"));
        if (!j.at("error").is_null()) g.error = j.at("error").get<std::string>();
        g.submitted = j.value("submitted", "");
        if (!j.at("finished").is_null()) g.finished = j.at("finished").get<std::string>();
        return g;
    }

    // Results are stored parsed; re-serializing with the same dump settings
    // restores the exact bytes the job produced.
    static std::string serialize_result_json(const json& r) { return r.dump(2) + "\n"; }
};

class Service {
public:
    struct Response {
        int status = 200;
        std::string body;
        std::string content_type = "application/json";
    };

    explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)), store_(cfg_.data_dir, cfg_.log) {
        load();
        for (int i = 0; i < std::max(1, cfg_.workers); ++i) workers_.emplace_back([this] { work(); });
    }

    ~Service() {
        {
            std::lock_guard<std::mutex> lk(queue_mu_);
            stopping_ = true;
        }
        queue_cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Blocks until no job is queued or running.
    void wait_idle() {
        std::unique_lock<std::mutex> lk(queue_mu_);
        idle_cv_.wait(lk, [&] { return queue_.empty() && busy_ == 0; });
    }

    Response handle(const std::string& method, const std::string& path, const std::string& body) {
        try {
            return route(method, split(path), body);
        } catch (const ApiError& e) {
            return error(e.status(), e.code(), e.what());
        } catch (const json::exception& e) {
            return error(400, "malformed_body", e.what());
        } catch (const ParseError& e) {
            return error(400, "malformed_body", e.what());
        } catch (const Error& e) {
            return error(422, "rejected", e.what());
        } catch (const std::exception& e) {
            return error(500, "internal", e.what());
        }
    }

    void bind(httplib::Server& srv) {
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            Response r = handle(req.method, req.path, req.body);
            res.status = r.status;
            res.set_content(r.body, r.content_type);
        };
        srv.Get(".*", forward);
        srv.Post(".*", forward);
    }

private:
    struct DomainEntry {
        json document;
        std::shared_ptr<const CompiledDomain> compiled;
    };
    struct SessionSlot {
        std::mutex mu;
        std::string domain;
        std::unique_ptr<PlaySession> play;
    };

    static std::vector<std::string> split(const std::string& path) {
        std::vector<std::string> out;
        std::stringstream ss(path);
        for (std::string part; std::getline(ss, part, '/');)
            if (!part.empty()) out.push_back(part);
        return out;
    }

    static Response ok(const json& j, int status = 200) { return {status, j.dump(2) + "\n"}; }
    static Response error(int status, const std::string& code, const std::string& message) {
        return {status, json{{"code", code}, {"message", message}}.dump(2) + "\n"};
    }

    static json parse_body(const std::string& body) {
        json j = json::parse(body);
        if (!j.is_object()) throw ApiError(400, "malformed_body", "request body must be a JSON object");
        return j;
    }

    Response route(const std::string& method, const std::vector<std::string>& p, const std::string& body) {
        const bool get = method == "GET", post = method == "POST";
        const std::size_t n = p.size();
        if (n == 1 && p[0] == "domains" && post) return post_domain(body);
        if (n == 2 && p[0] == "domains" && get) return ok({{"id", p[1]}, {"domain", domain(p[1]).document}});
        if (n == 1 && p[0] == "jobs" && post) return post_job(parse_body(body), "generate");
        if (n == 1 && p[0] == "adapt" && post) return post_job(parse_body(body), "adapt");
        if (n == 2 && p[0] == "jobs" && get) return ok(job(p[1]).to_json());
        if (n == 3 && p[0] == "jobs" && p[2] == "result" && get) {
            GenerationJob j = job(p[1]);
            if (j.status != JobStatus::Done) throw ApiError(409, "not_done", "job " + j.id + " is " + to_string(j.status));
            return {200, j.result};
        }
        if (n == 1 && p[0] == "sessions" && post) return post_session(parse_body(body));
        if (n == 2 && p[0] == "sessions" && get) {
            auto slot = session(p[1]);
            std::lock_guard<std::mutex> lk(slot->mu);
            return ok(slot->play->view());
        }
        if (n == 3 && p[0] == "sessions" && p[2] == "act" && post) return act(p[1], parse_body(body));
        if (n == 3 && p[0] == "sessions" && p[2] == "reset" && post) {
            auto slot = session(p[1]);
            std::lock_guard<std::mutex> lk(slot->mu);
            slot->play->reset();
            persist(*slot);
            return ok(slot->play->view());
        }
        if (get || post) throw ApiError(404, "not_found", "no route for " + method + " /" + join(p));
        throw ApiError(405, "method_not_allowed", method + " is not supported");
    }

    static std::string join(const std::vector<std::string>& p) {
        std::string s;
        for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "/" : "") + p[i];
        return s;
    }

    // -- domains --------------------------------------------------------------

    std::string register_domain(const DomainSpec& spec) {
        auto v = validate_domain(spec);
        if (!v.ok()) throw ApiError(400, "invalid_domain", v.violations.front().message);
        std::string id = domain_id(spec);
        std::unique_lock<std::shared_mutex> lk(domains_mu_);
        if (!domains_.count(id)) {
            json doc = to_json(spec);
            store_.put("domains", id, doc);
            domains_[id] = {doc, std::make_shared<const CompiledDomain>(spec)};
        }
        return id;
    }

    Response post_domain(const std::string& body) {
        DomainSpec spec;
        try {
            spec = parse_domain(body);
        } catch (const Error& e) {
            throw ApiError(400, "invalid_domain", e.what());
        }
        std::string id = register_domain(spec);
        return ok({{"id", id}, {"validation", to_json(validate_domain(spec))}}, 201);
    }

    DomainEntry domain(const std::string& id) const {
        std::shared_lock<std::shared_mutex> lk(domains_mu_);
        auto it = domains_.find(id);
        if (it == domains_.end()) throw ApiError(404, "unknown_domain", "no domain " + id);
        return it->second;
    }

    /// A body's "domain" field: a stored id or an inline document.
    std::string resolve_domain(const json& body) {
        auto it = body.find("domain");
        if (it == body.end()) throw ApiError(400, "malformed_body", "missing 'domain'");
        if (it->is_string()) {
            domain(it->get<std::string>());  // must exist
            return it->get<std::string>();
        }
        try {
            return register_domain(domain_from_document(*it));
        } catch (const ApiError&) {
            throw;
        } catch (const Error& e) {
            throw ApiError(400, "invalid_domain", e.what());
        }
    }

    std::string with_overlay(const std::string& id, const json& overlay) {
        if (overlay.is_null()) return id;
        try {
            return register_domain(apply_overlay(domain_from_json(domain(id).document), overlay));
        } catch (const ApiError&) {
            throw;
        } catch (const Error& e) {
            throw ApiError(400, "invalid_overlay", e.what());
        }
    }

    // -- jobs -----------------------------------------------------------------

    Response post_job(const json& body, const std::string& kind) {
        GenerationJob j;
        j.kind = kind;
        j.domain = with_overlay(resolve_domain(body), body.value(kind == "adapt" ? "overlay" : "overrides", json()));
        if (kind == "adapt") {
            auto it = body.find("seed");
            if (it == body.end()) throw ApiError(400, "malformed_body", "missing 'seed'");
            MechanicSet seed = mechanics_from_json(*it);
            j.seed = to_json(seed);
        }
        j.submitted = utc_now();
        {
            std::lock_guard<std::mutex> lk(jobs_mu_);
            j.id = "j" + std::to_string(next_job_++);
            jobs_[j.id] = j;
            store_.put("jobs", j.id, j.to_json());
        }
        {
            std::lock_guard<std::mutex> lk(queue_mu_);
            queue_.push_back(j.id);
        }
        queue_cv_.notify_one();
        return ok(j.to_json(), 202);
    }

    GenerationJob job(const std::string& id) const {
        std::lock_guard<std::mutex> lk(jobs_mu_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) throw ApiError(404, "unknown_job", "no job " + id);
        return it->second;
    }

    void update_job(const GenerationJob& j) {
        std::lock_guard<std::mutex> lk(jobs_mu_);
        jobs_[j.id] = j;
        store_.put("jobs", j.id, j.to_json());
    }

    void work() {
        while (true) {
            std::string id;
            {
                std::unique_lock<std::mutex> lk(queue_mu_);
                queue_cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
                if (stopping_) return;
                id = queue_.front();
                queue_.pop_front();
                ++busy_;
            }
            run_job(id);
            {
                std::lock_guard<std::mutex> lk(queue_mu_);
                --busy_;
            }
            idle_cv_.notify_all();
        }
    }

    void run_job(const std::string& id) {
        GenerationJob j = job(id);
        j.status = JobStatus::Running;
        update_job(j);
        try {
            DomainSpec spec = domain_from_json(domain(j.domain).document);
            GenerationResult r = j.kind == "adapt" ? adapt(spec, mechanics_from_json(j.seed)) : generate(spec);
            j.result = serialize_result(r);
            j.status = JobStatus::Done;
        } catch (const std::exception& e) {
            j.error = e.what();
            j.status = JobStatus::Failed;
        }
        j.finished = utc_now();
        update_job(j);
    }

    // -- sessions -------------------------------------------------------------

    Response post_session(const json& body) {
        std::string dom_id;
        MechanicSet ms;
        std::optional<ControlMapping> controls;
        if (auto it = body.find("job"); it != body.end()) {
            GenerationJob j = job(it->get<std::string>());
            if (j.status != JobStatus::Done) throw ApiError(409, "not_done", "job " + j.id + " is " + to_string(j.status));
            json r = json::parse(j.result);
            if (r.at("status") != "found") throw ApiError(422, "no_mechanics", "job " + j.id + " found no mechanics");
            dom_id = j.domain;
            ms = mechanics_from_json(r.at("mechanics"));
            if (!r.at("controls").is_null()) controls = control_mapping_from_json(r.at("controls"), ms);
        } else {
            dom_id = resolve_domain(body);
            auto m = body.find("mechanics");
            if (m == body.end()) throw ApiError(400, "malformed_body", "missing 'mechanics' or 'job'");
            ms = mechanics_from_json(*m);
        }
        if (auto c = body.find("controls"); c != body.end() && !c->is_null()) {
            if (c->is_string() && *c == "generate") {
                const DomainSpec& spec = domain(dom_id).compiled->spec();
                controls = generate_controls(ms, spec.design.controls.value_or(ControlReqs{}), spec.inputs);
            } else {
                controls = control_mapping_from_json(*c, ms);
            }
        }
        auto slot = std::make_shared<SessionSlot>();
        slot->domain = dom_id;
        std::string id;
        {
            std::unique_lock<std::shared_mutex> lk(sessions_mu_);
            id = "s" + std::to_string(next_session_++);
        }
        slot->play = std::make_unique<PlaySession>(id, domain(dom_id).compiled, ms, controls, body.value("instance", ""));
        std::lock_guard<std::mutex> slk(slot->mu);
        persist(*slot);
        {
            std::unique_lock<std::shared_mutex> lk(sessions_mu_);
            sessions_[id] = slot;
        }
        json v = slot->play->view();
        v["domain"] = dom_id;
        return ok(v, 201);
    }

    std::shared_ptr<SessionSlot> session(const std::string& id) const {
        std::shared_lock<std::shared_mutex> lk(sessions_mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw ApiError(404, "unknown_session", "no session " + id);
        return it->second;
    }

    void persist(const SessionSlot& slot) { store_.put("sessions", slot.play->id(), slot.play->snapshot(slot.domain)); }

    Response act(const std::string& id, const json& body) {
        auto slot = session(id);
        std::lock_guard<std::mutex> lk(slot->mu);
        PlaySession& p = *slot->play;
        auto agent_it = body.find("agent");
        std::string agent = agent_it == body.end() ? p.agent_to_act() : agent_it->get<std::string>();
        const auto& agents = p.spec().agents;
        if (std::find(agents.begin(), agents.end(), agent) == agents.end()) throw ApiError(400, "unknown_agent", "'" + agent + "' is not an agent");
        auto action_it = body.find("action");
        if (action_it == body.end()) throw ApiError(400, "malformed_body", "missing 'action'");
        if (auto t = body.find("tick"); t != body.end() && t->get<int>() != p.session().time())
            throw ApiError(409, "stale_tick", "session is at tick " + std::to_string(p.session().time()));
        if (agent != p.agent_to_act())
            throw ApiError(409, "out_of_turn", "it is " + p.agent_to_act() + "'s turn");
        MechanicId action = p.resolve(agent, *action_it);
        StepStatus s = p.act(agent, action);
        if (s != StepStatus::Ok)
            throw ApiError(422, to_string(s), "illegal action " + action_label(p.mechanics(), action) + ": " + to_string(s));
        persist(*slot);
        return ok(p.view());
    }

    // -- restart --------------------------------------------------------------

    static long numeric_suffix(const std::string& id) {
        try {
            return id.size() > 1 ? std::stol(id.substr(1)) : 0;
        } catch (const std::exception&) {
            return 0;
        }
    }

    void load() {
        for (auto& [id, doc] : store_.load_all("domains")) {
            try {
                DomainSpec spec = domain_from_json(doc);
                domains_[id] = {doc, std::make_shared<const CompiledDomain>(spec)};
            } catch (const std::exception& e) {
                store_.warn("skipping domain " + id + ": " + e.what());
            }
        }
        for (auto& [id, doc] : store_.load_all("jobs")) {
            try {
                GenerationJob j = GenerationJob::from_json(doc);
                if (!domains_.count(j.domain)) throw Error("unknown domain " + j.domain);
                if (j.status == JobStatus::Queued || j.status == JobStatus::Running) {
                    j.status = JobStatus::Failed;
                    j.error = "interrupted by a service restart";
                    j.finished = utc_now();
                    store_.put("jobs", j.id, j.to_json());
                }
                next_job_ = std::max(next_job_, numeric_suffix(j.id) + 1);
                jobs_[j.id] = std::move(j);
            } catch (const std::exception& e) {
                store_.warn("skipping job " + id + ": " + e.what());
            }
        }
        for (auto& [id, snap] : store_.load_all("sessions")) {
            try {
                auto slot = std::make_shared<SessionSlot>();
                slot->domain = snap.at("domain").get<std::string>();
                auto it = domains_.find(slot->domain);
                if (it == domains_.end()) throw Error("unknown domain " + slot->domain);
                slot->play = std::make_unique<PlaySession>(PlaySession::restore(snap, it->second.compiled));
                next_session_ = std::max(next_session_, numeric_suffix(id) + 1);
                sessions_[id] = slot;
            } catch (const std::exception& e) {
                store_.warn("skipping session " + id + ": " + e.what());
            }
        }
    }

    ServiceConfig cfg_;
    RecordStore store_;

    mutable std::shared_mutex domains_mu_;
    std::map<std::string, DomainEntry> domains_;

    mutable std::mutex jobs_mu_;
    std::map<std::string, GenerationJob> jobs_;
    long next_job_ = 1;

    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
    long next_session_ = 1;

    std::mutex queue_mu_;
    std::condition_variable queue_cv_, idle_cv_;
    std::deque<std::string> queue_;
    int busy_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace mechgen
