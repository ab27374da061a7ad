#pragma once
// Interactive playtest sessions: one game instance stepped move by move,
// with a JSON view for clients and a snapshot that restores by replay.

#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mechgen/engine.hpp"
#include "mechgen/generator.hpp"
#include "mechgen/json_io.hpp"

namespace mechgen {

struct PlayMove {
    std::string agent;
    MechanicId action = kNoOp;
    bool operator==(const PlayMove&) const = default;
};

enum class Outcome { Ongoing, Won, Lost };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Ongoing: return "ongoing";
        case Outcome::Won: return "won";
        case Outcome::Lost: return "lost";
    }
    return "?";
}

inline json state_json(const SimState& s) {
    json values = json::array();
    for (const auto& [term, v] : s.values) values.push_back({{"param", term.param}, {"entity", term.entity}, {"value", v}});
    return {{"time", s.time}, {"values", values}};
}

/// Instance chosen when none is named: the lowest level, first in file order.
inline const GameInstance& default_instance(const DomainSpec& spec) {
    auto order = instances_by_level(spec);
    if (order.empty()) throw Error("domain has no instances");
    return *order.front();
}

class PlaySession {
public:
    PlaySession(std::string id, std::shared_ptr<const CompiledDomain> dom, MechanicSet mechanics,
                std::optional<ControlMapping> controls, const std::string& instance)
        : id_(std::move(id)), dom_(std::move(dom)), mechanics_(std::move(mechanics)), controls_(std::move(controls)) {
        const GameInstance* inst = instance.empty() ? &default_instance(dom_->spec()) : dom_->spec().instance(instance);
        if (!inst) throw Error("unknown instance '" + instance + "'");
        instance_ = inst->name;
        auto v = validate_mechanics(dom_->spec(), mechanics_);
        if (!v.ok()) throw Error("invalid mechanics: " + v.violations.front().message);
        reset();
    }

    const std::string& id() const { return id_; }
    const std::string& instance() const { return instance_; }
    const MechanicSet& mechanics() const { return mechanics_; }
    const std::optional<ControlMapping>& controls() const { return controls_; }
    const std::vector<PlayMove>& log() const { return log_; }
    const Session& session() const { return *session_; }
    const DomainSpec& spec() const { return dom_->spec(); }

    void reset() {
        session_ = std::make_unique<Session>(initial_state(dom_, mechanics_, *dom_->spec().instance(instance_)));
        log_.clear();
    }

    std::string agent_to_act() const { return dom_->entity_name(session_->agent_to_act()); }

    /// Resolves a move given as a mechanic id, name, list number of the
    /// applicable actions ("#2"), "NoOp", or an input-symbol chord ("a+b").
    MechanicId resolve(const std::string& agent, const json& action) {
        if (action.is_number_integer()) return action.get<int>();
        if (!action.is_string()) throw ParseError("action must be a mechanic id or a string");
        const std::string a = action.get<std::string>();
        if (!a.empty() && a[0] == '#') {
            auto list = applicable(agent);
            std::size_t pos = 0;
            int n = 0;
            try {
                n = std::stoi(a.substr(1), &pos);
            } catch (const std::exception&) {
                throw ParseError("bad action number '" + a + "'");
            }
            if (pos + 1 != a.size() || n < 1 || n > static_cast<int>(list.size()))
                throw ParseError("no applicable action numbered " + a.substr(1));
            return list[static_cast<std::size_t>(n - 1)];
        }
        if (controls_) {
            std::set<std::string> chord;
            std::stringstream ss(a);
            for (std::string part; std::getline(ss, part, '+');)
                if (!part.empty()) chord.insert(part);
            std::vector<MechanicId> bound;
            for (const auto& [id, inputs] : *controls_)
                if (inputs == chord) bound.push_back(id);
            if (!bound.empty()) {
                auto list = applicable(agent);
                for (MechanicId id : bound)
                    if (std::find(list.begin(), list.end(), id) != list.end()) return id;
                return bound.front();
            }
        }
        return action_from_label(mechanics_, a);
    }

    /// Applies one move; on any status but Ok nothing changes.
    StepStatus act(const std::string& agent, MechanicId action) {
        int a = dom_->entity(agent);
        if (a < 0) throw Error("unknown agent '" + agent + "'");
        StepStatus s = session_->step(a, action);
        if (s == StepStatus::Ok) log_.push_back({agent, action});
        return s;
    }

    std::vector<MechanicId> applicable(const std::string& agent) const {
        int a = dom_->entity(agent);
        if (a < 0) return {};
        Session copy = *session_;
        return copy.applicable(a);
    }

    /// First tick at which the player's result is decided.
    Outcome outcome() const {
        const int player = dom_->entity(spec().playability.player);
        for (int t = 0; t <= session_->time(); ++t) {
            if (!session_->maintenance_holds(player, t)) return Outcome::Lost;
            if (dom_->goal(player) && session_->goal_holds(player, t)) return Outcome::Won;
            for (int a : dom_->agents())
                if (a != player && dom_->goal(a) && session_->goal_holds(a, t)) return Outcome::Lost;
        }
        return Outcome::Ongoing;
    }

    json action_json(MechanicId id) const {
        json j{{"id", id}, {"label", action_label(mechanics_, id)}};
        if (controls_)
            if (auto it = controls_->find(id); it != controls_->end())
                j["inputs"] = std::vector<std::string>(it->second.begin(), it->second.end());
        return j;
    }

    json view() const {
        const Session& s = *session_;
        const int now = s.time();
        json goals = json::object(), maint = json::object();
        for (int a : dom_->agents()) {
            const std::string& name = dom_->entity_name(a);
            goals[name] = dom_->goal(a) != nullptr && s.goal_holds(a, now);
            maint[name] = s.maintenance_holds(a, now);
        }
        json history = json::array();
        for (int t = 0; t <= now; ++t) history.push_back(state_json(s.state(t)));
        json actions = json::array();
        const std::string turn = agent_to_act();
        for (MechanicId id : applicable(turn)) actions.push_back(action_json(id));
        return {{"id", id_},
                {"instance", instance_},
                {"time", now},
                {"agent_to_act", turn},
                {"state", state_json(s.state())},
                {"history", history},
                {"moves", moves_json()},
                {"applicable", actions},
                {"goal", goals},
                {"maintenance", maint},
                {"outcome", to_string(outcome())}};
    }

    json moves_json() const {
        json arr = json::array();
        for (std::size_t i = 0; i < log_.size(); ++i)
            arr.push_back({{"tick", i}, {"agent", log_[i].agent}, {"action", action_label(mechanics_, log_[i].action)},
                           {"id", log_[i].action}});
        return arr;
    }

    /// Everything needed to rebuild the session, plus the observed states so
    /// that a restore can prove it reproduced them.
    json snapshot(const std::string& domain_id) const {
        json moves = json::array();
        for (const auto& m : log_) moves.push_back({{"agent", m.agent}, {"action", m.action}});
        json history = json::array();
        for (int t = 0; t <= session_->time(); ++t) history.push_back(state_json(session_->state(t)));
        return {{"id", id_},
                {"domain", domain_id},
                {"instance", instance_},
                {"mechanics", to_json(mechanics_)},
                {"controls", controls_ ? control_mapping_json(*controls_) : json(nullptr)},
                {"moves", moves},
                {"history", history}};
    }

    static PlaySession restore(const json& snap, std::shared_ptr<const CompiledDomain> dom) {
        MechanicSet ms = mechanics_from_json(snap.at("mechanics"));
        std::optional<ControlMapping> controls;
        if (!snap.at("controls").is_null()) controls = control_mapping_from_json(snap.at("controls"), ms);
        PlaySession p(snap.at("id").get<std::string>(), std::move(dom), ms, controls, snap.at("instance").get<std::string>());
        for (const auto& m : snap.at("moves")) {
            StepStatus s = p.act(m.at("agent").get<std::string>(), m.at("action").get<int>());
            if (s != StepStatus::Ok) throw Error(std::string("snapshot replay rejected a move: ") + to_string(s));
        }
        json history = json::array();
        for (int t = 0; t <= p.session().time(); ++t) history.push_back(state_json(p.session().state(t)));
        if (history != snap.at("history")) throw Error("snapshot replay diverged from the recorded history");
        return p;
    }

private:
    std::string id_;
    std::shared_ptr<const CompiledDomain> dom_;
    MechanicSet mechanics_;
    std::optional<ControlMapping> controls_;
    std::string instance_;
    std::unique_ptr<Session> session_;
    std::vector<PlayMove> log_;
};

}  // namespace mechgen
