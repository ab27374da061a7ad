#pragma once
// Bounded playability search. Iterative deepening over joint action
// sequences (agents act round-robin), with a transposition table keyed on
// the part of the history that can still influence the future.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mechgen/engine.hpp"

namespace mechgen {

enum class PlanStatus { Found, NoPlan, ResourceLimit };

inline const char* to_string(PlanStatus s) {
    switch (s) {
        case PlanStatus::Found: return "found";
        case PlanStatus::NoPlan: return "no_plan";
        case PlanStatus::ResourceLimit: return "resource_limit";
    }
    return "?";
}

struct PlanResult {
    PlanStatus status = PlanStatus::NoPlan;
    std::string instance;
    std::optional<Trace> trace;
    long nodes = 0;
};

struct PlanOptions {
    int horizon = 8;
    long node_cap = 2000000;
    bool transpositions = true;

    static PlanOptions from(const GeneratorBounds& b) { return {b.horizon, b.node_cap, true}; }
};

namespace detail {

struct KeyHash {
    std::size_t operator()(const std::vector<int>& k) const noexcept {
        std::uint64_t h = 1469598103934665603ULL;
        for (int v : k) {
            h ^= static_cast<std::uint32_t>(v);
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

/// Deepest offset any precondition or goal can look back.
inline int lookback(const CompiledMechanics& ms) {
    int w = 0;
    for (const auto& m : ms.list())
        for (const auto& c : m.preconditions) w = std::max(w, -c.offset);
    return w;
}

inline std::vector<MechanicId> action_order(const Session& s) {
    std::vector<MechanicId> out;
    for (const auto& m : s.mechanics().list()) out.push_back(m.id);
    if (s.spec().playability.noop) out.push_back(kNoOp);
    return out;
}

/// Player-side pruning shared by the planner and the trace enumerator.
/// Returns nullopt to prune, true when the player's goal holds at `now`.
inline std::optional<bool> player_status(const Session& s, int player, int now) {
    if (!s.maintenance_holds(player, now)) return std::nullopt;
    bool goal = s.goal_holds(player, now);
    if (!goal && s.spec().playability.ordering == Ordering::PlayerFirst)
        for (int a : s.domain().agents())
            if (a != player && s.domain().goal(a) && s.goal_holds(a, now)) return std::nullopt;
    return goal;
}

inline void fill_goal_ticks(const Session& start, Trace& t) {
    Session s = start;
    auto note = [&](int tick) {
        for (int a : s.domain().agents())
            if (s.domain().goal(a) && s.goal_holds(a, tick) && !t.goal_ticks.count(s.domain().entity_name(a)))
                t.goal_ticks[s.domain().entity_name(a)] = tick;
    };
    note(0);
    for (const auto& st : t.steps) {
        s.step(s.domain().entity(st.agent), st.action);
        note(s.time());
    }
}

/// Pairs written by some mechanic effect or forced update.
inline std::vector<bool> moved_pairs(const Session& s) {
    std::vector<bool> moves(s.domain().pair_count(), false);
    for (const auto& m : s.mechanics().list())
        for (const auto& e : m.effects)
            if (e.kind == EffectKind::ParamUpdate && e.pair >= 0) moves[static_cast<std::size_t>(e.pair)] = true;
    for (const auto& rule : s.domain().rules())
        for (const auto& inst : rule.instances)
            for (const auto& u : inst.updates)
                if (u.first >= 0) moves[static_cast<std::size_t>(u.first)] = true;
    return moves;
}

/// A goal test that fails on the initial state and can only change if one
/// of `pair`/`own` is written. `pair < 0` marks a test that never holds.
struct FrozenTest {
    int pair = -1;
    int own = -1;
};

/// Goal tests of `agent` reading only unwritten terms that fail on both the
/// initial and the clamped initial values.
inline std::vector<FrozenTest> frozen_goal_tests(const Session& s, int agent) {
    std::vector<FrozenTest> out;
    const auto* goal = s.domain().goal(agent);
    if (!goal) return out;
    const auto moves = moved_pairs(s);
    auto at = [&](int pair, bool clamped) {
        int v = s.value(pair, 0);
        const auto& r = s.domain().range(pair);
        return clamped ? std::clamp(v, r.lo, r.hi) : v;
    };
    for (const auto& c : *goal) {
        if (c.kind != ConditionKind::ParamTest || c.pair < 0 || moves[static_cast<std::size_t>(c.pair)]) continue;
        int own = -1;
        if (c.frame == Frame::Relative) {
            own = s.domain().pair(c.param, agent);
            if (own < 0) {
                out.push_back({-1, -1});
                continue;
            }
            if (moves[static_cast<std::size_t>(own)]) continue;
        }
        bool can_hold = false;
        for (bool clamped : {false, true}) {
            int lhs = at(c.pair, clamped) - (own >= 0 ? at(own, clamped) : 0);
            can_hold = can_hold || compare(lhs, c.relation, c.rhs);
        }
        if (!can_hold) out.push_back({c.pair, own});
    }
    return out;
}

/// True when the agent's goal is unreachable because a failing test reads
/// only terms nothing can change.
inline bool goal_frozen_false(const Session& s, int agent) { return !frozen_goal_tests(s, agent).empty(); }

class Planner {
public:
    Planner(Session start, PlanOptions opt)
        : root_(std::move(start)), opt_(opt), window_(lookback(root_.mechanics())),
          player_(root_.domain().entity(root_.spec().playability.player)), actions_(action_order(root_)) {}

    PlanResult run() {
        PlanResult res;
        res.instance = root_.instance().name;
        if (player_ < 0) return res;
        if (root_.time() == 0 && goal_frozen_false(root_, player_)) return res;
        for (int limit = 0; limit <= opt_.horizon; ++limit) {
            table_.clear();
            Session s = root_;
            path_.clear();
            bool found = false;
            try {
                found = dfs(s, limit);
            } catch (const NodeCapReached&) {
                res.status = PlanStatus::ResourceLimit;
                res.nodes = nodes_;
                return res;
            }
            if (found) {
                Trace t;
                t.instance = root_.instance().name;
                t.steps = path_;
                t.terminal_tick = static_cast<int>(path_.size());
                fill_goal_ticks(root_, t);
                res.status = PlanStatus::Found;
                res.trace = std::move(t);
                res.nodes = nodes_;
                return res;
            }
        }
        res.nodes = nodes_;
        return res;
    }

private:
    struct NodeCapReached {};

    bool dfs(Session& s, int limit) {
        if (++nodes_ > opt_.node_cap) throw NodeCapReached{};
        const int t = s.time();
        auto st = player_status(s, player_, t);
        if (!st) return false;
        if (*st) return true;
        const int remaining = limit - t;
        if (remaining <= 0) return false;
        std::vector<int> key;
        if (opt_.transpositions) {
            key = s.search_key(window_);
            auto it = table_.find(key);
            if (it != table_.end() && it->second >= remaining) return false;
        }
        const int agent = s.agent_to_act();
        for (MechanicId a : actions_) {
            auto cp = s.checkpoint();
            if (s.step(agent, a) != StepStatus::Ok) continue;
            path_.push_back({t, s.domain().entity_name(agent), a});
            if (dfs(s, limit)) return true;
            path_.pop_back();
            s.restore(std::move(cp));
        }
        if (opt_.transpositions) {
            auto& slot = table_[std::move(key)];
            slot = std::max(slot, remaining);
        }
        return false;
    }

    Session root_;
    PlanOptions opt_;
    int window_;
    int player_;
    std::vector<MechanicId> actions_;
    std::unordered_map<std::vector<int>, int, KeyHash> table_;
    std::vector<TraceStep> path_;
    long nodes_ = 0;
};

}  // namespace detail

/// Shortest witness trace for the player's goal from `start`, if one
/// exists within the horizon.
inline PlanResult plan(const Session& start, const PlanOptions& opt) { return detail::Planner(start, opt).run(); }

inline PlanResult plan(const DomainSpec& spec, const MechanicSet& mechanics, const GameInstance& instance) {
    return plan(initial_state(spec, mechanics, instance), PlanOptions::from(spec.bounds));
}

struct PlayabilityReport {
    bool playable = false;
    bool resource_limit = false;
    std::vector<PlanResult> instances;
};

inline std::vector<const GameInstance*> instances_by_level(const DomainSpec& spec) {
    std::vector<const GameInstance*> out;
    for (const auto& i : spec.instances) out.push_back(&i);
    std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->level < b->level; });
    return out;
}

/// Playable iff every instance has a witness.
inline PlayabilityReport check_playability(const std::shared_ptr<const CompiledDomain>& dom, const MechanicSet& mechanics,
                                           const PlanOptions& opt, bool stop_at_first_failure = false) {
    PlayabilityReport rep;
    rep.playable = true;
    for (const auto* inst : instances_by_level(dom->spec())) {
        PlanResult r = plan(initial_state(dom, mechanics, *inst), opt);
        if (r.status != PlanStatus::Found) rep.playable = false;
        if (r.status == PlanStatus::ResourceLimit) rep.resource_limit = true;
        rep.instances.push_back(std::move(r));
        if (!rep.playable && stop_at_first_failure) break;
    }
    return rep;
}

inline PlayabilityReport check_playability(const DomainSpec& spec, const MechanicSet& mechanics,
                                           const PlanOptions& opt, bool stop_at_first_failure = false) {
    return check_playability(std::make_shared<const CompiledDomain>(spec), mechanics, opt, stop_at_first_failure);
}

inline PlayabilityReport check_playability(const DomainSpec& spec, const MechanicSet& mechanics) {
    return check_playability(spec, mechanics, PlanOptions::from(spec.bounds));
}

inline json to_json(const PlanResult& r, const MechanicSet& ms) {
    return {{"instance", r.instance},
            {"status", to_string(r.status)},
            {"trace", r.trace ? to_json(*r.trace, ms) : json(nullptr)}};
}

inline json to_json(const PlayabilityReport& r, const MechanicSet& ms) {
    json arr = json::array();
    for (const auto& i : r.instances) arr.push_back(to_json(i, ms));
    return {{"playable", r.playable}, {"resource_limit", r.resource_limit}, {"instances", arr}};
}

// ---------------------------------------------------------------------------
// Trace enumeration
// ---------------------------------------------------------------------------

struct TraceSet {
    std::vector<Trace> traces;
    bool truncated = false;       // trace cap reached
    bool resource_limit = false;  // node cap reached
};

/// Distinct witness traces, each ending at the first tick the player's goal
/// holds, in nondecreasing length; within a length, actions are ordered by
/// ascending mechanic id with NoOp last.
inline TraceSet enumerate_traces(const Session& start, int horizon, int cap, long node_cap = 2000000) {
    TraceSet out;
    const int player = start.domain().entity(start.spec().playability.player);
    if (player < 0 || cap <= 0) return out;
    const auto actions = detail::action_order(start);
    long nodes = 0;
    std::vector<TraceStep> path;
    struct Stop {};
    std::function<void(Session&, int)> dfs = [&](Session& s, int limit) {
        if (++nodes > node_cap) {
            out.resource_limit = true;
            throw Stop{};
        }
        const int t = s.time();
        auto st = detail::player_status(s, player, t);
        if (!st) return;
        if (*st) {
            if (t == limit) {
                Trace tr;
                tr.instance = start.instance().name;
                tr.steps = path;
                tr.terminal_tick = t;
                detail::fill_goal_ticks(start, tr);
                out.traces.push_back(std::move(tr));
                if (static_cast<int>(out.traces.size()) >= cap) {
                    out.truncated = true;
                    throw Stop{};
                }
            }
            return;
        }
        if (t >= limit) return;
        const int agent = s.agent_to_act();
        for (MechanicId a : actions) {
            auto cp = s.checkpoint();
            if (s.step(agent, a) != StepStatus::Ok) continue;
            path.push_back({t, s.domain().entity_name(agent), a});
            dfs(s, limit);
            path.pop_back();
            s.restore(std::move(cp));
        }
    };
    try {
        for (int limit = 0; limit <= horizon; ++limit) {
            Session s = start;
            path.clear();
            dfs(s, limit);
        }
    } catch (const Stop&) {
    }
    return out;
}

inline TraceSet enumerate_traces(const DomainSpec& spec, const MechanicSet& mechanics, const GameInstance& instance) {
    return enumerate_traces(initial_state(spec, mechanics, instance), spec.bounds.horizon, spec.bounds.trace_cap,
                            spec.bounds.node_cap);
}

}  // namespace mechgen
