#pragma once
// Operational semantics: time-indexed evaluation over history, frames of
// reference, scheduled effects, mechanic invocation, inertia, and engine
// rules (forced updates and invariants).
//
// One tick of execute_tick for acting agent a and action m at tick t:
//   1. record event (t, a, m)
//   2. schedule m's effects at t + offset with actor a
//   3. build state t+1 from state t: Relative deltas due at t+1 are summed
//      per target, then Absolute sets apply in (mechanic, atom) order
//   4. due invocations check the invoked mechanic's preconditions at t+1
//      and, when they hold, schedule its effects re-based at t+1
//   5. invariants are checked on the unsaturated state, then every value is
//      clamped into its absolute range
//   6. forced updates whose guards hold fire, values are clamped again
//   7. invariants are checked on the final state
// Any violation rejects the tick and leaves the session unchanged.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mechgen/json_io.hpp"
#include "mechgen/types.hpp"

namespace mechgen {

// ---------------------------------------------------------------------------
// Compiled (index-based) forms
// ---------------------------------------------------------------------------

struct CompiledCondition {
    ConditionKind kind = ConditionKind::ParamTest;
    Frame frame = Frame::Absolute;
    int offset = 0;
    int param = -1;   // parameter index (ParamTest)
    int pair = -1;    // subject pair (ParamTest), -1 when unowned
    int entity = -1;  // subject / tested entity / event actor
    int predicate = -1;
    MechanicId mechanic = 0;
    Relation relation = Relation::Eq;
    int rhs = 0;
    bool negated = false;
};

using CompiledConditions = std::vector<CompiledCondition>;

struct CompiledEffect {
    EffectKind kind = EffectKind::ParamUpdate;
    Frame frame = Frame::Relative;
    int offset = 1;
    int pair = -1;
    MechanicId mechanic = 0;
    int amount = 0;
    auto operator<=>(const CompiledEffect&) const = default;
};

struct CompiledMechanic {
    MechanicId id = 0;
    CompiledConditions preconditions;
    std::vector<CompiledEffect> effects;
};

struct CompiledPredicate {
    std::vector<int> members;  // entity indices of the bound class
    struct Conjunct {
        int param;
        Relation relation;
        int plus;
    };
    std::vector<Conjunct> conjuncts;
};

struct CompiledRule {
    EngineRule::Kind kind;
    std::string name;
    // one instantiation per class member (or a single one, actor = -1)
    struct Instance {
        int member = -1;
        CompiledConditions condition;
        std::vector<std::pair<int, int>> updates;  // (pair, delta)
    };
    std::vector<Instance> instances;
};

/// Index tables for one domain; shared read-only by sessions.
class CompiledDomain {
public:
    explicit CompiledDomain(DomainSpec spec) : spec_(std::move(spec)) {
        for (std::size_t i = 0; i < spec_.entities.size(); ++i) entity_index_[spec_.entities[i]] = static_cast<int>(i);
        for (std::size_t i = 0; i < spec_.parameters.size(); ++i) param_index_[spec_.parameters[i]] = static_cast<int>(i);
        pair_of_.assign(spec_.entities.size() * spec_.parameters.size(), -1);
        for (const auto& h : spec_.has) {
            int e = entity(h.entity), p = param(h.param);
            if (e < 0 || p < 0 || pair_of_[slot(p, e)] >= 0) continue;
            pair_of_[slot(p, e)] = static_cast<int>(pairs_.size());
            pairs_.push_back(h);
            auto it = spec_.abs_ranges.find(h);
            ranges_.push_back(it == spec_.abs_ranges.end() ? Range{-1000000, 1000000} : it->second);
        }
        for (const auto& d : spec_.derived) {
            CompiledPredicate cp;
            if (auto it = spec_.classes.find(d.bound_class); it != spec_.classes.end())
                for (const auto& m : it->second) cp.members.push_back(entity(m));
            for (const auto& c : d.conjuncts) cp.conjuncts.push_back({param(c.param), c.relation, c.plus});
            predicate_index_[d.name] = static_cast<int>(predicates_.size());
            predicates_.push_back(std::move(cp));
        }
        for (const auto& a : spec_.agents) agents_.push_back(entity(a));
        for (const auto& r : spec_.engine_rules) {
            CompiledRule cr{r.kind, r.name, {}};
            std::vector<std::string> members;
            if (r.for_class) {
                if (auto it = spec_.classes.find(*r.for_class); it != spec_.classes.end()) members = it->second;
            } else {
                members.push_back("");
            }
            for (const auto& m : members) {
                CompiledRule::Instance inst;
                inst.member = m.empty() ? -1 : entity(m);
                for (auto atom : r.condition) {
                    if (atom.entity == kClassMember) atom.entity = m;
                    inst.condition.push_back(compile(atom));
                }
                for (const auto& u : r.updates) inst.updates.emplace_back(pair(u.param, m), u.delta);
                cr.instances.push_back(std::move(inst));
            }
            rules_.push_back(std::move(cr));
        }
        for (const auto& [agent, goals] : spec_.playability.per_agent) {
            goals_[entity(agent)] = compile(goals.goal);
            maintenance_[entity(agent)] = compile(goals.maintenance);
        }
    }

    const DomainSpec& spec() const { return spec_; }
    int entity(const std::string& name) const {
        auto it = entity_index_.find(name);
        return it == entity_index_.end() ? -1 : it->second;
    }
    int param(const std::string& name) const {
        auto it = param_index_.find(name);
        return it == param_index_.end() ? -1 : it->second;
    }
    int pair(int param, int entity) const {
        if (param < 0 || entity < 0) return -1;
        return pair_of_[slot(param, entity)];
    }
    int pair(const std::string& param_name, const std::string& entity_name) const {
        return pair(param(param_name), entity(entity_name));
    }
    int pair(const Term& t) const { return pair(t.param, t.entity); }
    std::size_t pair_count() const { return pairs_.size(); }
    const Term& term(int pair) const { return pairs_[pair]; }
    const Range& range(int pair) const { return ranges_[pair]; }
    const std::string& entity_name(int e) const { return spec_.entities[e]; }
    const std::vector<int>& agents() const { return agents_; }
    const CompiledPredicate& predicate(int i) const { return predicates_[i]; }
    const std::vector<CompiledRule>& rules() const { return rules_; }
    const CompiledConditions* goal(int agent) const {
        auto it = goals_.find(agent);
        return it == goals_.end() ? nullptr : &it->second;
    }
    const CompiledConditions* maintenance(int agent) const {
        auto it = maintenance_.find(agent);
        return it == maintenance_.end() ? nullptr : &it->second;
    }

    CompiledCondition compile(const ConditionAtom& a) const {
        CompiledCondition c;
        c.kind = a.kind;
        c.frame = a.frame;
        c.offset = a.offset;
        c.entity = entity(a.entity);
        c.relation = a.relation;
        c.rhs = a.rhs;
        c.negated = a.negated;
        c.mechanic = a.mechanic;
        if (a.kind == ConditionKind::ParamTest) {
            c.param = param(a.name);
            c.pair = pair(c.param, c.entity);
        } else if (a.kind == ConditionKind::DerivedTest) {
            auto it = predicate_index_.find(a.name);
            c.predicate = it == predicate_index_.end() ? -1 : it->second;
        }
        return c;
    }
    CompiledConditions compile(const std::vector<ConditionAtom>& atoms) const {
        CompiledConditions out;
        for (const auto& a : atoms) out.push_back(compile(a));
        return out;
    }
    CompiledEffect compile(const EffectAtom& e) const {
        CompiledEffect c;
        c.kind = e.kind;
        c.frame = e.frame;
        c.offset = e.offset;
        c.mechanic = e.mechanic;
        c.amount = e.amount;
        if (e.kind == EffectKind::ParamUpdate) c.pair = pair(e.param, e.entity);
        return c;
    }
    CompiledMechanic compile(const Mechanic& m) const {
        CompiledMechanic cm;
        cm.id = m.id;
        cm.preconditions = compile(m.preconditions);
        for (const auto& e : m.effects) cm.effects.push_back(compile(e));
        return cm;
    }

private:
    std::size_t slot(int p, int e) const { return static_cast<std::size_t>(p) * spec_.entities.size() + e; }

    DomainSpec spec_;
    std::map<std::string, int> entity_index_, param_index_, predicate_index_;
    std::vector<int> pair_of_;
    std::vector<Term> pairs_;
    std::vector<Range> ranges_;
    std::vector<CompiledPredicate> predicates_;
    std::vector<int> agents_;
    std::vector<CompiledRule> rules_;
    std::map<int, CompiledConditions> goals_, maintenance_;
};

/// Mechanic set compiled against a domain, looked up by id.
class CompiledMechanics {
public:
    CompiledMechanics(const CompiledDomain& dom, const MechanicSet& ms) : source_(ms) {
        std::vector<const Mechanic*> sorted;
        for (const auto& m : ms) sorted.push_back(&m);
        std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
        for (const auto* m : sorted) {
            index_[m->id] = static_cast<int>(list_.size());
            list_.push_back(dom.compile(*m));
        }
    }
    const CompiledMechanic* find(MechanicId id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &list_[it->second];
    }
    const std::vector<CompiledMechanic>& list() const { return list_; }
    const MechanicSet& source() const { return source_; }
    const Mechanic* source_mechanic(MechanicId id) const {
        for (const auto& m : source_)
            if (m.id == id) return &m;
        return nullptr;
    }

private:
    MechanicSet source_;
    std::vector<CompiledMechanic> list_;
    std::map<MechanicId, int> index_;
};

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

struct SimState {
    int time = 0;
    std::map<Term, int> values;
    bool operator==(const SimState&) const = default;
};

struct Event {
    int tick = 0;
    int agent = -1;  // entity index
    MechanicId mechanic = kNoOp;
    bool invoked = false;
    auto operator<=>(const Event&) const = default;
};

struct PendingEffect {
    int due = 0;
    MechanicId source = 0;
    int atom = 0;
    CompiledEffect effect;
    int actor = -1;
    int depth = 0;
    auto operator<=>(const PendingEffect&) const = default;
};

enum class StepStatus {
    Ok,
    OutOfTurn,
    UnknownMechanic,
    NoOpDisabled,
    PreconditionFailed,
    InvariantViolated,
    InvokeDepthExceeded,
};

inline const char* to_string(StepStatus s) {
    switch (s) {
        case StepStatus::Ok: return "ok";
        case StepStatus::OutOfTurn: return "out_of_turn";
        case StepStatus::UnknownMechanic: return "unknown_mechanic";
        case StepStatus::NoOpDisabled: return "noop_disabled";
        case StepStatus::PreconditionFailed: return "precondition_failed";
        case StepStatus::InvariantViolated: return "invariant_violated";
        case StepStatus::InvokeDepthExceeded: return "invoke_depth_exceeded";
    }
    return "?";
}

/// Rejected tick; the session is unchanged.
class IllegalAction : public Error {
public:
    IllegalAction(StepStatus status, const std::string& detail)
        : Error(std::string(to_string(status)) + ": " + detail), status_(status) {}
    StepStatus status() const noexcept { return status_; }

private:
    StepStatus status_;
};

class Session {
public:
    Session(std::shared_ptr<const CompiledDomain> dom, std::shared_ptr<const CompiledMechanics> mechs,
            const GameInstance& instance)
        : dom_(std::move(dom)), mechs_(std::move(mechs)), instance_(share(dom_, instance)) {
        width_ = dom_->pair_count();
        values_.assign(width_, 0);
        for (std::size_t p = 0; p < width_; ++p) {
            auto it = instance.initials.find(dom_->term(static_cast<int>(p)));
            if (it == instance.initials.end())
                throw Error("instance " + instance.name + " has no initial value for " +
                            dom_->term(static_cast<int>(p)).param + "(" + dom_->term(static_cast<int>(p)).entity + ")");
            values_[p] = it->second;
        }
    }

    const CompiledDomain& domain() const { return *dom_; }
    const DomainSpec& spec() const { return dom_->spec(); }
    const CompiledMechanics& mechanics() const { return *mechs_; }
    std::shared_ptr<const CompiledDomain> domain_ptr() const { return dom_; }
    std::shared_ptr<const CompiledMechanics> mechanics_ptr() const { return mechs_; }
    const GameInstance& instance() const { return *instance_; }

    /// Current tick (index of the newest state).
    int time() const { return static_cast<int>(values_.size() / width_) - 1; }
    int value(int pair, int tick) const { return values_[static_cast<std::size_t>(tick) * width_ + pair]; }
    int value(const Term& t, int tick) const {
        int p = dom_->pair(t);
        if (p < 0) throw EvaluationError("unknown term " + t.param + "(" + t.entity + ")");
        return value(p, tick);
    }
    int value(const Term& t) const { return value(t, time()); }
    SimState state(int tick) const {
        SimState s{tick, {}};
        for (std::size_t p = 0; p < width_; ++p) s.values[dom_->term(static_cast<int>(p))] = value(static_cast<int>(p), tick);
        return s;
    }
    SimState state() const { return state(time()); }
    std::vector<SimState> history() const {
        std::vector<SimState> out;
        for (int t = 0; t <= time(); ++t) out.push_back(state(t));
        return out;
    }
    const std::vector<Event>& events() const { return events_; }
    const std::vector<PendingEffect>& pending() const { return pending_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Agent whose turn it is at the current tick (round-robin).
    int agent_to_act() const {
        const auto& agents = dom_->agents();
        return agents.empty() ? -1 : agents[static_cast<std::size_t>(time()) % agents.size()];
    }

    // -- evaluation ---------------------------------------------------------

    /// Truth of one compiled atom at tick `now` for `actor`; nullopt when a
    /// relative test's actor lacks the parameter.
    std::optional<bool> eval(const CompiledCondition& c, int actor, int now) const {
        int at = now + c.offset;
        if (at < 0 || at > time()) return false;
        switch (c.kind) {
            case ConditionKind::ParamTest: {
                if (c.pair < 0) return false;
                int lhs = value(c.pair, at);
                if (c.frame == Frame::Relative) {
                    int own = dom_->pair(c.param, actor);
                    if (own < 0) return std::nullopt;
                    lhs -= value(own, at);
                }
                return compare(lhs, c.relation, c.rhs);
            }
            case ConditionKind::DerivedTest: {
                if (c.predicate < 0 || c.entity < 0) return false;
                bool found = false;
                const auto& pred = dom_->predicate(c.predicate);
                for (int b : pred.members) {
                    if (b == c.entity) continue;
                    bool all = true;
                    for (const auto& cj : pred.conjuncts) {
                        int pa = dom_->pair(cj.param, c.entity), pb = dom_->pair(cj.param, b);
                        if (pa < 0 || pb < 0 || !compare(value(pa, at), cj.relation, value(pb, at) + cj.plus)) {
                            all = false;
                            break;
                        }
                    }
                    if (all) {
                        found = true;
                        break;
                    }
                }
                return found != c.negated;
            }
            case ConditionKind::EventTest: {
                bool found = false;
                for (auto it = events_.rbegin(); it != events_.rend() && it->tick >= at; ++it)
                    if (it->tick == at && it->agent == c.entity && it->mechanic == c.mechanic) {
                        found = true;
                        break;
                    }
                return found != c.negated;
            }
        }
        return false;
    }

    /// Conjunction; evaluation errors count as false.
    bool holds(const CompiledConditions& cs, int actor, int now) const {
        for (const auto& c : cs) {
            auto v = eval(c, actor, now);
            if (!v || !*v) return false;
        }
        return true;
    }

    bool goal_holds(int agent, int now) const {
        const auto* g = dom_->goal(agent);
        return !g || holds(*g, agent, now);
    }
    bool maintenance_holds(int agent, int now) const {
        const auto* m = dom_->maintenance(agent);
        return !m || holds(*m, agent, now);
    }

    // -- stepping -----------------------------------------------------------

    struct Checkpoint {
        std::size_t values;
        std::size_t events;
        std::vector<PendingEffect> pending;
    };

    Checkpoint checkpoint() const { return {values_.size(), events_.size(), pending_}; }
    void restore(Checkpoint cp) {
        values_.resize(cp.values);
        events_.resize(cp.events);
        pending_ = std::move(cp.pending);
    }

    /// Executes one tick in place. On any status other than Ok the session
    /// is left exactly as before the call.
    StepStatus step(int agent, MechanicId action) {
        if (agent != agent_to_act()) return StepStatus::OutOfTurn;
        const int t = time();
        const CompiledMechanic* mech = nullptr;
        if (action == kNoOp) {
            if (!spec().playability.noop) return StepStatus::NoOpDisabled;
        } else {
            mech = mechs_->find(action);
            if (!mech) return StepStatus::UnknownMechanic;
            if (!holds(mech->preconditions, agent, t)) return StepStatus::PreconditionFailed;
        }
        Checkpoint cp = checkpoint();
        StepStatus status = advance(agent, mech, action, t);
        if (status != StepStatus::Ok) restore(std::move(cp));
        return status;
    }

    /// Legal actions for `agent` at the current tick, ascending id, NoOp last.
    std::vector<MechanicId> applicable(int agent) {
        std::vector<MechanicId> out;
        if (agent != agent_to_act()) return out;
        for (const auto& m : mechs_->list())
            if (trial(agent, m.id)) out.push_back(m.id);
        if (spec().playability.noop && trial(agent, kNoOp)) out.push_back(kNoOp);
        return out;
    }

    bool trial(int agent, MechanicId action) {
        Checkpoint cp = checkpoint();
        auto warnings = warnings_.size();
        StepStatus s = step(agent, action);
        if (s == StepStatus::Ok) restore(std::move(cp));
        warnings_.resize(warnings);
        return s == StepStatus::Ok;
    }

    /// Duplicate-detection key for search: turn slot, available history
    /// depth, the newest `window`+1 states, pending effects re-based to now,
    /// and events inside the window.
    std::vector<int> search_key(int window) const {
        const int t = time();
        std::vector<int> key;
        const int depth = std::min(t, window);
        key.push_back(dom_->agents().empty() ? 0 : t % static_cast<int>(dom_->agents().size()));
        key.push_back(depth);
        for (int k = 0; k <= depth; ++k)
            for (std::size_t p = 0; p < width_; ++p) key.push_back(value(static_cast<int>(p), t - k));
        std::vector<PendingEffect> pend = pending_;
        for (auto& p : pend) p.due -= t;
        std::sort(pend.begin(), pend.end());
        key.push_back(static_cast<int>(pend.size()));
        for (const auto& p : pend) {
            key.insert(key.end(), {p.due, p.source, p.atom, p.actor, p.depth, static_cast<int>(p.effect.kind), p.effect.pair,
                                   p.effect.amount, static_cast<int>(p.effect.frame), p.effect.mechanic});
        }
        for (const auto& e : events_)
            if (e.tick > t - window - 1 && e.mechanic != kNoOp)
                key.insert(key.end(), {e.tick - t, e.agent, e.mechanic});
        return key;
    }

private:
    StepStatus advance(int agent, const CompiledMechanic* mech, MechanicId action, int t) {
        events_.push_back({t, agent, action, false});
        if (mech)
            for (std::size_t k = 0; k < mech->effects.size(); ++k)
                pending_.push_back({t + mech->effects[k].offset, mech->id, static_cast<int>(k), mech->effects[k], agent, 0});

        // state t+1 starts as a copy of state t (inertia)
        values_.insert(values_.end(), values_.end() - static_cast<std::ptrdiff_t>(width_), values_.end());
        const int next = t + 1;
        int* row = values_.data() + static_cast<std::size_t>(next) * width_;

        std::vector<PendingEffect> due;
        for (auto it = pending_.begin(); it != pending_.end();) {
            if (it->due == next) {
                due.push_back(*it);
                it = pending_.erase(it);
            } else {
                ++it;
            }
        }
        std::sort(due.begin(), due.end(), [](const PendingEffect& a, const PendingEffect& b) {
            return std::tie(a.source, a.atom, a.actor, a.depth) < std::tie(b.source, b.atom, b.actor, b.depth);
        });
        for (const auto& p : due)
            if (p.effect.kind == EffectKind::ParamUpdate && p.effect.frame == Frame::Relative && p.effect.pair >= 0)
                row[p.effect.pair] += p.effect.amount;
        std::map<int, int> written;
        for (const auto& p : due) {
            if (p.effect.kind != EffectKind::ParamUpdate || p.effect.frame != Frame::Absolute || p.effect.pair < 0) continue;
            if (auto w = written.find(p.effect.pair); w != written.end() && w->second != p.effect.amount)
                warnings_.push_back("tick " + std::to_string(next) + ": conflicting absolute sets on " +
                                    dom_->term(p.effect.pair).param + "(" + dom_->term(p.effect.pair).entity +
                                    "), last write wins");
            written[p.effect.pair] = p.effect.amount;
            row[p.effect.pair] = p.effect.amount;
        }
        for (const auto& p : due) {
            if (p.effect.kind != EffectKind::EventInvoke) continue;
            const CompiledMechanic* inv = mechs_->find(p.effect.mechanic);
            if (!inv) continue;
            if (p.depth + 1 > spec().bounds.invoke_depth) return StepStatus::InvokeDepthExceeded;
            if (!holds(inv->preconditions, p.actor, next)) continue;
            events_.push_back({next, p.actor, inv->id, true});
            for (std::size_t k = 0; k < inv->effects.size(); ++k)
                pending_.push_back({next + inv->effects[k].offset, inv->id, static_cast<int>(k), inv->effects[k], p.actor,
                                    p.depth + 1});
        }

        if (!invariants_hold(agent, next)) return StepStatus::InvariantViolated;
        clamp(row);
        apply_forced_updates(next);
        clamp(row);
        if (!invariants_hold(agent, next)) return StepStatus::InvariantViolated;
        return StepStatus::Ok;
    }

    void clamp(int* row) const {
        for (std::size_t p = 0; p < width_; ++p) {
            const auto& r = dom_->range(static_cast<int>(p));
            row[p] = std::clamp(row[p], r.lo, r.hi);
        }
    }

    void apply_forced_updates(int now) {
        std::vector<std::pair<int, int>> deltas;
        for (const auto& rule : dom_->rules()) {
            if (rule.kind != EngineRule::Kind::ForcedUpdate) continue;
            for (const auto& inst : rule.instances)
                if (holds(inst.condition, inst.member, now))
                    for (const auto& u : inst.updates)
                        if (u.first >= 0) deltas.push_back(u);
        }
        int* row = values_.data() + static_cast<std::size_t>(now) * width_;
        for (const auto& [pair, delta] : deltas) row[pair] += delta;
    }

    bool invariants_hold(int agent, int now) const {
        for (const auto& rule : dom_->rules()) {
            if (rule.kind != EngineRule::Kind::Invariant) continue;
            for (const auto& inst : rule.instances)
                if (!holds(inst.condition, inst.member >= 0 ? inst.member : agent, now)) return false;
        }
        return true;
    }

    std::shared_ptr<const CompiledDomain> dom_;
    std::shared_ptr<const CompiledMechanics> mechs_;
    std::shared_ptr<const GameInstance> instance_;

    // Instances owned by the compiled domain are borrowed rather than copied.
    static std::shared_ptr<const GameInstance> share(const std::shared_ptr<const CompiledDomain>& dom,
                                                     const GameInstance& instance) {
        for (const auto& i : dom->spec().instances)
            if (&i == &instance) return std::shared_ptr<const GameInstance>(dom, &i);
        return std::make_shared<const GameInstance>(instance);
    }
    std::size_t width_ = 0;
    std::vector<int> values_;  // row-major history, one row per tick
    std::vector<Event> events_;
    std::vector<PendingEffect> pending_;
    std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Operation-level API
// ---------------------------------------------------------------------------

inline Session initial_state(const DomainSpec& spec, const MechanicSet& mechanics, const GameInstance& instance) {
    auto dom = std::make_shared<const CompiledDomain>(spec);
    auto ms = std::make_shared<const CompiledMechanics>(*dom, mechanics);
    return Session(dom, ms, instance);
}

inline Session initial_state(std::shared_ptr<const CompiledDomain> dom, const MechanicSet& mechanics,
                             const GameInstance& instance) {
    auto ms = std::make_shared<const CompiledMechanics>(*dom, mechanics);
    return Session(std::move(dom), ms, instance);
}

inline int require_entity(const Session& s, const std::string& name) {
    int e = s.domain().entity(name);
    if (e < 0) throw EvaluationError("unknown entity '" + name + "'");
    return e;
}

/// Truth of `atom` at tick `now` with `actor` as the frame origin.
inline bool evaluate_atom(const Session& s, const std::string& actor, const ConditionAtom& atom, int now) {
    if (now > s.time()) throw EvaluationError("evaluation tick is in the future");
    int a = require_entity(s, actor);
    auto v = s.eval(s.domain().compile(atom), a, now);
    if (!v) throw EvaluationError("relative test on " + atom.name + " but actor " + actor + " lacks it");
    return *v;
}

inline std::vector<MechanicId> applicable_mechanics(Session& s, const std::string& agent) {
    return s.applicable(require_entity(s, agent));
}

inline std::vector<MechanicId> applicable_mechanics(const Session& s, const std::string& agent) {
    Session copy = s;
    return copy.applicable(require_entity(copy, agent));
}

/// Pure form: returns the successor session, or throws IllegalAction.
inline Session execute_tick(const Session& s, const std::string& agent, MechanicId action) {
    Session next = s;
    StepStatus st = next.step(require_entity(next, agent), action);
    if (st != StepStatus::Ok)
        throw IllegalAction(st, agent + " cannot perform " + std::to_string(action) + " at tick " + std::to_string(s.time()));
    return next;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct TraceStep {
    int tick = 0;
    std::string agent;
    MechanicId action = kNoOp;
    bool operator==(const TraceStep&) const = default;
};

struct Trace {
    std::string instance;
    std::vector<TraceStep> steps;
    int terminal_tick = 0;
    std::map<std::string, int> goal_ticks;
    bool operator==(const Trace&) const = default;

    std::set<MechanicId> used_mechanics() const {
        std::set<MechanicId> out;
        for (const auto& s : steps)
            if (s.action != kNoOp) out.insert(s.action);
        return out;
    }
};

inline std::string action_label(const MechanicSet& ms, MechanicId id) {
    if (id == kNoOp) return "NoOp";
    for (const auto& m : ms)
        if (m.id == id) return m.label();
    return std::to_string(id);
}

inline MechanicId action_from_label(const MechanicSet& ms, const std::string& label) {
    if (label == "NoOp" || label == "noop") return kNoOp;
    for (const auto& m : ms)
        if (m.name == label) return m.id;
    try {
        std::size_t pos = 0;
        int id = std::stoi(label, &pos);
        if (pos == label.size()) return id;
    } catch (const std::exception&) {
    }
    throw ParseError("unknown action '" + label + "'");
}

inline json to_json(const Trace& t, const MechanicSet& ms) {
    json steps = json::array();
    for (const auto& s : t.steps)
        steps.push_back({{"tick", s.tick}, {"agent", s.agent}, {"action", action_label(ms, s.action)}});
    return {{"instance", t.instance}, {"steps", steps}, {"terminal_tick", t.terminal_tick}, {"goal_ticks", t.goal_ticks}};
}

inline Trace trace_from_json(const json& j, const MechanicSet& ms) {
    using namespace detail;
    check_keys(j, "trace", {"instance", "steps", "terminal_tick", "goal_ticks"});
    Trace t;
    t.instance = string_field(j, "trace", "instance");
    const auto& steps = array_at(require(j, "trace", "steps"), "trace.steps");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        std::string p = "trace.steps[" + std::to_string(i) + "]";
        check_keys(steps[i], p, {"tick", "agent", "action"});
        TraceStep s;
        s.tick = int_field(steps[i], p, "tick");
        s.agent = string_field(steps[i], p, "agent");
        const auto& a = require(steps[i], p, "action");
        s.action = a.is_number_integer() ? get_int(a, p + ".action") : action_from_label(ms, get_string(a, p + ".action"));
        t.steps.push_back(std::move(s));
    }
    t.terminal_tick = int_field_or(j, "trace", "terminal_tick", static_cast<int>(t.steps.size()));
    if (auto it = j.find("goal_ticks"); it != j.end())
        for (const auto& [agent, tick] : it->items()) t.goal_ticks[agent] = get_int(tick, "trace.goal_ticks." + agent);
    return t;
}

struct TickReport {
    int tick = 0;
    std::string agent;
    MechanicId action = kNoOp;
    bool legal = false;
    std::string reason;
    std::map<std::string, bool> goal;         // at tick+1
    std::map<std::string, bool> maintenance;  // at tick+1
};

struct TraceReport {
    std::string instance;
    bool legal = true;
    std::vector<TickReport> ticks;
    std::map<std::string, int> goal_ticks;  // first tick each agent's goal held
    std::optional<int> player_goal_tick;
    bool maintenance_held = true;  // player's maintenance at every tick up to its goal tick
    bool ordering_respected = true;
    SimState final_state;

    bool playable() const { return legal && player_goal_tick && maintenance_held && ordering_respected; }
};

inline json to_json(const TraceReport& r, const MechanicSet& ms) {
    json ticks = json::array();
    for (const auto& t : r.ticks)
        ticks.push_back({{"tick", t.tick},
                         {"agent", t.agent},
                         {"action", action_label(ms, t.action)},
                         {"legal", t.legal},
                         {"reason", t.reason},
                         {"goal", t.goal},
                         {"maintenance", t.maintenance}});
    json fin = json::array();
    for (const auto& [term, v] : r.final_state.values) fin.push_back({{"param", term.param}, {"entity", term.entity}, {"value", v}});
    return {{"instance", r.instance},
            {"legal", r.legal},
            {"ticks", ticks},
            {"goal_ticks", r.goal_ticks},
            {"player_goal_tick", r.player_goal_tick ? json(*r.player_goal_tick) : json(nullptr)},
            {"maintenance_held", r.maintenance_held},
            {"ordering_respected", r.ordering_respected},
            {"playable", r.playable()},
            {"final_state", {{"time", r.final_state.time}, {"values", fin}}}};
}

/// Replays a trace tick by tick. Replay stops at the first illegal step.
inline TraceReport verify_trace(const DomainSpec& spec, const MechanicSet& mechanics, const GameInstance& instance,
                                const Trace& trace) {
    Session s = initial_state(spec, mechanics, instance);
    TraceReport rep;
    rep.instance = instance.name;
    const auto& dom = s.domain();
    int player = dom.entity(spec.playability.player);
    std::vector<int> agents = dom.agents();
    bool player_done = false;
    bool opponent_first = false;
    auto observe = [&](int tick, TickReport* tr) {
        for (int a : agents) {
            const std::string& name = dom.entity_name(a);
            bool g = s.goal_holds(a, tick) && dom.goal(a) != nullptr;
            bool m = s.maintenance_holds(a, tick);
            if (tr) {
                tr->goal[name] = g;
                tr->maintenance[name] = m;
            }
            if (g && !rep.goal_ticks.count(name)) rep.goal_ticks[name] = tick;
        }
        if (!player_done && player >= 0) {
            if (!s.maintenance_holds(player, tick)) rep.maintenance_held = false;
            bool pg = s.goal_holds(player, tick);
            if (!pg && spec.playability.ordering == Ordering::PlayerFirst)
                for (int a : agents)
                    if (a != player && dom.goal(a) && s.goal_holds(a, tick)) opponent_first = true;
            if (pg && rep.maintenance_held) {
                rep.player_goal_tick = tick;
                player_done = true;
            }
        }
    };
    observe(0, nullptr);
    for (const auto& st : trace.steps) {
        TickReport tr;
        tr.tick = st.tick;
        tr.agent = st.agent;
        tr.action = st.action;
        int a = dom.entity(st.agent);
        if (st.tick != s.time()) {
            tr.reason = "tick mismatch";
        } else if (a < 0) {
            tr.reason = "unknown agent";
        } else {
            StepStatus status = s.step(a, st.action);
            tr.legal = status == StepStatus::Ok;
            tr.reason = to_string(status);
        }
        if (!tr.legal) {
            rep.legal = false;
            rep.ticks.push_back(std::move(tr));
            break;
        }
        observe(s.time(), &tr);
        rep.ticks.push_back(std::move(tr));
    }
    rep.ordering_respected = !opponent_first;
    rep.final_state = s.state();
    return rep;
}

}  // namespace mechgen
