#pragma once
// Design requirements: hard constraints as candidate filters, soft terms as
// prioritized weighted sums, and the progression and control checkers.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mechgen/canonical.hpp"
#include "mechgen/engine.hpp"
#include "mechgen/types.hpp"

namespace mechgen {

struct RequirementViolation {
    std::string requirement;
    std::vector<MechanicId> mechanics;
    std::string message;
    bool operator==(const RequirementViolation&) const = default;
};

inline json to_json(const std::vector<RequirementViolation>& vs) {
    json arr = json::array();
    for (const auto& v : vs) arr.push_back({{"requirement", v.requirement}, {"mechanics", v.mechanics}, {"message", v.message}});
    return arr;
}

// ---------------------------------------------------------------------------
// Hard requirements
// ---------------------------------------------------------------------------

namespace detail {

/// Pairs of atoms in one mechanic that demand incompatible values of the
/// same subject at the same frame and offset.
inline std::optional<std::string> contradiction(const Mechanic& m) {
    const auto& p = m.preconditions;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            const auto& a = p[i];
            const auto& b = p[j];
            if (a.kind != b.kind || a.offset != b.offset || a.entity != b.entity) continue;
            if (a.kind == ConditionKind::ParamTest) {
                if (a.frame != b.frame || a.name != b.name) continue;
                bool eq_eq = a.relation == Relation::Eq && b.relation == Relation::Eq && a.rhs != b.rhs;
                bool eq_neq = a.rhs == b.rhs && ((a.relation == Relation::Eq && b.relation == Relation::Neq) ||
                                                 (a.relation == Relation::Neq && b.relation == Relation::Eq));
                if (eq_eq || eq_neq) return a.name + "(" + a.entity + ") tested for conflicting equalities";
            } else if (a.kind == ConditionKind::DerivedTest) {
                if (a.name == b.name && a.negated != b.negated) return a.name + "(" + a.entity + ") and its negation";
            } else if (a.mechanic == b.mechanic && a.negated != b.negated) {
                return "event test on " + std::to_string(a.mechanic) + " and its negation";
            }
        }
    const auto& e = m.effects;
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = i + 1; j < e.size(); ++j)
            if (e[i].kind == EffectKind::ParamUpdate && e[j].kind == EffectKind::ParamUpdate &&
                e[i].frame == Frame::Absolute && e[j].frame == Frame::Absolute && e[i].offset == e[j].offset &&
                e[i].term() == e[j].term() && e[i].amount != e[j].amount)
                return e[i].param + "(" + e[i].entity + ") set to two values";
    return std::nullopt;
}

inline bool pays_cost(const Mechanic& m, const HardReq& r, const DomainSpec& spec) {
    for (const auto& e : m.effects) {
        if (e.kind != EffectKind::ParamUpdate || e.frame != Frame::Relative || e.amount >= 0) continue;
        for (const auto& res : r.resources) {
            if (res.param != e.param) continue;
            if (!res.owner_is_actor ||
                std::find(spec.agents.begin(), spec.agents.end(), e.entity) != spec.agents.end())
                return true;
        }
    }
    return false;
}

inline Mechanic body_only(const Mechanic& m) {
    Mechanic b = canonicalize_mechanic(m);
    b.id = 0;
    b.name.clear();
    return b;
}

}  // namespace detail

/// Violations of a single hard requirement.
inline std::vector<RequirementViolation> check_hard(const MechanicSet& ms, const DomainSpec& spec, const HardReq& r) {
    std::vector<RequirementViolation> out;
    const std::string name = to_string(r.kind);
    switch (r.kind) {
        case HardKind::NoContradictoryEquality:
            for (const auto& m : ms)
                if (auto why = detail::contradiction(m)) out.push_back({name, {m.id}, m.label() + ": " + *why});
            break;
        case HardKind::NoDuplicateMechanics:
            for (std::size_t i = 0; i < ms.size(); ++i)
                for (std::size_t j = i + 1; j < ms.size(); ++j)
                    if (detail::body_only(ms[i]) == detail::body_only(ms[j]))
                        out.push_back({name, {ms[i].id, ms[j].id}, ms[i].label() + " and " + ms[j].label() + " are identical"});
            break;
        case HardKind::CostRequired:
            for (const auto& m : ms)
                if (!detail::pays_cost(m, r, spec)) out.push_back({name, {m.id}, m.label() + " has no resource cost"});
            break;
        case HardKind::NoEmptyEffects:
            for (const auto& m : ms)
                if (m.effects.empty()) out.push_back({name, {m.id}, m.label() + " has no effects"});
            break;
        case HardKind::MaxAtoms:
            for (const auto& m : ms)
                if (static_cast<int>(m.preconditions.size()) > r.max_pre || static_cast<int>(m.effects.size()) > r.max_eff)
                    out.push_back({name, {m.id}, m.label() + " exceeds the atom caps"});
            break;
    }
    return out;
}

/// All hard-requirement violations; empty iff the set is admissible.
inline std::vector<RequirementViolation> check_hard(const MechanicSet& ms, const DomainSpec& spec,
                                                    const std::vector<HardReq>& hard) {
    std::vector<RequirementViolation> out;
    for (const auto& r : hard) {
        auto v = check_hard(ms, spec, r);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

inline std::vector<RequirementViolation> check_hard(const MechanicSet& ms, const DomainSpec& spec) {
    return check_hard(ms, spec, spec.design.hard);
}

// ---------------------------------------------------------------------------
// Soft requirements
// ---------------------------------------------------------------------------

using ControlMapping = std::map<MechanicId, std::set<std::string>>;

/// Atom-level edit distance between two sets, matching mechanics by id.
/// Each unmatched mechanic costs `unmatched_cost`.
inline int edit_distance(const MechanicSet& a, const MechanicSet& b, int unmatched_cost) {
    std::map<MechanicId, const Mechanic*> left, right;
    for (const auto& m : a) left[m.id] = &m;
    for (const auto& m : b) right[m.id] = &m;
    int d = 0;
    for (const auto& [id, m] : left) {
        auto it = right.find(id);
        if (it == right.end()) {
            d += unmatched_cost;
            continue;
        }
        auto sym = [](auto x, auto y) {
            std::sort(x.begin(), x.end());
            std::sort(y.begin(), y.end());
            x.erase(std::unique(x.begin(), x.end()), x.end());
            y.erase(std::unique(y.begin(), y.end()), y.end());
            std::size_t common = 0;
            for (std::size_t i = 0, j = 0; i < x.size() && j < y.size();) {
                if (x[i] == y[j]) ++common, ++i, ++j;
                else if (x[i] < y[j]) ++i;
                else ++j;
            }
            return static_cast<int>(x.size() + y.size() - 2 * common);
        };
        d += sym(m->preconditions, it->second->preconditions) + sym(m->effects, it->second->effects);
    }
    for (const auto& [id, m] : right) {
        (void)m;
        if (!left.count(id)) d += unmatched_cost;
    }
    return d;
}

inline int unmatched_mechanic_cost(const GeneratorBounds& b) { return b.max_pre + b.max_eff + 1; }

/// Σ over mechanic pairs of |shared inputs| · |shared update targets|.
inline long intuitiveness_score(const MechanicSet& ms, const ControlMapping& mapping) {
    std::vector<std::set<Term>> targets;
    std::vector<const std::set<std::string>*> inputs;
    static const std::set<std::string> none;
    for (const auto& m : ms) {
        std::set<Term> t;
        for (const auto& e : m.effects)
            if (e.kind == EffectKind::ParamUpdate) t.insert(e.term());
        targets.push_back(std::move(t));
        auto it = mapping.find(m.id);
        inputs.push_back(it == mapping.end() ? &none : &it->second);
    }
    long score = 0;
    for (std::size_t i = 0; i < ms.size(); ++i)
        for (std::size_t j = i + 1; j < ms.size(); ++j) {
            long si = 0, st = 0;
            for (const auto& x : *inputs[i]) si += inputs[j]->count(x);
            for (const auto& x : targets[i]) st += targets[j].count(x);
            score += si * st;
        }
    return score;
}

inline std::set<std::string> entities_referenced(const MechanicSet& ms) {
    std::set<std::string> out;
    for (const auto& m : ms) {
        for (const auto& a : m.preconditions) out.insert(a.entity);
        for (const auto& e : m.effects)
            if (e.kind == EffectKind::ParamUpdate) out.insert(e.entity);
    }
    return out;
}

inline int atom_count(const MechanicSet& ms) {
    int n = 0;
    for (const auto& m : ms) n += m.atom_count();
    return n;
}

/// Inputs some soft terms need.
struct ScoreContext {
    const MechanicSet* seed = nullptr;
    int unmatched_cost = 4;
    const ControlMapping* mapping = nullptr;
};

/// (priority, weighted sum) pairs, highest priority first; lower is better.
struct ScoreVector {
    std::vector<std::pair<int, long>> levels;
    bool operator==(const ScoreVector&) const = default;
};

inline json to_json(const ScoreVector& s) {
    json arr = json::array();
    for (const auto& [p, v] : s.levels) arr.push_back({{"priority", p}, {"value", v}});
    return arr;
}

inline bool is_monotone(SoftTerm t) {
    return t == SoftTerm::AtomCount || t == SoftTerm::MechanicCount || t == SoftTerm::DistinctEntitiesReferenced;
}

inline long soft_term_value(SoftTerm t, const MechanicSet& ms, const ScoreContext& ctx) {
    switch (t) {
        case SoftTerm::AtomCount: return atom_count(ms);
        case SoftTerm::MechanicCount: return static_cast<long>(ms.size());
        case SoftTerm::DistinctEntitiesReferenced: return static_cast<long>(entities_referenced(ms).size());
        case SoftTerm::AdaptationEditDistance:
            if (!ctx.seed) throw Error("adaptation_edit_distance needs a seed mechanic set");
            return edit_distance(*ctx.seed, ms, ctx.unmatched_cost);
        case SoftTerm::ControlIntuitiveness:
            if (!ctx.mapping) throw Error("control_intuitiveness needs a control mapping");
            return -intuitiveness_score(ms, *ctx.mapping);
    }
    return 0;
}

/// Priority levels of a soft layout, highest first.
inline std::vector<int> priority_levels(const std::vector<SoftReq>& reqs) {
    std::set<int, std::greater<>> ps;
    for (const auto& r : reqs) ps.insert(r.priority);
    return {ps.begin(), ps.end()};
}

/// Weighted sums per priority; `include` selects which terms contribute
/// (others still reserve their level so vectors stay comparable).
template <class Pred>
ScoreVector score_soft_if(const MechanicSet& ms, const std::vector<SoftReq>& reqs, const ScoreContext& ctx, Pred include) {
    ScoreVector out;
    for (int p : priority_levels(reqs)) {
        long sum = 0;
        for (const auto& r : reqs)
            if (r.priority == p && include(r.term)) sum += r.weight * soft_term_value(r.term, ms, ctx);
        out.levels.emplace_back(p, sum);
    }
    return out;
}

inline ScoreVector score_soft(const MechanicSet& ms, const std::vector<SoftReq>& reqs, const ScoreContext& ctx = {}) {
    return score_soft_if(ms, reqs, ctx, [](SoftTerm) { return true; });
}

/// -1 if a is better, 1 if b is better, 0 on a tie.
inline int compare_scores(const ScoreVector& a, const ScoreVector& b) {
    if (a.levels.size() != b.levels.size()) throw Error("score vectors have different priority structures");
    for (std::size_t i = 0; i < a.levels.size(); ++i) {
        if (a.levels[i].first != b.levels[i].first) throw Error("score vectors have different priority structures");
        if (a.levels[i].second != b.levels[i].second) return a.levels[i].second < b.levels[i].second ? -1 : 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Progression
// ---------------------------------------------------------------------------

struct ProgressionResult {
    bool ok = false;
    std::vector<std::size_t> witness;             // trace index per level
    std::vector<std::set<MechanicId>> used;       // used mechanics per level
};

/// Searches one trace per level whose used-mechanic sets grow strictly
/// (increasing usage, starting above zero) and/or are nested (reuse).
inline ProgressionResult check_progression(const std::vector<std::vector<Trace>>& levels, const ProgressionReqs& reqs) {
    ProgressionResult res;
    if (levels.empty()) return res;
    // distinct used sets per level, first trace index kept
    std::vector<std::vector<std::pair<std::set<MechanicId>, std::size_t>>> options(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
        std::set<std::set<MechanicId>> seen;
        for (std::size_t i = 0; i < levels[l].size(); ++i) {
            auto u = levels[l][i].used_mechanics();
            if (seen.insert(u).second) options[l].emplace_back(std::move(u), i);
        }
        if (options[l].empty()) return res;
    }
    std::vector<std::size_t> pick;
    std::vector<std::set<MechanicId>> used;
    std::function<bool(std::size_t)> dfs = [&](std::size_t l) {
        if (l == levels.size()) return true;
        for (const auto& [u, idx] : options[l]) {
            if (reqs.increasing_usage) {
                std::size_t prev = l == 0 ? 0 : used.back().size();
                if (u.size() <= prev) continue;
            }
            if (reqs.reuse_in_subsequent && l > 0 &&
                !std::includes(u.begin(), u.end(), used.back().begin(), used.back().end()))
                continue;
            pick.push_back(idx);
            used.push_back(u);
            if (dfs(l + 1)) return true;
            pick.pop_back();
            used.pop_back();
        }
        return false;
    };
    res.ok = dfs(0);
    if (res.ok) {
        res.witness = pick;
        res.used = used;
    }
    return res;
}

inline json to_json(const ProgressionResult& r) {
    json used = json::array();
    for (const auto& u : r.used) used.push_back(std::vector<MechanicId>(u.begin(), u.end()));
    return {{"ok", r.ok}, {"witness", r.witness}, {"used", used}};
}

// ---------------------------------------------------------------------------
// Controls
// ---------------------------------------------------------------------------

inline std::vector<RequirementViolation> check_controls(const MechanicSet& ms, const ControlMapping& mapping,
                                                        const ControlReqs& reqs,
                                                        const std::vector<std::string>& domain_inputs = {}) {
    std::set<MechanicId> ids;
    for (const auto& m : ms) ids.insert(m.id);
    const auto& declared = reqs.inputs.empty() ? domain_inputs : reqs.inputs;
    std::set<std::string> inputs(declared.begin(), declared.end());
    for (const auto& [id, in] : mapping) {
        if (!ids.count(id)) throw Error("control mapping references unknown mechanic " + std::to_string(id));
        for (const auto& i : in)
            if (!inputs.empty() && !inputs.count(i)) throw Error("control mapping references unknown input '" + i + "'");
    }
    static const std::set<std::string> none;
    auto of = [&](MechanicId id) -> const std::set<std::string>& {
        auto it = mapping.find(id);
        return it == mapping.end() ? none : it->second;
    };
    std::vector<RequirementViolation> out;
    if (reqs.require_input)
        for (const auto& m : ms)
            if (of(m.id).empty()) out.push_back({"require_input", {m.id}, m.label() + " has no input"});
    if (reqs.unambiguous)
        for (std::size_t i = 0; i < ms.size(); ++i)
            for (std::size_t j = i + 1; j < ms.size(); ++j) {
                auto a = canonicalize_mechanic(ms[i]).preconditions;
                auto b = canonicalize_mechanic(ms[j]).preconditions;
                if (a == b && of(ms[i].id) == of(ms[j].id))
                    out.push_back({"unambiguous", {ms[i].id, ms[j].id},
                                   ms[i].label() + " and " + ms[j].label() + " share preconditions and inputs"});
            }
    return out;
}

inline json to_json(const ControlMapping& m) {
    json out = json::object();
    for (const auto& [id, in] : m) out[std::to_string(id)] = std::vector<std::string>(in.begin(), in.end());
    return out;
}

}  // namespace mechgen
