#pragma once
// Structural validation of domains and mechanic sets. Violations are data.

#include <set>
#include <string>
#include <vector>

#include "mechgen/json_io.hpp"
#include "mechgen/types.hpp"

namespace mechgen {

struct Violation {
    std::string code;
    std::string message;
    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool has(const std::string& code) const {
        for (const auto& v : violations)
            if (v.code == code) return true;
        return false;
    }
};

inline json to_json(const ValidationReport& r) {
    json arr = json::array();
    for (const auto& v : r.violations) arr.push_back({{"code", v.code}, {"message", v.message}});
    return {{"ok", r.ok()}, {"violations", arr}};
}

namespace detail {

inline std::string term_str(const Term& t) { return t.param + "(" + t.entity + ")"; }

class Validator {
public:
    explicit Validator(const DomainSpec& d) : d_(d) {
        for (const auto& h : d.has) has_.insert(h);
    }

    void add(std::string code, std::string msg) { report_.violations.push_back({std::move(code), std::move(msg)}); }

    bool owned(const Term& t) const { return has_.count(t) > 0; }

    std::vector<std::string> members(const std::optional<std::string>& cls) const {
        if (!cls) return {""};
        auto it = d_.classes.find(*cls);
        return it == d_.classes.end() ? std::vector<std::string>{} : it->second;
    }

    // Checks one atom used in a state condition (goal, maintenance, rule).
    void state_atom(const ConditionAtom& a, const std::string& where, const std::string& member) {
        std::string entity = a.entity == kClassMember ? member : a.entity;
        if (a.offset != 0) add("atom_offset", where + ": state conditions must use offset 0");
        if (a.kind == ConditionKind::ParamTest && !owned({a.name, entity}))
            add("unowned_term", where + ": " + term_str({a.name, entity}) + " is not a has-pair");
        if (a.kind == ConditionKind::DerivedTest) predicate_target(a.name, entity, where);
        if (a.kind == ConditionKind::EventTest)
            add("event_in_state_condition", where + ": event tests are not allowed here");
    }

    void predicate_target(const std::string& pred, const std::string& entity, const std::string& where) {
        const auto* p = d_.predicate(pred);
        if (!p) return;
        for (const auto& c : p->conjuncts)
            if (!owned({c.param, entity}))
                add("unowned_term", where + ": predicate " + pred + " needs " + term_str({c.param, entity}));
    }

    ValidationReport run() {
        // ranges
        for (const auto& h : d_.has) {
            auto it = d_.abs_ranges.find(h);
            if (it == d_.abs_ranges.end()) add("missing_range", "no abs range for " + term_str(h));
            else if (it->second.lo > it->second.hi) add("empty_range", "abs range of " + term_str(h) + " has lo > hi");
        }
        for (const auto* ranges : {&d_.abs_ranges, &d_.rel_ranges})
            for (const auto& [t, r] : *ranges) {
                (void)r;
                if (!owned(t)) add("unowned_term", "range declared for non-has pair " + term_str(t));
            }
        for (const auto& [t, r] : d_.rel_ranges)
            if (r.lo > r.hi) add("empty_range", "rel range of " + term_str(t) + " has lo > hi");
        // derived predicates: every class member must own the conjunct params
        for (const auto& p : d_.derived)
            for (const auto& m : members(p.bound_class))
                for (const auto& c : p.conjuncts)
                    if (!owned({c.param, m}))
                        add("unowned_term", "predicate " + p.name + ": " + term_str({c.param, m}) + " is not a has-pair");
        // engine rules
        for (const auto& r : d_.engine_rules) {
            for (const auto& m : members(r.for_class)) {
                for (const auto& a : r.condition) state_atom(a, "engine rule " + r.name, m);
                for (const auto& u : r.updates)
                    if (!owned({u.param, m}))
                        add("unowned_term", "engine rule " + r.name + ": " + term_str({u.param, m}) + " is not a has-pair");
            }
        }
        // agents and goals
        if (d_.agents.empty()) add("no_agents", "no agents declared");
        for (const auto& [agent, g] : d_.playability.per_agent) {
            for (const auto& a : g.goal) state_atom(a, "goal of " + agent, "");
            for (const auto& a : g.maintenance) state_atom(a, "maintenance of " + agent, "");
            for (const auto& a : g.goal)
                if (a.frame == Frame::Relative && a.kind == ConditionKind::ParamTest && !owned({a.name, agent}))
                    add("relative_without_actor", "goal of " + agent + ": agent lacks " + a.name);
        }
        // instances
        std::set<int> levels;
        for (const auto& inst : d_.instances) {
            if (inst.level < 0) add("negative_level", "instance " + inst.name + " has a negative level");
            levels.insert(inst.level);
            for (const auto& [t, v] : inst.initials) {
                if (!owned(t)) {
                    add("unowned_term", "instance " + inst.name + ": " + term_str(t) + " is not a has-pair");
                    continue;
                }
                auto it = d_.abs_ranges.find(t);
                if (it != d_.abs_ranges.end() && !it->second.contains(v))
                    add("initial_out_of_range", "instance " + inst.name + ": " + term_str(t) + " = " +
                                                    std::to_string(v) + " outside [" + std::to_string(it->second.lo) +
                                                    ", " + std::to_string(it->second.hi) + "]");
            }
            for (const auto& h : d_.has)
                if (!inst.initials.count(h))
                    add("missing_initial", "instance " + inst.name + " has no initial value for " + term_str(h));
        }
        if (d_.instances.empty()) add("no_instances", "no game instances declared");
        int expect = 0;
        for (int l : levels) {
            if (l != expect) {
                add("non_contiguous_levels", "instance levels are not contiguous from 0");
                break;
            }
            ++expect;
        }
        // design & bounds
        if (d_.design.soft)
            for (const auto& s : *d_.design.soft)
                if (s.weight < 1) add("bad_weight", std::string("soft term ") + to_string(s.term) + " has weight < 1");
        const auto& b = d_.bounds;
        if (b.max_mechanics < 1 || b.max_eff < 1 || b.horizon < 1 || b.trace_cap < 1 || b.invoke_depth < 1 ||
            b.max_pre < 0 || b.pre_window < 0 || b.eff_window < 1)
            add("bad_bounds", "generator bounds out of range");
        for (const auto* targets : {&b.test_targets, &b.effect_targets})
            if (*targets)
                for (const auto& t : **targets)
                    if (!owned(t)) add("unowned_term", "bounds target " + term_str(t) + " is not a has-pair");
        return report_;
    }

    const ValidationReport& report() const { return report_; }

private:
    const DomainSpec& d_;
    std::set<Term> has_;
    ValidationReport report_;
};

}  // namespace detail

/// Empty report iff the domain is usable by every other operation.
inline ValidationReport validate_domain(const DomainSpec& spec) { return detail::Validator(spec).run(); }

/// Checks a mechanic set against the domain's state model.
inline ValidationReport validate_mechanics(const DomainSpec& spec, const MechanicSet& ms) {
    detail::Validator v(spec);
    std::set<MechanicId> ids;
    for (const auto& m : ms)
        if (m.id < 1 || !ids.insert(m.id).second) v.add("bad_id", "mechanic ids must be positive and unique");
    std::set<std::string> agents(spec.agents.begin(), spec.agents.end());
    for (const auto& m : ms) {
        std::string where = "mechanic " + m.label();
        if (m.effects.empty()) v.add("empty_effects", where + " has no effects");
        for (const auto& a : m.preconditions) {
            switch (a.kind) {
                case ConditionKind::ParamTest:
                    if (a.offset > 0) v.add("atom_offset", where + ": precondition offset > 0");
                    if (!v.owned(a.term())) v.add("unowned_term", where + ": " + detail::term_str(a.term()) + " is not a has-pair");
                    break;
                case ConditionKind::DerivedTest:
                    if (a.offset > 0) v.add("atom_offset", where + ": precondition offset > 0");
                    if (!spec.predicate(a.name)) v.add("unknown_predicate", where + ": unknown predicate " + a.name);
                    else v.predicate_target(a.name, a.entity, where);
                    break;
                case ConditionKind::EventTest:
                    if (a.offset > -1) v.add("atom_offset", where + ": event tests need offset <= -1");
                    if (!ids.count(a.mechanic)) v.add("unknown_mechanic", where + ": event test on unknown mechanic");
                    if (!agents.count(a.entity)) v.add("unknown_agent", where + ": event actor " + a.entity + " is not an agent");
                    break;
            }
        }
        for (const auto& e : m.effects) {
            if (e.offset < 1) v.add("atom_offset", where + ": effect offset < 1");
            if (e.kind == EffectKind::EventInvoke) {
                if (e.mechanic == m.id) v.add("self_invoke", where + " invokes itself");
                else if (!ids.count(e.mechanic)) v.add("unknown_mechanic", where + ": invokes unknown mechanic");
                continue;
            }
            if (!v.owned(e.term())) {
                v.add("unowned_term", where + ": " + detail::term_str(e.term()) + " is not a has-pair");
                continue;
            }
            if (e.frame == Frame::Absolute) {
                auto it = spec.abs_ranges.find(e.term());
                if (it != spec.abs_ranges.end() && !it->second.contains(e.amount))
                    v.add("amount_out_of_range", where + ": absolute update outside abs range");
            } else {
                auto r = spec.rel_range(e.term());
                if (r && !r->contains(e.amount)) v.add("amount_out_of_range", where + ": relative update outside rel range");
            }
        }
    }
    return v.report();

}

}  // namespace mechgen
