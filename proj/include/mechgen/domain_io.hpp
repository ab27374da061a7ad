#pragma once
// Domain file format: parsing, fragment concatenation, serialization.
//
// A domain file is either one JSON object or a JSON array of fragment
// objects. Fragments are merged as if their declarations were written in a
// single file: name lists are unioned, requirements are conjoined, instances
// with the same level index are combined, numeric bounds take the maximum.

#include <array>
#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mechgen/json_io.hpp"

namespace mechgen {

namespace detail {

inline constexpr std::array<std::string_view, 14> kDomainKeys = {
    "entities", "classes", "parameters", "has",       "abs_ranges",  "rel_ranges", "derived",
    "engine_rules", "agents", "inputs", "instances", "playability", "design",     "bounds"};

inline json term_json(const Term& t) { return {{"param", t.param}, {"entity", t.entity}}; }

inline Term term_from(const json& j, const std::string& path) {
    check_keys(j, path, {"param", "entity"});
    return {string_field(j, path, "param"), string_field(j, path, "entity")};
}

inline json range_list_json(const std::map<Term, Range>& ranges) {
    json arr = json::array();
    for (const auto& [t, r] : ranges)
        arr.push_back({{"param", t.param}, {"entity", t.entity}, {"range", {r.lo, r.hi}}});
    return arr;
}

inline std::map<Term, Range> range_list_from(const json& j, const std::string& path) {
    std::map<Term, Range> out;
    for (std::size_t i = 0; i < array_at(j, path).size(); ++i) {
        std::string p = path + "[" + std::to_string(i) + "]";
        check_keys(j[i], p, {"param", "entity", "range"});
        Term t{string_field(j[i], p, "param"), string_field(j[i], p, "entity")};
        const auto& r = require(j[i], p, "range");
        if (!r.is_array() || r.size() != 2) fail(p + ".range", "expected [lo, hi]");
        Range range{get_int(r[0], p + ".range[0]"), get_int(r[1], p + ".range[1]")};
        if (!out.emplace(t, range).second)
            fail(p, "duplicate range for " + t.param + "(" + t.entity + ")");
    }
    return out;
}

inline std::vector<Term> target_list_from(const json& j, const std::string& path) {
    std::vector<Term> out;
    for (std::size_t i = 0; i < array_at(j, path).size(); ++i)
        out.push_back(term_from(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

template <class T, class F>
std::vector<T> list_from(const json& j, const std::string& path, F each) {
    std::vector<T> out;
    for (std::size_t i = 0; i < array_at(j, path).size(); ++i)
        out.push_back(each(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

// ---- fragment merge (JSON level) -----------------------------------------

inline void union_strings(json& into, const json& from) {
    for (const auto& v : from)
        if (std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
}

inline void union_by_name(json& into, const json& from, const std::string& what) {
    for (const auto& v : from) {
        bool found = false;
        for (const auto& w : into) {
            if (w.value("name", "") == v.value("name", "") && v.contains("name")) {
                if (w != v) fail(what, "conflicting declarations of '" + v.value("name", "") + "'");
                found = true;
            }
        }
        if (!found) into.push_back(v);
    }
}

inline void union_values(json& into, const json& from) {
    for (const auto& v : from)
        if (std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
}

inline json merge_ranges(const json& a, const json& b, const std::string& what) {
    json out = a;
    for (const auto& r : b) {
        bool found = false;
        for (const auto& q : out) {
            if (q.value("param", "") == r.value("param", "") &&
                q.value("entity", "") == r.value("entity", "")) {
                if (q != r) fail(what, "conflicting ranges for " + r.value("param", "") + "(" +
                                           r.value("entity", "") + ")");
                found = true;
            }
        }
        if (!found) out.push_back(r);
    }
    return out;
}

inline json merge_instances(const json& a, const json& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    auto by_level = [](const json& list) {
        std::map<long, json> out;
        for (const auto& inst : list) out[inst.value("level", 0L)] = inst;
        return out;
    };
    auto la = by_level(a), lb = by_level(b);
    std::set<long> levels;
    for (auto& [l, v] : la) levels.insert(l), (void)v;
    for (auto& [l, v] : lb) levels.insert(l), (void)v;
    auto pick = [](const std::map<long, json>& m, long level) -> json {
        if (auto it = m.find(level); it != m.end()) return it->second;
        if (m.size() == 1) return m.begin()->second;
        fail("instances", "no instance for level " + std::to_string(level) + " in one fragment");
    };
    json out = json::array();
    for (long level : levels) {
        json ia = pick(la, level), ib = pick(lb, level);
        json merged;
        std::string na = ia.value("name", ""), nb = ib.value("name", "");
        merged["name"] = na == nb ? na : na + "+" + nb;
        merged["level"] = level;
        merged["initial"] = merge_ranges(ia.value("initial", json::array()),
                                         ib.value("initial", json::array()), "instances");
        out.push_back(std::move(merged));
    }
    return out;
}

inline json merge_playability(const json& a, const json& b) {
    if (a.is_null()) return b;
    if (b.is_null()) return a;
    json out = a;
    if (b.contains("player")) {
        if (a.contains("player") && a["player"] != b["player"])
            fail("playability", "fragments disagree on the player agent");
        out["player"] = b["player"];
    }
    if (b.value("ordering", "none") == "player_first") out["ordering"] = "player_first";
    if (b.contains("noop")) out["noop"] = a.value("noop", true) && b.value("noop", true);
    json agents = a.value("agents", json::object());
    const json incoming = b.value("agents", json::object());
    for (const auto& [name, goals] : incoming.items()) {
        json& g = agents[name];
        for (const char* key : {"goal", "maintenance"}) {
            json list = g.value(key, json::array());
            union_values(list, goals.value(key, json::array()));
            g[key] = list;
        }
    }
    out["agents"] = agents;
    return out;
}

inline json default_soft_json() {
    json arr = json::array();
    for (const auto& s : default_soft_layout())
        arr.push_back({{"term", to_string(s.term)}, {"weight", s.weight}, {"priority", s.priority}});
    return arr;
}

inline json merge_design(const json& a, const json& b) {
    if (a.is_null()) return b;
    if (b.is_null()) return a;
    json out = a;
    json hard = a.value("hard", json::array());
    union_values(hard, b.value("hard", json::array()));
    out["hard"] = hard;
    json soft = a.contains("soft") ? a["soft"] : default_soft_json();
    union_values(soft, b.contains("soft") ? b["soft"] : default_soft_json());
    out["soft"] = soft;
    for (const char* key : {"adaptation", "progression", "controls"}) {
        if (!b.contains(key)) continue;
        if (a.contains(key) && a[key] != b[key])
            fail("design", std::string("fragments disagree on ") + key);
        out[key] = b[key];
    }
    return out;
}

inline json merge_bounds(const json& a, const json& b) {
    if (a.is_null()) return b;
    if (b.is_null()) return a;
    json out = a;
    // an absent target list means every has-pair
    for (const char* key : {"test_targets", "effect_targets"})
        if (a.contains(key) != b.contains(key)) out[key] = nullptr;
    for (const auto& [key, value] : b.items()) {
        if (!a.contains(key)) {
            if (key != "test_targets" && key != "effect_targets") out[key] = value;
            continue;
        }
        const json& mine = a[key];
        if (key == "test_targets" || key == "effect_targets") {
            if (mine.is_null() || value.is_null()) {
                out[key] = nullptr;
            } else {
                json merged = mine;
                union_values(merged, value);
                out[key] = merged;
            }
        } else if (value.is_array()) {
            json merged = mine;
            union_values(merged, value);
            if (key == "constants") std::sort(merged.begin(), merged.end());
            out[key] = merged;
        } else if (value.is_boolean()) {
            out[key] = mine.get<bool>() || value.get<bool>();
        } else if (value.is_number_integer()) {
            out[key] = std::max(mine.get<long>(), value.get<long>());
        }
    }
    return out;
}

}  // namespace detail

/// Merges fragment objects into one domain object.
inline json merge_fragments(const std::vector<json>& fragments) {
    using namespace detail;
    json out = json::object();
    for (std::size_t f = 0; f < fragments.size(); ++f) {
        const json& frag = fragments[f];
        check_keys_in(frag, "fragment[" + std::to_string(f) + "]", kDomainKeys);
        for (const char* key : {"entities", "parameters", "agents", "inputs"}) {
            if (!frag.contains(key)) continue;
            json list = out.value(key, json::array());
            union_strings(list, frag[key]);
            out[key] = list;
        }
        if (frag.contains("has")) {
            json list = out.value("has", json::array());
            union_values(list, frag["has"]);
            out["has"] = list;
        }
        if (frag.contains("classes")) {
            json classes = out.value("classes", json::object());
            for (const auto& [name, members] : frag["classes"].items()) {
                json list = classes.value(name, json::array());
                union_strings(list, members);
                classes[name] = list;
            }
            out["classes"] = classes;
        }
        for (const char* key : {"abs_ranges", "rel_ranges"})
            if (frag.contains(key))
                out[key] = merge_ranges(out.value(key, json::array()), frag[key], key);
        for (const char* key : {"derived", "engine_rules"}) {
            if (!frag.contains(key)) continue;
            json list = out.value(key, json::array());
            union_by_name(list, frag[key], key);
            out[key] = list;
        }
        if (frag.contains("instances"))
            out["instances"] = merge_instances(out.value("instances", json::array()), frag["instances"]);
        if (frag.contains("playability"))
            out["playability"] = merge_playability(out.value("playability", json()), frag["playability"]);
        if (frag.contains("design"))
            out["design"] = merge_design(out.value("design", json()), frag["design"]);
        if (frag.contains("bounds"))
            out["bounds"] = merge_bounds(out.value("bounds", json()), frag["bounds"]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Domain <-> JSON
// ---------------------------------------------------------------------------

inline json to_json(const GeneratorBounds& b) {
    json rels = json::array(), tf = json::array(), ef = json::array();
    for (auto r : b.relations) rels.push_back(to_string(r));
    for (auto f : b.test_frames) tf.push_back(to_string(f));
    for (auto f : b.effect_frames) ef.push_back(to_string(f));
    auto targets = [](const std::optional<std::vector<Term>>& t) -> json {
        if (!t) return nullptr;
        json arr = json::array();
        for (const auto& x : *t) arr.push_back(detail::term_json(x));
        return arr;
    };
    return {{"max_mechanics", b.max_mechanics},
            {"max_pre", b.max_pre},
            {"max_eff", b.max_eff},
            {"pre_window", b.pre_window},
            {"eff_window", b.eff_window},
            {"constants", b.constants},
            {"horizon", b.horizon},
            {"trace_cap", b.trace_cap},
            {"invoke_depth", b.invoke_depth},
            {"relations", rels},
            {"test_frames", tf},
            {"effect_frames", ef},
            {"test_targets", targets(b.test_targets)},
            {"effect_targets", targets(b.effect_targets)},
            {"derived_tests", b.derived_tests},
            {"event_atoms", b.event_atoms},
            {"vocab_cap", b.vocab_cap},
            {"node_cap", b.node_cap},
            {"candidate_cap", b.candidate_cap},
            {"time_limit_ms", b.time_limit_ms}};
}

inline GeneratorBounds bounds_from_json(const json& j, const std::string& path = "bounds") {
    using namespace detail;
    check_keys(j, path,
               {"max_mechanics", "max_pre", "max_eff", "pre_window", "eff_window", "constants",
                "horizon", "trace_cap", "invoke_depth", "relations", "test_frames", "effect_frames",
                "test_targets", "effect_targets", "derived_tests", "event_atoms", "vocab_cap",
                "node_cap", "candidate_cap", "time_limit_ms"});
    GeneratorBounds b;
    b.max_mechanics = int_field_or(j, path, "max_mechanics", b.max_mechanics);
    b.max_pre = int_field_or(j, path, "max_pre", b.max_pre);
    b.max_eff = int_field_or(j, path, "max_eff", b.max_eff);
    b.pre_window = int_field_or(j, path, "pre_window", b.pre_window);
    b.eff_window = int_field_or(j, path, "eff_window", b.eff_window);
    if (auto it = j.find("constants"); it != j.end()) {
        b.constants.clear();
        for (std::size_t i = 0; i < array_at(*it, path + ".constants").size(); ++i)
            b.constants.push_back(get_int((*it)[i], path + ".constants[" + std::to_string(i) + "]"));
    }
    b.horizon = int_field_or(j, path, "horizon", b.horizon);
    b.trace_cap = int_field_or(j, path, "trace_cap", b.trace_cap);
    b.invoke_depth = int_field_or(j, path, "invoke_depth", b.invoke_depth);
    if (auto it = j.find("relations"); it != j.end())
        b.relations = list_from<Relation>(*it, path + ".relations", relation_from);
    if (auto it = j.find("test_frames"); it != j.end())
        b.test_frames = list_from<Frame>(*it, path + ".test_frames", frame_from);
    if (auto it = j.find("effect_frames"); it != j.end())
        b.effect_frames = list_from<Frame>(*it, path + ".effect_frames", frame_from);
    if (auto it = j.find("test_targets"); it != j.end() && !it->is_null())
        b.test_targets = target_list_from(*it, path + ".test_targets");
    if (auto it = j.find("effect_targets"); it != j.end() && !it->is_null())
        b.effect_targets = target_list_from(*it, path + ".effect_targets");
    b.derived_tests = bool_field_or(j, path, "derived_tests", b.derived_tests);
    b.event_atoms = bool_field_or(j, path, "event_atoms", b.event_atoms);
    b.vocab_cap = long_field_or(j, path, "vocab_cap", b.vocab_cap);
    b.node_cap = long_field_or(j, path, "node_cap", b.node_cap);
    b.candidate_cap = long_field_or(j, path, "candidate_cap", b.candidate_cap);
    b.time_limit_ms = long_field_or(j, path, "time_limit_ms", b.time_limit_ms);
    return b;
}

inline json to_json(const DesignRequirements& d) {
    json hard = json::array();
    for (const auto& h : d.hard) {
        json j{{"type", to_string(h.kind)}};
        if (h.kind == HardKind::CostRequired) {
            json res = json::array();
            for (const auto& r : h.resources)
                res.push_back({{"param", r.param}, {"owner_is_actor", r.owner_is_actor}});
            j["resources"] = res;
        }
        if (h.kind == HardKind::MaxAtoms) {
            j["max_pre"] = h.max_pre;
            j["max_eff"] = h.max_eff;
        }
        hard.push_back(j);
    }
    json out{{"hard", hard}};
    if (d.soft) {
        json soft = json::array();
        for (const auto& s : *d.soft)
            soft.push_back({{"term", to_string(s.term)}, {"weight", s.weight}, {"priority", s.priority}});
        out["soft"] = soft;
    }
    if (d.adaptation)
        out["adaptation"] = {{"weight", d.adaptation->weight}, {"priority", d.adaptation->priority}};
    if (d.progression)
        out["progression"] = {{"increasing_usage", d.progression->increasing_usage},
                              {"reuse_in_subsequent", d.progression->reuse_in_subsequent}};
    if (d.controls)
        out["controls"] = {{"inputs", d.controls->inputs},
                           {"require_input", d.controls->require_input},
                           {"unambiguous", d.controls->unambiguous},
                           {"intuitiveness_priority", d.controls->intuitiveness_priority},
                           {"intuitiveness_weight", d.controls->intuitiveness_weight}};
    return out;
}

inline DesignRequirements design_from_json(const json& j, const std::string& path = "design") {
    using namespace detail;
    check_keys(j, path, {"hard", "soft", "adaptation", "progression", "controls"});
    DesignRequirements d;
    if (auto it = j.find("hard"); it != j.end()) {
        d.hard = list_from<HardReq>(*it, path + ".hard", [](const json& h, const std::string& p) {
            HardReq r;
            r.kind = hard_kind_from(string_field(h, p, "type"), p + ".type");
            switch (r.kind) {
                case HardKind::CostRequired:
                    check_keys(h, p, {"type", "resources"});
                    r.resources = list_from<CostResource>(
                        require(h, p, "resources"), p + ".resources",
                        [](const json& c, const std::string& cp) {
                            if (c.is_string()) return CostResource{c.get<std::string>(), true};
                            check_keys(c, cp, {"param", "owner_is_actor"});
                            return CostResource{string_field(c, cp, "param"),
                                                bool_field_or(c, cp, "owner_is_actor", true)};
                        });
                    break;
                case HardKind::MaxAtoms:
                    check_keys(h, p, {"type", "max_pre", "max_eff"});
                    r.max_pre = int_field(h, p, "max_pre");
                    r.max_eff = int_field(h, p, "max_eff");
                    break;
                default: check_keys(h, p, {"type"});
            }
            return r;
        });
    }
    if (auto it = j.find("soft"); it != j.end()) {
        d.soft = list_from<SoftReq>(*it, path + ".soft", [](const json& s, const std::string& p) {
            check_keys(s, p, {"term", "weight", "priority"});
            SoftReq r;
            r.term = soft_term_from(string_field(s, p, "term"), p + ".term");
            r.weight = int_field_or(s, p, "weight", 1);
            r.priority = int_field_or(s, p, "priority", 0);
            return r;
        });
    }
    if (auto it = j.find("adaptation"); it != j.end()) {
        check_keys(*it, path + ".adaptation", {"weight", "priority"});
        d.adaptation = AdaptationReqs{int_field_or(*it, path, "weight", 1),
                                      int_field_or(*it, path, "priority", 100)};
    }
    if (auto it = j.find("progression"); it != j.end()) {
        check_keys(*it, path + ".progression", {"increasing_usage", "reuse_in_subsequent"});
        d.progression = ProgressionReqs{bool_field_or(*it, path, "increasing_usage", false),
                                        bool_field_or(*it, path, "reuse_in_subsequent", false)};
    }
    if (auto it = j.find("controls"); it != j.end()) {
        std::string p = path + ".controls";
        check_keys(*it, p, {"inputs", "require_input", "unambiguous", "intuitiveness_priority",
                            "intuitiveness_weight"});
        ControlReqs c;
        if (auto in = it->find("inputs"); in != it->end()) c.inputs = string_list(*in, p + ".inputs");
        c.require_input = bool_field_or(*it, p, "require_input", true);
        c.unambiguous = bool_field_or(*it, p, "unambiguous", true);
        c.intuitiveness_priority = int_field_or(*it, p, "intuitiveness_priority", 0);
        c.intuitiveness_weight = int_field_or(*it, p, "intuitiveness_weight", 1);
        d.controls = c;
    }
    return d;
}

inline json to_json(const DomainSpec& d) {
    using namespace detail;
    json has = json::array();
    for (const auto& h : d.has) has.push_back({h.entity, h.param});
    json derived = json::array();
    for (const auto& p : d.derived) {
        json conj = json::array();
        for (const auto& c : p.conjuncts)
            conj.push_back({{"param", c.param}, {"rel", to_string(c.relation)}, {"plus", c.plus}});
        derived.push_back({{"name", p.name}, {"class", p.bound_class}, {"conjuncts", conj}});
    }
    json rules = json::array();
    for (const auto& r : d.engine_rules) {
        json j{{"name", r.name},
               {"kind", r.kind == EngineRule::Kind::Invariant ? "invariant" : "forced_update"}};
        j["for_class"] = r.for_class ? json(*r.for_class) : json(nullptr);
        if (r.kind == EngineRule::Kind::Invariant) {
            j["condition"] = atoms_to_json(r.condition);
        } else {
            j["guard"] = atoms_to_json(r.condition);
            json ups = json::array();
            for (const auto& u : r.updates) ups.push_back({{"param", u.param}, {"delta", u.delta}});
            j["updates"] = ups;
        }
        rules.push_back(j);
    }
    json instances = json::array();
    for (const auto& inst : d.instances) {
        json init = json::array();
        for (const auto& [t, v] : inst.initials)
            init.push_back({{"param", t.param}, {"entity", t.entity}, {"value", v}});
        instances.push_back({{"name", inst.name}, {"level", inst.level}, {"initial", init}});
    }
    json agents_goals = json::object();
    for (const auto& [agent, g] : d.playability.per_agent)
        agents_goals[agent] = {{"goal", atoms_to_json(g.goal)},
                               {"maintenance", atoms_to_json(g.maintenance)}};
    json playability{{"player", d.playability.player},
                     {"ordering", d.playability.ordering == Ordering::PlayerFirst ? "player_first" : "none"},
                     {"noop", d.playability.noop},
                     {"agents", agents_goals}};
    return {{"entities", d.entities},
            {"classes", d.classes},
            {"parameters", d.parameters},
            {"has", has},
            {"abs_ranges", range_list_json(d.abs_ranges)},
            {"rel_ranges", range_list_json(d.rel_ranges)},
            {"derived", derived},
            {"engine_rules", rules},
            {"agents", d.agents},
            {"inputs", d.inputs},
            {"instances", instances},
            {"playability", playability},
            {"design", to_json(d.design)},
            {"bounds", to_json(d.bounds)}};
}

/// Checks name-level references: every entity, parameter, class, predicate
/// and agent mentioned is declared, and nothing is declared twice.
inline void check_references(const DomainSpec& d) {
    using detail::fail;
    if (d.entities.empty()) fail("entities", "no entities declared");
    std::set<std::string> entities, params;
    for (const auto& e : d.entities)
        if (!entities.insert(e).second) fail("entities", "duplicate entity '" + e + "'");
    for (const auto& p : d.parameters)
        if (!params.insert(p).second) fail("parameters", "duplicate parameter '" + p + "'");
    auto entity = [&](const std::string& e, const std::string& where, bool member_ok = false) {
        if (member_ok && e == kClassMember) return;
        if (!entities.count(e)) fail(where, "unknown entity '" + e + "'");
    };
    auto param = [&](const std::string& p, const std::string& where) {
        if (!params.count(p)) fail(where, "unknown parameter '" + p + "'");
    };
    std::set<Term> has;
    for (const auto& h : d.has) {
        entity(h.entity, "has");
        param(h.param, "has");
        if (!has.insert(h).second) fail("has", "duplicate has-pair (" + h.entity + ", " + h.param + ")");
    }
    for (const auto& [name, members] : d.classes)
        for (const auto& m : members) entity(m, "classes." + name);
    for (const auto* ranges : {&d.abs_ranges, &d.rel_ranges})
        for (const auto& [t, r] : *ranges) {
            (void)r;
            entity(t.entity, "ranges");
            param(t.param, "ranges");
        }
    std::set<std::string> preds;
    for (const auto& p : d.derived) {
        if (!preds.insert(p.name).second) fail("derived", "duplicate predicate '" + p.name + "'");
        if (!d.classes.count(p.bound_class))
            fail("derived." + p.name, "unknown class '" + p.bound_class + "'");
        for (const auto& c : p.conjuncts) param(c.param, "derived." + p.name);
    }
    auto atoms = [&](const std::vector<ConditionAtom>& list, const std::string& where, bool member_ok) {
        for (const auto& a : list) {
            if (a.kind == ConditionKind::ParamTest) param(a.name, where);
            if (a.kind == ConditionKind::DerivedTest && !preds.count(a.name))
                fail(where, "unknown predicate '" + a.name + "'");
            entity(a.entity, where, member_ok);
        }
    };
    std::set<std::string> rule_names;
    for (const auto& r : d.engine_rules) {
        std::string where = "engine_rules." + r.name;
        if (!rule_names.insert(r.name).second) fail("engine_rules", "duplicate rule '" + r.name + "'");
        if (r.for_class && !d.classes.count(*r.for_class))
            fail(where, "unknown class '" + *r.for_class + "'");
        if (r.kind == EngineRule::Kind::ForcedUpdate && !r.for_class)
            fail(where, "forced updates need a for_class");
        atoms(r.condition, where, r.for_class.has_value());
        for (const auto& u : r.updates) param(u.param, where);
    }
    std::set<std::string> agents;
    for (const auto& a : d.agents) {
        entity(a, "agents");
        if (!agents.insert(a).second) fail("agents", "duplicate agent '" + a + "'");
    }
    std::set<std::string> inputs;
    for (const auto& i : d.inputs)
        if (!inputs.insert(i).second) fail("inputs", "duplicate input '" + i + "'");
    std::set<std::string> instance_names;
    for (const auto& inst : d.instances) {
        if (!instance_names.insert(inst.name).second)
            fail("instances", "duplicate instance '" + inst.name + "'");
        for (const auto& [t, v] : inst.initials) {
            (void)v;
            entity(t.entity, "instances." + inst.name);
            param(t.param, "instances." + inst.name);
        }
    }
    if (!d.playability.player.empty() && !agents.count(d.playability.player))
        fail("playability.player", "player '" + d.playability.player + "' is not a declared agent");
    for (const auto& [agent, g] : d.playability.per_agent) {
        if (!agents.count(agent)) fail("playability.agents", "unknown agent '" + agent + "'");
        atoms(g.goal, "playability.agents." + agent, false);
        atoms(g.maintenance, "playability.agents." + agent, false);
    }
    for (const auto& h : d.design.hard)
        for (const auto& r : h.resources) param(r.param, "design.hard");
    if (d.design.controls)
        for (const auto& i : d.design.controls->inputs)
            if (!inputs.count(i)) fail("design.controls", "unknown input '" + i + "'");
}

/// Converts one (already merged) domain object. Throws ParseError.
inline DomainSpec domain_from_json(const json& j) {
    using namespace detail;
    check_keys_in(j, "", kDomainKeys);
    DomainSpec d;
    if (auto it = j.find("entities"); it != j.end()) d.entities = string_list(*it, "entities");
    if (auto it = j.find("classes"); it != j.end()) {
        if (!it->is_object()) fail("classes", "expected an object");
        for (const auto& [name, members] : it->items())
            d.classes[name] = string_list(members, "classes." + name);
    }
    if (auto it = j.find("parameters"); it != j.end()) d.parameters = string_list(*it, "parameters");
    if (auto it = j.find("has"); it != j.end()) {
        d.has = list_from<Term>(*it, "has", [](const json& h, const std::string& p) {
            if (h.is_array() && h.size() == 2)
                return Term{get_string(h[1], p + "[1]"), get_string(h[0], p + "[0]")};
            check_keys(h, p, {"entity", "param"});
            return Term{string_field(h, p, "param"), string_field(h, p, "entity")};
        });
    }
    if (auto it = j.find("abs_ranges"); it != j.end()) d.abs_ranges = range_list_from(*it, "abs_ranges");
    if (auto it = j.find("rel_ranges"); it != j.end()) d.rel_ranges = range_list_from(*it, "rel_ranges");
    if (auto it = j.find("derived"); it != j.end()) {
        d.derived = list_from<DerivedPredicate>(*it, "derived", [](const json& p, const std::string& path) {
            check_keys(p, path, {"name", "class", "conjuncts"});
            DerivedPredicate dp;
            dp.name = string_field(p, path, "name");
            dp.bound_class = string_field(p, path, "class");
            dp.conjuncts = list_from<DerivedConjunct>(
                require(p, path, "conjuncts"), path + ".conjuncts",
                [](const json& c, const std::string& cp) {
                    check_keys(c, cp, {"param", "rel", "plus"});
                    return DerivedConjunct{string_field(c, cp, "param"),
                                           relation_from(require(c, cp, "rel"), cp + ".rel"),
                                           int_field_or(c, cp, "plus", 0)};
                });
            return dp;
        });
    }
    if (auto it = j.find("engine_rules"); it != j.end()) {
        d.engine_rules = list_from<EngineRule>(*it, "engine_rules", [](const json& r, const std::string& p) {
            EngineRule rule;
            rule.name = string_field(r, p, "name");
            auto kind = string_field(r, p, "kind");
            if (auto fc = r.find("for_class"); fc != r.end() && !fc->is_null())
                rule.for_class = get_string(*fc, p + ".for_class");
            if (kind == "invariant") {
                check_keys(r, p, {"name", "kind", "for_class", "condition"});
                rule.kind = EngineRule::Kind::Invariant;
                rule.condition = conditions_from_json(require(r, p, "condition"), p + ".condition");
            } else if (kind == "forced_update") {
                check_keys(r, p, {"name", "kind", "for_class", "guard", "updates"});
                rule.kind = EngineRule::Kind::ForcedUpdate;
                if (auto g = r.find("guard"); g != r.end())
                    rule.condition = conditions_from_json(*g, p + ".guard");
                rule.updates = list_from<ForcedDelta>(
                    require(r, p, "updates"), p + ".updates", [](const json& u, const std::string& up) {
                        check_keys(u, up, {"param", "delta"});
                        return ForcedDelta{string_field(u, up, "param"), int_field(u, up, "delta")};
                    });
            } else {
                fail(p + ".kind", "unknown engine rule kind '" + kind + "'");
            }
            return rule;
        });
    }
    if (auto it = j.find("agents"); it != j.end()) d.agents = string_list(*it, "agents");
    if (auto it = j.find("inputs"); it != j.end()) d.inputs = string_list(*it, "inputs");
    if (auto it = j.find("instances"); it != j.end()) {
        d.instances = list_from<GameInstance>(*it, "instances", [](const json& i, const std::string& p) {
            check_keys(i, p, {"name", "level", "initial"});
            GameInstance inst;
            inst.name = string_field(i, p, "name");
            inst.level = int_field_or(i, p, "level", 0);
            const auto& init = require(i, p, "initial");
            for (std::size_t k = 0; k < array_at(init, p + ".initial").size(); ++k) {
                std::string ip = p + ".initial[" + std::to_string(k) + "]";
                check_keys(init[k], ip, {"param", "entity", "value"});
                Term t{string_field(init[k], ip, "param"), string_field(init[k], ip, "entity")};
                if (!inst.initials.emplace(t, int_field(init[k], ip, "value")).second)
                    fail(ip, "duplicate initial value for " + t.param + "(" + t.entity + ")");
            }
            return inst;
        });
    }
    if (auto it = j.find("playability"); it != j.end()) {
        check_keys(*it, "playability", {"player", "ordering", "noop", "agents"});
        auto& pr = d.playability;
        if (auto p = it->find("player"); p != it->end()) pr.player = get_string(*p, "playability.player");
        if (auto o = it->find("ordering"); o != it->end()) {
            auto s = get_string(*o, "playability.ordering");
            if (s == "player_first") pr.ordering = Ordering::PlayerFirst;
            else if (s == "none") pr.ordering = Ordering::None;
            else fail("playability.ordering", "unknown ordering '" + s + "'");
        }
        pr.noop = bool_field_or(*it, "playability", "noop", true);
        if (auto a = it->find("agents"); a != it->end()) {
            if (!a->is_object()) fail("playability.agents", "expected an object");
            for (const auto& [agent, g] : a->items()) {
                std::string p = "playability.agents." + agent;
                check_keys(g, p, {"goal", "maintenance"});
                AgentGoals goals;
                if (auto x = g.find("goal"); x != g.end()) goals.goal = conditions_from_json(*x, p + ".goal");
                if (auto x = g.find("maintenance"); x != g.end())
                    goals.maintenance = conditions_from_json(*x, p + ".maintenance");
                pr.per_agent[agent] = std::move(goals);
            }
        }
        if (pr.player.empty() && !d.agents.empty()) pr.player = d.agents.front();
    } else if (!d.agents.empty()) {
        d.playability.player = d.agents.front();
    }
    if (auto it = j.find("design"); it != j.end()) d.design = design_from_json(*it);
    if (auto it = j.find("bounds"); it != j.end()) d.bounds = bounds_from_json(*it);
    check_references(d);
    return d;
}

/// Parses domain JSON: one object, or an array of fragments to concatenate.
inline DomainSpec domain_from_document(const json& j) {
    if (j.is_array()) {
        std::vector<json> fragments(j.begin(), j.end());
        return domain_from_json(merge_fragments(fragments));
    }
    if (!j.is_object()) throw ParseError("domain document must be an object or an array of fragments");
    return domain_from_json(j);
}

inline DomainSpec parse_domain(std::string_view text) { return domain_from_document(parse_json_text(text)); }

/// Concatenates several domain files (each an object or fragment array).
inline DomainSpec parse_domains(const std::vector<std::string>& texts) {
    std::vector<json> fragments;
    for (const auto& t : texts) {
        json j = parse_json_text(t);
        if (j.is_array()) {
            for (auto& f : j) fragments.push_back(f);
        } else {
            fragments.push_back(std::move(j));
        }
    }
    if (fragments.size() == 1) return domain_from_json(fragments.front());
    return domain_from_json(merge_fragments(fragments));
}

inline std::string serialize_domain(const DomainSpec& d) { return to_json(d).dump(2) + "\n"; }

}  // namespace mechgen
