#pragma once
// JSON encodings of domains, mechanics and traces.
//
// Serialization is deterministic (sorted object keys, fixed list order) so
// that serialize(parse(serialize(x))) reproduces the same bytes.

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mechgen/types.hpp"

namespace mechgen {

using json = nlohmann::json;

namespace detail {

inline std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw ParseError(path.empty() ? msg : path + ": " + msg);
}

template <class Keys>
inline void check_keys_in(const json& j, const std::string& path, const Keys& allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            fail(path, "unknown field '" + key + "'");
    }
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    check_keys_in(j, path, allowed);
}

inline const json& require(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

inline int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    auto v = j.get<long long>();
    if (v < -1000000000LL || v > 1000000000LL) fail(path, "integer out of supported range");
    return static_cast<int>(v);
}

inline int int_field(const json& j, const std::string& path, const char* key) {
    return get_int(require(j, path, key), path + "." + key);
}

inline int int_field_or(const json& j, const std::string& path, const char* key, int def) {
    auto it = j.find(key);
    return it == j.end() ? def : get_int(*it, path + "." + key);
}

inline long long_field_or(const json& j, const std::string& path, const char* key, long def) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
    return it->get<long>();
}

inline std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

inline std::string string_field(const json& j, const std::string& path, const char* key) {
    return get_string(require(j, path, key), path + "." + key);
}

inline bool bool_field_or(const json& j, const std::string& path, const char* key, bool def) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_boolean()) fail(path + "." + key, "expected a boolean");
    return it->get<bool>();
}

inline const json& array_at(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
}

inline std::vector<std::string> string_list(const json& j, const std::string& path) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < array_at(j, path).size(); ++i)
        out.push_back(get_string(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

inline const char* to_string(Frame f) { return f == Frame::Absolute ? "absolute" : "relative"; }

inline const char* to_string(Relation r) {
    switch (r) {
        case Relation::Eq: return "eq";
        case Relation::Neq: return "neq";
        case Relation::Lt: return "lt";
        case Relation::Gt: return "gt";
    }
    return "?";
}

inline const char* to_string(HardKind k) {
    switch (k) {
        case HardKind::NoContradictoryEquality: return "no_contradictory_equality";
        case HardKind::NoDuplicateMechanics: return "no_duplicate_mechanics";
        case HardKind::CostRequired: return "cost_required";
        case HardKind::NoEmptyEffects: return "no_empty_effects";
        case HardKind::MaxAtoms: return "max_atoms";
    }
    return "?";
}

inline const char* to_string(SoftTerm t) {
    switch (t) {
        case SoftTerm::AtomCount: return "atom_count";
        case SoftTerm::MechanicCount: return "mechanic_count";
        case SoftTerm::DistinctEntitiesReferenced: return "distinct_entities";
        case SoftTerm::AdaptationEditDistance: return "adaptation_edit_distance";
        case SoftTerm::ControlIntuitiveness: return "control_intuitiveness";
    }
    return "?";
}

inline Frame frame_from(const json& j, const std::string& path) {
    auto s = detail::get_string(j, path);
    if (s == "absolute") return Frame::Absolute;
    if (s == "relative") return Frame::Relative;
    detail::fail(path, "unknown frame '" + s + "'");
}

inline Relation relation_from(const json& j, const std::string& path) {
    auto s = detail::get_string(j, path);
    if (s == "eq") return Relation::Eq;
    if (s == "neq") return Relation::Neq;
    if (s == "lt") return Relation::Lt;
    if (s == "gt") return Relation::Gt;
    detail::fail(path, "unknown relation '" + s + "'");
}

inline HardKind hard_kind_from(const std::string& s, const std::string& path) {
    for (auto k : {HardKind::NoContradictoryEquality, HardKind::NoDuplicateMechanics,
                   HardKind::CostRequired, HardKind::NoEmptyEffects, HardKind::MaxAtoms})
        if (s == to_string(k)) return k;
    detail::fail(path, "unknown hard requirement '" + s + "'");
}

inline SoftTerm soft_term_from(const std::string& s, const std::string& path) {
    for (auto t : {SoftTerm::AtomCount, SoftTerm::MechanicCount,
                   SoftTerm::DistinctEntitiesReferenced, SoftTerm::AdaptationEditDistance,
                   SoftTerm::ControlIntuitiveness})
        if (s == to_string(t)) return t;
    detail::fail(path, "unknown soft requirement term '" + s + "'");
}

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

inline json to_json(const ConditionAtom& a) {
    json j;
    switch (a.kind) {
        case ConditionKind::ParamTest:
            j = {{"kind", "param_test"}, {"frame", to_string(a.frame)}, {"offset", a.offset},
                 {"param", a.name},      {"entity", a.entity},        {"rel", to_string(a.relation)},
                 {"rhs", a.rhs}};
            break;
        case ConditionKind::DerivedTest:
            j = {{"kind", "derived_test"}, {"offset", a.offset},  {"predicate", a.name},
                 {"entity", a.entity},     {"negated", a.negated}};
            break;
        case ConditionKind::EventTest:
            j = {{"kind", "event_test"}, {"offset", a.offset},  {"mechanic", a.mechanic},
                 {"actor", a.entity},    {"negated", a.negated}};
            break;
    }
    return j;
}

inline json to_json(const EffectAtom& e) {
    if (e.kind == EffectKind::EventInvoke)
        return {{"kind", "event_invoke"}, {"offset", e.offset}, {"mechanic", e.mechanic}};
    return {{"kind", "param_update"}, {"frame", to_string(e.frame)}, {"offset", e.offset},
            {"param", e.param},       {"entity", e.entity},         {"amount", e.amount}};
}

/// Resolves a mechanic reference: integer id, or a display name via `names`.
using NameResolver = std::map<std::string, MechanicId>;

namespace detail {

inline MechanicId mechanic_ref(const json& j, const std::string& path, const NameResolver* names) {
    if (j.is_number_integer()) return get_int(j, path);
    if (j.is_string() && names) {
        auto it = names->find(j.get<std::string>());
        if (it != names->end()) return it->second;
        fail(path, "unknown mechanic '" + j.get<std::string>() + "'");
    }
    fail(path, "expected a mechanic id");
}

}  // namespace detail

inline ConditionAtom condition_from_json(const json& j, const std::string& path,
                                         const NameResolver* names = nullptr) {
    using namespace detail;
    if (!j.is_object()) fail(path, "expected an atom object");
    auto kind = string_field(j, path, "kind");
    ConditionAtom a;
    if (kind == "param_test") {
        check_keys(j, path, {"kind", "frame", "offset", "param", "entity", "rel", "rhs"});
        a.kind = ConditionKind::ParamTest;
        a.frame = frame_from(require(j, path, "frame"), path + ".frame");
        a.offset = int_field_or(j, path, "offset", 0);
        a.name = string_field(j, path, "param");
        a.entity = string_field(j, path, "entity");
        a.relation = relation_from(require(j, path, "rel"), path + ".rel");
        a.rhs = int_field(j, path, "rhs");
    } else if (kind == "derived_test") {
        check_keys(j, path, {"kind", "frame", "offset", "predicate", "entity", "negated"});
        a.kind = ConditionKind::DerivedTest;
        a.offset = int_field_or(j, path, "offset", 0);
        a.name = string_field(j, path, "predicate");
        a.entity = string_field(j, path, "entity");
        a.negated = bool_field_or(j, path, "negated", false);
    } else if (kind == "event_test") {
        check_keys(j, path, {"kind", "frame", "offset", "mechanic", "actor", "negated"});
        a.kind = ConditionKind::EventTest;
        a.offset = int_field_or(j, path, "offset", -1);
        a.mechanic = mechanic_ref(require(j, path, "mechanic"), path + ".mechanic", names);
        a.entity = string_field(j, path, "actor");
        a.negated = bool_field_or(j, path, "negated", false);
    } else {
        fail(path, "unknown condition kind '" + kind + "'");
    }
    return a;
}

inline EffectAtom effect_from_json(const json& j, const std::string& path,
                                   const NameResolver* names = nullptr) {
    using namespace detail;
    if (!j.is_object()) fail(path, "expected an atom object");
    auto kind = string_field(j, path, "kind");
    EffectAtom e;
    if (kind == "param_update") {
        check_keys(j, path, {"kind", "frame", "offset", "param", "entity", "amount"});
        e.kind = EffectKind::ParamUpdate;
        e.frame = frame_from(require(j, path, "frame"), path + ".frame");
        e.offset = int_field_or(j, path, "offset", 1);
        e.param = string_field(j, path, "param");
        e.entity = string_field(j, path, "entity");
        e.amount = int_field(j, path, "amount");
    } else if (kind == "event_invoke") {
        check_keys(j, path, {"kind", "frame", "offset", "mechanic"});
        e.kind = EffectKind::EventInvoke;
        e.frame = Frame::Absolute;
        e.offset = int_field_or(j, path, "offset", 1);
        e.mechanic = mechanic_ref(require(j, path, "mechanic"), path + ".mechanic", names);
    } else {
        fail(path, "unknown effect kind '" + kind + "'");
    }
    return e;
}

inline json atoms_to_json(const std::vector<ConditionAtom>& atoms) {
    json arr = json::array();
    for (const auto& a : atoms) arr.push_back(to_json(a));
    return arr;
}

inline std::vector<ConditionAtom> conditions_from_json(const json& j, const std::string& path,
                                                       const NameResolver* names = nullptr) {
    std::vector<ConditionAtom> out;
    for (std::size_t i = 0; i < detail::array_at(j, path).size(); ++i)
        out.push_back(condition_from_json(j[i], path + "[" + std::to_string(i) + "]", names));
    return out;
}

// ---------------------------------------------------------------------------
// Mechanics
// ---------------------------------------------------------------------------

inline json to_json(const Mechanic& m) {
    json j{{"id", m.id}, {"preconditions", atoms_to_json(m.preconditions)}};
    json eff = json::array();
    for (const auto& e : m.effects) eff.push_back(to_json(e));
    j["effects"] = std::move(eff);
    if (!m.name.empty()) j["name"] = m.name;
    return j;
}

inline json to_json(const MechanicSet& ms) {
    json arr = json::array();
    for (const auto& m : ms) arr.push_back(to_json(m));
    return arr;
}

/// Applies the load-time normalizations: precondition offsets above 0 become
/// 0, effect offsets below 1 become 1. Each change appends a warning.
inline void normalize_mechanic(Mechanic& m, std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& w) {
        if (warnings) warnings->push_back("mechanic " + m.label() + ": " + w);
    };
    for (auto& a : m.preconditions) {
        if (a.kind != ConditionKind::EventTest && a.offset > 0) {
            warn("precondition offset " + std::to_string(a.offset) + " normalized to 0");
            a.offset = 0;
        }
        if (a.kind == ConditionKind::DerivedTest) a.frame = Frame::Absolute;
        if (a.kind == ConditionKind::EventTest) a.frame = Frame::Absolute;
    }
    for (auto& e : m.effects) {
        if (e.offset < 1) {
            warn("effect offset " + std::to_string(e.offset) + " normalized to 1");
            e.offset = 1;
        }
        if (e.kind == EffectKind::EventInvoke) e.frame = Frame::Absolute;
    }
}

inline MechanicSet mechanics_from_json(const json& j, std::vector<std::string>* warnings = nullptr) {
    using namespace detail;
    array_at(j, "mechanics");
    NameResolver names;
    std::set<MechanicId> ids;
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::string path = "mechanics[" + std::to_string(i) + "]";
        check_keys(j[i], path, {"id", "name", "preconditions", "effects"});
        int id = int_field(j[i], path, "id");
        if (id < 1) fail(path + ".id", "mechanic ids must be positive");
        if (!ids.insert(id).second) fail(path + ".id", "duplicate mechanic id " + std::to_string(id));
        if (auto it = j[i].find("name"); it != j[i].end()) {
            auto n = get_string(*it, path + ".name");
            if (!names.emplace(n, id).second) fail(path + ".name", "duplicate mechanic name '" + n + "'");
        }
    }
    MechanicSet out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::string path = "mechanics[" + std::to_string(i) + "]";
        Mechanic m;
        m.id = int_field(j[i], path, "id");
        if (auto it = j[i].find("name"); it != j[i].end()) m.name = it->get<std::string>();
        if (auto it = j[i].find("preconditions"); it != j[i].end())
            m.preconditions = conditions_from_json(*it, path + ".preconditions", &names);
        const auto& eff = array_at(require(j[i], path, "effects"), path + ".effects");
        for (std::size_t k = 0; k < eff.size(); ++k)
            m.effects.push_back(
                effect_from_json(eff[k], path + ".effects[" + std::to_string(k) + "]", &names));
        normalize_mechanic(m, warnings);
        out.push_back(std::move(m));
    }
    return out;
}

/// Parses raw text as JSON, mapping syntax errors to line/column.
inline json parse_json_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(std::string("syntax error: ") + e.what(), line, col);
    }
}

inline MechanicSet parse_mechanics(std::string_view text, std::vector<std::string>* warnings = nullptr) {
    return mechanics_from_json(parse_json_text(text), warnings);
}

inline std::string serialize_mechanics(const MechanicSet& ms) { return to_json(ms).dump(2) + "\n"; }

}  // namespace mechgen
