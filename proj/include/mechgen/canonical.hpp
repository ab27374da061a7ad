#pragma once
// Canonical mechanic forms, id-insensitive set signatures, and the finite
// atom vocabulary a domain and its bounds induce.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mechgen/json_io.hpp"
#include "mechgen/types.hpp"

namespace mechgen {

/// Sorts atoms into canonical order and drops duplicates.
inline Mechanic canonicalize_mechanic(Mechanic m) {
    std::sort(m.preconditions.begin(), m.preconditions.end());
    m.preconditions.erase(std::unique(m.preconditions.begin(), m.preconditions.end()), m.preconditions.end());
    std::sort(m.effects.begin(), m.effects.end());
    m.effects.erase(std::unique(m.effects.begin(), m.effects.end()), m.effects.end());
    return m;
}

inline MechanicSet canonicalize(MechanicSet ms) {
    for (auto& m : ms) m = canonicalize_mechanic(std::move(m));
    return ms;
}

namespace detail {

inline void append_atom(std::string& out, const ConditionAtom& a) {
    out += 'c';
    out += std::to_string(static_cast<int>(a.kind));
    out += ',';
    out += std::to_string(static_cast<int>(a.frame));
    out += ',';
    out += std::to_string(a.offset);
    out += ',';
    out += a.name;
    out += ',';
    out += a.entity;
    out += ',';
    out += std::to_string(a.mechanic);
    out += ',';
    out += std::to_string(static_cast<int>(a.relation));
    out += ',';
    out += std::to_string(a.rhs);
    out += a.negated ? ",n;" : ",p;";
}

inline void append_atom(std::string& out, const EffectAtom& e) {
    out += 'e';
    out += std::to_string(static_cast<int>(e.kind));
    out += ',';
    out += std::to_string(static_cast<int>(e.frame));
    out += ',';
    out += std::to_string(e.offset);
    out += ',';
    out += e.param;
    out += ',';
    out += e.entity;
    out += ',';
    out += std::to_string(e.mechanic);
    out += ',';
    out += std::to_string(e.amount);
    out += ';';
}

inline std::string body_key(const Mechanic& m) {
    std::string s;
    for (const auto& a : m.preconditions) append_atom(s, a);
    s += '|';
    for (const auto& e : m.effects) append_atom(s, e);
    return s;
}

inline bool references_mechanics(const Mechanic& m) {
    for (const auto& a : m.preconditions)
        if (a.kind == ConditionKind::EventTest) return true;
    for (const auto& e : m.effects)
        if (e.kind == EffectKind::EventInvoke) return true;
    return false;
}

inline Mechanic remap_ids(const Mechanic& m, const std::map<MechanicId, MechanicId>& to) {
    Mechanic out = m;
    auto map_id = [&](MechanicId id) {
        auto it = to.find(id);
        return it == to.end() ? -id : it->second;  // dangling refs stay distinguishable
    };
    out.id = map_id(m.id);
    for (auto& a : out.preconditions)
        if (a.kind == ConditionKind::EventTest) a.mechanic = map_id(a.mechanic);
    for (auto& e : out.effects)
        if (e.kind == EffectKind::EventInvoke) e.mechanic = map_id(e.mechanic);
    return canonicalize_mechanic(std::move(out));
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

/// Order- and id-insensitive identity of a mechanic multiset.
struct Signature {
    std::string key;
    std::uint64_t hash = 0;
    auto operator<=>(const Signature& o) const { return key <=> o.key; }
    bool operator==(const Signature& o) const { return key == o.key; }
    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s(16, '0');
        for (int i = 0; i < 16; ++i) s[15 - i] = digits[(hash >> (4 * i)) & 0xF];
        return s;
    }
};

/// Signature of a set of mechanics. Ids are renamed to 1..n under every
/// permutation (event references follow the renaming) and the
/// lexicographically smallest encoding is kept, so two sets share a
/// signature exactly when they are equal up to consistent id renaming.
inline Signature mechanic_signature(const MechanicSet& ms) {
    bool refs = false;
    for (const auto& m : ms) refs = refs || detail::references_mechanics(m);
    std::string best;
    if (!refs || ms.size() > 8) {
        std::vector<std::string> keys;
        for (const auto& m : ms) keys.push_back(detail::body_key(canonicalize_mechanic(m)));
        std::sort(keys.begin(), keys.end());
        for (const auto& k : keys) best += k + "#";
    } else {
        std::vector<std::size_t> perm(ms.size());
        std::iota(perm.begin(), perm.end(), 0);
        bool first = true;
        do {
            std::map<MechanicId, MechanicId> to;
            for (std::size_t k = 0; k < perm.size(); ++k) to[ms[perm[k]].id] = static_cast<MechanicId>(k + 1);
            std::string s;
            for (std::size_t k = 0; k < perm.size(); ++k) s += detail::body_key(detail::remap_ids(ms[perm[k]], to)) + "#";
            if (first || s < best) best = std::move(s);
            first = false;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return {best, detail::fnv1a64(best)};
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Finite candidate atom space.
struct Vocabulary {
    std::vector<ConditionAtom> conditions;
    std::vector<EffectAtom> effects;
    std::size_t size() const { return conditions.size() + effects.size(); }
};

class VocabularyTooLarge : public Error {
public:
    VocabularyTooLarge(std::size_t conditions, std::size_t effects, long cap)
        : Error("vocabulary too large: " + std::to_string(conditions) + " conditions + " +
                std::to_string(effects) + " effects exceeds cap " + std::to_string(cap)),
          conditions_(conditions), effects_(effects) {}
    std::size_t conditions() const { return conditions_; }
    std::size_t effects() const { return effects_; }

private:
    std::size_t conditions_, effects_;
};

/// Every atom implied by the domain and bounds, in a fixed order: param
/// tests, derived tests, event tests; then param updates, event invokes.
/// `ids` are the mechanic ids event atoms may reference (default 1..max).
inline Vocabulary condition_vocabulary(const DomainSpec& spec, const GeneratorBounds& b,
                                       std::vector<MechanicId> ids = {}) {
    if (ids.empty())
        for (int i = 1; i <= b.max_mechanics; ++i) ids.push_back(i);
    Vocabulary v;
    const auto& test_targets = b.test_targets ? *b.test_targets : spec.has;
    const auto& effect_targets = b.effect_targets ? *b.effect_targets : spec.has;
    std::vector<int> constants = b.constants;
    std::sort(constants.begin(), constants.end());
    constants.erase(std::unique(constants.begin(), constants.end()), constants.end());

    std::vector<int> pre_offsets;
    for (int o = 0; o >= -b.pre_window; --o) pre_offsets.push_back(o);

    for (const auto& t : test_targets)
        for (auto f : b.test_frames)
            for (int o : pre_offsets)
                for (auto r : b.relations)
                    for (int c : constants) v.conditions.push_back(ConditionAtom::param_test(f, o, t.param, t.entity, r, c));
    if (b.derived_tests)
        for (const auto& p : spec.derived)
            for (const auto& e : spec.entities) {
                bool owns_all = true;
                for (const auto& c : p.conjuncts) owns_all = owns_all && spec.owns(e, c.param);
                if (!owns_all) continue;
                auto cls = spec.classes.find(p.bound_class);
                if (cls != spec.classes.end() && std::find(cls->second.begin(), cls->second.end(), e) != cls->second.end())
                    continue;  // a class member is never tested against its own class
                for (int o : pre_offsets)
                    for (bool neg : {false, true}) v.conditions.push_back(ConditionAtom::derived_test(o, p.name, e, neg));
            }
    if (b.event_atoms)
        for (MechanicId id : ids)
            for (const auto& agent : spec.agents)
                for (int o = -1; o >= -b.pre_window; --o)
                    for (bool neg : {false, true}) v.conditions.push_back(ConditionAtom::event_test(o, id, agent, neg));

    for (const auto& t : effect_targets)
        for (auto f : b.effect_frames)
            for (int o = 1; o <= b.eff_window; ++o)
                for (int c : constants) {
                    if (f == Frame::Absolute) {
                        auto it = spec.abs_ranges.find(t);
                        if (it != spec.abs_ranges.end() && !it->second.contains(c)) continue;
                    } else {
                        auto r = spec.rel_range(t);
                        if (c == 0 || (r && !r->contains(c))) continue;
                    }
                    v.effects.push_back(EffectAtom::update(f, o, t.param, t.entity, c));
                }
    if (b.event_atoms)
        for (MechanicId id : ids)
            for (int o = 1; o <= b.eff_window; ++o) v.effects.push_back(EffectAtom::invoke(o, id));

    if (static_cast<long>(v.size()) > b.vocab_cap) throw VocabularyTooLarge(v.conditions.size(), v.effects.size(), b.vocab_cap);
    return v;
}

}  // namespace mechgen
