#pragma once
// Exhaustive reference implementations used to cross-check the searches.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mechgen/domain_io.hpp"
#include "mechgen/engine.hpp"
#include "mechgen/json_io.hpp"
#include "mechgen/planner.hpp"
#include "mechgen/requirements.hpp"
#include "mechgen/validate.hpp"

namespace oracle {

using mechgen::json;

struct MicroCase {
    mechgen::DomainSpec spec;
    mechgen::MechanicSet mechanics;
};

inline json pair_list(const std::vector<std::pair<std::string, std::string>>& v) {
    json a = json::array();
    for (const auto& [e, p] : v) a.push_back(json::array({e, p}));
    return a;
}

/// Small random domain: player P, optional opponent O, object X, params V and W.
inline MicroCase random_micro_case(std::uint32_t seed) {
    std::mt19937 rng(seed);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };

    const bool opponent = chance(0.3);
    std::vector<std::string> agents{"P"};
    if (opponent) agents.push_back("O");
    std::vector<std::string> entities = agents;
    entities.push_back("X");

    json ranges = json::array();
    std::vector<std::pair<std::string, std::string>> has;
    json initial = json::array();
    for (const auto& e : entities) {
        has.push_back({e, "V"});
        ranges.push_back({{"param", "V"}, {"entity", e}, {"range", {0, 3}}});
        initial.push_back({{"param", "V"}, {"entity", e}, {"value", pick(0, 3)}});
    }
    for (const std::string e : {"P", "X"}) {
        has.push_back({e, "W"});
        ranges.push_back({{"param", "W"}, {"entity", e}, {"range", {0, 2}}});
        initial.push_back({{"param", "W"}, {"entity", e}, {"value", pick(0, 2)}});
    }
    auto rel = [&]() -> std::string {
        static const char* r[] = {"eq", "neq", "lt", "gt"};
        return r[pick(0, 3)];
    };
    auto term = [&](std::string& param, std::string& entity) {
        param = chance(0.6) ? "V" : "W";
        if (param == "V") entity = entities[static_cast<std::size_t>(pick(0, static_cast<int>(entities.size()) - 1))];
        else entity = chance(0.5) ? "P" : "X";
    };
    auto param_test = [&](int min_offset) {
        std::string p, e;
        term(p, e);
        bool relative = chance(0.25);
        return json{{"kind", "param_test"}, {"frame", relative ? "relative" : "absolute"}, {"offset", pick(min_offset, 0)},
                    {"param", p}, {"entity", e}, {"rel", rel()}, {"rhs", relative ? pick(-2, 2) : pick(0, 3)}};
    };

    const int n = pick(1, 3);
    json mechs = json::array();
    for (int id = 1; id <= n; ++id) {
        json pre = json::array();
        for (int k = pick(0, 2); k > 0; --k) {
            if (chance(0.2))
                pre.push_back({{"kind", "event_test"}, {"offset", -1}, {"mechanic", pick(1, n)},
                               {"actor", agents[static_cast<std::size_t>(pick(0, static_cast<int>(agents.size()) - 1))]},
                               {"negated", chance(0.5)}});
            else
                pre.push_back(param_test(-1));
        }
        json eff = json::array();
        for (int k = pick(1, 2); k > 0; --k) {
            if (n > 1 && chance(0.15)) {
                int target = pick(1, n - 1);
                if (target >= id) ++target;
                eff.push_back({{"kind", "event_invoke"}, {"offset", pick(1, 2)}, {"mechanic", target}});
                continue;
            }
            std::string p, e;
            term(p, e);
            bool abs = chance(0.3);
            eff.push_back({{"kind", "param_update"}, {"frame", abs ? "absolute" : "relative"}, {"offset", pick(1, 2)},
                           {"param", p}, {"entity", e}, {"amount", abs ? pick(0, 2) : (chance(0.5) ? 1 : -1)}});
        }
        mechs.push_back({{"id", id}, {"preconditions", pre}, {"effects", eff}});
    }

    json rules = json::array();
    if (chance(0.3))
        rules.push_back({{"name", "Inv"}, {"kind", "invariant"},
                         {"condition", {{{"kind", "param_test"}, {"frame", "absolute"}, {"offset", 0}, {"param", "W"},
                                         {"entity", "X"}, {"rel", "lt"}, {"rhs", 2}}}}});
    if (chance(0.3))
        rules.push_back({{"name", "Drift"}, {"kind", "forced_update"}, {"for_class", "Things"},
                         {"guard", {{{"kind", "param_test"}, {"frame", "absolute"}, {"offset", 0}, {"param", "V"},
                                     {"entity", "_"}, {"rel", "gt"}, {"rhs", 1}}}},
                         {"updates", {{{"param", "V"}, {"delta", -1}}}}});

    json goals = json::object();
    json pg = json::array({param_test(0)});
    if (chance(0.4)) pg.push_back(param_test(0));
    json pgoal = {{"goal", pg}};
    if (chance(0.4))
        pgoal["maintenance"] = json::array({{{"kind", "param_test"}, {"frame", "absolute"}, {"offset", 0}, {"param", "W"},
                                             {"entity", "P"}, {"rel", chance(0.5) ? "lt" : "neq"}, {"rhs", 2}}});
    goals["P"] = pgoal;
    if (opponent && chance(0.7)) goals["O"] = {{"goal", json::array({param_test(0)})}};

    json dom = {
        {"entities", entities},
        {"classes", {{"Things", {"X"}}}},
        {"parameters", {"V", "W"}},
        {"has", pair_list(has)},
        {"abs_ranges", ranges},
        {"agents", agents},
        {"engine_rules", rules},
        {"instances", {{{"name", "micro"}, {"initial", initial}}}},
        {"playability", {{"player", "P"}, {"ordering", chance(0.5) ? "player_first" : "none"}, {"noop", chance(0.8)},
                         {"agents", goals}}},
        {"bounds", {{"horizon", pick(2, 5)}, {"invoke_depth", pick(1, 3)}}},
    };
    return {mechgen::domain_from_json(dom), mechgen::mechanics_from_json(mechs)};
}

/// One legal action sequence ending at the first tick the player's goal
/// holds, with the player's maintenance and the ordering rule respected
/// at every tick up to there.
struct Witness {
    std::vector<mechgen::MechanicId> actions;
};

/// All witnesses of length <= horizon by plain enumeration of every action
/// sequence, ordered by length then by action order (ascending id, NoOp last).
inline std::vector<Witness> all_witnesses(const mechgen::DomainSpec& spec, const mechgen::MechanicSet& ms, int horizon) {
    using namespace mechgen;
    Session root = initial_state(spec, ms, spec.instances.front());
    const auto& dom = root.domain();
    const int player = dom.entity(spec.playability.player);
    std::vector<MechanicId> actions;
    std::set<MechanicId> ids;
    for (const auto& m : ms) ids.insert(m.id);
    actions.assign(ids.begin(), ids.end());
    if (spec.playability.noop) actions.push_back(kNoOp);

    auto goal = [&](const Session& s, int a, int t) {
        const auto* g = dom.goal(a);
        return g && s.holds(*g, a, t);
    };
    auto maint = [&](const Session& s, int a, int t) {
        const auto* m = dom.maintenance(a);
        return !m || s.holds(*m, a, t);
    };
    // 1: witness ends here, 0: keep going, -1: dead
    auto classify = [&](const Session& s) {
        const int t = s.time();
        if (!maint(s, player, t)) return -1;
        bool g = dom.goal(player) ? goal(s, player, t) : true;
        if (g) return 1;
        if (spec.playability.ordering == Ordering::PlayerFirst)
            for (int a : dom.agents())
                if (a != player && goal(s, a, t)) return -1;
        return 0;
    };

    std::vector<Witness> out;
    for (int len = 0; len <= horizon; ++len) {
        if (len > 0 && actions.empty()) break;
        std::vector<std::size_t> digit(static_cast<std::size_t>(len), 0);
        while (true) {
            Session s = root;
            bool ok = true;
            for (int k = 0; k <= len && ok; ++k) {
                int c = classify(s);
                if (k == len) ok = c == 1;
                else if (c != 0) ok = false;
                else ok = s.step(s.agent_to_act(), actions[digit[static_cast<std::size_t>(k)]]) == StepStatus::Ok;
            }
            if (ok) {
                Witness w;
                for (auto d : digit) w.actions.push_back(actions[d]);
                out.push_back(std::move(w));
            }
            int pos = len - 1;
            while (pos >= 0 && ++digit[static_cast<std::size_t>(pos)] == actions.size()) digit[static_cast<std::size_t>(pos--)] = 0;
            if (pos < 0) break;
        }
    }
    return out;
}

/// Playable on every instance according to exhaustive enumeration.
inline bool playable_by_enumeration(const mechgen::DomainSpec& spec, const mechgen::MechanicSet& ms) {
    for (const auto& inst : spec.instances) {
        mechgen::DomainSpec one = spec;
        one.instances = {inst};
        if (all_witnesses(one, ms, spec.bounds.horizon).empty()) return false;
    }
    return true;
}

enum class Want { Any, Unsolvable, Solvable, NeedsTwo };

inline std::vector<mechgen::MechanicSet> all_candidate_sets(const mechgen::DomainSpec& spec);

/// Class of a generation problem. Used only to stratify sampling, so the
/// fast planner stands in for enumeration here.
inline Want classify_problem(const mechgen::DomainSpec& spec) {
    bool any = false;
    auto dom = std::make_shared<const mechgen::CompiledDomain>(spec);
    for (const auto& ms : all_candidate_sets(spec)) {
        if (!mechgen::validate_mechanics(spec, ms).ok() || !mechgen::check_hard(ms, spec).empty()) continue;
        if (!mechgen::check_playability(dom, ms, mechgen::PlanOptions::from(spec.bounds)).playable) continue;
        if (ms.size() <= 1) return Want::Solvable;
        any = true;
    }
    return any ? Want::NeedsTwo : Want::Unsolvable;
}

/// Random generation problem over a micro domain whose bounded vocabulary
/// has at most `max_atoms` atoms and at most two mechanics per set. `want`
/// resamples until the problem falls in that class
/// (Solvable: some set of at most one mechanic plays).
inline mechgen::DomainSpec random_generation_case(std::uint32_t seed, std::size_t max_atoms = 12, Want want = Want::Any) {
    using namespace mechgen;
    for (std::uint32_t attempt = 0;; ++attempt) {
        DomainSpec spec = random_micro_case(seed * 7919u + attempt).spec;
        std::mt19937 rng(seed * 104729u + attempt);
        auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
        auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
        auto some = [&](const std::vector<Term>& from, int n) {
            std::vector<Term> v = from;
            std::shuffle(v.begin(), v.end(), rng);
            v.resize(static_cast<std::size_t>(std::min<int>(n, static_cast<int>(v.size()))));
            return v;
        };
        GeneratorBounds& b = spec.bounds;
        b.max_mechanics = want == Want::NeedsTwo ? 2 : pick(1, 2);
        b.max_pre = pick(0, 1);
        b.max_eff = want == Want::NeedsTwo ? 1 : pick(1, 2);
        b.pre_window = chance(0.3) ? 1 : 0;
        b.eff_window = pick(1, 2);
        static const std::vector<int> pools[] = {{1}, {-1, 1}, {0, 1}, {-1, 0, 1}};
        b.constants = pools[pick(0, 3)];
        static const Relation rels[] = {Relation::Eq, Relation::Neq, Relation::Lt, Relation::Gt};
        b.relations = {rels[pick(0, 3)]};
        b.test_frames = {chance(0.8) ? Frame::Absolute : Frame::Relative};
        b.effect_frames = chance(0.7) ? std::vector<Frame>{Frame::Relative} : std::vector<Frame>{Frame::Relative, Frame::Absolute};
        b.test_targets = some(spec.has, pick(0, 2));
        std::vector<Term> eff = some(spec.has, pick(0, 2));
        for (const auto& g : spec.playability.per_agent["P"].goal)
            if (g.kind == ConditionKind::ParamTest && chance(0.8) && std::find(eff.begin(), eff.end(), g.term()) == eff.end())
                eff.push_back(g.term());
        b.effect_targets = eff;
        b.derived_tests = false;
        b.event_atoms = chance(0.25);
        spec.design.hard.clear();
        if (chance(0.5)) spec.design.hard.push_back({HardKind::NoContradictoryEquality});
        if (chance(0.4)) spec.design.hard.push_back({HardKind::NoDuplicateMechanics});
        if (chance(0.3)) spec.design.hard.push_back({HardKind::CostRequired, {{"W", true}}});
        std::vector<SoftTerm> terms{SoftTerm::AtomCount, SoftTerm::MechanicCount, SoftTerm::DistinctEntitiesReferenced};
        std::shuffle(terms.begin(), terms.end(), rng);
        std::vector<SoftReq> soft;
        for (int i = 0, n = pick(1, 3); i < n; ++i) soft.push_back({terms[static_cast<std::size_t>(i)], pick(1, 3), pick(1, 2)});
        spec.design.soft = soft;
        Vocabulary v = condition_vocabulary(spec, b);
        if (v.size() > max_atoms || v.effects.empty()) continue;
        if (playable_by_enumeration(spec, {})) continue;  // goal already holds
        if (want != Want::Any && attempt < 2000 && classify_problem(spec) != want) continue;
        return spec;
    }
}

/// Every mechanic set buildable from the bounded vocabulary (ids 1..k in
/// every order, each mechanic within the atom caps), unfiltered.
inline std::vector<mechgen::MechanicSet> all_candidate_sets(const mechgen::DomainSpec& spec) {
    using namespace mechgen;
    const auto& b = spec.bounds;
    Vocabulary v = condition_vocabulary(spec, b);
    auto subsets = [](std::size_t n, int lo, int hi) {
        std::vector<std::vector<std::size_t>> out;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            std::vector<std::size_t> pick;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) pick.push_back(i);
            if (static_cast<int>(pick.size()) >= lo && static_cast<int>(pick.size()) <= hi) out.push_back(pick);
        }
        return out;
    };
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> bodies;
    for (const auto& p : subsets(v.conditions.size(), 0, b.max_pre))
        for (const auto& e : subsets(v.effects.size(), 0, b.max_eff)) bodies.push_back({p, e});
    auto build = [&](MechanicId id, std::size_t body) {
        Mechanic m;
        m.id = id;
        for (auto i : bodies[body].first) m.preconditions.push_back(v.conditions[i]);
        for (auto i : bodies[body].second) m.effects.push_back(v.effects[i]);
        return m;
    };
    std::vector<MechanicSet> out{MechanicSet{}};
    std::vector<std::size_t> digits;
    for (int k = 1; k <= b.max_mechanics; ++k) {
        digits.assign(static_cast<std::size_t>(k), 0);
        while (true) {
            MechanicSet ms;
            for (int i = 0; i < k; ++i) ms.push_back(build(i + 1, digits[static_cast<std::size_t>(i)]));
            out.push_back(std::move(ms));
            int pos = k - 1;
            while (pos >= 0 && ++digits[static_cast<std::size_t>(pos)] == bodies.size()) digits[static_cast<std::size_t>(pos--)] = 0;
            if (pos < 0) break;
        }
    }
    return out;
}

/// Sets passing structural validation and every hard requirement.
inline std::vector<mechgen::MechanicSet> admissible_sets(const mechgen::DomainSpec& spec) {
    std::vector<mechgen::MechanicSet> out;
    for (auto& ms : all_candidate_sets(spec))
        if (mechgen::validate_mechanics(spec, ms).ok() && mechgen::check_hard(ms, spec).empty()) out.push_back(std::move(ms));
    return out;
}

/// Minimum score over admissible playable sets, if any.
inline std::optional<mechgen::ScoreVector> brute_force_best(const mechgen::DomainSpec& spec,
                                                            const std::vector<mechgen::SoftReq>& layout) {
    using namespace mechgen;
    std::vector<std::pair<ScoreVector, MechanicSet>> scored;
    for (auto& ms : admissible_sets(spec)) {
        ScoreVector sc = score_soft(ms, layout);
        scored.push_back({std::move(sc), std::move(ms)});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return compare_scores(a.first, b.first) < 0; });
    for (const auto& [sc, ms] : scored)
        if (playable_by_enumeration(spec, ms)) return sc;
    return std::nullopt;
}

}  // namespace oracle
