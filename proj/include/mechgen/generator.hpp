#pragma once
// Generate-and-test synthesis. A best-first frontier enumerates candidate
// mechanic sets over the bounded vocabulary in nondecreasing soft-score
// order; each candidate that passes the hard requirements is certified by
// the planner, and failures are recorded as nogood signatures.

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "mechgen/canonical.hpp"
#include "mechgen/planner.hpp"
#include "mechgen/requirements.hpp"
#include "mechgen/validate.hpp"

namespace mechgen {

struct Candidate {
    MechanicSet mechanics;
    ScoreVector score;
    Signature signature;
};

/// Soft layout used by generate: the domain's layout plus the control
/// intuitiveness term when controls are configured.
inline std::vector<SoftReq> effective_layout(const DomainSpec& spec) {
    auto layout = spec.soft_layout();
    if (spec.design.controls) {
        bool present = false;
        for (const auto& r : layout) present = present || r.term == SoftTerm::ControlIntuitiveness;
        if (!present)
            layout.push_back({SoftTerm::ControlIntuitiveness, spec.design.controls->intuitiveness_weight,
                              spec.design.controls->intuitiveness_priority});
    }
    return layout;
}

/// Non-monotone terms are only admissible below every monotone term, where
/// they act as a tie-break among equally scored candidates.
inline void check_layout(const std::vector<SoftReq>& layout) {
    std::optional<int> lowest_monotone;
    for (const auto& r : layout)
        if (is_monotone(r.term)) lowest_monotone = std::min(lowest_monotone.value_or(r.priority), r.priority);
    for (const auto& r : layout) {
        if (r.weight < 1) throw Error("soft term weights must be >= 1");
        if (!is_monotone(r.term) && lowest_monotone && r.priority >= *lowest_monotone)
            throw Error(std::string("soft term ") + to_string(r.term) +
                        " must have a lower priority than every counting term");
    }
}

// ---------------------------------------------------------------------------
// Frontier
// ---------------------------------------------------------------------------

class CandidateFrontier {
public:
    CandidateFrontier(const DomainSpec& spec, const GeneratorBounds& bounds, std::vector<SoftReq> layout)
        : spec_(spec), bounds_(bounds), vocab_(condition_vocabulary(spec, bounds)) {
        for (int p : priority_levels(layout)) {
            Level lv{p, {}};
            for (const auto& r : layout)
                if (r.priority == p && is_monotone(r.term)) lv.terms.emplace_back(r.term, r.weight);
            levels_.push_back(std::move(lv));
        }
        max_pre_ = bounds.max_pre;
        max_eff_ = bounds.max_eff;
        for (const auto& h : spec.design.hard) {
            if (h.kind == HardKind::NoDuplicateMechanics) strict_ = true;
            if (h.kind == HardKind::NoContradictoryEquality) no_contradiction_ = true;
            if (h.kind == HardKind::MaxAtoms) {
                max_pre_ = std::min(max_pre_, h.max_pre);
                max_eff_ = std::min(max_eff_, h.max_eff);
            }
            if (h.kind == HardKind::CostRequired) cost_reqs_.push_back(h);
        }
        std::map<std::string, int> ents;
        auto ent = [&](const std::string& e) {
            auto [it, inserted] = ents.emplace(e, static_cast<int>(ents.size()));
            (void)inserted;
            return it->second;
        };
        for (const auto& c : vocab_.conditions) {
            cond_entity_.push_back(ent(c.entity));
            cond_is_event_.push_back(c.kind == ConditionKind::EventTest);
        }
        for (const auto& e : vocab_.effects) {
            eff_entity_.push_back(e.kind == EffectKind::ParamUpdate ? ent(e.entity) : -1);
            eff_is_event_.push_back(e.kind == EffectKind::EventInvoke);
            Mechanic probe{1, "", {}, {e}};
            bool pays = false;
            for (const auto& r : cost_reqs_) pays = pays || detail::pays_cost(probe, r, spec);
            eff_pays_.push_back(pays);
        }
        entity_count_ = static_cast<int>(ents.size());
        // Single atoms that can never appear in a valid mechanic are dropped up front.
        for (const auto& c : vocab_.conditions) {
            auto rep = validate_mechanics(spec, {Mechanic{1, "", {c}, {}}});
            bool ok = true;
            for (const auto& v : rep.violations) ok = ok && v.code == "empty_effects";
            cond_ok_.push_back(c.kind == ConditionKind::EventTest || ok);
            has_events_ = has_events_ || c.kind == ConditionKind::EventTest;
        }
        for (const auto& e : vocab_.effects) {
            eff_ok_.push_back(e.kind == EffectKind::EventInvoke || validate_mechanics(spec, {Mechanic{1, "", {}, {e}}}).ok());
            has_events_ = has_events_ || e.kind == EffectKind::EventInvoke;
        }
        init_frozen_tests(spec);
        auto pair_clash = [](auto&& make, std::size_t n) {
            std::vector<std::vector<char>> out(n, std::vector<char>(n, 0));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) out[i][j] = out[j][i] = detail::contradiction(make(i, j)) ? 1 : 0;
            return out;
        };
        if (no_contradiction_) {
            cond_clash_ = pair_clash(
                [&](std::size_t i, std::size_t j) {
                    return Mechanic{1, "", {vocab_.conditions[i], vocab_.conditions[j]}, {}};
                },
                vocab_.conditions.size());
            eff_clash_ = pair_clash(
                [&](std::size_t i, std::size_t j) {
                    return Mechanic{1, "", {}, {vocab_.effects[i], vocab_.effects[j]}};
                },
                vocab_.effects.size());
        }
        push(Node{{}, false});
    }

    const Vocabulary& vocabulary() const { return vocab_; }
    long expanded() const { return expanded_; }
    /// Complete candidates skipped because the player's goal provably stays false.
    long statically_refuted() const { return statically_refuted_; }
    std::size_t size() const { return queue_.size(); }

    /// Lower bound of the next node to expand, if any.
    std::optional<ScoreVector> peek_bound() const {
        if (queue_.empty()) return std::nullopt;
        return to_score(queue_.top().bound);
    }

    /// Excludes every candidate with this signature from future yields.
    void record_nogood(const Signature& sig) { nogoods_.insert(sig.key); }
    bool is_nogood(const Signature& sig) const { return nogoods_.count(sig.key) > 0; }
    std::size_t nogood_count() const { return nogoods_.size(); }

    /// Next distinct canonical candidate passing structural validation and
    /// the hard requirements, in nondecreasing score order.
    std::optional<Candidate> next() {
        while (!queue_.empty()) {
            Node n = queue_.top().node;
            queue_.pop();
            ++expanded_;
            expand(n);
            if (n.open) continue;
            if (!unfreezes_goal(n)) {
                ++statically_refuted_;
                continue;
            }
            MechanicSet ms = materialize(n);
            Signature sig = mechanic_signature(ms);
            if (nogoods_.count(sig.key)) continue;
            // Without event atoms every multiset of mechanics is reached once
            // and each atom was prevalidated, so only event-bearing sets need
            // deduplication and full validation.
            if (has_events_ && !seen_.insert(sig.key).second) continue;
            if (has_events_ && !validate_mechanics(spec_, ms).ok()) continue;
            if (!check_hard(ms, spec_).empty()) continue;
            return Candidate{std::move(ms), to_score(bound(n)), std::move(sig)};
        }
        return std::nullopt;
    }

private:
    struct Mech {
        std::vector<int> pre, eff;
    };
    struct Node {
        std::vector<Mech> mechs;
        bool open = false;  // last mechanic still accepting atoms
    };
    struct Entry {
        std::vector<long> bound;
        std::uint64_t seq;
        Node node;
        bool operator<(const Entry& o) const {
            // priority_queue pops the largest; invert for smallest bound first
            if (bound != o.bound) return bound > o.bound;
            return seq > o.seq;
        }
    };
    struct Level {
        int priority;
        std::vector<std::pair<SoftTerm, int>> terms;
    };

    ScoreVector to_score(const std::vector<long>& b) const {
        ScoreVector s;
        for (std::size_t i = 0; i < levels_.size(); ++i) s.levels.emplace_back(levels_[i].priority, b[i]);
        return s;
    }

    bool pays(const Mech& m) const {
        if (cost_reqs_.empty()) return true;
        for (int e : m.eff)
            if (eff_pays_[e]) return true;
        return false;
    }

    std::vector<long> bound(const Node& n) const {
        long atoms = 0;
        auto& ents = scratch_;
        ents.assign(static_cast<std::size_t>(entity_count_), 0);
        for (const auto& m : n.mechs) {
            atoms += static_cast<long>(m.pre.size() + m.eff.size());
            for (int c : m.pre) ents[cond_entity_[c]] = 1;
            for (int e : m.eff)
                if (eff_entity_[e] >= 0) ents[eff_entity_[e]] = 1;
        }
        if (n.open && (n.mechs.back().eff.empty() || !pays(n.mechs.back()))) ++atoms;
        long distinct = std::count(ents.begin(), ents.end(), 1);
        std::vector<long> out;
        out.reserve(levels_.size());
        for (const auto& lv : levels_) {
            long sum = 0;
            for (const auto& [term, w] : lv.terms) {
                long v = term == SoftTerm::AtomCount       ? atoms
                         : term == SoftTerm::MechanicCount ? static_cast<long>(n.mechs.size())
                                                           : distinct;
                sum += w * v;
            }
            out.push_back(sum);
        }
        return out;
    }

    void push(Node n) {
        auto b = bound(n);
        queue_.push(Entry{std::move(b), seq_++, std::move(n)});
    }

    // Event atoms sort after every other atom of their section, so the
    // event-free part of an index vector is a prefix of it.
    std::vector<int> masked(const std::vector<int>& v, const std::vector<bool>& is_event) const {
        std::vector<int> out;
        for (int x : v)
            if (!is_event[x]) out.push_back(x);
        return out;
    }
    bool has_event(const Mech& m) const {
        for (int c : m.pre)
            if (cond_is_event_[c]) return true;
        for (int e : m.eff)
            if (eff_is_event_[e]) return true;
        return false;
    }

    // -1: can never reach b; 0: equal so far; 1: already greater.
    static int prefix_cmp(const std::vector<int>& a, const std::vector<int>& b, bool a_final) {
        std::size_t n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i] < b[i]) return -1;
            if (a[i] > b[i]) return 1;
        }
        if (a.size() < b.size()) return a_final ? -1 : 0;
        if (a.size() > b.size()) return 1;
        return 0;
    }

    /// Symmetry breaking: mechanics appear in nondecreasing order of their
    /// event-free atoms (strictly increasing when duplicates are banned and
    /// neither references another mechanic).
    bool ordered(const Node& n, bool closing) const {
        if (n.mechs.size() < 2) return true;
        const Mech& m = n.mechs.back();
        const Mech& p = n.mechs[n.mechs.size() - 2];
        auto mp = masked(m.pre, cond_is_event_), pp = masked(p.pre, cond_is_event_);
        bool pre_final = closing || !m.eff.empty() || mp.size() != m.pre.size();
        int r = prefix_cmp(mp, pp, pre_final);
        if (r != 0) return r > 0;
        if (!pre_final) return true;
        auto me = masked(m.eff, eff_is_event_), pe = masked(p.eff, eff_is_event_);
        bool eff_final = closing || me.size() != m.eff.size();
        int r2 = prefix_cmp(me, pe, eff_final);
        if (r2 != 0) return r2 > 0;
        if (!closing) return true;
        return !(strict_ && !has_event(m) && !has_event(p));
    }

    // Contradictions are pairwise, so only the newest atom needs checking.
    bool consistent(const Mech& m, bool added_pre) const {
        if (!no_contradiction_) return true;
        const auto& v = added_pre ? m.pre : m.eff;
        const auto& clash = added_pre ? cond_clash_ : eff_clash_;
        const int last = v.back();
        for (std::size_t i = 0; i + 1 < v.size(); ++i)
            if (clash[last][v[i]]) return false;
        return true;
    }

    void expand(const Node& n) {
        if (!n.open) {
            if (static_cast<int>(n.mechs.size()) < bounds_.max_mechanics) {
                Node c = n;
                c.mechs.push_back({});
                c.open = true;
                push(std::move(c));
            }
            return;
        }
        const Mech& m = n.mechs.back();
        const int nc = static_cast<int>(vocab_.conditions.size());
        const int ne = static_cast<int>(vocab_.effects.size());
        if (m.eff.empty() && static_cast<int>(m.pre.size()) < max_pre_) {
            for (int c = m.pre.empty() ? 0 : m.pre.back() + 1; c < nc; ++c) {
                if (!cond_ok_[c]) continue;
                Node child = n;
                child.mechs.back().pre.push_back(c);
                if (!consistent(child.mechs.back(), true) || !ordered(child, false)) continue;
                push(std::move(child));
            }
        }
        if (static_cast<int>(m.eff.size()) < max_eff_) {
            for (int e = m.eff.empty() ? 0 : m.eff.back() + 1; e < ne; ++e) {
                if (!eff_ok_[e]) continue;
                Node child = n;
                child.mechs.back().eff.push_back(e);
                if (!consistent(child.mechs.back(), false) || !ordered(child, false)) continue;
                push(std::move(child));
            }
        }
        if (!m.eff.empty() && pays(m) && ordered(n, true)) {
            Node child = n;
            child.open = false;
            push(std::move(child));
        }
    }

    // A goal test that fails initially and reads only terms no forced update
    // writes must have one of its terms written by the candidate.
    void init_frozen_tests(const DomainSpec& spec) {
        auto dom = std::make_shared<const CompiledDomain>(spec);
        const int player = dom->entity(spec.playability.player);
        for (const auto& e : vocab_.effects) eff_pair_.push_back(e.kind == EffectKind::ParamUpdate ? dom->pair(e.term()) : -1);
        if (player < 0) return;
        for (const auto& inst : spec.instances) {
            try {
                for (const auto& f : detail::frozen_goal_tests(initial_state(dom, {}, inst), player))
                    frozen_.push_back(f);
            } catch (const Error&) {
            }
        }
    }

    bool unfreezes_goal(const Node& n) const {
        for (const auto& f : frozen_) {
            if (f.pair < 0) return false;
            bool hit = false;
            for (const auto& m : n.mechs)
                for (int e : m.eff) hit = hit || eff_pair_[e] == f.pair || (f.own >= 0 && eff_pair_[e] == f.own);
            if (!hit) return false;
        }
        return true;
    }

    MechanicSet materialize(const Node& n) const {
        MechanicSet ms;
        for (std::size_t i = 0; i < n.mechs.size(); ++i) {
            Mechanic m;
            m.id = static_cast<MechanicId>(i + 1);
            for (int c : n.mechs[i].pre) m.preconditions.push_back(vocab_.conditions[c]);
            for (int e : n.mechs[i].eff) m.effects.push_back(vocab_.effects[e]);
            ms.push_back(canonicalize_mechanic(std::move(m)));
        }
        return ms;
    }

    const DomainSpec& spec_;
    GeneratorBounds bounds_;
    Vocabulary vocab_;
    std::vector<Level> levels_;
    int max_pre_ = 0, max_eff_ = 0;
    bool strict_ = false, no_contradiction_ = false;
    std::vector<HardReq> cost_reqs_;
    std::vector<int> cond_entity_, eff_entity_;
    std::vector<bool> cond_is_event_, eff_is_event_, eff_pays_;
    std::vector<std::vector<char>> cond_clash_, eff_clash_;
    std::vector<bool> cond_ok_, eff_ok_;
    bool has_events_ = false;
    std::vector<int> eff_pair_;
    std::vector<detail::FrozenTest> frozen_;
    long statically_refuted_ = 0;
    mutable std::vector<char> scratch_;
    int entity_count_ = 0;
    std::priority_queue<Entry> queue_;
    std::uint64_t seq_ = 0;
    std::set<std::string> seen_, nogoods_;
    long expanded_ = 0;
};

inline std::optional<Candidate> next_candidate(CandidateFrontier& f) { return f.next(); }
inline void record_nogood(CandidateFrontier& f, const Signature& sig) { f.record_nogood(sig); }

// ---------------------------------------------------------------------------
// Control mapping synthesis
// ---------------------------------------------------------------------------

/// Assigns input subsets to mechanics, maximizing intuitiveness subject to
/// the control requirements. Ties go to the lexicographically first
/// assignment (mechanics by ascending id, subsets in lexicographic order).
inline ControlMapping generate_controls(const MechanicSet& ms, const ControlReqs& reqs,
                                        const std::vector<std::string>& domain_inputs = {},
                                        long assignment_cap = 2000000) {
    std::vector<std::string> inputs = reqs.inputs.empty() ? domain_inputs : reqs.inputs;
    std::sort(inputs.begin(), inputs.end());
    inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
    if (inputs.empty() && reqs.require_input && !ms.empty()) throw Error("control requirements name no inputs");
    if (inputs.size() > 16) throw Error("too many inputs for control synthesis");
    std::vector<std::vector<std::string>> subsets;
    for (unsigned mask = reqs.require_input ? 1u : 0u; mask < (1u << inputs.size()); ++mask) {
        std::vector<std::string> s;
        for (std::size_t i = 0; i < inputs.size(); ++i)
            if (mask & (1u << i)) s.push_back(inputs[i]);
        subsets.push_back(std::move(s));
    }
    std::sort(subsets.begin(), subsets.end());
    MechanicSet sorted = ms;
    std::sort(sorted.begin(), sorted.end(), [](const Mechanic& a, const Mechanic& b) { return a.id < b.id; });
    std::vector<std::vector<ConditionAtom>> pres;
    for (const auto& m : sorted) pres.push_back(canonicalize_mechanic(m).preconditions);

    std::vector<std::size_t> pick(sorted.size(), 0);
    std::optional<std::vector<std::size_t>> best;
    long best_score = 0;
    long visited = 0;
    ControlMapping current;
    std::function<void(std::size_t)> dfs = [&](std::size_t i) {
        if (++visited > assignment_cap) throw Error("control mapping search exceeded its cap");
        if (i == sorted.size()) {
            long s = intuitiveness_score(sorted, current);
            if (!best || s > best_score) {
                best = pick;
                best_score = s;
            }
            return;
        }
        for (std::size_t k = 0; k < subsets.size(); ++k) {
            std::set<std::string> in(subsets[k].begin(), subsets[k].end());
            if (reqs.unambiguous) {
                bool clash = false;
                for (std::size_t j = 0; j < i && !clash; ++j)
                    clash = pres[j] == pres[i] && current[sorted[j].id] == in;
                if (clash) continue;
            }
            pick[i] = k;
            current[sorted[i].id] = std::move(in);
            dfs(i + 1);
            current.erase(sorted[i].id);
        }
    };
    dfs(0);
    if (!best) throw Error("control requirements are unsatisfiable for this mechanic set");
    ControlMapping out;
    for (std::size_t i = 0; i < sorted.size(); ++i)
        out[sorted[i].id] = std::set<std::string>(subsets[(*best)[i]].begin(), subsets[(*best)[i]].end());
    return out;
}

inline json control_mapping_json(const ControlMapping& m) {
    json arr = json::array();
    for (const auto& [id, in] : m) arr.push_back({{"mechanic", id}, {"inputs", std::vector<std::string>(in.begin(), in.end())}});
    return arr;
}

inline ControlMapping control_mapping_from_json(const json& j, const MechanicSet& ms) {
    using namespace detail;
    ControlMapping out;
    const auto& arr = array_at(j, "controls");
    std::map<std::string, MechanicId> names;
    for (const auto& m : ms)
        if (!m.name.empty()) names[m.name] = m.id;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::string p = "controls[" + std::to_string(i) + "]";
        check_keys(arr[i], p, {"mechanic", "inputs"});
        MechanicId id = mechanic_ref(require(arr[i], p, "mechanic"), p + ".mechanic", &names);
        auto list = string_list(require(arr[i], p, "inputs"), p + ".inputs");
        out[id] = std::set<std::string>(list.begin(), list.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Candidate evaluation and results
// ---------------------------------------------------------------------------

enum class GenerationStatus { Found, ExhaustedWithinBounds, ResourceLimit };

inline const char* to_string(GenerationStatus s) {
    switch (s) {
        case GenerationStatus::Found: return "found";
        case GenerationStatus::ExhaustedWithinBounds: return "exhausted_within_bounds";
        case GenerationStatus::ResourceLimit: return "resource_limit";
    }
    return "?";
}

struct GenerationResult {
    GenerationStatus status = GenerationStatus::ExhaustedWithinBounds;
    MechanicSet mechanics;
    ScoreVector score;
    std::optional<PlayabilityReport> witnesses;
    std::optional<ControlMapping> controls;
    std::optional<ProgressionResult> progression;
    std::optional<int> edit_distance;
    std::string limit_reason;
    long candidates_tested = 0;
    long nogoods_recorded = 0;
    long nodes_expanded = 0;
    long planner_limits = 0;
    long statically_refuted = 0;
};

inline json to_json(const GenerationResult& r) {
    json j{{"status", to_string(r.status)},
           {"mechanics", r.status == GenerationStatus::Found ? to_json(r.mechanics) : json::array()},
           {"score", to_json(r.score)},
           {"statistics",
            {{"candidates_tested", r.candidates_tested},
             {"nogoods_recorded", r.nogoods_recorded},
             {"nodes_expanded", r.nodes_expanded},
             {"planner_limits", r.planner_limits},
             {"statically_refuted", r.statically_refuted}}}};
    j["witnesses"] = r.witnesses ? to_json(*r.witnesses, r.mechanics) : json(nullptr);
    j["controls"] = r.controls ? control_mapping_json(*r.controls) : json(nullptr);
    j["progression"] = r.progression ? to_json(*r.progression) : json(nullptr);
    j["edit_distance"] = r.edit_distance ? json(*r.edit_distance) : json(nullptr);
    if (!r.limit_reason.empty()) j["limit_reason"] = r.limit_reason;
    return j;
}

inline std::string serialize_result(const GenerationResult& r) { return to_json(r).dump(2) + "\n"; }

namespace detail {

struct Evaluation {
    bool ok = false;
    bool planner_limited = false;
    PlayabilityReport witnesses;
    std::optional<ControlMapping> controls;
    std::optional<ProgressionResult> progression;
};

/// Planner certification plus the configured progression/control checks.
inline Evaluation evaluate_candidate(const std::shared_ptr<const CompiledDomain>& dom, const MechanicSet& ms) {
    const DomainSpec& spec = dom->spec();
    Evaluation ev;
    ev.witnesses = check_playability(dom, ms, PlanOptions::from(spec.bounds), true);
    ev.planner_limited = ev.witnesses.resource_limit;
    if (!ev.witnesses.playable) return ev;
    if (spec.design.progression) {
        std::vector<std::vector<Trace>> levels;
        for (const auto* inst : instances_by_level(spec)) {
            auto ts = enumerate_traces(initial_state(dom, ms, *inst), spec.bounds.horizon, spec.bounds.trace_cap,
                                       spec.bounds.node_cap);
            levels.push_back(std::move(ts.traces));
        }
        ev.progression = check_progression(levels, *spec.design.progression);
        if (!ev.progression->ok) return ev;
    }
    if (spec.design.controls) {
        try {
            ev.controls = generate_controls(ms, *spec.design.controls, spec.inputs);
        } catch (const Error&) {
            return ev;
        }
    }
    ev.ok = true;
    return ev;
}

inline bool uses_term(const std::vector<SoftReq>& layout, SoftTerm t) {
    for (const auto& r : layout)
        if (r.term == t) return true;
    return false;
}

class Budget {
public:
    explicit Budget(const GeneratorBounds& b)
        : start_(std::chrono::steady_clock::now()), time_limit_ms_(b.time_limit_ms), cap_(b.candidate_cap) {}
    std::optional<std::string> exceeded(long tested) const {
        if (tested >= cap_) return "candidate cap reached";
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
        if (ms > time_limit_ms_) return "time limit reached";
        return std::nullopt;
    }

private:
    std::chrono::steady_clock::time_point start_;
    long time_limit_ms_;
    long cap_;
};

}  // namespace detail

/// Best-first generate-and-test over the domain's bounded candidate space.
inline GenerationResult generate(const DomainSpec& spec) {
    auto layout = effective_layout(spec);
    check_layout(layout);
    if (detail::uses_term(layout, SoftTerm::AdaptationEditDistance))
        throw Error("adaptation_edit_distance needs a seed mechanic set; use adapt");
    const bool tie_break = detail::uses_term(layout, SoftTerm::ControlIntuitiveness);

    GenerationResult res;
    CandidateFrontier frontier(spec, spec.bounds, layout);
    auto dom = std::make_shared<const CompiledDomain>(spec);
    detail::Budget budget(spec.bounds);
    std::optional<Candidate> best;
    detail::Evaluation best_eval;
    ScoreVector best_full;

    auto finish = [&](GenerationResult& r) {
        r.nodes_expanded = frontier.expanded();
        r.statically_refuted = frontier.statically_refuted();
        if (best) {
            r.status = GenerationStatus::Found;
            r.mechanics = best->mechanics;
            r.score = best_full;
            r.witnesses = best_eval.witnesses;
            r.controls = best_eval.controls;
            r.progression = best_eval.progression;
        }
        return r;
    };

    while (true) {
        if (best) {
            auto next = frontier.peek_bound();
            if (!next || compare_scores(*next, best->score) > 0) break;
        }
        if (auto why = budget.exceeded(res.candidates_tested)) {
            if (best) break;
            res.status = GenerationStatus::ResourceLimit;
            res.limit_reason = *why;
            return finish(res);
        }
        auto cand = frontier.next();
        if (!cand) break;
        if (best && compare_scores(cand->score, best->score) > 0) break;
        ++res.candidates_tested;
        auto ev = detail::evaluate_candidate(dom, cand->mechanics);
        if (ev.planner_limited) ++res.planner_limits;
        if (!ev.ok) {
            frontier.record_nogood(cand->signature);
            ++res.nogoods_recorded;
            continue;
        }
        ScoreContext ctx;
        if (ev.controls) ctx.mapping = &*ev.controls;
        ControlMapping fallback;
        if (tie_break && !ctx.mapping) {
            ControlReqs defaults;
            fallback = generate_controls(cand->mechanics, defaults, spec.inputs);
            ctx.mapping = &fallback;
            ev.controls = fallback;
        }
        ScoreVector full = score_soft(cand->mechanics, layout, ctx);
        if (!best || compare_scores(full, best_full) < 0) {
            best = std::move(cand);
            best_eval = std::move(ev);
            best_full = full;
        }
        if (!tie_break) break;
    }
    return finish(res);
}

// ---------------------------------------------------------------------------
// Adaptation
// ---------------------------------------------------------------------------

namespace detail {

template <class Atom>
void toggle_subsets(const std::vector<Atom>& universe, std::size_t k, std::size_t from, std::vector<std::size_t>& cur,
                    const std::function<void(const std::vector<std::size_t>&)>& emit) {
    if (cur.size() == k) {
        emit(cur);
        return;
    }
    for (std::size_t i = from; i + (k - cur.size()) <= universe.size(); ++i) {
        cur.push_back(i);
        toggle_subsets(universe, k, i + 1, cur, emit);
        cur.pop_back();
    }
}

template <class Atom>
std::vector<Atom> apply_toggles(const std::vector<Atom>& base, const std::vector<Atom>& universe,
                                const std::vector<std::size_t>& picks) {
    std::vector<Atom> out = base;
    for (std::size_t i : picks) {
        auto it = std::find(out.begin(), out.end(), universe[i]);
        if (it != out.end()) out.erase(it);
        else out.push_back(universe[i]);
    }
    return out;
}

template <class Atom>
std::vector<Atom> atom_union(const std::vector<Atom>& base, const std::vector<Atom>& vocab) {
    std::vector<Atom> u = base;
    for (const auto& a : vocab)
        if (std::find(u.begin(), u.end(), a) == u.end()) u.push_back(a);
    std::sort(u.begin(), u.end());
    return u;
}

/// Every mechanic buildable from the vocabulary within the caps.
inline std::vector<Mechanic> all_mechanics(const Vocabulary& v, int max_pre, int max_eff, long cap) {
    std::vector<Mechanic> out;
    std::vector<std::size_t> cur;
    for (int np = 0; np <= max_pre; ++np) {
        std::vector<std::vector<std::size_t>> pres;
        cur.clear();
        toggle_subsets<ConditionAtom>(v.conditions, static_cast<std::size_t>(np), 0, cur,
                                      [&](const std::vector<std::size_t>& p) { pres.push_back(p); });
        for (int ne = 1; ne <= max_eff; ++ne) {
            cur.clear();
            toggle_subsets<EffectAtom>(v.effects, static_cast<std::size_t>(ne), 0, cur, [&](const std::vector<std::size_t>& e) {
                for (const auto& p : pres) {
                    if (static_cast<long>(out.size()) >= cap) throw Error("adaptation space exceeds the candidate cap");
                    Mechanic m;
                    for (auto i : p) m.preconditions.push_back(v.conditions[i]);
                    for (auto i : e) m.effects.push_back(v.effects[i]);
                    out.push_back(canonicalize_mechanic(std::move(m)));
                }
            });
        }
    }
    return out;
}

}  // namespace detail

/// Every candidate at exactly edit distance `d` from `seed` that the
/// bounded space allows: atom toggles on kept seed mechanics, removed seed
/// mechanics, and new mechanics with fresh ids (each removal or addition
/// costs `bounds.max_pre + bounds.max_eff + 1`).
inline std::vector<MechanicSet> candidates_at_distance(const DomainSpec& spec, const MechanicSet& seed_in, int d,
                                                       long cap = 1000000) {
    const auto& b = spec.bounds;
    const int K = unmatched_mechanic_cost(b);
    MechanicSet seed = canonicalize(seed_in);
    std::sort(seed.begin(), seed.end(), [](const Mechanic& x, const Mechanic& y) { return x.id < y.id; });
    MechanicId next_id = 1;
    for (const auto& m : seed) next_id = std::max(next_id, m.id + 1);
    const int slots = std::max(b.max_mechanics, static_cast<int>(seed.size()));
    std::vector<MechanicId> ids;
    for (const auto& m : seed) ids.push_back(m.id);
    for (int k = 0; k < slots; ++k) ids.push_back(next_id + k);
    Vocabulary vocab = condition_vocabulary(spec, b, ids);

    std::vector<MechanicSet> out;
    auto emit = [&](MechanicSet ms) {
        if (static_cast<long>(out.size()) >= cap) throw Error("adaptation level exceeds the candidate cap");
        out.push_back(std::move(ms));
    };
    std::optional<std::vector<Mechanic>> fresh_pool;
    MechanicSet partial;

    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i == seed.size()) {
            if (left % K != 0) return;
            int n_new = left / K;
            if (static_cast<int>(partial.size()) + n_new > slots) return;
            if (n_new == 0) {
                emit(partial);
                return;
            }
            if (!fresh_pool) fresh_pool = detail::all_mechanics(vocab, b.max_pre, b.max_eff, cap);
            std::function<void(int, std::size_t)> add = [&](int k, std::size_t from) {
                if (k == n_new) {
                    emit(partial);
                    return;
                }
                for (std::size_t j = from; j < fresh_pool->size(); ++j) {
                    Mechanic m = (*fresh_pool)[j];
                    m.id = next_id + k;
                    partial.push_back(std::move(m));
                    add(k + 1, j);
                    partial.pop_back();
                }
            };
            add(0, 0);
            return;
        }
        const Mechanic& m = seed[i];
        if (left >= K) rec(i + 1, left - K);  // removed
        auto pre_u = detail::atom_union(m.preconditions, vocab.conditions);
        auto eff_u = detail::atom_union(m.effects, vocab.effects);
        const int cap_pre = std::max(b.max_pre, static_cast<int>(m.preconditions.size()));
        const int cap_eff = std::max(b.max_eff, static_cast<int>(m.effects.size()));
        // spend c toggles on this mechanic, the rest on later ones
        for (int c = 0; c <= left; ++c) {
            for (int cp = 0; cp <= c; ++cp) {
                std::vector<std::size_t> cur;
                std::vector<std::vector<std::size_t>> pre_picks;
                detail::toggle_subsets<ConditionAtom>(pre_u, static_cast<std::size_t>(cp), 0, cur,
                                                      [&](const std::vector<std::size_t>& p) { pre_picks.push_back(p); });
                for (const auto& pp : pre_picks) {
                    auto pre = detail::apply_toggles(m.preconditions, pre_u, pp);
                    if (static_cast<int>(pre.size()) > cap_pre) continue;
                    cur.clear();
                    detail::toggle_subsets<EffectAtom>(eff_u, static_cast<std::size_t>(c - cp), 0, cur,
                                                       [&](const std::vector<std::size_t>& ep) {
                                                           auto eff = detail::apply_toggles(m.effects, eff_u, ep);
                                                           if (eff.empty() || static_cast<int>(eff.size()) > cap_eff) return;
                                                           Mechanic changed = m;
                                                           changed.preconditions = pre;
                                                           changed.effects = eff;
                                                           partial.push_back(canonicalize_mechanic(std::move(changed)));
                                                           rec(i + 1, left - c);
                                                           partial.pop_back();
                                                       });
                }
            }
        }
    };
    rec(0, d);
    return out;
}

/// Minimal-change re-synthesis: searches edit distance 0, 1, 2, ... from
/// the seed; within one distance candidates are tried in order of the
/// remaining soft score.
inline GenerationResult adapt(const DomainSpec& spec, const MechanicSet& seed_in) {
    auto layout = effective_layout(spec);
    AdaptationReqs areq = spec.design.adaptation.value_or(AdaptationReqs{});
    std::vector<SoftReq> rest;
    for (const auto& r : layout)
        if (r.term != SoftTerm::AdaptationEditDistance) rest.push_back(r);
    check_layout(rest);
    for (const auto& r : rest)
        if (r.priority >= areq.priority) throw Error("adaptation priority must dominate the other soft terms");
    std::vector<SoftReq> full_layout = rest;
    full_layout.push_back({SoftTerm::AdaptationEditDistance, areq.weight, areq.priority});

    const MechanicSet seed = canonicalize(seed_in);
    const auto& b = spec.bounds;
    const int K = unmatched_mechanic_cost(b);
    const int slots = std::max(b.max_mechanics, static_cast<int>(seed.size()));
    const int max_d = K * (static_cast<int>(seed.size()) + slots);
    const bool tie_break = detail::uses_term(rest, SoftTerm::ControlIntuitiveness);

    GenerationResult res;
    detail::Budget budget(b);
    auto dom = std::make_shared<const CompiledDomain>(spec);
    std::set<std::string> failed;
    for (int d = 0; d <= max_d; ++d) {
        std::vector<MechanicSet> level;
        try {
            level = candidates_at_distance(spec, seed, d, b.candidate_cap * 10);
        } catch (const Error& e) {
            res.status = GenerationStatus::ResourceLimit;
            res.limit_reason = e.what();
            return res;
        }
        struct Scored {
            ScoreVector score;
            std::size_t order;
        };
        std::vector<Scored> scored;
        ScoreContext ctx{&seed, K, nullptr};
        for (std::size_t i = 0; i < level.size(); ++i)
            scored.push_back({score_soft_if(level[i], full_layout, ctx,
                                            [](SoftTerm t) { return t != SoftTerm::ControlIntuitiveness; }),
                              i});
        std::stable_sort(scored.begin(), scored.end(),
                         [](const Scored& x, const Scored& y) { return compare_scores(x.score, y.score) < 0; });
        std::optional<std::size_t> best;
        detail::Evaluation best_eval;
        ScoreVector best_full;
        for (const auto& s : scored) {
            if (best && compare_scores(s.score, scored[*best].score) > 0) break;
            const MechanicSet& ms = level[s.order];
            if (!validate_mechanics(spec, ms).ok() || !check_hard(ms, spec).empty()) continue;
            std::string key = to_json(ms).dump();
            if (failed.count(key)) continue;
            if (auto why = budget.exceeded(res.candidates_tested)) {
                if (best) break;
                res.status = GenerationStatus::ResourceLimit;
                res.limit_reason = *why;
                return res;
            }
            ++res.candidates_tested;
            auto ev = detail::evaluate_candidate(dom, ms);
            if (ev.planner_limited) ++res.planner_limits;
            if (!ev.ok) {
                failed.insert(key);
                ++res.nogoods_recorded;
                continue;
            }
            ControlMapping fallback;
            ScoreContext full_ctx{&seed, K, ev.controls ? &*ev.controls : nullptr};
            if (tie_break && !full_ctx.mapping) {
                fallback = generate_controls(ms, ControlReqs{}, spec.inputs);
                ev.controls = fallback;
                full_ctx.mapping = &*ev.controls;
            }
            ScoreVector full = score_soft(ms, full_layout, full_ctx);
            if (!best || compare_scores(full, best_full) < 0) {
                best = &s - scored.data();
                best_eval = std::move(ev);
                best_full = full;
            }
            if (!tie_break) break;
        }
        if (best) {
            res.status = GenerationStatus::Found;
            res.mechanics = level[scored[*best].order];
            std::sort(res.mechanics.begin(), res.mechanics.end(),
                      [](const Mechanic& x, const Mechanic& y) { return x.id < y.id; });
            res.score = best_full;
            res.witnesses = best_eval.witnesses;
            res.controls = best_eval.controls;
            res.progression = best_eval.progression;
            res.edit_distance = d;
            return res;
        }
    }
    res.status = GenerationStatus::ExhaustedWithinBounds;
    return res;
}

}  // namespace mechgen
