#pragma once
// Core value types of the mechanic description language: state model,
// mechanics built from time-indexed condition/effect atoms, game instances,
// and requirement declarations.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mechgen {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text; carries a 1-based line/column when known.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line = 0, int column = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ", column " +
                               std::to_string(column) + ")"
                         : msg),
          line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Raised when an operation's contract is violated at runtime.
class EvaluationError : public Error {
public:
    using Error::Error;
};

using MechanicId = int;
inline constexpr MechanicId kNoOp = 0;

enum class Frame : std::uint8_t { Absolute, Relative };
enum class Relation : std::uint8_t { Eq, Neq, Lt, Gt };

/// A parameter owned by an entity: the unit of game state.
struct Term {
    std::string param;
    std::string entity;
    auto operator<=>(const Term&) const = default;
};

struct Range {
    int lo = 0;
    int hi = 0;
    auto operator<=>(const Range&) const = default;
    bool contains(int v) const noexcept { return lo <= v && v <= hi; }
};

enum class ConditionKind : std::uint8_t { ParamTest, DerivedTest, EventTest };

/// <frame, time, condition> precondition atom.
///
/// Member order is the canonical atom order: kind, frame, offset, subject
/// (name, entity, mechanic), relation, rhs, negation.
///   ParamTest:   name = parameter, entity = owner, relation/rhs used.
///   DerivedTest: name = predicate, entity = tested entity, negated used.
///   EventTest:   mechanic = performed mechanic, entity = performing actor.
struct ConditionAtom {
    ConditionKind kind = ConditionKind::ParamTest;
    Frame frame = Frame::Absolute;
    int offset = 0;
    std::string name;
    std::string entity;
    MechanicId mechanic = 0;
    Relation relation = Relation::Eq;
    int rhs = 0;
    bool negated = false;

    auto operator<=>(const ConditionAtom&) const = default;

    Term term() const { return {name, entity}; }

    static ConditionAtom param_test(Frame f, int offset, std::string param, std::string entity,
                                    Relation rel, int rhs) {
        ConditionAtom a;
        a.kind = ConditionKind::ParamTest;
        a.frame = f;
        a.offset = offset;
        a.name = std::move(param);
        a.entity = std::move(entity);
        a.relation = rel;
        a.rhs = rhs;
        return a;
    }
    static ConditionAtom derived_test(int offset, std::string predicate, std::string entity,
                                      bool negated = false) {
        ConditionAtom a;
        a.kind = ConditionKind::DerivedTest;
        a.offset = offset;
        a.name = std::move(predicate);
        a.entity = std::move(entity);
        a.negated = negated;
        return a;
    }
    static ConditionAtom event_test(int offset, MechanicId mechanic, std::string actor,
                                    bool negated = false) {
        ConditionAtom a;
        a.kind = ConditionKind::EventTest;
        a.offset = offset;
        a.mechanic = mechanic;
        a.entity = std::move(actor);
        a.negated = negated;
        return a;
    }
};

enum class EffectKind : std::uint8_t { ParamUpdate, EventInvoke };

/// Effect atom. Absolute updates set a value, Relative updates add a delta.
/// EventInvoke applies another mechanic (its preconditions and effects) at
/// the effect's landing tick.
struct EffectAtom {
    EffectKind kind = EffectKind::ParamUpdate;
    Frame frame = Frame::Relative;
    int offset = 1;
    std::string param;
    std::string entity;
    MechanicId mechanic = 0;
    int amount = 0;

    auto operator<=>(const EffectAtom&) const = default;

    Term term() const { return {param, entity}; }

    static EffectAtom update(Frame f, int offset, std::string param, std::string entity,
                             int amount) {
        EffectAtom e;
        e.kind = EffectKind::ParamUpdate;
        e.frame = f;
        e.offset = offset;
        e.param = std::move(param);
        e.entity = std::move(entity);
        e.amount = amount;
        return e;
    }
    static EffectAtom invoke(int offset, MechanicId mechanic) {
        EffectAtom e;
        e.kind = EffectKind::EventInvoke;
        e.frame = Frame::Absolute;
        e.offset = offset;
        e.mechanic = mechanic;
        return e;
    }
};

/// <i, P, E>. The display name is metadata and never affects semantics.
struct Mechanic {
    MechanicId id = 0;
    std::string name;
    std::vector<ConditionAtom> preconditions;
    std::vector<EffectAtom> effects;

    bool operator==(const Mechanic&) const = default;

    std::string label() const { return name.empty() ? std::to_string(id) : name; }
    std::size_t atom_count() const { return preconditions.size() + effects.size(); }
};

using MechanicSet = std::vector<Mechanic>;

/// parameter(argument) <relation> parameter(bound) + plus
struct DerivedConjunct {
    std::string param;
    Relation relation = Relation::Eq;
    int plus = 0;
    bool operator==(const DerivedConjunct&) const = default;
};

/// Named predicate over one entity, true when some member of `bound_class`
/// (other than the tested entity) satisfies every conjunct.
struct DerivedPredicate {
    std::string name;
    std::string bound_class;
    std::vector<DerivedConjunct> conjuncts;
    bool operator==(const DerivedPredicate&) const = default;
};

struct ForcedDelta {
    std::string param;
    int delta = 0;
    bool operator==(const ForcedDelta&) const = default;
};

/// Non-avatar rule. Invariants must hold in every reached state; forced
/// updates fire on every tick for each member of `for_class` whose guard
/// holds. Atoms inside a class-scoped rule may use the entity "_" to denote
/// the current class member.
struct EngineRule {
    enum class Kind : std::uint8_t { Invariant, ForcedUpdate };
    std::string name;
    Kind kind = Kind::Invariant;
    std::optional<std::string> for_class;
    std::vector<ConditionAtom> condition;  // invariant body or forced-update guard
    std::vector<ForcedDelta> updates;
    bool operator==(const EngineRule&) const = default;
};

inline constexpr const char* kClassMember = "_";

struct GameInstance {
    std::string name;
    int level = 0;
    std::map<Term, int> initials;
    bool operator==(const GameInstance&) const = default;
};

struct AgentGoals {
    std::vector<ConditionAtom> goal;
    std::vector<ConditionAtom> maintenance;
    bool operator==(const AgentGoals&) const = default;
};

enum class Ordering : std::uint8_t { None, PlayerFirst };

struct PlayabilityRequirements {
    std::string player;
    Ordering ordering = Ordering::None;
    bool noop = true;
    std::map<std::string, AgentGoals> per_agent;
    bool operator==(const PlayabilityRequirements&) const = default;
};

enum class HardKind : std::uint8_t {
    NoContradictoryEquality,
    NoDuplicateMechanics,
    CostRequired,
    NoEmptyEffects,
    MaxAtoms,
};

struct CostResource {
    std::string param;
    bool owner_is_actor = true;
    bool operator==(const CostResource&) const = default;
};

struct HardReq {
    HardKind kind = HardKind::NoEmptyEffects;
    std::vector<CostResource> resources;  // CostRequired
    int max_pre = 0;                      // MaxAtoms
    int max_eff = 0;                      // MaxAtoms
    bool operator==(const HardReq&) const = default;
};

enum class SoftTerm : std::uint8_t {
    AtomCount,
    MechanicCount,
    DistinctEntitiesReferenced,
    AdaptationEditDistance,
    ControlIntuitiveness,
};

struct SoftReq {
    SoftTerm term = SoftTerm::AtomCount;
    int weight = 1;
    int priority = 0;
    bool operator==(const SoftReq&) const = default;
};

struct ProgressionReqs {
    bool increasing_usage = false;
    bool reuse_in_subsequent = false;
    bool operator==(const ProgressionReqs&) const = default;
};

struct ControlReqs {
    std::vector<std::string> inputs;  // empty: use the domain's inputs
    bool require_input = true;
    bool unambiguous = true;
    int intuitiveness_priority = 0;
    int intuitiveness_weight = 1;
    bool operator==(const ControlReqs&) const = default;
};

struct AdaptationReqs {
    int weight = 1;
    int priority = 100;
    bool operator==(const AdaptationReqs&) const = default;
};

struct DesignRequirements {
    std::vector<HardReq> hard;
    std::optional<std::vector<SoftReq>> soft;  // absent: default layout
    std::optional<AdaptationReqs> adaptation;
    std::optional<ProgressionReqs> progression;
    std::optional<ControlReqs> controls;
    bool operator==(const DesignRequirements&) const = default;
};

/// Soft layout used when a domain declares none: fewest mechanics, then
/// fewest atoms, then fewest distinct entities.
inline std::vector<SoftReq> default_soft_layout() {
    return {{SoftTerm::MechanicCount, 1, 3},
            {SoftTerm::AtomCount, 1, 2},
            {SoftTerm::DistinctEntitiesReferenced, 1, 1}};
}

/// Limits of the bounded candidate space and of the searches over it.
struct GeneratorBounds {
    int max_mechanics = 2;
    int max_pre = 1;
    int max_eff = 2;
    int pre_window = 0;  // precondition offsets in [-pre_window, 0]
    int eff_window = 1;  // effect offsets in [1, eff_window]
    std::vector<int> constants{-1, 0, 1};
    int horizon = 8;
    int trace_cap = 16;
    int invoke_depth = 4;
    std::vector<Relation> relations{Relation::Eq, Relation::Neq, Relation::Lt, Relation::Gt};
    std::vector<Frame> test_frames{Frame::Absolute, Frame::Relative};
    std::vector<Frame> effect_frames{Frame::Absolute, Frame::Relative};
    std::optional<std::vector<Term>> test_targets;    // absent: every has-pair
    std::optional<std::vector<Term>> effect_targets;  // absent: every has-pair
    bool derived_tests = true;
    bool event_atoms = true;
    long vocab_cap = 20000;
    long node_cap = 2000000;
    long candidate_cap = 100000;
    long time_limit_ms = 60000;
    bool operator==(const GeneratorBounds&) const = default;
};

struct DomainSpec {
    std::vector<std::string> entities;
    std::map<std::string, std::vector<std::string>> classes;
    std::vector<std::string> parameters;
    std::vector<Term> has;
    std::map<Term, Range> abs_ranges;
    std::map<Term, Range> rel_ranges;
    std::vector<DerivedPredicate> derived;
    std::vector<EngineRule> engine_rules;
    std::vector<std::string> agents;
    std::vector<std::string> inputs;
    std::vector<GameInstance> instances;
    PlayabilityRequirements playability;
    DesignRequirements design;
    GeneratorBounds bounds;

    bool operator==(const DomainSpec&) const = default;

    bool owns(const Term& t) const {
        for (const auto& h : has)
            if (h == t) return true;
        return false;
    }
    bool owns(const std::string& entity, const std::string& param) const {
        return owns(Term{param, entity});
    }
    const GameInstance* instance(const std::string& name) const {
        for (const auto& i : instances)
            if (i.name == name) return &i;
        return nullptr;
    }
    const DerivedPredicate* predicate(const std::string& name) const {
        for (const auto& d : derived)
            if (d.name == name) return &d;
        return nullptr;
    }
    std::vector<SoftReq> soft_layout() const {
        return design.soft ? *design.soft : default_soft_layout();
    }
    /// Effective relative range: declared, or symmetric span of the absolute range.
    std::optional<Range> rel_range(const Term& t) const {
        if (auto it = rel_ranges.find(t); it != rel_ranges.end()) return it->second;
        if (auto it = abs_ranges.find(t); it != abs_ranges.end()) {
            int span = it->second.hi - it->second.lo;
            return Range{-span, span};
        }
        return std::nullopt;
    }
};

inline bool compare(int lhs, Relation rel, int rhs) noexcept {
    switch (rel) {
        case Relation::Eq: return lhs == rhs;
        case Relation::Neq: return lhs != rhs;
        case Relation::Lt: return lhs < rhs;
        case Relation::Gt: return lhs > rhs;
    }
    return false;
}

}  // namespace mechgen
