#include "support.hpp"

using namespace mechgen;

namespace {

Term T(const std::string& p, const std::string& e) { return {p, e}; }

// Two agents A and B, each owning V in [0, 5]; A starts at 2, B at 0.
json counter_domain(json rules = json::array(), bool two_agents = false) {
    json d = {
        {"entities", {"A", "B"}},
        {"parameters", {"V"}},
        {"has", json::array({json::array({"A", "V"}), json::array({"B", "V"})})},
        {"abs_ranges", {{{"param", "V"}, {"entity", "A"}, {"range", {0, 5}}},
                        {{"param", "V"}, {"entity", "B"}, {"range", {0, 5}}}}},
        {"classes", {{"All", {"A", "B"}}}},
        {"agents", two_agents ? json{"A", "B"} : json{"A"}},
        {"engine_rules", rules},
        {"instances", {{{"name", "start"},
                        {"initial", {{{"param", "V"}, {"entity", "A"}, {"value", 2}},
                                     {{"param", "V"}, {"entity", "B"}, {"value", 0}}}}}}},
        {"playability", {{"player", "A"}}},
    };
    return d;
}

json pt(const std::string& frame, int offset, const std::string& e, const std::string& rel, int rhs) {
    return {{"kind", "param_test"}, {"frame", frame}, {"offset", offset}, {"param", "V"},
            {"entity", e},          {"rel", rel},     {"rhs", rhs}};
}
json upd(const std::string& frame, int offset, const std::string& e, int amount) {
    return {{"kind", "param_update"}, {"frame", frame}, {"offset", offset}, {"param", "V"}, {"entity", e}, {"amount", amount}};
}

Session make(const json& domain, const json& mechanics) {
    DomainSpec d = domain_from_json(domain);
    return initial_state(d, mechanics_from_json(mechanics), d.instances.front());
}

int A(const Session& s) { return s.domain().entity("A"); }

}  // namespace

TEST(Engine, DamageOverTimeLandsOnTheNextTwoTicks) {
    DomainSpec d = fixtures::domain("rpg_duel");
    MechanicSet ms = fixtures::mechanics("rpg_duel");
    Session s = initial_state(d, ms, *d.instance("duel"));
    int player = s.domain().entity("Player");
    ASSERT_EQ(s.step(player, 1), StepStatus::Ok);
    EXPECT_EQ(s.value(T("Health", "Enemy"), 1), 1);
    ASSERT_EQ(s.step(player, kNoOp), StepStatus::Ok);
    EXPECT_EQ(s.value(T("Health", "Enemy"), 2), 0);
    EXPECT_EQ(s.value(T("Mana", "Player")), 5);
    EXPECT_EQ(s.step(player, 1), StepStatus::PreconditionFailed);
    EXPECT_EQ(s.time(), 2);
}

TEST(Engine, DamageOverTimeCastTwiceOverlaps) {
    DomainSpec d = fixtures::domain("rpg_duel");
    Session s = initial_state(d, fixtures::mechanics("rpg_duel"), *d.instance("duel"));
    int player = s.domain().entity("Player");
    ASSERT_EQ(s.step(player, 1), StepStatus::Ok);
    ASSERT_EQ(s.step(player, 1), StepStatus::Ok);  // health 1 > 0 still
    // tick 2 receives the second hit of cast 1 and the first hit of cast 2
    EXPECT_EQ(s.value(T("Health", "Enemy"), 2), 0);
    ASSERT_EQ(s.step(player, kNoOp), StepStatus::Ok);
    EXPECT_EQ(s.value(T("Health", "Enemy"), 3), 0);  // clamped at the range floor
}

TEST(Engine, DamageAllStateDelta) {
    DomainSpec d = fixtures::domain("rpg");
    Session s = initial_state(d, fixtures::mechanics("rpg_damage_all"), *d.instance("battle"));
    int player = s.domain().entity("Player");
    SimState before = s.state();
    ASSERT_EQ(s.step(player, 1), StepStatus::Ok);
    SimState after = s.state();
    for (const auto& [term, v] : before.values) {
        int delta = after.values.at(term) - v;
        if (term == T("Health", "Enemy1") || term == T("Health", "Enemy2")) EXPECT_EQ(delta, -1);
        else if (term == T("Mana", "Player")) EXPECT_EQ(delta, -2);
        else EXPECT_EQ(delta, 0) << term.param << "(" << term.entity << ")";
    }
    EXPECT_FALSE(s.goal_holds(player, 1));
    ASSERT_EQ(s.step(player, 1), StepStatus::Ok);
    EXPECT_TRUE(s.goal_holds(player, 2));
    EXPECT_EQ(s.value(T("Mana", "Player")), 1);
    // a third cast would take mana to -1 before clamping
    EXPECT_EQ(s.step(player, 1), StepStatus::InvariantViolated);
    EXPECT_EQ(s.time(), 2);
}

TEST(Engine, MagicMissileNeedsEnemyTwoAheadOnSameRow) {
    json dom = {
        {"entities", {"Player", "Enemy"}},
        {"parameters", {"Xpos", "Ypos", "Health"}},
        {"has", json::array({json::array({"Player", "Xpos"}), json::array({"Player", "Ypos"}), json::array({"Enemy", "Xpos"}),
                             json::array({"Enemy", "Ypos"}), json::array({"Enemy", "Health"})})},
        {"abs_ranges", {{{"param", "Health"}, {"entity", "Enemy"}, {"range", {0, 3}}}}},
        {"agents", {"Player"}},
        {"instances",
         {{{"name", "near"},
           {"initial", {{{"param", "Xpos"}, {"entity", "Player"}, {"value", 1}},
                        {{"param", "Ypos"}, {"entity", "Player"}, {"value", 4}},
                        {{"param", "Xpos"}, {"entity", "Enemy"}, {"value", 3}},
                        {{"param", "Ypos"}, {"entity", "Enemy"}, {"value", 4}},
                        {{"param", "Health"}, {"entity", "Enemy"}, {"value", 3}}}}},
          {{"name", "far"},
           {"initial", {{{"param", "Xpos"}, {"entity", "Player"}, {"value", 0}},
                        {{"param", "Ypos"}, {"entity", "Player"}, {"value", 4}},
                        {{"param", "Xpos"}, {"entity", "Enemy"}, {"value", 3}},
                        {{"param", "Ypos"}, {"entity", "Enemy"}, {"value", 4}},
                        {{"param", "Health"}, {"entity", "Enemy"}, {"value", 3}}}}}}},
    };
    json mm = json::array({{{"id", 1},
                            {"name", "MagicMissile"},
                            {"preconditions",
                             {{{"kind", "param_test"}, {"frame", "relative"}, {"offset", 0}, {"param", "Xpos"},
                               {"entity", "Enemy"}, {"rel", "eq"}, {"rhs", 2}},
                              {{"kind", "param_test"}, {"frame", "relative"}, {"offset", 0}, {"param", "Ypos"},
                               {"entity", "Enemy"}, {"rel", "eq"}, {"rhs", 0}}}},
                            {"effects",
                             {{{"kind", "param_update"}, {"frame", "relative"}, {"offset", 0}, {"param", "Health"},
                               {"entity", "Enemy"}, {"amount", -1}}}}}});
    std::vector<std::string> warnings;
    MechanicSet ms = mechanics_from_json(mm, &warnings);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_EQ(ms[0].effects[0].offset, 1);
    DomainSpec d = domain_from_json(dom);
    ASSERT_TRUE(validate_mechanics(d, ms).ok());

    Session near = initial_state(d, ms, *d.instance("near"));
    int player = near.domain().entity("Player");
    ASSERT_EQ(near.step(player, 1), StepStatus::Ok);
    EXPECT_EQ(near.value(T("Health", "Enemy"), 1), 2);

    Session far = initial_state(d, ms, *d.instance("far"));
    EXPECT_EQ(far.step(player, 1), StepStatus::PreconditionFailed);
}

TEST(Engine, JumpAndDoubleJumpUnderGravity) {
    DomainSpec d = fixtures::domain("platformer");
    Session s = initial_state(d, fixtures::mechanics("platformer"), *d.instance("gap_ledge"));
    int player = s.domain().entity("Player");
    EXPECT_EQ(s.step(player, 3), StepStatus::PreconditionFailed);  // no jump on the previous tick
    ASSERT_EQ(s.step(player, 2), StepStatus::Ok);
    // jumps to (1, 2) over the gap and gravity pulls it down one unit
    EXPECT_EQ(s.value(T("Xpos", "Player")), 1);
    EXPECT_EQ(s.value(T("Ypos", "Player")), 1);
    EXPECT_EQ(s.step(player, 3), StepStatus::PreconditionFailed);  // nothing below mid-gap
    ASSERT_EQ(s.step(player, 1), StepStatus::Ok);
    ASSERT_EQ(s.step(player, 2), StepStatus::Ok);
    EXPECT_EQ(s.value(T("Xpos", "Player")), 3);
    EXPECT_EQ(s.value(T("Ypos", "Player")), 1);
    ASSERT_EQ(s.step(player, 3), StepStatus::Ok);
    // onto the top of the height-2 ledge
    EXPECT_EQ(s.value(T("Xpos", "Player")), 4);
    EXPECT_EQ(s.value(T("Ypos", "Player")), 3);
    EXPECT_EQ(s.step(player, 3), StepStatus::PreconditionFailed);  // previous action was DoubleJump
}

TEST(Engine, PlatformerWitnessReplays) {
    DomainSpec d = fixtures::domain("platformer");
    MechanicSet ms = fixtures::mechanics("platformer");
    Trace t;
    t.instance = "gap_ledge";
    int tick = 0;
    for (MechanicId a : {2, 1, 2, 3, 1}) t.steps.push_back({tick++, "Player", a});
    auto rep = verify_trace(d, ms, *d.instance("gap_ledge"), t);
    EXPECT_TRUE(rep.playable()) << to_json(rep, ms).dump(1);
    EXPECT_EQ(rep.player_goal_tick, 5);
}

TEST(Engine, InertiaKeepsUntouchedValues) {
    Session s = make(counter_domain(), json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 1)}}}}));
    ASSERT_EQ(s.step(A(s), kNoOp), StepStatus::Ok);
    EXPECT_EQ(s.state(1).values, s.state(0).values);
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 3);
    EXPECT_EQ(s.value(T("V", "B")), 0);
}

TEST(Engine, RelativeDeltasSumAndAbsoluteWins) {
    Session s = make(counter_domain(), json::array({
                                           {{"id", 1}, {"effects", {upd("relative", 1, "A", 1), upd("relative", 2, "A", 1)}}},
                                           {{"id", 2}, {"effects", {upd("absolute", 1, "A", 4), upd("relative", 1, "A", -1)}}},
                                       }));
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);  // 2 -> 3
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);  // +1 (second of cast 1) +1 (first of cast 2)
    EXPECT_EQ(s.value(T("V", "A")), 5);
    ASSERT_EQ(s.step(A(s), 2), StepStatus::Ok);  // +1 pending, -1, then set 4
    EXPECT_EQ(s.value(T("V", "A")), 4);
    EXPECT_TRUE(s.warnings().empty());
}

TEST(Engine, ConflictingAbsoluteSetsWarnAndLastWins) {
    Session s = make(counter_domain(), json::array({{{"id", 1}, {"effects", {upd("absolute", 1, "A", 1), upd("absolute", 1, "A", 3)}}}}));
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 3);
    EXPECT_EQ(s.warnings().size(), 1u);
}

TEST(Engine, ValuesClampToRange) {
    Session s = make(counter_domain(), json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 5)}}},
                                                    {{"id", 2}, {"effects", {upd("relative", 1, "A", -5)}}}}));
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 5);
    ASSERT_EQ(s.step(A(s), 2), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 0);
}

TEST(Engine, InvariantViolationRollsBack) {
    json rules = json::array({{{"name", "Cap"}, {"kind", "invariant"}, {"condition", {pt("absolute", 0, "A", "lt", 4)}}}});
    Session s = make(counter_domain(rules), json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 1)}}}}));
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);  // 3
    auto events = s.events().size();
    auto pending = s.pending().size();
    auto history = s.history();
    EXPECT_EQ(s.step(A(s), 1), StepStatus::InvariantViolated);
    EXPECT_EQ(s.time(), 1);
    EXPECT_EQ(s.events().size(), events);
    EXPECT_EQ(s.pending().size(), pending);
    EXPECT_EQ(s.history(), history);
    EXPECT_THROW(execute_tick(s, "A", 1), IllegalAction);
    EXPECT_EQ(applicable_mechanics(s, "A"), (std::vector<MechanicId>{kNoOp}));
}

TEST(Engine, InvariantSeesUnclampedValues) {
    json rules = json::array({{{"name", "Floor"}, {"kind", "invariant"}, {"condition", {pt("absolute", 0, "A", "gt", -1)}}}});
    Session s = make(counter_domain(rules), json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", -3)}}}}));
    EXPECT_EQ(s.step(A(s), 1), StepStatus::InvariantViolated);
}

TEST(Engine, ForcedUpdatesUseTheClassMemberAsActor) {
    // every member with V > 0 loses one per tick
    json rules = json::array({{{"name", "Decay"},
                               {"kind", "forced_update"},
                               {"for_class", "All"},
                               {"guard", {pt("absolute", 0, "_", "gt", 0)}},
                               {"updates", {{{"param", "V"}, {"delta", -1}}}}}});
    Session s = make(counter_domain(rules), json::array({{{"id", 1}, {"effects", {upd("relative", 1, "B", 2)}}}}));
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 1);
    EXPECT_EQ(s.value(T("V", "B")), 1);
    ASSERT_EQ(s.step(A(s), kNoOp), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 0);
    EXPECT_EQ(s.value(T("V", "B")), 0);
    ASSERT_EQ(s.step(A(s), kNoOp), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 0);
}

TEST(Engine, EventInvokeChecksPreconditionsAtLanding) {
    json ms = json::array({
        {{"id", 1}, {"name", "Bump"}, {"preconditions", {pt("absolute", 0, "A", "lt", 4)}}, {"effects", {upd("relative", 1, "A", 1)}}},
        {{"id", 2}, {"name", "Trigger"}, {"effects", {{{"kind", "event_invoke"}, {"offset", 1}, {"mechanic", 1}}}}},
    });
    Session s = make(counter_domain(), ms);
    ASSERT_EQ(s.step(A(s), 2), StepStatus::Ok);
    ASSERT_EQ(s.events().size(), 2u);
    EXPECT_EQ(s.events()[1].tick, 1);
    EXPECT_EQ(s.events()[1].mechanic, 1);
    EXPECT_TRUE(s.events()[1].invoked);
    EXPECT_EQ(s.value(T("V", "A")), 2);
    ASSERT_EQ(s.step(A(s), kNoOp), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 3);

    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);  // 4
    ASSERT_EQ(s.step(A(s), 2), StepStatus::Ok);  // invoke lands at 4, Bump's precondition fails there
    ASSERT_EQ(s.step(A(s), kNoOp), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 4);
    int invoked = 0;
    for (const auto& e : s.events()) invoked += e.invoked;
    EXPECT_EQ(invoked, 1);
}

TEST(Engine, InvokeDepthLimitMakesTickIllegal) {
    json ms = json::array({
        {{"id", 1}, {"effects", {{{"kind", "event_invoke"}, {"offset", 1}, {"mechanic", 2}}}}},
        {{"id", 2}, {"effects", {{{"kind", "event_invoke"}, {"offset", 1}, {"mechanic", 1}}}}},
    });
    json dom = counter_domain();
    dom["bounds"] = {{"invoke_depth", 2}};
    Session s = make(dom, ms);
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);      // invokes 2 at depth 1
    ASSERT_EQ(s.step(A(s), kNoOp), StepStatus::Ok);  // 2 invokes 1 at depth 2
    EXPECT_EQ(s.step(A(s), kNoOp), StepStatus::InvokeDepthExceeded);  // depth 3
    EXPECT_EQ(s.time(), 2);
}

TEST(Engine, EventTestsBeforeTheGameStartAreFalse) {
    json ms = json::array({
        {{"id", 1},
         {"preconditions", {{{"kind", "event_test"}, {"offset", -1}, {"mechanic", 1}, {"actor", "A"}, {"negated", true}}}},
         {"effects", {upd("relative", 1, "A", 1)}}},
    });
    Session s = make(counter_domain(), ms);
    EXPECT_EQ(s.step(A(s), 1), StepStatus::PreconditionFailed);
    ASSERT_EQ(s.step(A(s), kNoOp), StepStatus::Ok);
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);
    EXPECT_EQ(s.step(A(s), 1), StepStatus::PreconditionFailed);  // performed on the previous tick
}

TEST(Engine, PastOffsetsReadHistory) {
    json ms = json::array({
        {{"id", 1}, {"preconditions", {pt("absolute", -1, "A", "eq", 2)}}, {"effects", {upd("relative", 1, "B", 1)}}},
        {{"id", 2}, {"effects", {upd("relative", 1, "A", 1)}}},
    });
    Session s = make(counter_domain(), ms);
    EXPECT_EQ(s.step(A(s), 1), StepStatus::PreconditionFailed);  // tick -1 does not exist
    ASSERT_EQ(s.step(A(s), 2), StepStatus::Ok);
    ASSERT_EQ(s.step(A(s), 1), StepStatus::Ok);  // V(A) was 2 at tick 0
    EXPECT_EQ(s.step(A(s), 1), StepStatus::PreconditionFailed);
}

TEST(Engine, RelativeFrameUsesTheActor) {
    Session s = make(counter_domain(), json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 1)}}}}));
    auto below = ConditionAtom::param_test(Frame::Relative, 0, "V", "B", Relation::Eq, -2);
    EXPECT_TRUE(evaluate_atom(s, "A", below, 0));
    EXPECT_FALSE(evaluate_atom(s, "B", below, 0));
    EXPECT_TRUE(evaluate_atom(s, "B", ConditionAtom::param_test(Frame::Relative, 0, "V", "B", Relation::Eq, 0), 0));
    EXPECT_THROW(evaluate_atom(s, "A", below, 1), EvaluationError);
    EXPECT_THROW(evaluate_atom(s, "Nobody", below, 0), EvaluationError);
}

TEST(Engine, RelativeTestOnAnActorWithoutTheParamIsAnError) {
    json dom = counter_domain();
    dom["entities"].push_back("C");
    json ms = json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 1)}}}});
    DomainSpec d = domain_from_json(dom);
    Session s = initial_state(d, mechanics_from_json(ms), d.instances.front());
    auto rel = ConditionAtom::param_test(Frame::Relative, 0, "V", "B", Relation::Eq, 0);
    EXPECT_THROW(evaluate_atom(s, "C", rel, 0), EvaluationError);
}

TEST(Engine, AgentsAlternate) {
    json ms = json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 1)}}}});
    Session s = make(counter_domain(json::array(), true), ms);
    int a = s.domain().entity("A"), b = s.domain().entity("B");
    EXPECT_EQ(s.agent_to_act(), a);
    EXPECT_EQ(s.step(b, 1), StepStatus::OutOfTurn);
    ASSERT_EQ(s.step(a, 1), StepStatus::Ok);
    EXPECT_EQ(s.agent_to_act(), b);
    EXPECT_TRUE(applicable_mechanics(s, "A").empty());
    ASSERT_EQ(s.step(b, 1), StepStatus::Ok);
    EXPECT_EQ(s.value(T("V", "A")), 4);
    EXPECT_EQ(s.events()[1].agent, b);
}

TEST(Engine, NoOpCanBeDisabled) {
    json dom = counter_domain();
    dom["playability"]["noop"] = false;
    Session s = make(dom, json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 1)}}}}));
    EXPECT_EQ(s.step(A(s), kNoOp), StepStatus::NoOpDisabled);
    EXPECT_EQ(s.step(A(s), 9), StepStatus::UnknownMechanic);
}

TEST(Engine, ExecuteTickIsPure) {
    Session s = make(counter_domain(), json::array({{{"id", 1}, {"effects", {upd("relative", 1, "A", 1)}}}}));
    Session next = execute_tick(s, "A", 1);
    EXPECT_EQ(s.time(), 0);
    EXPECT_EQ(next.time(), 1);
    EXPECT_EQ(next.value(T("V", "A")), 3);
}

TEST(Engine, MissingInitialValueThrows) {
    json dom = counter_domain();
    dom["instances"][0]["initial"].erase(1);
    DomainSpec d = domain_from_json(dom);
    EXPECT_THROW(initial_state(d, {}, d.instances.front()), Error);
}

TEST(Trace, JsonRoundTripAndVerification) {
    DomainSpec d = fixtures::domain("rpg");
    MechanicSet ms = fixtures::mechanics("rpg_damage_all");
    Trace t{"battle", {{0, "Player", 1}, {1, "Player", 1}}, 2, {{"Player", 2}}};
    json j = to_json(t, ms);
    EXPECT_EQ(j["steps"][0]["action"], "DamageAll");
    EXPECT_EQ(trace_from_json(j, ms), t);
    auto rep = verify_trace(d, ms, *d.instance("battle"), t);
    EXPECT_TRUE(rep.playable());
    EXPECT_EQ(rep.player_goal_tick, 2);

    Trace bad = t;
    bad.steps.push_back({2, "Player", 1});
    auto rep2 = verify_trace(d, ms, *d.instance("battle"), bad);
    EXPECT_FALSE(rep2.legal);
    EXPECT_EQ(rep2.ticks.back().reason, "invariant_violated");

    Trace skew = t;
    skew.steps[1].tick = 5;
    EXPECT_FALSE(verify_trace(d, ms, *d.instance("battle"), skew).legal);
}
