#include "oracles.hpp"
#include "support.hpp"

using namespace mechgen;

namespace {

std::vector<MechanicId> actions_of(const Trace& t) {
    std::vector<MechanicId> out;
    for (const auto& s : t.steps) out.push_back(s.action);
    return out;
}

}  // namespace

TEST(Planner, DamageAllNeedsTwoCasts) {
    DomainSpec d = fixtures::domain("rpg");
    MechanicSet ms = fixtures::mechanics("rpg_damage_all");
    PlanResult r = plan(d, ms, *d.instance("battle"));
    ASSERT_EQ(r.status, PlanStatus::Found);
    EXPECT_EQ(actions_of(*r.trace), (std::vector<MechanicId>{1, 1}));
    EXPECT_EQ(r.trace->goal_ticks.at("Player"), 2);
    EXPECT_TRUE(verify_trace(d, ms, *d.instance("battle"), *r.trace).playable());
}

TEST(Planner, NoMechanicsMeansNoPlan) {
    DomainSpec d = fixtures::domain("rpg");
    PlanResult r = plan(d, {}, *d.instance("battle"));
    EXPECT_EQ(r.status, PlanStatus::NoPlan);
    EXPECT_FALSE(r.trace);
}

TEST(Planner, NodeCapReportsResourceLimit) {
    DomainSpec d = fixtures::domain("platformer");
    MechanicSet ms = fixtures::mechanics("platformer");
    PlanOptions opt = PlanOptions::from(d.bounds);
    opt.node_cap = 5;
    EXPECT_EQ(plan(initial_state(d, ms, *d.instance("gap_ledge")), opt).status, PlanStatus::ResourceLimit);
}

TEST(Planner, PlatformerNeedsTheDoubleJump) {
    DomainSpec d = fixtures::domain("platformer");
    MechanicSet ms = fixtures::mechanics("platformer");
    PlanResult r = plan(d, ms, *d.instance("gap_ledge"));
    ASSERT_EQ(r.status, PlanStatus::Found);
    EXPECT_EQ(r.trace->steps.size(), 5u);
    EXPECT_TRUE(r.trace->used_mechanics().count(3));
    EXPECT_TRUE(verify_trace(d, ms, *d.instance("gap_ledge"), *r.trace).playable());

    MechanicSet without = ms;
    without.pop_back();
    EXPECT_EQ(plan(d, without, *d.instance("gap_ledge")).status, PlanStatus::NoPlan);
}

TEST(Planner, HorizonBoundsTheSearch) {
    DomainSpec d = fixtures::domain("rpg");
    MechanicSet ms = fixtures::mechanics("rpg_damage_all");
    PlanOptions opt = PlanOptions::from(d.bounds);
    opt.horizon = 1;
    EXPECT_EQ(plan(initial_state(d, ms, *d.instance("battle")), opt).status, PlanStatus::NoPlan);
}

TEST(Planner, AgreesWithExhaustiveEnumeration) {
    int found = 0;
    for (std::uint32_t seed = 1; seed <= 300; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        auto c = oracle::random_micro_case(seed);
        const int h = c.spec.bounds.horizon;
        auto witnesses = oracle::all_witnesses(c.spec, c.mechanics, h);
        for (bool tt : {true, false}) {
            PlanOptions opt{h, 1000000, tt};
            PlanResult r = plan(initial_state(c.spec, c.mechanics, c.spec.instances.front()), opt);
            if (witnesses.empty()) {
                EXPECT_EQ(r.status, PlanStatus::NoPlan);
                continue;
            }
            ASSERT_EQ(r.status, PlanStatus::Found);
            // shortest, and the first one in action order
            EXPECT_EQ(actions_of(*r.trace), witnesses.front().actions);
            auto rep = verify_trace(c.spec, c.mechanics, c.spec.instances.front(), *r.trace);
            EXPECT_TRUE(rep.legal);
            EXPECT_EQ(rep.player_goal_tick, static_cast<int>(r.trace->steps.size()));
        }
        found += !witnesses.empty();
    }
    // the generator should produce a healthy mix of solvable and unsolvable cases
    EXPECT_GT(found, 60);
    EXPECT_LT(found, 290);
}

TEST(Planner, TraceEnumerationMatchesExhaustiveEnumeration) {
    for (std::uint32_t seed = 1000; seed < 1200; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        auto c = oracle::random_micro_case(seed);
        const int h = c.spec.bounds.horizon;
        auto expected = oracle::all_witnesses(c.spec, c.mechanics, h);
        TraceSet got = enumerate_traces(initial_state(c.spec, c.mechanics, c.spec.instances.front()), h, 100000);
        ASSERT_EQ(got.traces.size(), expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(actions_of(got.traces[i]), expected[i].actions);
        EXPECT_FALSE(got.truncated);

        if (expected.size() > 2) {
            TraceSet capped = enumerate_traces(initial_state(c.spec, c.mechanics, c.spec.instances.front()), h, 2);
            EXPECT_TRUE(capped.truncated);
            ASSERT_EQ(capped.traces.size(), 2u);
            EXPECT_EQ(actions_of(capped.traces[1]), expected[1].actions);
        }
    }
}

TEST(Planner, PlayerFirstPrunesOpponentWins) {
    auto goal = [](const std::string& e, int v) {
        return json{{"goal", {{{"kind", "param_test"}, {"frame", "absolute"}, {"param", "V"}, {"entity", e}, {"rel", "eq"}, {"rhs", v}}}}};
    };
    auto raise = [](const std::string& e) {
        return json{{"kind", "param_update"}, {"frame", "relative"}, {"param", "V"}, {"entity", e}, {"amount", 1}};
    };
    json dom = {
        {"entities", {"P", "O"}},
        {"parameters", {"V"}},
        {"has", json::array({json::array({"P", "V"}), json::array({"O", "V"})})},
        {"abs_ranges", {{{"param", "V"}, {"entity", "P"}, {"range", {0, 3}}}, {{"param", "V"}, {"entity", "O"}, {"range", {0, 3}}}}},
        {"agents", {"P", "O"}},
        {"instances", {{{"name", "race"},
                        {"initial", {{{"param", "V"}, {"entity", "P"}, {"value", 0}}, {{"param", "V"}, {"entity", "O"}, {"value", 0}}}}}}},
        {"playability", {{"player", "P"}, {"ordering", "player_first"}, {"agents", {{"P", goal("P", 2)}, {"O", goal("O", 1)}}}}},
        {"bounds", {{"horizon", 6}}},
    };
    json ms = json::array({
        {{"id", 1}, {"name", "Both"}, {"effects", {raise("P"), raise("O")}}},
        {{"id", 2}, {"name", "Mine"}, {"effects", {raise("P")}}},
    });
    DomainSpec d = domain_from_json(dom);
    MechanicSet mset = mechanics_from_json(ms);

    // Both at tick 0 lets the opponent's goal hold at tick 1, before the player's
    PlanResult r = plan(d, mset, d.instances.front());
    ASSERT_EQ(r.status, PlanStatus::Found);
    EXPECT_EQ(actions_of(*r.trace), (std::vector<MechanicId>{2, 1}));
    EXPECT_TRUE(verify_trace(d, mset, d.instances.front(), *r.trace).playable());
    Trace early{"race", {{0, "P", 1}, {1, "O", 1}}, 2, {}};
    auto rep = verify_trace(d, mset, d.instances.front(), early);
    EXPECT_FALSE(rep.ordering_respected);
    EXPECT_FALSE(rep.playable());

    d.playability.ordering = Ordering::None;
    PlanResult free = plan(d, mset, d.instances.front());
    ASSERT_EQ(free.status, PlanStatus::Found);
    EXPECT_EQ(actions_of(*free.trace), (std::vector<MechanicId>{1, 1}));
}

TEST(Planner, PlayabilityCoversEveryInstance) {
    DomainSpec d = fixtures::domain("platformer_progression");
    MechanicSet ms = fixtures::mechanics("progression");
    auto rep = check_playability(d, ms);
    EXPECT_TRUE(rep.playable) << to_json(rep, ms).dump(1);
    ASSERT_EQ(rep.instances.size(), d.instances.size());
    MechanicSet move_only(ms.begin(), ms.begin() + 1);
    auto rep2 = check_playability(d, move_only);
    EXPECT_FALSE(rep2.playable);
    EXPECT_EQ(rep2.instances[0].status, PlanStatus::Found);
    auto rep3 = check_playability(d, move_only, PlanOptions::from(d.bounds), true);
    EXPECT_EQ(rep3.instances.size(), 2u);
}
