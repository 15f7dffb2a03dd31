#include <doctest.h>

#include <memory>
#include <set>
#include <vector>

#include "renaming/netsim.hpp"
#include "renaming/opbr.hpp"
#include "renaming/rng.hpp"

using namespace renaming;

namespace {

std::vector<ProcessHandle> opbr_handles(const SystemParams& p, OpbrVariant v,
                                        const std::vector<std::int64_t>& ids) {
    std::vector<ProcessHandle> handles;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ProcessHandle h;
        h.index = static_cast<int>(i) + 1;
        h.protocol = std::make_unique<OpbrProcess>(ProcId{ids[i]}, p, v);
        handles.push_back(std::move(h));
    }
    return handles;
}

RanksMap single(ProcId id, Rational v) { return RanksMap{{id, std::move(v)}}; }

}  // namespace

TEST_CASE("round budget per variant") {
    CHECK(approximation_steps({4, 1, 1000}, OpbrVariant::Log) == 3);
    CHECK(approximation_steps({7, 2, 1000}, OpbrVariant::Log) == 6);
    CHECK(approximation_steps({10, 3, 1000}, OpbrVariant::Log) == 9);
    CHECK(approximation_steps({13, 4, 1000}, OpbrVariant::Log) == 9);
    CHECK(approximation_steps({4, 0, 1000}, OpbrVariant::Log) == 3);
    CHECK(approximation_steps({9, 2, 1000}, OpbrVariant::Const) == 4);
    CHECK(approximation_steps({16, 3, 1000}, OpbrVariant::Const) == 4);

    CHECK(opbr_total_rounds({4, 1, 1000}, OpbrVariant::Log) == 7);
    CHECK(opbr_total_rounds({13, 4, 1000}, OpbrVariant::Log) == 13);
    CHECK(opbr_total_rounds({9, 2, 1000}, OpbrVariant::Const) == 8);

    CHECK_THROWS_AS(approximation_steps({8, 2, 1000}, OpbrVariant::Const), ConfigError);
}

TEST_CASE("is_valid checks timely coverage and delta gaps") {
    Rational d(16, 15);
    std::set<ProcId> timely{{5}, {9}};
    CHECK(is_valid(timely, {{{5}, Rational(16, 15)}, {{9}, Rational(32, 15)}}, d));
    CHECK_FALSE(is_valid(timely, {{{5}, Rational(16, 15)}}, d));
    CHECK_FALSE(is_valid(timely, {{{5}, Rational(2)}, {{9}, Rational(3)}}, d));

    SUBCASE("ids outside timely are not inspected") {
        CHECK(is_valid({{5}}, {{{5}, Rational(1)}, {{7}, Rational(0)}}, d));
    }
    SUBCASE("empty ranks map fails unless timely is empty") {
        CHECK_FALSE(is_valid(timely, {}, d));
        CHECK(is_valid({}, {}, d));
    }
}

TEST_CASE("select_t picks the smallest and every t-th element after it") {
    Multiset s(std::vector<Rational>{1, 2, 3, 4, 5});
    Multiset sel = select_every_tth(s, 2);
    REQUIRE(sel.size() == 3);
    CHECK(sel.at(0) == Rational(1));
    CHECK(sel.at(1) == Rational(3));
    CHECK(sel.at(2) == Rational(5));

    Multiset two(std::vector<Rational>{10, 20});
    CHECK(select_every_tth(two, 1).size() == 2);

    Multiset one(std::vector<Rational>{7});
    CHECK(select_every_tth(one, 3).size() == 1);
    CHECK(select_every_tth(one, 3).at(0) == Rational(7));

    CHECK(select_every_tth(Multiset{}, 2).empty());

    CHECK(select_count(2, 1) == 2);
    CHECK(select_count(3, 2) == 2);
    CHECK(select_count(5, 2) == 3);
    CHECK(select_count(9, 2) == 5);
    CHECK(select_count(5, 4) == 2);
    CHECK(select_count(0, 2) == 0);
}

TEST_CASE("approximate: trim then average the selection") {
    SystemParams p{4, 1, 1000};
    ProcId id{50};
    std::set<ProcId> accepted{id};

    SUBCASE("votes 1,1,2,2 average to 3/2") {
        std::vector<RanksMap> votes{single(id, Rational(1)), single(id, Rational(1)),
                                    single(id, Rational(2)), single(id, Rational(2))};
        ApproxResult r = approximate(single(id, Rational(1)), accepted, votes, p);
        CHECK(r.accepted == accepted);
        CHECK(r.ranks.at(id) == Rational(3, 2));
    }
    SUBCASE("a Byzantine outlier is discarded entirely") {
        std::vector<RanksMap> votes{single(id, Rational(0)), single(id, Rational(0)),
                                    single(id, Rational(0)), single(id, Rational(4))};
        ApproxResult r = approximate(single(id, Rational(0)), accepted, votes, p);
        CHECK(r.ranks.at(id) == Rational(0));
    }
    SUBCASE("identical votes are a fixed point") {
        Rational v(47, 13);
        std::vector<RanksMap> votes(4, single(id, v));
        ApproxResult r = approximate(single(id, v), accepted, votes, p);
        CHECK(r.ranks.at(id) == v);
    }
    SUBCASE("an id with fewer than N-t votes is dropped") {
        ProcId other{60};
        std::vector<RanksMap> votes{
            {{id, Rational(1)}, {other, Rational(3)}},
            {{id, Rational(1)}, {other, Rational(3)}},
            {{id, Rational(1)}, {other, Rational(3)}},
            {{id, Rational(1)}}};
        RanksMap mine{{id, Rational(1)}, {other, Rational(3)}};
        ApproxResult r = approximate(mine, {id, other}, votes, p);
        CHECK(r.accepted.contains(other));  // 3 votes = N-t, survives
        CHECK(r.ranks.at(other) == Rational(3));
        votes.pop_back();
        votes.pop_back();
        r = approximate(mine, {id, other}, votes, p);  // now only 2 votes for other... and id
        CHECK_FALSE(r.accepted.contains(other));
    }
    SUBCASE("missing votes are padded with the caller's own value") {
        std::vector<RanksMap> votes{single(id, Rational(2)), single(id, Rational(2)),
                                    single(id, Rational(2))};
        ApproxResult r = approximate(single(id, Rational(2)), accepted, votes, p);
        CHECK(r.ranks.at(id) == Rational(2));
    }
}

// Independent oracle for the convergence lemma: two receivers share the
// N-t correct votes and get arbitrary faulty votes on top. The new values
// must stay inside the correct range and their distance must shrink by the
// implemented selection count, as exact rational inequalities.
TEST_CASE("approximate: containment and contraction against adversarial votes") {
    SplitMix64 rng(0xFEED5);
    for (int trial = 0; trial < 300; ++trial) {
        int n = static_cast<int>(rng.range(4, 13));
        int t = static_cast<int>(rng.range(1, (n - 1) / 3));
        SystemParams p{n, t, 1000};
        ProcId id{42};

        std::vector<Rational> correct;
        Rational lo, hi;
        for (int i = 0; i < n - t; ++i) {
            Rational v(rng.range(-40, 40), rng.range(1, 7));
            if (i == 0 || v < lo) lo = v;
            if (i == 0 || v > hi) hi = v;
            correct.push_back(std::move(v));
        }

        auto receiver_votes = [&](SplitMix64& r) {
            std::vector<RanksMap> votes;
            for (const Rational& v : correct) votes.push_back(single(id, v));
            for (int j = 0; j < t; ++j)
                votes.push_back(single(id, Rational(r.range(-2000, 2000), r.range(1, 9))));
            return votes;
        };
        ApproxResult rp = approximate(single(id, correct[0]), {id}, receiver_votes(rng), p);
        ApproxResult rq = approximate(single(id, correct[1]), {id}, receiver_votes(rng), p);

        const Rational& a = rp.ranks.at(id);
        const Rational& b = rq.ranks.at(id);
        CHECK(a >= lo);
        CHECK(a <= hi);
        CHECK(b >= lo);
        CHECK(b <= hi);
        Rational c_sel(select_count(n - 2 * t, t));
        CHECK((a - b).abs() * c_sel <= hi - lo);
    }
}

TEST_CASE("id selection steps on crafted inboxes") {
    SystemParams p{4, 1, 1000};
    OpbrProcess proc(ProcId{20}, p, OpbrVariant::Log);

    // Step 1: announce and collect; duplicates collapse.
    CHECK(std::get<IdAnnounce>(*proc.emit(1)).id == ProcId{20});
    proc.absorb(1, {{1, Msg(IdAnnounce{{10}})},
                    {2, Msg(IdAnnounce{{30}})},
                    {3, Msg(IdAnnounce{{99}})},
                    {4, Msg(IdAnnounce{{20}})}});
    CHECK(std::get<OpbrSnapshot>(proc.snapshot()).working_ids ==
          std::set<ProcId>{{10}, {20}, {30}, {99}});

    // Step 2: echo everything seen; keep ids echoed on at least N-t links.
    Msg echo = *proc.emit(2);
    CHECK(std::get<EchoSet>(echo).ids == std::set<ProcId>{{10}, {20}, {30}, {99}});
    Msg common = Msg(EchoSet{{{10}, {20}, {30}}});
    proc.absorb(2, {{1, common}, {2, common}, {3, Msg(EchoSet{{{99}}})}, {4, echo}});
    CHECK(std::get<OpbrSnapshot>(proc.snapshot()).working_ids ==
          std::set<ProcId>{{10}, {20}, {30}});  // 99 had a single echo link

    // Step 3: N-t readies make an id timely; N-2t readies for an id this
    // process never readied put it in the amplification set.
    Msg ready = *proc.emit(3);
    CHECK(std::get<ReadySet>(ready).ids == std::set<ProcId>{{10}, {20}, {30}});
    proc.absorb(3, {{1, Msg(ReadySet{{{10}, {20}, {30}}})},
                    {2, Msg(ReadySet{{{10}, {20}, {30}, {77}}})},
                    {3, Msg(ReadySet{{{77}}})},
                    {4, ready}});
    OpbrSnapshot s3 = std::get<OpbrSnapshot>(proc.snapshot());
    CHECK(s3.timely == std::set<ProcId>{{10}, {20}, {30}});
    CHECK(s3.working_ids == std::set<ProcId>{{77}});

    // Step 4: the amplification READY goes out; READY links accumulate
    // across both steps, each link counted once per id.
    Msg amp = *proc.emit(4);
    CHECK(std::get<ReadySet>(amp).ids == std::set<ProcId>{{77}});
    proc.absorb(4, {{1, Msg(ReadySet{{{77}}})}, {4, amp}});
    OpbrSnapshot s4 = std::get<OpbrSnapshot>(proc.snapshot());
    CHECK(s4.accepted == std::set<ProcId>{{10}, {20}, {30}, {77}});  // 77: links 2,3,1,4
    Rational d(16, 15);
    CHECK(s4.ranks.at({10}) == d);
    CHECK(s4.ranks.at({20}) == Rational(2) * d);
    CHECK(s4.ranks.at({30}) == Rational(3) * d);
    CHECK(s4.ranks.at({77}) == Rational(4) * d);
}

TEST_CASE("a faulty copy of a correct id changes nothing") {
    SystemParams p{4, 1, 1000};
    OpbrProcess proc(ProcId{20}, p, OpbrVariant::Log);
    proc.emit(1);
    proc.absorb(1, {{1, Msg(IdAnnounce{{10}})},
                    {2, Msg(IdAnnounce{{30}})},
                    {3, Msg(IdAnnounce{{10}})},  // faulty reuses a correct id
                    {4, Msg(IdAnnounce{{20}})}});
    CHECK(std::get<OpbrSnapshot>(proc.snapshot()).working_ids ==
          std::set<ProcId>{{10}, {20}, {30}});
}

TEST_CASE("a process whose own id is starved aborts the run") {
    SystemParams p{4, 1, 1000};
    OpbrProcess proc(ProcId{20}, p, OpbrVariant::Log);
    proc.absorb(1, {{1, Msg(IdAnnounce{{10}})}});
    Msg echo = Msg(EchoSet{{{10}}});
    proc.absorb(2, {{1, echo}, {2, echo}, {3, echo}});
    Msg ready = Msg(ReadySet{{{10}}});
    proc.absorb(3, {{1, ready}, {2, ready}, {3, ready}});
    CHECK_THROWS_AS(proc.absorb(4, {}), InternalProtocolError);
}

TEST_CASE("fault-free run: ranks are the stretched positions and names their ranks") {
    SystemParams p{4, 1, 1000};
    auto handles = opbr_handles(p, OpbrVariant::Log, {10, 20, 30, 40});
    RunResult r = run_protocol(p, handles, opbr_total_rounds(p, OpbrVariant::Log), 17);

    CHECK(r.names == std::map<ProcId, std::int64_t>{{{10}, 1}, {{20}, 2}, {{30}, 3}, {{40}, 4}});
    CHECK(r.metrics.rounds_executed == 7);

    Rational d(16, 15);
    RanksMap expected{{{10}, d}, {{20}, Rational(2) * d}, {{30}, Rational(3) * d}, {{40}, Rational(4) * d}};
    for (int proc = 1; proc <= 4; ++proc) {
        const auto& after_select = std::get<OpbrSnapshot>(r.trace.find_snapshot(4, proc)->state);
        CHECK(after_select.ranks == expected);
        // With identical views the approximation is a fixed point.
        const auto& final_state = std::get<OpbrSnapshot>(r.trace.find_snapshot(7, proc)->state);
        CHECK(final_state.ranks == expected);
    }
}

TEST_CASE("fault-free run with t = 0 renames to exact positions") {
    SystemParams p{4, 0, 1000};
    auto handles = opbr_handles(p, OpbrVariant::Log, {10, 20, 30, 40});
    RunResult r = run_protocol(p, handles, opbr_total_rounds(p, OpbrVariant::Log), 3);
    CHECK(r.names == std::map<ProcId, std::int64_t>{{{10}, 1}, {{20}, 2}, {{30}, 3}, {{40}, 4}});
}
