#include <doctest.h>

#include <memory>
#include <set>

#include "renaming/adversary.hpp"
#include "renaming/checker.hpp"
#include "renaming/netsim.hpp"
#include "renaming/opbr.hpp"
#include "renaming/runner.hpp"

using namespace renaming;

namespace {

RunReport run_with(int n, int t, Algorithm alg, const std::string& strategy, std::uint64_t seed,
                   bool trace = false) {
    RunConfig c = grid_point_config(n, t, alg, strategy, seed);
    c.emit_trace = trace;
    return run(c);
}

}  // namespace

TEST_CASE("crash sends correct messages before its round and nothing after") {
    RunReport r = run_with(4, 1, Algorithm::OpbrLog, "crash", 3, true);
    int crash_round = 1 + static_cast<int>(3 % static_cast<std::uint64_t>(7));
    int faulty = r.config.faulty.at(0).index;
    for (const DeliveredMessage& m : r.trace->messages)
        if (m.from_index == faulty) CHECK(m.round < crash_round);
    CHECK(r.all_checks_pass());
}

TEST_CASE("silent never sends") {
    RunReport r = run_with(7, 2, Algorithm::OpbrLog, "silent", 5, true);
    std::set<int> faulty;
    for (const FaultSpec& f : r.config.faulty) faulty.insert(f.index);
    for (const DeliveredMessage& m : r.trace->messages) CHECK_FALSE(faulty.contains(m.from_index));
    CHECK(r.all_checks_pass());
}

TEST_CASE("equivocate announces a different pool id per link in step 1") {
    RunReport r = run_with(7, 2, Algorithm::OpbrLog, "equivocate-ids", 11, true);
    int faulty = r.config.faulty.at(0).index;
    std::map<int, std::int64_t> announced;  // receiver -> id
    for (const DeliveredMessage& m : r.trace->messages) {
        if (m.round != 1 || m.from_index != faulty) continue;
        announced[m.to_index] = std::get<IdAnnounce>(m.msg).id.value;
    }
    std::set<std::int64_t> distinct;
    for (const auto& [to, id] : announced) distinct.insert(id);
    CHECK(announced.size() == 6);
    CHECK(distinct.size() > 1);
    CHECK(r.all_checks_pass());
}

TEST_CASE("collude-inject drives the accepted set to its bound") {
    // (7,2): bound is 7 + floor(4/3) = 8, reached with Byzantine ids accepted.
    RunReport r = run_with(7, 2, Algorithm::OpbrLog, "collude-inject", 1, true);
    REQUIRE(r.all_checks_pass());
    std::set<ProcId> correct_ids;
    for (const auto& [id, name] : r.names) correct_ids.insert(id);
    bool byzantine_accepted = false;
    for (const SnapshotRecord& s : r.trace->snapshots) {
        if (s.round != 4) continue;
        const auto& snap = std::get<OpbrSnapshot>(s.state);
        CHECK(snap.accepted.size() == 8);
        for (ProcId id : snap.accepted)
            if (!correct_ids.contains(id)) byzantine_accepted = true;
    }
    CHECK(byzantine_accepted);

    // (9,2): floor(t^2/(N-2t)) = 0, so the accepted set cannot exceed N.
    RunReport r9 = run_with(9, 2, Algorithm::OpbrLog, "collude-inject", 1, true);
    REQUIRE(r9.all_checks_pass());
    for (const SnapshotRecord& s : r9.trace->snapshots) {
        if (s.round != 4) continue;
        CHECK(std::get<OpbrSnapshot>(s.state).accepted.size() <= 9);
    }
}

TEST_CASE("skewed votes pass the validity filter at every correct receiver") {
    RunReport r = run_with(7, 2, Algorithm::OpbrLog, "skew-votes", 2, true);
    REQUIRE(r.all_checks_pass());
    std::set<int> faulty;
    for (const FaultSpec& f : r.config.faulty) faulty.insert(f.index);
    Rational d = delta(SystemParams{7, 2, 1000});

    int aa_votes = 0;
    for (const DeliveredMessage& m : r.trace->messages) {
        if (m.round < 5 || !faulty.contains(m.from_index)) continue;
        const auto* aa = std::get_if<AaVote>(&m.msg);
        if (aa == nullptr) continue;
        const SnapshotRecord* snap = r.trace->find_snapshot(3, m.to_index);
        if (snap == nullptr) continue;  // receiver is faulty
        ++aa_votes;
        CHECK(is_valid(std::get<OpbrSnapshot>(snap->state).timely, aa->ranks, d));
    }
    CHECK(aa_votes > 0);
}

TEST_CASE("an enormous vote offset is trimmed away entirely") {
    RunConfig c = grid_point_config(7, 2, Algorithm::OpbrLog, "skew-votes", 6);
    for (FaultSpec& f : c.faulty)
        f.params["epsilon"] = json{{"num", "1000000"}, {"den", "1"}};
    RunReport r = run(c);
    CHECK(r.all_checks_pass());
    CHECK(r.max_final_spread_value < Rational(1, 54));  // (delta-1)/2 at N=7, t=2
}

TEST_CASE("oversize-echo inflates opbr payloads past N without breaking anything") {
    RunReport r = run_with(7, 2, Algorithm::OpbrLog, "oversize-echo", 4, true);
    REQUIRE(r.all_checks_pass());
    std::set<int> faulty;
    for (const FaultSpec& f : r.config.faulty) faulty.insert(f.index);
    bool oversized_seen = false;
    for (const DeliveredMessage& m : r.trace->messages)
        if (faulty.contains(m.from_index) && id_count(m.msg) > 7) oversized_seen = true;
    CHECK(oversized_seen);
    CHECK(r.metrics.max_message_ids <= 8);  // correct senders stay within N+t-1
}

TEST_CASE("random byzantine traffic is reproducible from the seed") {
    RunReport a = run_with(7, 2, Algorithm::OpbrLog, "random-byz", 77, true);
    RunReport b = run_with(7, 2, Algorithm::OpbrLog, "random-byz", 77, true);
    CHECK(*a.trace == *b.trace);
    CHECK(a.all_checks_pass());
}

TEST_CASE("mixed strategies in one run") {
    RunConfig c;
    c.n = 7;
    c.t = 2;
    c.algorithm = Algorithm::OpbrLog;
    c.seed = 13;
    c.faulty.push_back({2, "crash", json{{"from_round", 3}}});
    c.faulty.push_back({5, "skew-votes", json::object()});
    RunReport r = run(c);
    CHECK(r.all_checks_pass());
    CHECK(r.names.size() == 5);
}

TEST_CASE("unknown strategy is a config error") {
    StrategySpec spec;
    spec.kind = "teleport";
    CHECK_THROWS_AS(make_adversary(spec, 1, SystemParams{4, 1, 1000}, Algorithm::OpbrLog),
                    ConfigError);
}
