#include <doctest.h>

#include <map>
#include <memory>
#include <set>

#include "renaming/netsim.hpp"

using namespace renaming;

namespace {

// Minimal correct process: announces its id every round, decides its own id.
class Beacon final : public Protocol {
public:
    Beacon(ProcId id, int rounds) : id_(id), rounds_(rounds) {}
    ProcId my_id() const override { return id_; }
    std::optional<Msg> emit(int) override { return Msg(IdAnnounce{id_}); }
    void absorb(int round, const RoundInbox& inbox) override {
        last_inbox_ = inbox;
        if (round == rounds_) decision_ = id_.value;
    }
    std::optional<std::int64_t> decision() const override { return decision_; }
    Snapshot snapshot() const override { return OpbrSnapshot{}; }
    RoundInbox last_inbox_;

private:
    ProcId id_;
    int rounds_;
    std::optional<std::int64_t> decision_;
};

class SelectiveSender final : public Adversary {
public:
    OutgoingBatch plan(int, const AdversaryContext&, const TraceLog&) override {
        return {{1, Msg(IdAnnounce{{99}})}, {2, Msg(IdAnnounce{{99}})}};
    }
};

std::vector<ProcessHandle> beacons(int n, int rounds) {
    std::vector<ProcessHandle> handles;
    for (int i = 1; i <= n; ++i) {
        ProcessHandle h;
        h.index = i;
        h.protocol = std::make_unique<Beacon>(ProcId{10 * i}, rounds);
        handles.push_back(std::move(h));
    }
    return handles;
}

}  // namespace

TEST_CASE("topology labels are a bijection with the self-loop at n") {
    Topology topo = Topology::derive(5, 42);
    for (int p = 1; p <= 5; ++p) {
        CHECK(topo.peer(p, 5) == p);
        CHECK(topo.label_at(p, p) == 5);
        std::set<int> seen;
        for (LinkLabel l = 1; l <= 5; ++l) {
            int q = topo.peer(p, l);
            CHECK(seen.insert(q).second);
            CHECK(topo.label_at(p, q) == l);
        }
    }
}

TEST_CASE("reliable delivery: broadcast fills every inbox with one entry per label") {
    Topology topo = Topology::derive(4, 1);
    std::vector<OutgoingBatch> batches(4);
    for (int i = 1; i <= 4; ++i)
        for (LinkLabel l = 1; l <= 4; ++l)
            batches[static_cast<std::size_t>(i - 1)].emplace(l, Msg(IdAnnounce{{10 * i}}));
    std::vector<RoundInbox> inboxes = reliable_link_delivery(topo, batches);
    for (int p = 1; p <= 4; ++p) {
        const RoundInbox& inbox = inboxes[static_cast<std::size_t>(p - 1)];
        REQUIRE(inbox.size() == 4);
        for (LinkLabel l = 1; l <= 4; ++l) CHECK(inbox.contains(l));
        // Self-loop carries the process's own broadcast.
        CHECK(std::get<IdAnnounce>(inbox.at(4)).id == ProcId{10 * p});
    }
}

TEST_CASE("reliable delivery: selective send reaches only the targeted links") {
    Topology topo = Topology::derive(4, 9);
    std::vector<OutgoingBatch> batches(4);
    batches[0] = {{1, Msg(IdAnnounce{{99}})}, {2, Msg(IdAnnounce{{98}})}};
    std::vector<RoundInbox> inboxes = reliable_link_delivery(topo, batches);
    int received = 0;
    for (int p = 1; p <= 4; ++p) received += static_cast<int>(inboxes[static_cast<std::size_t>(p - 1)].size());
    CHECK(received == 2);
    CHECK(std::get<IdAnnounce>(inboxes[static_cast<std::size_t>(topo.peer(1, 1) - 1)].begin()->second).id ==
          ProcId{99});
}

TEST_CASE("reliable delivery: empty batches give empty inboxes") {
    Topology topo = Topology::derive(3, 5);
    std::vector<RoundInbox> inboxes = reliable_link_delivery(topo, std::vector<OutgoingBatch>(3));
    for (const RoundInbox& inbox : inboxes) CHECK(inbox.empty());
}

TEST_CASE("engine: lockstep round delivers within the round") {
    SystemParams p{4, 1, 1000};
    auto handles = beacons(4, 3);
    RunResult r = run_protocol(p, handles, 3, 7);
    CHECK(r.metrics.rounds_executed == 3);
    CHECK(r.metrics.messages_delivered == 3 * 4 * 4);
    CHECK(r.names.size() == 4);
    // Every process heard every id in round 1 already.
    auto* b = static_cast<Beacon*>(handles[0].protocol.get());
    CHECK(b->last_inbox_.size() == 4);
}

TEST_CASE("engine: identical seeds give identical traces, snapshots included") {
    SystemParams p{5, 1, 1000};
    auto h1 = beacons(5, 4);
    auto h2 = beacons(5, 4);
    RunResult a = run_protocol(p, h1, 4, 123);
    RunResult b = run_protocol(p, h2, 4, 123);
    CHECK(a.trace == b.trace);
    CHECK(a.metrics == b.metrics);
    CHECK(a.names == b.names);
}

TEST_CASE("engine: link-label integrity and uniform correct broadcasts") {
    SystemParams p{5, 1, 1000};
    auto handles = beacons(5, 4);
    ProcessHandle faulty;
    faulty.index = 3;
    faulty.adversary = std::make_unique<SelectiveSender>();
    handles[2] = std::move(faulty);

    RunResult r = run_protocol(p, handles, 4, 99);

    // Across the whole trace, one (receiver, label) pair always maps to the
    // same physical sender.
    std::map<std::pair<int, LinkLabel>, int> origin;
    for (const DeliveredMessage& m : r.trace.messages) {
        auto [it, inserted] = origin.emplace(std::make_pair(m.to_index, m.link), m.from_index);
        if (!inserted) CHECK(it->second == m.from_index);
    }

    // A correct sender's messages within a round are identical on all links.
    for (const DeliveredMessage& m : r.trace.messages) {
        if (m.from_index == 3) continue;
        for (const DeliveredMessage& o : r.trace.messages)
            if (o.round == m.round && o.from_index == m.from_index) CHECK(o.msg == m.msg);
    }

    // The faulty process reached exactly two receivers per round and never
    // itself.
    int faulty_sends = 0;
    for (const DeliveredMessage& m : r.trace.messages)
        if (m.from_index == 3) {
            ++faulty_sends;
            CHECK(m.to_index != 3);
        }
    CHECK(faulty_sends == 2 * 4);
}
