#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "renaming/core.hpp"
#include "renaming/rng.hpp"
#include "renaming/trace.hpp"

namespace renaming {

// Fully connected topology with per-process link labelings. Each process
// sees its peers through its own permutation of labels 1..n-1 (label n is
// the self-loop); the permutations are seed-derived so adversary targeting
// is reproducible without being accidentally aligned with id order.
class Topology {
public:
    static Topology derive(int n, std::uint64_t seed) {
        Topology t;
        t.n_ = n;
        t.peer_.assign(static_cast<std::size_t>(n), {});
        t.label_.assign(static_cast<std::size_t>(n), std::vector<LinkLabel>(static_cast<std::size_t>(n), 0));
        for (int proc = 1; proc <= n; ++proc) {
            std::vector<int> peers;
            for (int j = 1; j <= n; ++j)
                if (j != proc) peers.push_back(j);
            SplitMix64 rng(mix_seed(seed, 0x10C0 + static_cast<std::uint64_t>(proc)));
            rng.shuffle(peers);
            peers.push_back(proc);  // label n: self-loop
            t.peer_[static_cast<std::size_t>(proc - 1)] = peers;
            for (int l = 1; l <= n; ++l)
                t.label_[static_cast<std::size_t>(proc - 1)][static_cast<std::size_t>(peers[static_cast<std::size_t>(l - 1)] - 1)] = l;
        }
        return t;
    }

    int n() const { return n_; }

    // Process reached by `proc`'s link `label`.
    int peer(int proc, LinkLabel label) const {
        return peer_.at(static_cast<std::size_t>(proc - 1)).at(static_cast<std::size_t>(label - 1));
    }

    // Label under which `proc` sees the link shared with `other`.
    LinkLabel label_at(int proc, int other) const {
        return label_.at(static_cast<std::size_t>(proc - 1)).at(static_cast<std::size_t>(other - 1));
    }

private:
    int n_ = 0;
    std::vector<std::vector<int>> peer_;
    std::vector<std::vector<LinkLabel>> label_;
};

// At most one message per link per round; absent key = nothing sent or
// received on that link.
using RoundInbox = std::map<LinkLabel, Msg>;
using OutgoingBatch = std::map<LinkLabel, Msg>;

// A correct process's state machine. The engine drives each round as
// send-then-receive-then-compute: emit() produces the broadcast (replicated
// to every link, including the self-loop), absorb() consumes the messages
// delivered within the same round.
class Protocol {
public:
    virtual ~Protocol() = default;
    virtual ProcId my_id() const = 0;
    virtual std::optional<Msg> emit(int round) = 0;
    virtual void absorb(int round, const RoundInbox& inbox) = 0;
    virtual std::optional<std::int64_t> decision() const = 0;
    virtual Snapshot snapshot() const = 0;
};

struct AdversaryContext {
    SystemParams params;
    Algorithm algorithm = Algorithm::OpbrLog;
    int total_rounds = 0;
    const Topology* topology = nullptr;
    std::vector<int> faulty_indices;
    std::map<int, ProcId> correct_ids;  // engine index -> id
    std::uint64_t seed = 0;
};

// A faulty process. plan() may return a different message per link and may
// omit links; it sees the full trace so far (all prior traffic and all
// correct state snapshots).
class Adversary {
public:
    virtual ~Adversary() = default;
    virtual OutgoingBatch plan(int round, const AdversaryContext& ctx, const TraceLog& trace) = 0;
    virtual void observe(int /*round*/, const RoundInbox& /*inbox*/) {}
};

struct ProcessHandle {
    int index = 0;  // 1-based engine index
    std::unique_ptr<Protocol> protocol;    // set iff correct
    std::unique_ptr<Adversary> adversary;  // set iff faulty
    bool correct() const { return protocol != nullptr; }
};

// Delivers one round of batches over reliable links: every sent message
// appears in exactly one inbox, on the receiver's label for the sender's
// link. Faulty processes lie in content only, never about which physical
// link a message traverses.
inline std::vector<RoundInbox> reliable_link_delivery(const Topology& topo,
                                                      const std::vector<OutgoingBatch>& batches) {
    const int n = topo.n();
    std::vector<RoundInbox> inboxes(static_cast<std::size_t>(n));
    for (int from = 1; from <= n; ++from) {
        for (const auto& [label, msg] : batches.at(static_cast<std::size_t>(from - 1))) {
            if (label < 1 || label > n) continue;
            int to = topo.peer(from, label);
            inboxes[static_cast<std::size_t>(to - 1)].emplace(topo.label_at(to, from), msg);
        }
    }
    return inboxes;
}

struct RunResult {
    std::map<ProcId, std::int64_t> names;  // correct processes only
    RunMetrics metrics;
    TraceLog trace;
};

// Lockstep synchronous engine. Runs exactly total_rounds rounds; in round r
// every process first emits its batch, the batches are delivered, then every
// process computes on its inbox. Round 1 inboxes are empty before the send
// phase: nothing is in flight at the start.
inline RunResult run_protocol(const SystemParams& params, std::vector<ProcessHandle>& handles,
                              int total_rounds, std::uint64_t seed,
                              Algorithm algorithm = Algorithm::OpbrLog) {
    const int n = params.n;
    if (static_cast<int>(handles.size()) != n)
        throw ConfigError("run_protocol: need exactly n process handles");

    Topology topo = Topology::derive(n, seed);

    AdversaryContext ctx;
    ctx.params = params;
    ctx.algorithm = algorithm;
    ctx.total_rounds = total_rounds;
    ctx.topology = &topo;
    ctx.seed = seed;
    for (const ProcessHandle& h : handles) {
        if (h.correct())
            ctx.correct_ids.emplace(h.index, h.protocol->my_id());
        else
            ctx.faulty_indices.push_back(h.index);
    }

    RunResult result;
    result.metrics.rounds_executed = total_rounds;

    for (int round = 1; round <= total_rounds; ++round) {
        // Send phase.
        std::vector<OutgoingBatch> batches(static_cast<std::size_t>(n));
        for (ProcessHandle& h : handles) {
            OutgoingBatch batch;
            if (h.correct()) {
                if (std::optional<Msg> msg = h.protocol->emit(round)) {
                    for (LinkLabel l = 1; l <= n; ++l) batch.emplace(l, *msg);
                    result.metrics.max_message_ids =
                        std::max(result.metrics.max_message_ids,
                                 static_cast<std::int64_t>(id_count(*msg)));
                }
            } else {
                batch = h.adversary->plan(round, ctx, result.trace);
                batch.erase(n);  // faulty self-loops are ignored
            }
            batches[static_cast<std::size_t>(h.index - 1)] = std::move(batch);
        }

        // Receive phase.
        std::vector<RoundInbox> inboxes = reliable_link_delivery(topo, batches);
        for (int from = 1; from <= n; ++from) {
            for (const auto& [label, msg] : batches[static_cast<std::size_t>(from - 1)]) {
                if (label < 1 || label > n) continue;
                int to = topo.peer(from, label);
                result.trace.messages.push_back(
                    {round, from, to, topo.label_at(to, from), msg});
                ++result.metrics.messages_delivered;
            }
        }

        // Compute phase.
        for (ProcessHandle& h : handles) {
            const RoundInbox& inbox = inboxes[static_cast<std::size_t>(h.index - 1)];
            if (h.correct()) {
                h.protocol->absorb(round, inbox);
                result.trace.snapshots.push_back(
                    {round, h.index, h.protocol->my_id(), h.protocol->snapshot()});
            } else {
                h.adversary->observe(round, inbox);
            }
        }
    }

    for (const ProcessHandle& h : handles) {
        if (!h.correct()) continue;
        std::optional<std::int64_t> d = h.protocol->decision();
        if (!d)
            throw InternalProtocolError("process " + std::to_string(h.index) +
                                        " reached the end of the run without deciding");
        result.names.emplace(h.protocol->my_id(), *d);
    }
    return result;
}

}  // namespace renaming
