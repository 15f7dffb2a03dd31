#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "renaming/core.hpp"

namespace renaming {

// End-of-round state of a correct opbr process. The checker replays the
// lemma statements against these.
struct OpbrSnapshot {
    std::set<ProcId> working_ids;  // the Ids working variable after this round
    std::set<ProcId> timely;
    std::set<ProcId> accepted;
    RanksMap ranks;
    friend bool operator==(const OpbrSnapshot&, const OpbrSnapshot&) = default;
};

// End-of-round state of a correct twostep process. Absent linkid key = no
// ID was ever received on that link.
struct TwoStepSnapshot {
    std::map<LinkLabel, ProcId> linkid;
    std::set<ProcId> timely;
    std::set<ProcId> accepted;
    std::map<ProcId, int> counter;
    std::map<ProcId, std::int64_t> newid;
    std::set<LinkLabel> valid_links;     // round-2 MultiEcho links that passed isValid
    std::set<LinkLabel> rejected_links;  // round-2 MultiEcho links that failed it
    friend bool operator==(const TwoStepSnapshot&, const TwoStepSnapshot&) = default;
};

using Snapshot = std::variant<OpbrSnapshot, TwoStepSnapshot>;

struct SnapshotRecord {
    int round = 0;
    int proc_index = 0;  // 1-based engine index
    ProcId proc_id;
    Snapshot state;
    friend bool operator==(const SnapshotRecord&, const SnapshotRecord&) = default;
};

// One message delivery. link is the label at the receiver.
struct DeliveredMessage {
    int round = 0;
    int from_index = 0;
    int to_index = 0;
    LinkLabel link = 0;
    Msg msg;
    friend bool operator==(const DeliveredMessage&, const DeliveredMessage&) = default;
};

// Full record of a run: every delivery plus a per-round snapshot of every
// correct process, both ordered by (round, index).
struct TraceLog {
    std::vector<DeliveredMessage> messages;
    std::vector<SnapshotRecord> snapshots;

    const SnapshotRecord* find_snapshot(int round, int proc_index) const {
        for (const SnapshotRecord& s : snapshots)
            if (s.round == round && s.proc_index == proc_index) return &s;
        return nullptr;
    }

    friend bool operator==(const TraceLog&, const TraceLog&) = default;
};

struct RunMetrics {
    std::int64_t rounds_executed = 0;
    std::int64_t messages_delivered = 0;
    // Largest id-count in any single message emitted by a correct process.
    // Byzantine payloads are unbounded by definition, so they are excluded
    // from the complexity accounting.
    std::int64_t max_message_ids = 0;
    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

}  // namespace renaming
