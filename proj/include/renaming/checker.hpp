#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "renaming/core.hpp"
#include "renaming/opbr.hpp"
#include "renaming/trace.hpp"

namespace renaming {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string witness;  // non-empty iff the check failed
    friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

// Everything the checker needs to interpret a trace.
struct RunContext {
    SystemParams params;
    Algorithm algorithm = Algorithm::OpbrLog;
    int approx_steps = 0;
    int total_rounds = 0;
    std::map<int, ProcId> correct_ids;  // engine index -> id
    std::vector<int> faulty_indices;
};

inline std::string id_str(ProcId id) { return std::to_string(id.value); }

inline CheckResult check_uniqueness(const std::map<ProcId, std::int64_t>& names) {
    std::map<std::int64_t, ProcId> seen;
    for (const auto& [id, name] : names) {
        auto [it, inserted] = seen.emplace(name, id);
        if (!inserted)
            return {"uniqueness", false,
                    "ids " + id_str(it->second) + " and " + id_str(id) + " both renamed to " +
                        std::to_string(name)};
    }
    return {"uniqueness", true, ""};
}

inline CheckResult check_order(const std::map<ProcId, std::int64_t>& names) {
    const std::pair<const ProcId, std::int64_t>* prev = nullptr;
    for (const auto& entry : names) {
        if (prev != nullptr && !(prev->second < entry.second))
            return {"order-preservation", false,
                    "id " + id_str(prev->first) + " -> " + std::to_string(prev->second) +
                        " not below id " + id_str(entry.first) + " -> " +
                        std::to_string(entry.second)};
        prev = &entry;
    }
    return {"order-preservation", true, ""};
}

inline CheckResult check_namespace(const std::map<ProcId, std::int64_t>& names, std::int64_t bound) {
    for (const auto& [id, name] : names)
        if (name < 1 || name > bound)
            return {"namespace", false,
                    "id " + id_str(id) + " renamed to " + std::to_string(name) + " outside [1, " +
                        std::to_string(bound) + "]"};
    return {"namespace", true, ""};
}

// Target namespace size per algorithm: N+t-1 (log), N (const), N^2
// (twostep). At t = 0 the log bound degenerates below N, where N names are
// required, so max(t,1) keeps the t = 0 configuration meaningful.
inline std::int64_t namespace_bound(const SystemParams& p, Algorithm a) {
    switch (a) {
        case Algorithm::OpbrLog: return p.n + std::max(p.t, 1) - 1;
        case Algorithm::OpbrConst: return p.n;
        case Algorithm::TwoStep: return static_cast<std::int64_t>(p.n) * p.n;
    }
    return 0;
}

namespace detail {

inline const OpbrSnapshot& opbr_snapshot(const TraceLog& trace, int round, int proc_index) {
    const SnapshotRecord* rec = trace.find_snapshot(round, proc_index);
    if (rec == nullptr)
        throw TraceError("trace is missing the round " + std::to_string(round) +
                         " snapshot of process " + std::to_string(proc_index));
    const auto* snap = std::get_if<OpbrSnapshot>(&rec->state);
    if (snap == nullptr)
        throw TraceError("snapshot of process " + std::to_string(proc_index) +
                         " at round " + std::to_string(round) + " is not an opbr snapshot");
    return *snap;
}

inline const TwoStepSnapshot& twostep_snapshot(const TraceLog& trace, int round, int proc_index) {
    const SnapshotRecord* rec = trace.find_snapshot(round, proc_index);
    if (rec == nullptr)
        throw TraceError("trace is missing the round " + std::to_string(round) +
                         " snapshot of process " + std::to_string(proc_index));
    const auto* snap = std::get_if<TwoStepSnapshot>(&rec->state);
    if (snap == nullptr)
        throw TraceError("snapshot of process " + std::to_string(proc_index) +
                         " at round " + std::to_string(round) + " is not a twostep snapshot");
    return *snap;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b; }

// t + floor(t^2/(N-2t)) extra ids on top of the N-t correct ones.
inline std::int64_t accepted_bound(const SystemParams& p) {
    return p.n + floor_div(static_cast<std::int64_t>(p.t) * p.t, p.n - 2 * p.t);
}

}  // namespace detail

// Invariant checks for an opbr trace. Each check evaluates one correctness
// lemma of the protocol literally over the recorded snapshots; p, q range
// over correct processes.
inline std::vector<CheckResult> check_opbr_lemmas(const RunContext& ctx, const TraceLog& trace) {
    std::vector<CheckResult> out;
    const SystemParams& p = ctx.params;
    const Rational d = delta(p);
    const int first_aa = 5;
    const int last_round = ctx.total_rounds;

    std::vector<int> correct;
    for (const auto& [index, id] : ctx.correct_ids) correct.push_back(index);

    std::set<ProcId> correct_ids;
    for (const auto& [index, id] : ctx.correct_ids) correct_ids.insert(id);

    // Union of timely sets over correct processes; the set the per-id
    // guarantees quantify over.
    std::set<ProcId> timely_union;
    for (int pi : correct) {
        const OpbrSnapshot& s = detail::opbr_snapshot(trace, 3, pi);
        timely_union.insert(s.timely.begin(), s.timely.end());
    }

    // An id timely anywhere is accepted everywhere.
    {
        CheckResult r{"timely-in-accepted", true, ""};
        for (int qi : correct) {
            const OpbrSnapshot& sq = detail::opbr_snapshot(trace, 4, qi);
            for (ProcId id : timely_union) {
                if (!sq.accepted.contains(id)) {
                    r = {r.name, false,
                         "id " + id_str(id) + " timely at some correct process but not accepted at " +
                             std::to_string(qi)};
                    break;
                }
            }
            if (!r.pass) break;
        }
        out.push_back(r);
    }

    // Every correct id is timely at every correct process.
    {
        CheckResult r{"correct-ids-timely", true, ""};
        for (int qi : correct) {
            const OpbrSnapshot& sq = detail::opbr_snapshot(trace, 3, qi);
            for (ProcId id : correct_ids) {
                if (!sq.timely.contains(id)) {
                    r = {r.name, false,
                         "correct id " + id_str(id) + " not timely at process " + std::to_string(qi)};
                    break;
                }
            }
            if (!r.pass) break;
        }
        out.push_back(r);
    }

    // |accepted| <= N + floor(t^2/(N-2t)) at the end of Step 4.
    {
        CheckResult r{"accepted-bound", true, ""};
        std::int64_t bound = detail::accepted_bound(p);
        for (int pi : correct) {
            const OpbrSnapshot& s = detail::opbr_snapshot(trace, 4, pi);
            if (static_cast<std::int64_t>(s.accepted.size()) > bound) {
                r = {r.name, false,
                     "process " + std::to_string(pi) + " accepted " +
                         std::to_string(s.accepted.size()) + " ids, bound " + std::to_string(bound)};
                break;
            }
        }
        out.push_back(r);
    }

    // The ranks broadcast by any correct q in each voting step pass the
    // validity test of any correct p.
    {
        CheckResult r{"votes-valid", true, ""};
        for (int round = first_aa; round <= last_round && r.pass; ++round) {
            for (int qi : correct) {
                const RanksMap& sent = detail::opbr_snapshot(trace, round - 1, qi).ranks;
                for (int pi : correct) {
                    const OpbrSnapshot& sp = detail::opbr_snapshot(trace, 3, pi);
                    if (!is_valid(sp.timely, sent, d)) {
                        r = {r.name, false,
                             "vote of process " + std::to_string(qi) + " at round " +
                                 std::to_string(round) + " rejected by process " + std::to_string(pi)};
                        break;
                    }
                }
                if (!r.pass) break;
            }
        }
        out.push_back(r);
    }

    // Ranks of correct ids stay separated by at least delta at every
    // correct process from Step 4 on.
    {
        CheckResult r{"correct-gap-delta", true, ""};
        for (int round = 4; round <= last_round && r.pass; ++round) {
            for (int pi : correct) {
                const OpbrSnapshot& s = detail::opbr_snapshot(trace, round, pi);
                std::optional<ProcId> prev;
                for (ProcId id : correct_ids) {
                    auto it = s.ranks.find(id);
                    if (it == s.ranks.end()) {
                        r = {r.name, false,
                             "correct id " + id_str(id) + " missing from ranks of process " +
                                 std::to_string(pi) + " at round " + std::to_string(round)};
                        break;
                    }
                    if (prev && it->second - s.ranks.at(*prev) < d) {
                        r = {r.name, false,
                             "ranks of correct ids " + id_str(*prev) + " and " + id_str(id) +
                                 " closer than delta at process " + std::to_string(pi) + ", round " +
                                 std::to_string(round)};
                        break;
                    }
                    prev = id;
                }
                if (!r.pass) break;
            }
        }
        out.push_back(r);
    }

    // Initial per-id discrepancy is at most (t + floor(t^2/(N-2t))) * delta.
    {
        CheckResult r{"initial-discrepancy", true, ""};
        Rational bound = Rational(detail::accepted_bound(p) - p.n + p.t) * d;
        for (ProcId id : timely_union) {
            std::optional<Rational> lo, hi;
            for (int pi : correct) {
                const OpbrSnapshot& s = detail::opbr_snapshot(trace, 4, pi);
                auto it = s.ranks.find(id);
                if (it == s.ranks.end()) continue;
                if (!lo || it->second < *lo) lo = it->second;
                if (!hi || *hi < it->second) hi = it->second;
            }
            if (lo && hi && *hi - *lo > bound) {
                r = {r.name, false,
                     "initial ranks of timely id " + id_str(id) + " spread by " +
                         (*hi - *lo).to_string() + ", bound " + bound.to_string()};
                break;
            }
        }
        out.push_back(r);
    }

    // Per voting step and per timely id: the new correct ranks lie within
    // the range of the old ones, and the spread contracts by the implemented
    // selection count c_sel.
    const int c_sel = select_count(p.n - 2 * p.t, p.t);
    {
        CheckResult contain{"containment", true, ""};
        CheckResult contract{"contraction", true, ""};
        for (int round = first_aa; round <= last_round; ++round) {
            for (ProcId id : timely_union) {
                std::optional<Rational> old_lo, old_hi, new_lo, new_hi;
                for (int pi : correct) {
                    const RanksMap& before = detail::opbr_snapshot(trace, round - 1, pi).ranks;
                    const RanksMap& after = detail::opbr_snapshot(trace, round, pi).ranks;
                    auto bit = before.find(id);
                    auto ait = after.find(id);
                    if (bit == before.end() || ait == after.end()) {
                        contain = {contain.name, false,
                                   "timely id " + id_str(id) + " not updated by process " +
                                       std::to_string(pi) + " at round " + std::to_string(round)};
                        break;
                    }
                    if (!old_lo || bit->second < *old_lo) old_lo = bit->second;
                    if (!old_hi || *old_hi < bit->second) old_hi = bit->second;
                    if (!new_lo || ait->second < *new_lo) new_lo = ait->second;
                    if (!new_hi || *new_hi < ait->second) new_hi = ait->second;
                }
                if (!contain.pass) break;
                if (*new_lo < *old_lo || *new_hi > *old_hi) {
                    contain = {contain.name, false,
                               "round " + std::to_string(round) + " ranks of id " + id_str(id) +
                                   " left the previous correct range"};
                    break;
                }
                Rational old_spread = *old_hi - *old_lo;
                Rational new_spread = *new_hi - *new_lo;
                if (contract.pass && new_spread * Rational(c_sel) > old_spread) {
                    contract = {contract.name, false,
                                "round " + std::to_string(round) + " spread of id " + id_str(id) +
                                    " contracted from " + old_spread.to_string() + " only to " +
                                    new_spread.to_string() + " (c_sel " + std::to_string(c_sel) + ")"};
                }
            }
            if (!contain.pass) break;
        }
        out.push_back(contain);
        out.push_back(contract);
    }

    // After the full budget the spread of every timely id is below
    // (delta-1)/2.
    {
        CheckResult r{"final-spread", true, ""};
        Rational limit = (d - Rational(1)) / Rational(2);
        for (ProcId id : timely_union) {
            std::optional<Rational> lo, hi;
            for (int pi : correct) {
                const RanksMap& ranks = detail::opbr_snapshot(trace, last_round, pi).ranks;
                auto it = ranks.find(id);
                if (it == ranks.end()) continue;
                if (!lo || it->second < *lo) lo = it->second;
                if (!hi || *hi < it->second) hi = it->second;
            }
            if (lo && hi && !(*hi - *lo < limit)) {
                r = {r.name, false,
                     "final spread of timely id " + id_str(id) + " is " + (*hi - *lo).to_string() +
                         ", not below " + limit.to_string()};
                break;
            }
        }
        out.push_back(r);
    }

    return out;
}

// Invariant checks for a twostep trace.
inline std::vector<CheckResult> check_twostep_lemmas(const RunContext& ctx, const TraceLog& trace) {
    std::vector<CheckResult> out;
    const SystemParams& p = ctx.params;

    std::vector<int> correct;
    for (const auto& [index, id] : ctx.correct_ids) correct.push_back(index);
    std::set<ProcId> correct_ids;
    for (const auto& [index, id] : ctx.correct_ids) correct_ids.insert(id);

    // New names estimated for the same correct id differ by at most 2t^2
    // across correct processes.
    {
        CheckResult r{"estimate-discrepancy", true, ""};
        std::int64_t bound = 2 * static_cast<std::int64_t>(p.t) * p.t;
        for (ProcId id : correct_ids) {
            std::optional<std::int64_t> lo, hi;
            for (int pi : correct) {
                const TwoStepSnapshot& s = detail::twostep_snapshot(trace, 2, pi);
                auto it = s.newid.find(id);
                if (it == s.newid.end()) {
                    r = {r.name, false,
                         "correct id " + id_str(id) + " has no new name at process " +
                             std::to_string(pi)};
                    break;
                }
                if (!lo || it->second < *lo) lo = it->second;
                if (!hi || it->second > *hi) hi = it->second;
            }
            if (!r.pass) break;
            if (*hi - *lo > bound) {
                r = {r.name, false,
                     "new names for correct id " + id_str(id) + " spread by " +
                         std::to_string(*hi - *lo) + ", bound " + std::to_string(bound)};
                break;
            }
        }
        out.push_back(r);
    }

    // Adjacent correct ids sit at least N-t apart in every correct
    // process's estimates.
    {
        CheckResult r{"estimate-offsets", true, ""};
        for (int pi : correct) {
            const TwoStepSnapshot& s = detail::twostep_snapshot(trace, 2, pi);
            std::optional<ProcId> prev;
            for (ProcId id : correct_ids) {
                if (prev) {
                    auto a = s.newid.find(*prev);
                    auto b = s.newid.find(id);
                    if (a == s.newid.end() || b == s.newid.end()) {
                        r = {r.name, false,
                             "correct id missing from newid at process " + std::to_string(pi)};
                        break;
                    }
                    if (a->second + (p.n - p.t) > b->second) {
                        r = {r.name, false,
                             "newid gap between " + id_str(*prev) + " and " + id_str(id) +
                                 " below N-t at process " + std::to_string(pi)};
                        break;
                    }
                }
                prev = id;
            }
            if (!r.pass) break;
        }
        out.push_back(r);
    }

    // Every oversized MultiEcho delivered to a correct process must have
    // been rejected by its validity check.
    {
        CheckResult r{"oversize-rejection", true, ""};
        for (const DeliveredMessage& m : trace.messages) {
            const auto* echo = std::get_if<MultiEcho>(&m.msg);
            if (echo == nullptr || m.round != 2) continue;
            if (echo->ids.size() <= static_cast<std::size_t>(p.n)) continue;
            if (!ctx.correct_ids.contains(m.to_index)) continue;
            const TwoStepSnapshot& s = detail::twostep_snapshot(trace, 2, m.to_index);
            if (!s.rejected_links.contains(m.link)) {
                r = {r.name, false,
                     "oversized MultiEcho on link " + std::to_string(m.link) + " of process " +
                         std::to_string(m.to_index) + " was not rejected"};
                break;
            }
        }
        out.push_back(r);
    }

    return out;
}

inline std::vector<CheckResult> check_lemma_suite(const RunContext& ctx, const TraceLog& trace) {
    if (ctx.algorithm == Algorithm::TwoStep) return check_twostep_lemmas(ctx, trace);
    return check_opbr_lemmas(ctx, trace);
}

// Round exactness and message accounting: the run must use the variant's
// exact budget, the per-message id budget of the complexity analysis must
// hold for correct senders, and delivery counts can never exceed n^2 per
// round.
inline CheckResult check_metrics(const RunMetrics& m, const RunContext& ctx) {
    if (m.rounds_executed != ctx.total_rounds)
        return {"metrics", false,
                "executed " + std::to_string(m.rounds_executed) + " rounds, expected " +
                    std::to_string(ctx.total_rounds)};
    std::int64_t ids_bound =
        ctx.algorithm == Algorithm::TwoStep
            ? ctx.params.n
            : ctx.params.n + std::max(ctx.params.t, 1) - 1;
    if (m.max_message_ids > ids_bound)
        return {"metrics", false,
                "a correct process sent a message carrying " + std::to_string(m.max_message_ids) +
                    " ids, bound " + std::to_string(ids_bound)};
    std::int64_t cap = m.rounds_executed * static_cast<std::int64_t>(ctx.params.n) * ctx.params.n;
    if (m.messages_delivered > cap)
        return {"metrics", false,
                "delivered " + std::to_string(m.messages_delivered) + " messages, cap " +
                    std::to_string(cap)};
    return {"metrics", true, ""};
}

inline std::vector<CheckResult> check_all(const RunContext& ctx, const TraceLog& trace,
                                          const RunMetrics& metrics,
                                          const std::map<ProcId, std::int64_t>& names) {
    std::vector<CheckResult> out;
    out.push_back(check_uniqueness(names));
    out.push_back(check_order(names));
    out.push_back(check_namespace(names, namespace_bound(ctx.params, ctx.algorithm)));
    for (CheckResult& r : check_lemma_suite(ctx, trace)) out.push_back(std::move(r));
    out.push_back(check_metrics(metrics, ctx));
    return out;
}

inline bool all_pass(const std::vector<CheckResult>& checks) {
    for (const CheckResult& c : checks)
        if (!c.pass) return false;
    return true;
}

// Largest final disagreement the run exhibited: the max final rank spread
// over timely ids (opbr) or the max cross-process newid discrepancy over
// correct ids (twostep). Reported in sweep rows.
inline Rational max_final_spread(const RunContext& ctx, const TraceLog& trace) {
    Rational best(0);
    if (ctx.algorithm == Algorithm::TwoStep) {
        std::set<ProcId> correct_ids;
        for (const auto& [index, id] : ctx.correct_ids) correct_ids.insert(id);
        for (ProcId id : correct_ids) {
            std::optional<std::int64_t> lo, hi;
            for (const auto& [pi, pid] : ctx.correct_ids) {
                const TwoStepSnapshot& s = detail::twostep_snapshot(trace, 2, pi);
                auto it = s.newid.find(id);
                if (it == s.newid.end()) continue;
                if (!lo || it->second < *lo) lo = it->second;
                if (!hi || it->second > *hi) hi = it->second;
            }
            if (lo && hi && Rational(*hi - *lo) > best) best = Rational(*hi - *lo);
        }
        return best;
    }

    std::set<ProcId> timely_union;
    for (const auto& [pi, pid] : ctx.correct_ids) {
        const OpbrSnapshot& s = detail::opbr_snapshot(trace, 3, pi);
        timely_union.insert(s.timely.begin(), s.timely.end());
    }
    for (ProcId id : timely_union) {
        std::optional<Rational> lo, hi;
        for (const auto& [pi, pid] : ctx.correct_ids) {
            const RanksMap& ranks = detail::opbr_snapshot(trace, ctx.total_rounds, pi).ranks;
            auto it = ranks.find(id);
            if (it == ranks.end()) continue;
            if (!lo || it->second < *lo) lo = it->second;
            if (!hi || *hi < it->second) hi = it->second;
        }
        if (lo && hi && *hi - *lo > best) best = *hi - *lo;
    }
    return best;
}

}  // namespace renaming
