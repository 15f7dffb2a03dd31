#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "renaming/core.hpp"
#include "renaming/netsim.hpp"

namespace renaming {

enum class OpbrVariant { Log, Const };

inline OpbrVariant opbr_variant(Algorithm a) {
    if (a == Algorithm::OpbrConst) return OpbrVariant::Const;
    return OpbrVariant::Log;
}

// Number of approximation (voting) steps after the 4-step id selection.
// Log: 3*ceil(log2 t) + 3 for t >= 2, and 3 for t in {0, 1} (the formula
// evaluated at t = 1, reused for t = 0). Const: 4, valid only when
// N > t^2+2t.
inline int approximation_steps(const SystemParams& p, OpbrVariant v) {
    if (v == OpbrVariant::Const) {
        p.validate(Algorithm::OpbrConst);
        return 4;
    }
    p.validate(Algorithm::OpbrLog);
    if (p.t <= 1) return 3;
    int ceil_log2 = std::bit_width(static_cast<unsigned>(p.t - 1));
    return 3 * ceil_log2 + 3;
}

inline int opbr_total_rounds(const SystemParams& p, OpbrVariant v) {
    return 4 + approximation_steps(p, v);
}

// Validity filter for incoming rank arrays: every timely id must have an
// entry, and the entries of timely ids must appear in id order separated by
// at least d. Checking adjacent timely ids in sorted order is equivalent to
// the all-pairs loop. Ids outside timely are not inspected.
inline bool is_valid(const std::set<ProcId>& timely, const RanksMap& ranks, const Rational& d) {
    const Rational* prev = nullptr;
    for (ProcId id : timely) {
        auto it = ranks.find(id);
        if (it == ranks.end()) return false;
        if (prev != nullptr && it->second - *prev < d) return false;
        prev = &it->second;
    }
    return true;
}

// Smallest element and every t-th element after it: 1-based positions
// {i*t + 1 : i*t + 1 <= |sorted|}. For t = 0 there is nothing to skip and
// every element is selected.
inline Multiset select_every_tth(const Multiset& sorted, int t) {
    std::size_t stride = static_cast<std::size_t>(t < 1 ? 1 : t);
    std::vector<Rational> picked;
    for (std::size_t i = 0; i < sorted.size(); i += stride) picked.push_back(sorted.at(i));
    return Multiset(std::move(picked));
}

// Number of elements select_t picks from an m-element multiset. This is the
// contraction factor actually achieved per approximation step (the checker
// asserts with it; the analytical rate sigma_t is reported alongside).
inline int select_count(int m, int t) {
    if (m <= 0) return 0;
    int stride = t < 1 ? 1 : t;
    return (m - 1) / stride + 1;
}

struct ApproxResult {
    std::set<ProcId> accepted;
    RanksMap ranks;
};

// One approximate-agreement step. For each accepted id, gathers the votes of
// every valid rank array containing it; ids with fewer than N-t votes are
// dropped from accepted. Each surviving multiset is padded with copies of
// the caller's own value up to exactly N entries, the t largest and t
// smallest entries are deleted, and the new rank is the average of the
// selected remainder.
inline ApproxResult approximate(const RanksMap& my_ranks, const std::set<ProcId>& accepted,
                                const std::vector<RanksMap>& valid_votes,
                                const SystemParams& params) {
    const std::size_t n = static_cast<std::size_t>(params.n);
    const std::size_t need = static_cast<std::size_t>(params.n - params.t);

    std::map<ProcId, Multiset> votes;
    for (ProcId id : accepted) {
        Multiset& m = votes[id];
        for (const RanksMap& vote : valid_votes) {
            auto it = vote.find(id);
            if (it != vote.end()) m.insert(it->second);
        }
    }

    ApproxResult out;
    for (ProcId id : accepted)
        if (votes[id].size() >= need) out.accepted.insert(id);

    for (ProcId id : out.accepted) {
        Multiset m = votes[id];
        const Rational& own = my_ranks.at(id);
        while (m.size() < n) m.insert(own);
        for (int i = 0; i < params.t; ++i) {
            m.remove_max();
            m.remove_min();
        }
        out.ranks.emplace(id, select_every_tth(m, params.t).average());
    }
    return out;
}

// Order-preserving Byzantine renaming for N > 3t. Rounds 1-4 select the ids
// that feed the approximation (announce, echo with an N-t threshold, ready
// with an N-2t amplification step, accept); rounds 5.. run validated
// approximate agreement on the stretched ranks, and the final round's value
// for my_id, rounded, is the new name.
class OpbrProcess final : public Protocol {
public:
    OpbrProcess(ProcId my_id, const SystemParams& params, OpbrVariant variant)
        : my_id_(my_id),
          params_(params),
          delta_(delta(params)),
          total_rounds_(opbr_total_rounds(params, variant)) {}

    ProcId my_id() const override { return my_id_; }
    int total_rounds() const { return total_rounds_; }

    std::optional<Msg> emit(int round) override {
        switch (round) {
            case 1:
                return Msg(IdAnnounce{my_id_});
            case 2:
                return Msg(EchoSet{ids_});
            case 3:
                ready_sent_ = ids_;
                return Msg(ReadySet{ids_});
            case 4:
                if (ids_.empty()) return std::nullopt;  // nothing to amplify
                ready_sent_.insert(ids_.begin(), ids_.end());
                return Msg(ReadySet{ids_});
            default:
                return Msg(AaVote{ranks_});
        }
    }

    void absorb(int round, const RoundInbox& inbox) override {
        switch (round) {
            case 1: {
                for (const auto& [link, msg] : inbox)
                    if (const auto* id = std::get_if<IdAnnounce>(&msg)) ids_.insert(id->id);
                break;
            }
            case 2: {
                std::map<ProcId, int> echoes;
                for (const auto& [link, msg] : inbox)
                    if (const auto* e = std::get_if<EchoSet>(&msg))
                        for (ProcId id : e->ids) ++echoes[id];
                ids_.clear();
                for (const auto& [id, count] : echoes)
                    if (count >= params_.n - params_.t) ids_.insert(id);
                break;
            }
            case 3: {
                collect_ready_links(inbox);
                ids_.clear();
                for (const auto& [id, links] : ready_links_) {
                    if (static_cast<int>(links.size()) >= params_.n - params_.t)
                        timely_.insert(id);
                    if (static_cast<int>(links.size()) >= params_.n - 2 * params_.t &&
                        !ready_sent_.contains(id))
                        ids_.insert(id);
                }
                break;
            }
            case 4: {
                collect_ready_links(inbox);
                for (const auto& [id, links] : ready_links_)
                    if (static_cast<int>(links.size()) >= params_.n - params_.t)
                        accepted_.insert(id);
                if (!timely_.contains(my_id_))
                    throw InternalProtocolError("opbr: own id " + std::to_string(my_id_.value) +
                                                " missing from timely after Step 3");
                if (!accepted_.contains(my_id_))
                    throw InternalProtocolError("opbr: own id " + std::to_string(my_id_.value) +
                                                " missing from accepted after Step 4");
                for (ProcId id : accepted_)
                    ranks_.emplace(id, Rational(rank_in(accepted_, id)) * delta_);
                break;
            }
            default: {
                std::vector<RanksMap> valid_votes;
                for (const auto& [link, msg] : inbox)
                    if (const auto* aa = std::get_if<AaVote>(&msg))
                        if (is_valid(timely_, aa->ranks, delta_)) valid_votes.push_back(aa->ranks);
                ApproxResult res = approximate(ranks_, accepted_, valid_votes, params_);
                if (!res.accepted.contains(my_id_))
                    throw InternalProtocolError("opbr: own id " + std::to_string(my_id_.value) +
                                                " dropped during approximation");
                accepted_ = std::move(res.accepted);
                ranks_ = std::move(res.ranks);
                if (round == total_rounds_) decision_ = round_nearest(ranks_.at(my_id_));
                break;
            }
        }
    }

    std::optional<std::int64_t> decision() const override { return decision_; }

    Snapshot snapshot() const override {
        return OpbrSnapshot{ids_, timely_, accepted_, ranks_};
    }

    const std::set<ProcId>& timely() const { return timely_; }
    const std::set<ProcId>& accepted() const { return accepted_; }
    const RanksMap& ranks() const { return ranks_; }

private:
    // A distinct link contributes at most one READY per id toward the N-t
    // threshold even if it sends the id in both Steps 3 and 4.
    void collect_ready_links(const RoundInbox& inbox) {
        for (const auto& [link, msg] : inbox)
            if (const auto* r = std::get_if<ReadySet>(&msg))
                for (ProcId id : r->ids) ready_links_[id].insert(link);
    }

    ProcId my_id_;
    SystemParams params_;
    Rational delta_;
    int total_rounds_;

    std::set<ProcId> ids_;        // working set across Steps 1-4
    std::set<ProcId> ready_sent_;
    std::map<ProcId, std::set<LinkLabel>> ready_links_;
    std::set<ProcId> timely_;
    std::set<ProcId> accepted_;
    RanksMap ranks_;
    std::optional<std::int64_t> decision_;
};

}  // namespace renaming
