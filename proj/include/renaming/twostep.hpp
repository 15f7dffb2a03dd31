#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "renaming/core.hpp"
#include "renaming/netsim.hpp"

namespace renaming {

// Validity test for an incoming MultiEcho: the link must have carried an ID
// in Step 1, the echo may not list more than N ids, and it must share at
// least N-t ids with the receiver's timely set.
inline bool ts_is_valid(const std::map<LinkLabel, ProcId>& linkid, const std::set<ProcId>& timely,
                        const SystemParams& params, LinkLabel lnk, const std::set<ProcId>& ids) {
    if (!linkid.contains(lnk)) return false;
    if (ids.size() > static_cast<std::size_t>(params.n)) return false;
    int common = 0;
    for (ProcId id : ids)
        if (timely.contains(id)) ++common;
    return common >= params.n - params.t;
}

inline int twostep_total_rounds() { return 2; }

// 2-step order-preserving renaming for N > 2t^2+t with namespace N^2.
// Step 1 exchanges ids; Step 2 echoes the received set, counts echoes per id
// through the validity filter, and turns the counts (clamped to N-t) into
// cumulative offsets over the sorted accepted set.
class TwoStepProcess final : public Protocol {
public:
    TwoStepProcess(ProcId my_id, const SystemParams& params) : my_id_(my_id), params_(params) {
        params_.validate(Algorithm::TwoStep);
    }

    ProcId my_id() const override { return my_id_; }

    std::optional<Msg> emit(int round) override {
        if (round == 1) return Msg(IdAnnounce{my_id_});
        return Msg(MultiEcho{timely_});
    }

    void absorb(int round, const RoundInbox& inbox) override {
        if (round == 1) {
            for (const auto& [link, msg] : inbox) {
                if (const auto* id = std::get_if<IdAnnounce>(&msg)) {
                    linkid_[link] = id->id;
                    timely_.insert(id->id);
                }
            }
            return;
        }

        for (const auto& [link, msg] : inbox) {
            const auto* echo = std::get_if<MultiEcho>(&msg);
            if (echo == nullptr) continue;
            if (!ts_is_valid(linkid_, timely_, params_, link, echo->ids)) {
                rejected_links_.insert(link);
                continue;
            }
            valid_links_.insert(link);
            for (ProcId id : echo->ids) {
                accepted_.insert(id);
                ++counter_[id];
            }
        }

        if (!accepted_.contains(my_id_))
            throw InternalProtocolError("twostep: own id " + std::to_string(my_id_.value) +
                                        " missing from accepted");

        std::int64_t accum_offset = 0;
        for (ProcId id : accepted_) {  // set iteration is already sorted ascending
            accum_offset += std::min<std::int64_t>(counter_.at(id), params_.n - params_.t);
            newid_[id] = accum_offset;
        }
        decision_ = newid_.at(my_id_);
    }

    std::optional<std::int64_t> decision() const override { return decision_; }

    Snapshot snapshot() const override {
        return TwoStepSnapshot{linkid_, timely_, accepted_, counter_, newid_, valid_links_, rejected_links_};
    }

    const std::set<ProcId>& timely() const { return timely_; }
    const std::map<ProcId, std::int64_t>& newid() const { return newid_; }
    bool link_valid(LinkLabel lnk, const std::set<ProcId>& ids) const {
        return ts_is_valid(linkid_, timely_, params_, lnk, ids);
    }

private:
    ProcId my_id_;
    SystemParams params_;

    std::map<LinkLabel, ProcId> linkid_;
    std::set<ProcId> timely_;
    std::set<ProcId> accepted_;
    std::map<ProcId, int> counter_;
    std::map<ProcId, std::int64_t> newid_;
    std::set<LinkLabel> valid_links_;
    std::set<LinkLabel> rejected_links_;
    std::optional<std::int64_t> decision_;
};

}  // namespace renaming
