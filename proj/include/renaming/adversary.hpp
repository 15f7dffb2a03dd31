#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "renaming/core.hpp"
#include "renaming/netsim.hpp"
#include "renaming/opbr.hpp"
#include "renaming/rng.hpp"
#include "renaming/twostep.hpp"

namespace renaming {

// Parameters for one faulty process. Unset fields fall back to values
// derived deterministically from the run configuration.
struct StrategySpec {
    std::string kind;
    int from_round = 1;                  // crash: behaves correctly before this round
    std::vector<std::int64_t> pool;      // equivocate-ids: ids announced per link
    std::vector<std::int64_t> fake_ids;  // collude-inject: shared fake ids
    Rational epsilon = Rational(3, 2);   // skew-votes: vote offset
    std::vector<std::int64_t> targets;   // skew-votes: ids to shift (empty = all)
    std::int64_t claimed_id = 0;         // id used where the strategy acts like a process
};

inline const std::vector<std::string>& adversary_catalog() {
    static const std::vector<std::string> kinds = {
        "crash",          "silent",       "equivocate-ids", "collude-inject",
        "skew-votes",     "oversize-echo", "random-byz"};
    return kinds;
}

namespace detail {

inline OutgoingBatch broadcast_batch(int n, const Msg& msg) {
    OutgoingBatch batch;
    for (LinkLabel l = 1; l < n; ++l) batch.emplace(l, msg);
    return batch;
}

inline std::unique_ptr<Protocol> make_inner_protocol(Algorithm a, ProcId id,
                                                     const SystemParams& params) {
    if (a == Algorithm::TwoStep) return std::make_unique<TwoStepProcess>(id, params);
    return std::make_unique<OpbrProcess>(id, params, opbr_variant(a));
}

// First `count` positive ids not colliding with `avoid`, within [1, n_max].
inline std::vector<ProcId> fresh_ids(std::size_t count, const std::set<ProcId>& avoid,
                                     std::int64_t n_max) {
    std::vector<ProcId> out;
    for (std::int64_t v = 1; v <= n_max && out.size() < count; ++v)
        if (!avoid.contains(ProcId{v})) out.push_back(ProcId{v});
    return out;
}

inline std::set<ProcId> correct_id_set(const AdversaryContext& ctx) {
    std::set<ProcId> out;
    for (const auto& [index, id] : ctx.correct_ids) out.insert(id);
    return out;
}

}  // namespace detail

class SilentAdversary final : public Adversary {
public:
    OutgoingBatch plan(int, const AdversaryContext&, const TraceLog&) override { return {}; }
};

// Behaves exactly like a correct process until from_round, then stops
// sending for good. Crash-at-round-1 is equivalent to Silent.
class CrashAdversary final : public Adversary {
public:
    CrashAdversary(int self_index, int from_round, std::unique_ptr<Protocol> inner)
        : self_(self_index), from_round_(from_round), inner_(std::move(inner)) {}

    OutgoingBatch plan(int round, const AdversaryContext& ctx, const TraceLog&) override {
        if (round >= from_round_) return {};
        if (std::optional<Msg> msg = inner_->emit(round))
            return detail::broadcast_batch(ctx.params.n, *msg);
        return {};
    }

    void observe(int round, const RoundInbox& inbox) override {
        if (round < from_round_) inner_->absorb(round, inbox);
    }

private:
    int self_;
    int from_round_;
    std::unique_ptr<Protocol> inner_;
};

// Announces a different pool id on every link in Step 1 and keeps echoing
// mutually inconsistent id sets afterwards. Each receiver sees an internally
// consistent story; no two receivers see the same one.
class EquivocateIdsAdversary final : public Adversary {
public:
    EquivocateIdsAdversary(int self_index, std::vector<std::int64_t> pool)
        : self_(self_index), pool_(std::move(pool)) {}

    OutgoingBatch plan(int round, const AdversaryContext& ctx, const TraceLog&) override {
        const int n = ctx.params.n;
        if (pool_.empty()) derive_pool(ctx);

        OutgoingBatch batch;
        if (round == 1) {
            for (LinkLabel l = 1; l < n; ++l)
                batch.emplace(l, Msg(IdAnnounce{ProcId{pool_[static_cast<std::size_t>(l - 1) % pool_.size()]}}));
            return batch;
        }
        if (ctx.algorithm == Algorithm::TwoStep) {
            for (LinkLabel l = 1; l < n; ++l)
                batch.emplace(l, Msg(MultiEcho{subset_for(ctx, round, l)}));
            return batch;
        }
        if (round == 2) {
            for (LinkLabel l = 1; l < n; ++l)
                batch.emplace(l, Msg(EchoSet{subset_for(ctx, round, l)}));
            return batch;
        }
        if (round <= 4) {
            for (LinkLabel l = 1; l < n; ++l)
                batch.emplace(l, Msg(ReadySet{subset_for(ctx, round, l)}));
            return batch;
        }
        return {};  // no votes; the approximation runs on correct votes alone
    }

private:
    void derive_pool(const AdversaryContext& ctx) {
        // Values interleaving the default 10,20,... id spacing.
        std::set<ProcId> avoid = detail::correct_id_set(ctx);
        for (int i = 1; i <= ctx.params.n; ++i) {
            std::int64_t v = 10 * i + 5;
            if (v <= ctx.params.n_max && !avoid.contains(ProcId{v})) pool_.push_back(v);
        }
        if (pool_.empty()) pool_.push_back(1);
    }

    std::set<ProcId> subset_for(const AdversaryContext& ctx, int round, LinkLabel link) {
        SplitMix64 rng(mix_seed(ctx.seed, (static_cast<std::uint64_t>(self_) << 24) ^
                                              (static_cast<std::uint64_t>(round) << 12) ^
                                              static_cast<std::uint64_t>(link)));
        std::set<ProcId> out;
        for (std::int64_t v : pool_)
            if (rng.coin()) out.insert(ProcId{v});
        for (const auto& [index, id] : ctx.correct_ids)
            if (rng.coin()) out.insert(id);
        return out;
    }

    int self_;
    std::vector<std::int64_t> pool_;
};

// All faulty processes jointly push a shared list of fake ids into the
// accepted sets of the correct processes. Each fake id is announced to just
// enough correct processes that the faulty echoes can lift it over the N-t
// threshold everywhere, which is what makes the accepted-set bound tight.
class ColludeInjectAdversary final : public Adversary {
public:
    ColludeInjectAdversary(int self_index, std::vector<std::int64_t> fakes)
        : self_(self_index), fakes_(std::move(fakes)) {}

    OutgoingBatch plan(int round, const AdversaryContext& ctx, const TraceLog&) override {
        const int n = ctx.params.n;
        if (!prepared_) prepare(ctx);

        OutgoingBatch batch;
        if (round == 1) {
            for (LinkLabel l = 1; l < n; ++l) {
                int target = ctx.topology->peer(self_, l);
                auto it = announce_.find(target);
                ProcId id = it != announce_.end() ? it->second : fakes_front();
                batch.emplace(l, Msg(IdAnnounce{id}));
            }
            return batch;
        }
        if (ctx.algorithm == Algorithm::TwoStep) {
            return detail::broadcast_batch(n, Msg(MultiEcho{twostep_echo_}));
        }
        if (round == 2) return detail::broadcast_batch(n, Msg(EchoSet{support_}));
        if (round <= 4) return detail::broadcast_batch(n, Msg(ReadySet{support_}));
        return {};
    }

private:
    ProcId fakes_front() const { return ProcId{fakes_.empty() ? 1 : fakes_.front()}; }

    void prepare(const AdversaryContext& ctx) {
        prepared_ = true;
        const int n = ctx.params.n;
        const int t = ctx.params.t;
        const int f = static_cast<int>(ctx.faulty_indices.size());
        std::set<ProcId> correct = detail::correct_id_set(ctx);

        // Echoers needed per fake so that faulty echoes close the gap to N-t.
        const int per_fake = std::max(1, n - t - f);
        std::vector<std::pair<int, int>> slots;  // (faulty index, correct target index)
        for (int fi : ctx.faulty_indices)
            for (const auto& [ci, id] : ctx.correct_ids) slots.emplace_back(fi, ci);

        if (fakes_.empty()) {
            std::size_t max_fakes = slots.size() / static_cast<std::size_t>(per_fake);
            for (ProcId id : detail::fresh_ids(max_fakes, correct, ctx.params.n_max))
                fakes_.push_back(id.value);
        }

        // Global assignment, identical at every colluding process.
        for (std::size_t s = 0; s < slots.size(); ++s) {
            std::size_t k = s / static_cast<std::size_t>(per_fake);
            ProcId fake = k < fakes_.size() ? ProcId{fakes_[k]} : fakes_front();
            if (slots[s].first == self_) announce_[slots[s].second] = fake;
        }

        support_ = correct;
        for (std::int64_t v : fakes_) support_.insert(ProcId{v});

        // twostep echo: the correct ids plus as many shared fakes as the
        // size-N message budget allows.
        twostep_echo_ = correct;
        for (std::int64_t v : fakes_) {
            if (twostep_echo_.size() >= static_cast<std::size_t>(n)) break;
            twostep_echo_.insert(ProcId{v});
        }
    }

    int self_;
    std::vector<std::int64_t> fakes_;
    bool prepared_ = false;
    std::map<int, ProcId> announce_;  // correct target index -> fake id announced to it
    std::set<ProcId> support_;
    std::set<ProcId> twostep_echo_;
};

// Runs the protocol correctly but, in the voting phase, sends each receiver
// a rank array shifted by +/-epsilon. The shift is applied to a suffix (or
// prefix) of the id order, so the array stays monotone with delta gaps and
// passes isValid: this is the strongest vote-level lie the validity check
// admits. In twostep runs the analogue is echoing per-receiver fake ids on
// top of the correct ones.
class SkewVotesAdversary final : public Adversary {
public:
    SkewVotesAdversary(int self_index, Rational epsilon, std::vector<std::int64_t> targets,
                       std::unique_ptr<Protocol> inner)
        : self_(self_index), epsilon_(std::move(epsilon)), targets_(std::move(targets)),
          inner_(std::move(inner)) {}

    OutgoingBatch plan(int round, const AdversaryContext& ctx, const TraceLog&) override {
        const int n = ctx.params.n;
        if (ctx.algorithm == Algorithm::TwoStep) {
            if (round == 1) {
                if (std::optional<Msg> msg = inner_->emit(round))
                    return detail::broadcast_batch(n, *msg);
                return {};
            }
            OutgoingBatch batch;
            for (LinkLabel l = 1; l < n; ++l)
                batch.emplace(l, Msg(MultiEcho{twostep_echo_for(ctx, l)}));
            return batch;
        }

        if (round <= 4) {
            if (std::optional<Msg> msg = inner_->emit(round))
                return detail::broadcast_batch(n, *msg);
            return {};
        }

        const auto* opbr = static_cast<const OpbrProcess*>(inner_.get());
        OutgoingBatch batch;
        for (LinkLabel l = 1; l < n; ++l) {
            int receiver = ctx.topology->peer(self_, l);
            batch.emplace(l, Msg(AaVote{skewed(opbr->ranks(), receiver % 2 == 0)}));
        }
        return batch;
    }

    void observe(int round, const RoundInbox& inbox) override { inner_->absorb(round, inbox); }

private:
    RanksMap skewed(const RanksMap& base, bool up) const {
        std::set<ProcId> targets;
        if (targets_.empty()) {
            for (const auto& [id, r] : base) targets.insert(id);
        } else {
            for (std::int64_t v : targets_)
                if (base.contains(ProcId{v})) targets.insert(ProcId{v});
        }
        if (targets.empty()) return base;

        RanksMap out = base;
        if (up) {
            // Shift the suffix starting at the smallest target upward.
            ProcId first = *targets.begin();
            for (auto& [id, r] : out)
                if (id >= first) r += epsilon_;
        } else {
            ProcId last = *targets.rbegin();
            for (auto& [id, r] : out)
                if (id <= last) r -= epsilon_;
        }
        return out;
    }

    std::set<ProcId> twostep_echo_for(const AdversaryContext& ctx, LinkLabel link) const {
        std::set<ProcId> correct = detail::correct_id_set(ctx);
        std::size_t room = static_cast<std::size_t>(ctx.params.n) - correct.size();
        std::size_t fakes = std::min<std::size_t>(static_cast<std::size_t>(ctx.params.t), room);
        std::vector<ProcId> pool =
            detail::fresh_ids(2 * static_cast<std::size_t>(ctx.params.t), correct, ctx.params.n_max);
        std::set<ProcId> out = correct;
        for (std::size_t i = 0; i < fakes && !pool.empty(); ++i)
            out.insert(pool[(static_cast<std::size_t>(link) + i) % pool.size()]);
        return out;
    }

    int self_;
    Rational epsilon_;
    std::vector<std::int64_t> targets_;
    std::unique_ptr<Protocol> inner_;
};

// Inflates every set-carrying payload past the N-id budget. twostep must
// reject each of these MultiEchos outright; opbr has no size check, so the
// oversized sets and rank arrays must instead be neutralized by thresholds
// and trimming.
class OversizeEchoAdversary final : public Adversary {
public:
    OversizeEchoAdversary(int self_index, std::unique_ptr<Protocol> inner)
        : self_(self_index), inner_(std::move(inner)) {}

    OutgoingBatch plan(int round, const AdversaryContext& ctx, const TraceLog&) override {
        const int n = ctx.params.n;
        std::optional<Msg> msg = inner_->emit(round);
        if (round == 1) {
            if (msg) return detail::broadcast_batch(n, *msg);
            return {};
        }
        if (ctx.algorithm == Algorithm::TwoStep)
            return detail::broadcast_batch(
                n, Msg(MultiEcho{oversized(ctx, msg ? std::get<MultiEcho>(*msg).ids : std::set<ProcId>{})}));
        if (round == 2)
            return detail::broadcast_batch(
                n, Msg(EchoSet{oversized(ctx, msg ? std::get<EchoSet>(*msg).ids : std::set<ProcId>{})}));
        if (round <= 4)
            return detail::broadcast_batch(
                n, Msg(ReadySet{oversized(ctx, msg ? std::get<ReadySet>(*msg).ids : std::set<ProcId>{})}));
        return detail::broadcast_batch(
            n, Msg(AaVote{inflated(ctx, std::get<AaVote>(*msg).ranks)}));
    }

    void observe(int round, const RoundInbox& inbox) override { inner_->absorb(round, inbox); }

private:
    // Pad a set to N+1 ids.
    std::set<ProcId> oversized(const AdversaryContext& ctx, std::set<ProcId> ids) const {
        std::size_t want = static_cast<std::size_t>(ctx.params.n) + 1;
        for (ProcId id : detail::fresh_ids(want, ids, ctx.params.n_max)) {
            if (ids.size() >= want) break;
            ids.insert(id);
        }
        return ids;
    }

    // Extend a rank array to N+1 entries with ids above every existing key;
    // the result still passes isValid, which only inspects timely ids.
    RanksMap inflated(const AdversaryContext& ctx, RanksMap ranks) const {
        std::size_t want = static_cast<std::size_t>(ctx.params.n) + 1;
        if (ranks.empty()) return ranks;
        std::int64_t next = ranks.rbegin()->first.value + 1;
        Rational v = ranks.rbegin()->second;
        while (ranks.size() < want && next <= ctx.params.n_max) {
            v += Rational(2);
            ranks.emplace(ProcId{next}, v);
            ++next;
        }
        return ranks;
    }

    int self_;
    std::unique_ptr<Protocol> inner_;
};

// Seeded noise: every (round, link) independently draws a message kind and
// payload, clipped to codec-representable values (ids within [1, n_max],
// small rationals).
class RandomByzAdversary final : public Adversary {
public:
    explicit RandomByzAdversary(int self_index) : self_(self_index) {}

    OutgoingBatch plan(int round, const AdversaryContext& ctx, const TraceLog&) override {
        OutgoingBatch batch;
        for (LinkLabel l = 1; l < ctx.params.n; ++l) {
            SplitMix64 rng(mix_seed(ctx.seed, (static_cast<std::uint64_t>(self_) << 32) ^
                                                  (static_cast<std::uint64_t>(round) << 16) ^
                                                  static_cast<std::uint64_t>(l)));
            if (std::optional<Msg> msg = draw(ctx, rng)) batch.emplace(l, *msg);
        }
        return batch;
    }

private:
    std::optional<Msg> draw(const AdversaryContext& ctx, SplitMix64& rng) const {
        switch (rng.below(6)) {
            case 0: return std::nullopt;
            case 1: return Msg(IdAnnounce{random_id(ctx, rng)});
            case 2: return Msg(EchoSet{random_set(ctx, rng)});
            case 3: return Msg(ReadySet{random_set(ctx, rng)});
            case 4: return Msg(MultiEcho{random_set(ctx, rng)});
            default: return Msg(AaVote{random_ranks(ctx, rng)});
        }
    }

    ProcId random_id(const AdversaryContext& ctx, SplitMix64& rng) const {
        return ProcId{rng.range(1, ctx.params.n_max)};
    }

    std::set<ProcId> random_set(const AdversaryContext& ctx, SplitMix64& rng) const {
        std::set<ProcId> out;
        std::uint64_t size = rng.below(static_cast<std::uint64_t>(ctx.params.n) + 2);
        for (std::uint64_t i = 0; i < size; ++i) out.insert(random_id(ctx, rng));
        return out;
    }

    RanksMap random_ranks(const AdversaryContext& ctx, SplitMix64& rng) const {
        RanksMap out;
        std::uint64_t size = rng.below(static_cast<std::uint64_t>(ctx.params.n) + 2);
        for (std::uint64_t i = 0; i < size; ++i)
            out[random_id(ctx, rng)] = Rational(rng.range(-1000000, 1000000), rng.range(1, 10000));
        return out;
    }

    int self_;
};

inline std::unique_ptr<Adversary> make_adversary(const StrategySpec& spec, int self_index,
                                                 const SystemParams& params, Algorithm algorithm) {
    ProcId claimed{spec.claimed_id != 0 ? spec.claimed_id : 10 * self_index};
    if (spec.kind == "silent") return std::make_unique<SilentAdversary>();
    if (spec.kind == "crash")
        return std::make_unique<CrashAdversary>(
            self_index, spec.from_round, detail::make_inner_protocol(algorithm, claimed, params));
    if (spec.kind == "equivocate-ids")
        return std::make_unique<EquivocateIdsAdversary>(self_index, spec.pool);
    if (spec.kind == "collude-inject")
        return std::make_unique<ColludeInjectAdversary>(self_index, spec.fake_ids);
    if (spec.kind == "skew-votes")
        return std::make_unique<SkewVotesAdversary>(
            self_index, spec.epsilon, spec.targets,
            detail::make_inner_protocol(algorithm, claimed, params));
    if (spec.kind == "oversize-echo")
        return std::make_unique<OversizeEchoAdversary>(
            self_index, detail::make_inner_protocol(algorithm, claimed, params));
    if (spec.kind == "random-byz") return std::make_unique<RandomByzAdversary>(self_index);
    throw ConfigError("unknown adversary strategy: " + spec.kind);
}

}  // namespace renaming
