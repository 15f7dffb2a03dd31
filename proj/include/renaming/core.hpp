#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "renaming/rational.hpp"

namespace renaming {

// Original process identifier. Correct processes hold distinct values in
// [1, n_max]; faulty processes may claim anything in that range.
struct ProcId {
    std::int64_t value = 0;
    friend auto operator<=>(const ProcId&, const ProcId&) = default;
};

// Label of an incoming/outgoing link as seen by one process. Labels run
// 1..n and label n is the self-loop; a receiver learns the label, never the
// sender's ProcId.
using LinkLabel = int;

enum class Algorithm { OpbrLog, OpbrConst, TwoStep };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::OpbrLog: return "opbr-log";
        case Algorithm::OpbrConst: return "opbr-const";
        case Algorithm::TwoStep: return "twostep";
    }
    return "?";
}

inline Algorithm algorithm_from_name(const std::string& s) {
    if (s == "opbr-log") return Algorithm::OpbrLog;
    if (s == "opbr-const") return Algorithm::OpbrConst;
    if (s == "twostep") return Algorithm::TwoStep;
    throw std::invalid_argument("unknown algorithm: " + s);
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Signals a state transition that is impossible while at most t processes
// are faulty; reaching one means the implementation is wrong, so the run is
// aborted rather than patched over.
struct InternalProtocolError : std::logic_error {
    using std::logic_error::logic_error;
};

struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SystemParams {
    int n = 0;               // process count N
    int t = 0;               // fault bound
    std::int64_t n_max = 0;  // original-namespace bound

    // Fault-bound constraint depends on the selected algorithm.
    void validate(Algorithm a) const {
        if (n < 1) throw ConfigError("n must be positive");
        if (t < 0) throw ConfigError("t must be non-negative");
        if (n_max < n) throw ConfigError("n_max must be >= n");
        switch (a) {
            case Algorithm::OpbrLog:
                if (n <= 3 * t) throw ConfigError("opbr-log requires N > 3t");
                break;
            case Algorithm::OpbrConst:
                if (n <= t * t + 2 * t) throw ConfigError("opbr-const requires N > t^2+2t");
                break;
            case Algorithm::TwoStep:
                if (n <= 2 * t * t + t) throw ConfigError("twostep requires N > 2t^2+t");
                break;
        }
    }
};

// Stretch factor applied to initial ranks: 1 + 1/(3(N+t)). The gap of at
// least delta between consecutive ranks is what keeps rounded names from
// clashing after approximation.
inline Rational delta(const SystemParams& p) {
    return Rational(1) + Rational(1, 3 * (static_cast<std::int64_t>(p.n) + p.t));
}

// 1-based position of v in the ascending ordered set.
inline int rank_in(const std::set<ProcId>& set, ProcId v) {
    int pos = 1;
    for (ProcId id : set) {
        if (id == v) return pos;
        ++pos;
    }
    throw std::out_of_range("rank_in: element not in set");
}

inline std::int64_t round_nearest(const Rational& x) { return x.round_half_up(); }

// Ordered multiset of rank values; duplicates permitted. Kept as a sorted
// list rather than a count-map because select_t indexes by position.
class Multiset {
public:
    Multiset() = default;
    explicit Multiset(std::vector<Rational> values) : values_(std::move(values)) {
        std::sort(values_.begin(), values_.end());
    }

    void insert(const Rational& v) {
        values_.insert(std::upper_bound(values_.begin(), values_.end(), v), v);
    }

    const Rational& at(std::size_t i) const {
        if (i >= values_.size()) throw std::out_of_range("Multiset: index out of range");
        return values_[i];
    }

    const Rational& min() const { return at(0); }
    const Rational& max() const { return at(values_.size() - 1); }

    // Remove exactly one occurrence of the extreme value.
    void remove_min() {
        if (values_.empty()) throw std::out_of_range("Multiset: empty");
        values_.erase(values_.begin());
    }
    void remove_max() {
        if (values_.empty()) throw std::out_of_range("Multiset: empty");
        values_.pop_back();
    }

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    Rational sum() const {
        Rational s;
        for (const Rational& v : values_) s += v;
        return s;
    }
    Rational average() const {
        if (values_.empty()) throw std::out_of_range("Multiset: average of empty multiset");
        return sum() / Rational(static_cast<std::int64_t>(values_.size()));
    }

    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    friend bool operator==(const Multiset&, const Multiset&) = default;

private:
    std::vector<Rational> values_;
};

// Sparse map from original id to its (possibly fractional) rank. std::map
// iteration gives keys in increasing ProcId order, which the validity check
// depends on.
using RanksMap = std::map<ProcId, Rational>;

// Wire messages. The per-id Echo/Ready broadcasts of the pseudocode are one
// step each, so they travel as a single composite message carrying the id
// set; MultiEcho is duplicate-free by construction of the set type.
struct IdAnnounce {
    ProcId id;
    friend bool operator==(const IdAnnounce&, const IdAnnounce&) = default;
};
struct EchoSet {
    std::set<ProcId> ids;
    friend bool operator==(const EchoSet&, const EchoSet&) = default;
};
struct ReadySet {
    std::set<ProcId> ids;
    friend bool operator==(const ReadySet&, const ReadySet&) = default;
};
struct AaVote {
    RanksMap ranks;
    friend bool operator==(const AaVote&, const AaVote&) = default;
};
struct MultiEcho {
    std::set<ProcId> ids;
    friend bool operator==(const MultiEcho&, const MultiEcho&) = default;
};

using Msg = std::variant<IdAnnounce, EchoSet, ReadySet, AaVote, MultiEcho>;

inline const char* msg_kind(const Msg& m) {
    struct Visitor {
        const char* operator()(const IdAnnounce&) const { return "id"; }
        const char* operator()(const EchoSet&) const { return "echo"; }
        const char* operator()(const ReadySet&) const { return "ready"; }
        const char* operator()(const AaVote&) const { return "aa"; }
        const char* operator()(const MultiEcho&) const { return "multiecho"; }
    };
    return std::visit(Visitor{}, m);
}

// Number of id entries a message carries; the per-message size metric of
// the complexity analysis.
inline std::size_t id_count(const Msg& m) {
    struct Visitor {
        std::size_t operator()(const IdAnnounce&) const { return 1; }
        std::size_t operator()(const EchoSet& e) const { return e.ids.size(); }
        std::size_t operator()(const ReadySet& r) const { return r.ids.size(); }
        std::size_t operator()(const AaVote& a) const { return a.ranks.size(); }
        std::size_t operator()(const MultiEcho& e) const { return e.ids.size(); }
    };
    return std::visit(Visitor{}, m);
}

}  // namespace renaming
