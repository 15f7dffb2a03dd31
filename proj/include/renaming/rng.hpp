#pragma once

#include <cstdint>
#include <vector>

namespace renaming {

// Deterministic 64-bit generator (splitmix64). Used instead of <random>
// distributions so that identical seeds give identical traces on every
// standard library implementation.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform-ish value in [0, bound); bound must be > 0. Modulo bias is
    // irrelevant at simulation sizes.
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    // Inclusive range.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool coin() { return (next() & 1u) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Stable way to derive independent substreams from a run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull));
    return g.next();
}

}  // namespace renaming
