#pragma once

#include <cstdint>

namespace sepm {

// 64-bit mixing step used for key derivation (splitmix64).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// PCG64 (XSL-RR) with an explicit substream selector.  A stream is fully
// determined by (seed, stream_id); distinct stream_ids select distinct odd
// increments and therefore non-overlapping sequences.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream_id) {
        const std::uint64_t s0 = mix64(seed);
        const std::uint64_t s1 = mix64(s0 ^ seed);
        const std::uint64_t t0 = mix64(stream_id ^ 0xda3e39cb94b95bdbULL);
        const std::uint64_t t1 = mix64(t0 ^ stream_id);
        const u128 initstate = (u128(s0) << 64) | s1;
        const u128 initseq = (u128(t0) << 64) | t1;
        state_ = 0;
        inc_ = (initseq << 1) | 1;
        step();
        state_ += initstate;
        step();
    }

    std::uint64_t next_u64() {
        step();
        const std::uint64_t xored = static_cast<std::uint64_t>(state_ >> 64) ^
                                    static_cast<std::uint64_t>(state_);
        const unsigned rot = static_cast<unsigned>(state_ >> 122);
        return (xored >> rot) | (xored << ((-rot) & 63u));
    }

    // Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform double strictly inside (0, 1); safe under log().
    double next_double_pos() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Lemire's multiply-shift with rejection of the biased region.
        u128 m = u128(next_u64()) * u128(n);
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = u128(next_u64()) * u128(n);
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    using u128 = unsigned __int128;
    static constexpr u128 kMult =
        (u128(2549297995355413924ULL) << 64) | 4865540595714422341ULL;

    void step() { state_ = state_ * kMult + inc_; }

    u128 state_{};
    u128 inc_{};
};

}  // namespace sepm
