#pragma once

// Counter-based random number generation (Philox4x32-10).
//
// Every stream is a pure function of (key, counter), so independent
// sites/bags/patches can be generated in any order and still produce
// identical values, and stream state serializes as a single counter.

#include <array>
#include <cmath>
#include <cstdint>

namespace cate {

namespace detail {

inline void philox_mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * static_cast<uint64_t>(b);
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}

}  // namespace detail

// One Philox4x32-10 block: 4 output words from a 128-bit counter and 64-bit key.
inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                          std::array<uint32_t, 2> key) {
    constexpr uint32_t kMul0 = 0xD2511F53u;
    constexpr uint32_t kMul1 = 0xCD9E8D57u;
    constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        detail::philox_mulhilo(kMul0, ctr[0], hi0, lo0);
        detail::philox_mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

// Fixed tags for the third/fourth counter words, so distinct purposes
// never share a stream even under the same seed.
namespace rng_tag {
constexpr uint32_t kWorldAnchor = 0xFFFF0001u;
constexpr uint32_t kWorldSiteOffset = 0xFFFF0002u;
constexpr uint32_t kWorldBagMeta = 0xFFFF0003u;
constexpr uint32_t kTrainerInit = 0xFFFF0010u;
constexpr uint32_t kTrainerLoop = 0xFFFF0011u;
constexpr uint32_t kSplitShuffle = 0xFFFF0020u;
constexpr uint32_t kRunSeed = 0xFFFF0021u;
constexpr uint32_t kGeneric = 0xFFFF0100u;
}  // namespace rng_tag

// Sequential view over one Philox stream identified by (seed, stream, substream).
// The serializable state is the count of 32-bit words consumed.
class RngStream {
public:
    RngStream(uint64_t seed, uint32_t stream, uint32_t substream = 0)
        : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
          stream_(stream),
          substream_(substream) {}

    uint32_t next_u32() {
        uint64_t block = nwords_ / 4;
        int lane = static_cast<int>(nwords_ % 4);
        if (lane == 0) {
            buf_ = philox4x32({static_cast<uint32_t>(block),
                               static_cast<uint32_t>(block >> 32), substream_, stream_},
                              key_);
        }
        ++nwords_;
        return buf_[lane];
    }

    uint64_t next_u64() {
        uint64_t lo = next_u32();
        uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform double in the open interval (0,1).
    double uniform() {
        return (static_cast<double>(next_u32()) + 0.5) * 0x1p-32;
    }

    // Standard normal via Box-Muller. Uses two words per draw and keeps no
    // cache, so the stream state stays a plain counter.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n) via rejection (no modulo bias).
    uint32_t next_below(uint32_t n) {
        uint64_t bound = (uint64_t(1) << 32) / n * n;
        uint32_t x = next_u32();
        while (x >= bound) x = next_u32();
        return x % n;
    }

    uint64_t state() const { return nwords_; }

    void restore(uint64_t state) {
        nwords_ = state;
        uint64_t block = nwords_ / 4;
        if (nwords_ % 4 != 0) {
            buf_ = philox4x32({static_cast<uint32_t>(block),
                               static_cast<uint32_t>(block >> 32), substream_, stream_},
                              key_);
        }
    }

private:
    std::array<uint32_t, 2> key_;
    uint32_t stream_;
    uint32_t substream_;
    uint64_t nwords_ = 0;
    std::array<uint32_t, 4> buf_{};
};

// Stateless 64-bit value for derived seeds: one block of the (seed, tag, index) stream.
inline uint64_t derive_u64(uint64_t seed, uint32_t tag, uint32_t index) {
    auto out = philox4x32({index, 0, tag, 0xDE21AE5Eu},
                          {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)});
    return (static_cast<uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace cate
