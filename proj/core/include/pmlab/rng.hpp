#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is identified by a 64-bit key and a 64-bit stream id; the n-th block
// of output is a pure function of (key, stream, n). Nothing depends on the
// standard library's distribution implementations, so draws are identical on
// every platform and compiler.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace pmlab {

/// Philox4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// SplitMix64 finaliser, used to derive per-session keys from a master seed.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t index);

enum class StreamId : std::uint32_t {
    Signals = 1,
    Shuffle = 2,
    Realization = 3,
    Outcome = 4,
    Agents = 5,
};

class RandomStream {
public:
    RandomStream(std::uint64_t key, std::uint32_t stream);
    RandomStream(std::uint64_t key, StreamId stream) : RandomStream(key, static_cast<std::uint32_t>(stream)) {}

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound), unbiased (Lemire's method with rejection).
    std::uint64_t below(std::uint64_t bound);
    bool bernoulli(double p);
    /// Sum of `trials` independent Bernoulli(p) draws.
    int binomial(int trials, double p);
    /// Standard normal via Box-Muller (one pair per two uniforms, spare discarded).
    double normal();

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t blocks_consumed() const noexcept { return counter_; }

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

/// Uniformly random permutation of 0..n-1.
std::vector<int> random_permutation(RandomStream& rng, int n);

}  // namespace pmlab
