#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace snakemin {

/// Philox4x32-10 counter-based generator.
///
/// The key is derived from the master seed and the high half of the counter
/// holds the stream id, so every (master_seed, stream_id) pair addresses its
/// own sequence without any shared state between replicates.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// One reproducible random stream per Monte Carlo replicate.
///
/// Satisfies UniformRandomBitGenerator, so the standard distributions can be
/// driven directly from it.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
        : master_seed_(master_seed), stream_id_(stream_id) {
        key_ = {static_cast<std::uint32_t>(master_seed),
                static_cast<std::uint32_t>(master_seed >> 32)};
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (used_ == 2) refill();
        const result_type out = (std::uint64_t{buffer_[2 * used_]} << 32) | buffer_[2 * used_ + 1];
        ++used_;
        return out;
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_(*this); }

    double exponential() noexcept { return -std::log(uniform()); }

    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        std::poisson_distribution<std::uint64_t> dist(mean);
        return dist(*this);
    }

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Derive an independent child stream (used when one replicate needs
    /// several logically separate sources, e.g. per-subtree streams).
    RngStream split(std::uint64_t salt) const noexcept {
        return RngStream(mix(master_seed_ ^ mix(stream_id_ + 0x632BE59BD9B4E019ull)), salt);
    }

private:
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    void refill() noexcept {
        const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(counter_),
                                         static_cast<std::uint32_t>(counter_ >> 32),
                                         static_cast<std::uint32_t>(stream_id_),
                                         static_cast<std::uint32_t>(stream_id_ >> 32)};
        buffer_ = Philox4x32::block(ctr, key_);
        ++counter_;
        used_ = 0;
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    Philox4x32::Key key_{};
    std::uint64_t counter_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 2;
    // Ziggurat; roughly one 64-bit draw per normal.
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream id layout used by the verification harness: a check tag, a
/// sub-population tag and the replicate index.
constexpr std::uint64_t stream_id(std::uint32_t tag, std::uint32_t sub, std::uint64_t replicate) noexcept {
    return (std::uint64_t{tag} << 48) ^ (std::uint64_t{sub} << 36) ^ replicate;
}

}  // namespace snakemin
