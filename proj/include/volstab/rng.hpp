#pragma once

#include <cstdint>
#include <limits>

namespace volstab {

/**
 * Counter-based SplitMix64 generator.
 *
 * Output k of the stream with key K is mix(K + k * gamma), so a stream is
 * fully determined by its key and can be re-created anywhere. Keys for
 * nested substreams are obtained with derive(), e.g.
 * derive(derive(seed, series), day).
 *
 * Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Key of child stream `child` below `parent`.
    static constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t child) noexcept {
        return mix(mix(parent) ^ mix(child + 0xd1b54a32d192ed03ULL));
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace volstab
