#pragma once

#include <cstdint>
#include <random>

namespace perdisp {

/// Deterministic, splittable source of uniform variates.
///
/// Each stream is keyed by (seed, replication, stream id) and owns its own
/// engine. A queue's samples do not depend on how work is scheduled.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream_id);

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform_open();

    /// Uniform integer in [0, bound), unbiased; bound > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent engine seeds.
std::uint64_t mix64(std::uint64_t x);

// Reserved stream ids.
inline constexpr std::uint64_t kDispatcherStream = 0;
inline constexpr std::uint64_t kOffsetStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;
/// Service streams of queue with flat index i use kFirstQueueStream + i.
inline constexpr std::uint64_t kFirstQueueStream = 16;

}  // namespace perdisp
