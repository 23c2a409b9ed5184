#include "perdisp/random.hpp"

namespace perdisp {

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream_id)
{
    std::uint64_t key = mix64(seed);
    key = mix64(key ^ replication);
    key = mix64(key ^ (stream_id * 0xd6e8feb86659fd93ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(stream_id)};
    engine_.seed(seq);
}

double RandomStream::uniform_open()
{
    // (k + 0.5) / 2^53 never hits 0 or 1
    const std::uint64_t k = engine_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

std::uint64_t RandomStream::uniform_below(std::uint64_t bound)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % bound;
}

}  // namespace perdisp
