#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ranksel {

/// Engine used for every random stream in the library.
using Engine = std::mt19937_64;

/// splitmix64 finalizer; a bijective mixer on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent child seed from a master seed and a key path.
/// The result depends only on the values, never on call order, which is what
/// keeps parallel schedules bit-identical to serial ones.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> keys) noexcept
{
    std::uint64_t h = mix64(seed);
    for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
{
    return Engine(derive_seed(seed, keys));
}

/// Fair coin from one engine draw.
inline bool coin(Engine& eng) { return (eng() >> 63) != 0; }

// Stream tags so that different consumers of one master seed never collide.
namespace stream {
inline constexpr std::uint64_t ties = 0x7469657300000001ULL;
inline constexpr std::uint64_t bootstrap = 0x626f6f7400000002ULL;
inline constexpr std::uint64_t split = 0x73706c6900000003ULL;
inline constexpr std::uint64_t data = 0x6461746100000004ULL;
inline constexpr std::uint64_t paired = 0x7061697200000005ULL;
} // namespace stream

} // namespace ranksel
