#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace smds {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed and a path of
// indices, e.g. (seed, slot, cluster). The same path always yields the
// same stream, which is what keeps parallel runs deterministic.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(root);
    for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(root, path));
}

// Stream tags so that unrelated consumers of one seed never collide.
namespace stream {
inline constexpr std::uint64_t partition = 0x5041525449ULL;
inline constexpr std::uint64_t cluster = 0x434c5553ULL;
inline constexpr std::uint64_t init = 0x494e4954ULL;
inline constexpr std::uint64_t eval = 0x4556414cULL;
inline constexpr std::uint64_t mobility = 0x4d4f4249ULL;
inline constexpr std::uint64_t protocol = 0x50524f54ULL;
inline constexpr std::uint64_t deploy = 0x4445504cULL;
inline constexpr std::uint64_t measure = 0x4d454153ULL;
}  // namespace stream

}  // namespace smds
