#pragma once

#include <cstdint>

namespace mmldf {

/// splitmix64 finalizer; cheap, well-mixed, and identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a stream tag.
/// Chainable: derive_seed(derive_seed(seed, trial), dim).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0x2545f4914f6cdd1dULL));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t s1, std::uint64_t s2) {
    return derive_seed(derive_seed(base, s1), s2);
}

}  // namespace mmldf
