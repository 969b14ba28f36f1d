#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mathforge {

/// Derives an independent stream seed from a global seed, a tag (e.g. a
/// template digest) and an index. Stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index);

/// mt19937_64 with a platform-independent bounded draw; the standard
/// distributions are implementation-defined and would break seed
/// reproducibility across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi);

private:
    std::mt19937_64 engine_;
};

} // namespace mathforge
