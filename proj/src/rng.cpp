#include "mathforge/rng.hpp"

#include "mathforge/digest.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace mathforge {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    std::string material = std::to_string(seed);
    material.push_back(':');
    material.append(tag);
    material.push_back(':');
    material += std::to_string(index);
    std::string hex = sha256_hex(material);
    return std::stoull(hex.substr(0, 16), nullptr, 16);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below bound must be positive");
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("Rng::between empty range");
    auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == std::numeric_limits<std::uint64_t>::max()) {
        return static_cast<std::int64_t>(engine_());
    }
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + below(span + 1));
}

} // namespace mathforge
