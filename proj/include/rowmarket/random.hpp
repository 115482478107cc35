#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace rowmarket {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// A named random substream derived from one root seed. Engines obtained from
/// the same (seed, label, index) are identical; distinct labels or indices give
/// statistically independent engines.
class Substream {
public:
    explicit Substream(std::uint64_t seed, std::string label = "root")
        : seed_(seed), label_(std::move(label)) {}

    [[nodiscard]] Substream child(std::string_view name) const {
        return Substream(seed_, label_ + "/" + std::string(name));
    }

    [[nodiscard]] std::mt19937_64 engine(std::uint64_t index = 0) const {
        std::uint64_t key = splitmix64(seed_);
        key = splitmix64(key ^ fnv1a64(label_));
        key = splitmix64(key ^ index);
        const std::uint64_t key2 = splitmix64(key);
        std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                          static_cast<std::uint32_t>(key2), static_cast<std::uint32_t>(key2 >> 32)};
        return std::mt19937_64(seq);
    }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] const std::string& label() const { return label_; }

private:
    std::uint64_t seed_;
    std::string label_;
};

}  // namespace rowmarket
