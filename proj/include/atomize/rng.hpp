#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <utility>
#include <vector>

namespace atomize {

// Counter-based stream: the i-th draw is a pure function of (key, i), so any
// substream can be derived from a seed and a tag path without touching the
// state of any other stream. Draws are portable across platforms.
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    // Key derived from a root seed, a tag and optional integer coordinates
    // (epoch, batch, ...).
    static Stream derive(std::uint64_t seed, std::string_view tag,
                         std::initializer_list<std::uint64_t> coords = {});

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Uniform in (0, 1]; safe for log().
    double uniform_open_low();
    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    // Standard normal pair via Box-Muller.
    std::pair<double, double> normal_pair();

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view s);

// Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Stream& stream);

}  // namespace atomize
