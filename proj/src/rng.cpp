#include "atomize/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace atomize {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) {
    // FNV-1a, then mixed.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return splitmix64(h);
}

Stream Stream::derive(std::uint64_t seed, std::string_view tag,
                      std::initializer_list<std::uint64_t> coords) {
    std::uint64_t key = splitmix64(seed ^ hash_string(tag));
    for (std::uint64_t c : coords) {
        key = splitmix64(key ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
    }
    return Stream(key);
}

std::uint64_t Stream::next_u64() {
    const std::uint64_t i = counter_++;
    return splitmix64(key_ + i * kGolden);
}

double Stream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::uniform_open_low() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

std::uint64_t Stream::below(std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("Stream::below: n must be positive");
    }
    // Lemire's rejection method; unbiased.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::pair<double, double> Stream::normal_pair() {
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::vector<std::size_t> permutation(std::size_t n, Stream& stream) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(stream.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace atomize
