// ============================================================================
// common.hpp - error types and deterministic random number utilities
// ============================================================================

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pardinus {

// ----------------------------------------------------------------------------
// Errors. One type per failure condition so callers can catch precisely.
// ----------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define PARDINUS_ERROR(NAME)                                        \
    struct NAME : Error {                                           \
        explicit NAME(const std::string& msg = #NAME) : Error(msg) {} \
    }

PARDINUS_ERROR(FileNotFound);
PARDINUS_ERROR(DecodeError);
PARDINUS_ERROR(IoError);
PARDINUS_ERROR(InvalidDimensions);
PARDINUS_ERROR(AlreadyGray);
PARDINUS_ERROR(AlreadySplit);
PARDINUS_ERROR(EmptyClass);
PARDINUS_ERROR(ModeMismatch);
PARDINUS_ERROR(TooFewPoints);
PARDINUS_ERROR(DimensionMismatch);
PARDINUS_ERROR(SingleCluster);
PARDINUS_ERROR(ShapeMismatch);
PARDINUS_ERROR(StaleCache);
PARDINUS_ERROR(NonPositiveSigma);
PARDINUS_ERROR(EmptyTrainingSet);
PARDINUS_ERROR(EmptyCluster);
PARDINUS_ERROR(IndivisibleDims);
PARDINUS_ERROR(IndivisibleGrid);
PARDINUS_ERROR(TooSmall);
PARDINUS_ERROR(SingleClass);
PARDINUS_ERROR(BadThreshold);
PARDINUS_ERROR(LengthMismatch);
PARDINUS_ERROR(EmptyInput);
PARDINUS_ERROR(VersionMismatch);
PARDINUS_ERROR(ChecksumMismatch);
PARDINUS_ERROR(CorruptBundle);

#undef PARDINUS_ERROR

// ----------------------------------------------------------------------------
// Rng - deterministic generator with hand-rolled distributions.
//
// std::uniform_*_distribution output is implementation defined, so all
// sampling goes through these helpers to keep runs reproducible across
// standard libraries. Core generator is splitmix64.
// ----------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // uniform in [0, 1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // standard normal via Box-Muller (one value per call, cached pair)
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    template <typename It>
    void shuffle(It first, It last) {
        auto n = last - first;
        for (auto i = n - 1; i > 0; --i) {
            auto j = static_cast<decltype(i)>(next_below(std::uint64_t(i) + 1));
            std::swap(first[i], first[j]);
        }
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Stage seeds derive from one master seed plus a stage tag, so stages stay
// decoupled (adding a draw in one stage never shifts another stage's stream).
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& tag) {
    std::uint64_t h = 1469598103934665603ull ^ master;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    h ^= master >> 32;
    Rng mix(h);
    return mix.next_u64();
}

inline std::uint64_t derive_seed(std::uint64_t master, const std::string& tag, std::uint64_t index) {
    return derive_seed(master ^ (0x9e3779b97f4a7c15ull * (index + 1)), tag);
}

} // namespace pardinus
