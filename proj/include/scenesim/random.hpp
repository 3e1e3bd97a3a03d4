#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>

namespace scenesim {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derive an independent stream seed from a base seed and a label. Used so
// per-agent / per-rollout sampling is order-independent and reproducible.
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
    return splitmix64(splitmix64(base) ^ fnv1a64(label));
}

inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x51ed2701ULL));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Deterministic RNG with hand-rolled distributions. std::* distributions are
// implementation-defined, so everything downstream of the engine uses these.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(splitmix64(seed)) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal(double mu, double sigma) { return mu + sigma * standard_normal(); }

    // Mean parameterization.
    double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

    double standard_normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Normal(mu, sigma) conditioned on [lo, hi]. Handles truncation regions
    // arbitrarily far from the mean (tail sampling via exponential proposals).
    double trunc_normal(double mu, double sigma, double lo, double hi) {
        if (hi < lo) throw std::invalid_argument("trunc_normal: hi < lo");
        if (sigma <= 0.0) return std::clamp(mu, lo, hi);
        const double alpha = (lo - mu) / sigma;
        const double beta = (hi - mu) / sigma;
        return mu + sigma * standard_trunc(alpha, beta);
    }

    double lognormal(double log_mu, double log_sigma) {
        return std::exp(normal(log_mu, log_sigma));
    }

    // Lognormal with log-space parameters, truncated to [lo, hi] in value space.
    double trunc_lognormal(double log_mu, double log_sigma, double lo, double hi) {
        if (hi <= 0.0) throw std::invalid_argument("trunc_lognormal: hi must be > 0");
        const double log_lo = lo <= 0.0 ? -std::numeric_limits<double>::infinity() : std::log(lo);
        const double log_hi = std::log(hi);
        if (log_sigma <= 0.0) return std::clamp(std::exp(log_mu), std::max(lo, 0.0), hi);
        const double alpha = (log_lo - log_mu) / log_sigma;
        const double beta = (log_hi - log_mu) / log_sigma;
        return std::exp(log_mu + log_sigma * standard_trunc(alpha, beta));
    }

private:
    double standard_trunc(double alpha, double beta) {
        if (std::isinf(alpha) && alpha < 0 && std::isinf(beta) && beta > 0) return standard_normal();
        if (alpha >= 4.0) return upper_tail(alpha, beta);
        if (beta <= -4.0) return -upper_tail(-beta, -alpha);
        const double mass = normal_cdf(beta) - normal_cdf(alpha);
        if (mass >= 0.05) {
            for (;;) {
                const double z = standard_normal();
                if (z >= alpha && z <= beta) return z;
            }
        }
        // Thin central slice: uniform proposal with accept ratio against the
        // density maximum inside the interval.
        const double c = std::clamp(0.0, alpha, beta);
        for (;;) {
            const double z = uniform(alpha, beta);
            if (std::log(1.0 - uniform()) <= 0.5 * (c * c - z * z)) return z;
        }
    }

    // Robert's exponential-proposal sampler for N(0,1) | X >= alpha, alpha > 0,
    // rejecting draws above beta.
    double upper_tail(double alpha, double beta) {
        const double rate = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
        for (;;) {
            const double x = alpha - std::log(1.0 - uniform()) / rate;
            if (x > beta) continue;
            const double d = x - rate;
            if (std::log(1.0 - uniform()) <= -0.5 * d * d) return x;
        }
    }

    std::mt19937_64 engine_;
};

}  // namespace scenesim
