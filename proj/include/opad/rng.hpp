#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string_view>
#include <vector>

#include "opad/common.hpp"

namespace opad {

// Deterministic RNG with explicitly implemented distributions so that every
// draw is a pure function of the seed, independent of the standard library
// implementation. Child streams are derived by hashing the parent seed with a
// tag, which keeps independently seeded parts of a run decoupled.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(mix(seed)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
    }

    std::uint64_t seed() const { return seed_; }

    // splitmix64 step
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, n), rejection sampling to avoid modulo bias
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw IntegrityError("uniform_int: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // uniform in [0, 1)
    double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

    // standard normal via Box-Muller; pairs cached
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
        const double u2 = uniform_real();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

    // k distinct elements drawn uniformly without replacement, in draw order
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k) {
        if (k > pool.size())
            throw IntegrityError("sample_without_replacement: k exceeds pool size");
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(pool[i], pool[i + uniform_int(pool.size() - i)]);
        }
        pool.resize(k);
        return pool;
    }

    // index from an unnormalized weight vector
    std::size_t categorical(const Vec& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform_real() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) return i;
        }
        return weights.size() - 1;
    }

    // derived stream; children with distinct tags are decoupled
    Rng child(std::uint64_t tag) const { return Rng(mix(seed_ ^ mix(tag + 0x1234ABCDull))); }

    Rng child(std::string_view name) const {
        std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return child(h);
    }

    Rng child(std::string_view name, std::uint64_t a) const { return child(name).child(a); }
    Rng child(std::string_view name, std::uint64_t a, std::uint64_t b) const {
        return child(name).child(a).child(b);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
        z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
        return z ^ (z >> 33);
    }

    std::uint64_t seed_;
    std::uint64_t state_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace opad
