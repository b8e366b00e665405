#pragma once

#include <cstdint>
#include <string_view>

namespace poolcast {

/// Counter-based generator: the i-th draw of a stream is a pure function of
/// (key, i), so substreams can be derived per row/fold/stage and consumed in
/// any order or on any thread with identical results.
///
/// The mixing function is SplitMix64's finalizer applied to key + i * golden,
/// which makes the byte stream reproducible in any language with 64-bit
/// unsigned arithmetic.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(mix(seed ^ mix(stream + kGolden))) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by inversion, keeps one draw per variate.
    double normal();
    /// Gamma(shape, rate) via Marsaglia-Tsang.
    double gamma(double shape, double rate = 1.0);
    double beta(double a, double b);
    std::uint64_t poisson(double mean);
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Independent child stream labelled by an integer (row index, fold id).
    CounterRng substream(std::uint64_t label) const { return CounterRng(key_, label); }
    /// Independent child stream labelled by a stage name.
    CounterRng substream(std::string_view label) const { return CounterRng(key_, hash_label(label)); }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// FNV-1a.
    static constexpr std::uint64_t hash_label(std::string_view label) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace poolcast
