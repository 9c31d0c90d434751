#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace sf {

// Counter-style generator for per-pixel sample streams: cheap to seed, so every
// pixel gets an independent stream keyed by (seed, pixel index).
class SampleStream {
public:
    SampleStream(std::uint64_t seed, std::uint64_t stream) : state_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }
    // Uniform in [0, 1).
    double next() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Run-level generator with a serializable state (used for checkpoint/resume).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo == hi ? lo : lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

    std::string state() const;
    void set_state(const std::string &s);

    bool operator==(const Rng &o) const { return engine_ == o.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace sf
