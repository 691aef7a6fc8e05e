#pragma once

#include <cstdint>
#include <vector>

namespace navmorph {

// Counter-based deterministic generator (splitmix64). Identical seed and
// call sequence give identical output on every platform; no libc
// distributions are involved.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log argument.
    double uniform_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal();

    std::vector<double> normal_vec(std::size_t n, double mean = 0.0, double stddev = 1.0);

    // Derived stream that is decorrelated from this one and from other ids.
    Rng fork(std::uint64_t stream_id) const {
        Rng mixer(state_ ^ (0xd1342543de82ef95ULL * (stream_id + 1)));
        return Rng(mixer.next_u64());
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace navmorph
