#pragma once

#include <cstdint>

namespace blockade {

// Counter-based generator: the k-th output of a stream is splitmix64's
// finalizer applied to key + k * golden_gamma. Streams are keyed by
// (seed, stream index), so trajectory i of a run draws from its own stream
// regardless of scheduling order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next();
    double uniform();      // (0, 1), never exactly 0 or 1
    double normal();       // standard normal, Box-Muller
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace blockade
