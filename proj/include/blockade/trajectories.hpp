#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "blockade/correlate.hpp"
#include "blockade/lindblad.hpp"

namespace blockade {

// Jump times of one quantum trajectory.
struct EmissionRecord {
    double duration = 0.0;
    std::vector<double> cavity_jumps; // photons leaving through the cavity (sqrt(kappa (1+n_th)) a)
    std::vector<double> qubit_jumps;  // qubit decay (sqrt(gamma) s-)
    std::uint64_t seed = 0;

    // Throws std::invalid_argument unless timestamps lie strictly inside
    // [0, duration] and are strictly ascending.
    void validate() const;

    // Drops everything before t0 and shifts the clock so that t0 becomes 0.
    EmissionRecord trimmed(double t0) const;
};

struct McwfOptions {
    // Coarse step used to bracket jump times; the propagation itself is exact.
    // Zero picks 0.1 / (total decay rate).
    double step = 0.0;
    // Initial state; empty means |g0>.
    StateVector initial;
    // Times at which <a^dag a> of the normalized state is sampled.
    std::vector<double> sample_times;
    // Jump times are located to this absolute accuracy (s).
    double jump_time_tolerance = 1e-12;
    // Stream index of the counter-based RNG.
    std::uint64_t stream = 0;
};

struct McwfTrajectory {
    EmissionRecord record;
    std::vector<double> cavity_occupation; // one per sample time
};

// Quantum-jump unraveling of the master equation built by build_liouvillian
// for the same H, device and bath. Channels: cavity emission
// sqrt(kappa (1+n_th)) a (recorded), thermal absorption sqrt(kappa n_th) a^dag,
// qubit decay sqrt(gamma) s- (recorded) and dephasing sqrt(gamma_phi/2) s_z.
McwfTrajectory mcwf_trajectory(const Operator& H, const DeviceParams& device, const BathParams& bath,
                               double duration, std::uint64_t seed, const McwfOptions& opts = {});

EmissionRecord mcwf_run(const Operator& H, const DeviceParams& device, double duration, std::uint64_t seed,
                        const BathParams& bath = {});

// n independent trajectories on streams 0..n-1 of `seed`, run on up to
// `threads` workers; the result is ordered by stream index and does not
// depend on the thread count.
std::vector<McwfTrajectory> mcwf_ensemble(const Operator& H, const DeviceParams& device, const BathParams& bath,
                                          double duration, std::uint64_t seed, std::size_t n,
                                          const McwfOptions& opts = {}, unsigned threads = 1);

// Coincidence-histogram estimate of g2 from cavity jump times. Bin k counts
// ordered pairs with t_j - t_i in [tau_k - w/2, tau_k + w/2) and is divided by
// the count expected for a Poisson process of the pooled mean rate.
// Errors are Poisson counting errors.
CorrelationTrace jump_g2(std::span<const EmissionRecord> records, std::span<const double> tau_grid,
                         double bin_width);

} // namespace blockade
