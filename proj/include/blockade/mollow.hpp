#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "blockade/correlate.hpp"
#include "blockade/hilbert.hpp"

namespace blockade {

// Effective two-level description of the |g0> <-> |1-> transition.
struct TwoLevelParams {
    double gamma1 = 0.0; // energy relaxation of |1->
    double gamma2 = 0.0; // total transverse decay
    double omega = 0.0;  // Rabi amplitude
    double delta = 0.0;  // transition minus drive frequency

    void validate() const;
};

// |<g0|a|1->|^2: converts two-level (sigma) spectra into cavity-photon units.
inline constexpr double cavity_weight_of_lower_polariton = 0.5;

// Gamma1 = (kappa + gamma)/2, Gamma2 = Gamma1/2 + gamma_phi/2, Omega = omega_R,
// Delta = (omega_r - g) - omega_d. Requires a resonant device.
TwoLevelParams effective_two_level(const DeviceParams& device, const DriveParams& drive);

// d<v>/dt = M <v> + b for v = (<s_x>, <s_y>, <s_z>).
struct BlochSystem {
    Eigen::Matrix3d M;
    Eigen::Vector3d b;

    Eigen::Vector3d steady_state() const { return M.partialPivLu().solve(-b); }
};

BlochSystem bloch_matrix(const TwoLevelParams& p);

// Incoherent resonance-fluorescence spectrum in two-level units: the integral
// over omega is <s+ s-> - |<s->|^2, and coherent_weight = |<s->|^2. Built from
// the eigen-decomposition of M as a sum of complex Lorentzians.
SpectrumTrace tls_spectrum(const TwoLevelParams& p, std::span<const double> freq_grid);

// max |Im lambda(M)|, or nothing when every eigenvalue is real.
std::optional<double> side_peak_offset(const TwoLevelParams& p);

} // namespace blockade
