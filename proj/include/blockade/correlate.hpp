#pragma once

#include <span>
#include <vector>

#include "blockade/filter.hpp"
#include "blockade/lindblad.hpp"

namespace blockade {

enum class TraceKind { g1, g2 };

// Two-time correlation sampled on an ascending tau grid starting at 0.
struct CorrelationTrace {
    TraceKind kind = TraceKind::g2;
    std::vector<double> tau;   // s
    std::vector<cplx> values;  // g1 is complex, g2 real (imaginary part zero)
    std::vector<double> errors; // one-sigma, empty when not a statistical estimate
    bool normalized = false;
    double normalization_constant = 1.0;

    std::vector<double> real_values() const;
    bool complex_valued() const { return kind == TraceKind::g1; }
};

// Incoherent spectral density on a grid of angular frequencies relative to
// the drive, plus the elastic (Rayleigh) line reported as a separate weight.
// psd is normalized so that the integral over omega equals the incoherent
// photon number <a^dag a> - |<a>|^2.
struct SpectrumTrace {
    std::vector<double> freq; // rad/s
    std::vector<double> psd;
    std::vector<double> errors; // one-sigma, estimated spectra only
    double coherent_weight = 0.0;
    double coherent_freq = 0.0;

    // Trapezoidal integral of psd over freq.
    double integrated() const;
};

std::vector<double> uniform_grid(double start, double stop, std::size_t n);

// Throws std::invalid_argument unless rho is stationary under L.
void require_stationary(const Liouvillian& L, const DensityMatrix& rho);

// <a^dag(tau) a(0)> = Tr[a^dag e^{L tau}(a rho)].
CorrelationTrace g1_trace(const Liouvillian& L, const DensityMatrix& rho_ss, const Operator& a,
                          std::span<const double> tau_grid, const IntegratorOptions& opts = {});

// G2(tau) = Tr[a^dag a e^{L tau}(a rho a^dag)], divided by <a^dag a>^2 when normalize.
CorrelationTrace g2_trace(const Liouvillian& L, const DensityMatrix& rho_ss, const Operator& a,
                          std::span<const double> tau_grid, bool normalize, const IntegratorOptions& opts = {});

// S(w) = (1/pi) Re int_0^tmax e^{-i w tau} (g1(tau) - |<a>|^2) dtau by the
// trapezoidal rule. The positive-w side is emission above the drive.
SpectrumTrace emission_spectrum(const CorrelationTrace& g1, const DensityMatrix& rho_ss, const Operator& a,
                                std::span<const double> freq_grid);

// Kernel used by filter_g2 on a grid of spacing dtau: the autocorrelation of
// the filter's intensity impulse response |h(t)|^2, normalized to unit sum.
// Returned as lags 0..J (the kernel is symmetric).
std::vector<double> intensity_kernel(const FilterSpec& filt, double dtau);

// One-dimensional finite-bandwidth model: g2_f(tau) = sum_j K_j g2(|tau - j dtau|),
// then renormalized so the tail window (last 20% of the grid) averages to one.
CorrelationTrace filter_g2(const CorrelationTrace& g2, const FilterSpec& filt);

// Mean of a trace over its last `fraction` of grid points.
double tail_mean(const std::vector<double>& values, double fraction = 0.2);

} // namespace blockade
