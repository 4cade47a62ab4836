#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "blockade/correlate.hpp"
#include "blockade/filter.hpp"
#include "blockade/trajectories.hpp"

namespace blockade {

// Amplitude convention used throughout this module: a sample x_k is the field
// b(t_k) * sqrt(dt), with b in sqrt(photons/s), so |x_k|^2 counts photons in
// the sample's temporal mode. Vacuum fluctuations of one mode have
// <|v|^2> = 1 (1/2 per quadrature) before the 50/50 splitter; each splitter
// output therefore carries vacuum variance 1/2. Amplifier noise adds
// n_noise per mode to each output independently.
//
// Source records produced by synth_* hold the noise-free amplitudes arriving
// at the two splitter outputs ("arms"). For classical fields each arm is
// field/sqrt(2); single-photon wavepackets are routed whole to one arm.
// beamsplit_and_amplify adds vacuum and amplifier noise to the arms.

struct RecordGeometry {
    double sample_rate = 100e6; // Hz
    std::uint32_t segment_len = 8192;
    std::uint32_t n_segments = 512;

    void validate() const;
    std::size_t total_samples() const { return static_cast<std::size_t>(segment_len) * n_segments; }
    double dt() const { return 1.0 / sample_rate; }
    double duration() const { return static_cast<double>(total_samples()) * dt(); }
    bool operator==(const RecordGeometry&) const = default;
};

struct QuadratureRecord {
    RecordGeometry geometry;
    std::vector<cplx> ch1;
    std::vector<cplx> ch2;
    std::uint64_t seed = 0;
    // Samples at each end of every segment that are not valid (filter edges).
    std::uint32_t edge_invalid = 0;

    void validate() const;
    std::span<const cplx> segment(int channel, std::uint32_t s) const;
};

struct NoiseModel {
    double T_n = 10.6;          // K
    double carrier_hz = 6.769e9;

    double n_noise() const;
};

// k_B T_n / (h f): classical (Rayleigh-Jeans) added-noise photon number.
double noise_photons(double T_n, double carrier_hz);

// Constant output field sqrt(kappa) alpha for intracavity amplitude alpha.
QuadratureRecord synth_coherent(cplx alpha, double kappa, const RecordGeometry& geom, std::uint64_t seed);

// Complex Gaussian field with autocorrelation kappa n_th e^{-kappa|tau|/2}
// (Lorentzian spectrum of HWHM kappa/2), generated as white Gaussian noise
// shaped by the exact one-pole filter of the cavity.
QuadratureRecord synth_thermal(double n_th, double kappa, const RecordGeometry& geom, std::uint64_t seed);

// Approximate photon-blockade field: every cavity jump of `emission` launches
// a one-photon wavepacket ~ e^{-kappa (t - t_j)/2} with random phase, routed
// to one arm by a fair coin. Segment s covers [s T_seg, (s+1) T_seg) of the
// emission timeline.
QuadratureRecord synth_blockade(const RecordGeometry& geom, const EmissionRecord& emission, double kappa,
                                std::uint64_t seed);

// Arms of a classical single-field stream: field / sqrt(2) on each.
QuadratureRecord split_field(std::span<const cplx> field, const RecordGeometry& geom, std::uint64_t seed);

// ch_i = arm_i + v_i / sqrt(2) + h_i with <|v_i|^2> = 1 and <|h_i|^2> = n_noise,
// all independent.
QuadratureRecord beamsplit_and_amplify(const QuadratureRecord& src, const NoiseModel& noise, std::uint64_t seed);
QuadratureRecord beamsplit_and_amplify(const QuadratureRecord& src, double n_noise, std::uint64_t seed);

// FIR low-pass per channel and segment, centred taps (group delay removed).
// The first and last (n_taps-1)/2 samples of each segment become invalid.
QuadratureRecord apply_digital_filter(const QuadratureRecord& rec, const FilterSpec& filt);

struct EstimatorOptions {
    double tail_fraction = 0.2;
    int jackknife_blocks = 32;
    // Tail-flatness test: reject when the fitted tail drift exceeds both this
    // many jackknife sigmas and `tail_drift_limit` in units of g2.
    double tail_sigma = 5.0;
    double tail_drift_limit = 0.05;
};

// Reference-subtracted cross power
//   Gamma(tau) = <P1(t) P2(t+tau)>_sig - <P1>_sig <P2>_ref - <P1>_ref <P2>_sig + <P1>_ref <P2>_ref
// with P_i = |ch_i|^2, before normalization.
struct CrossPowerEstimate {
    std::vector<double> tau;
    std::vector<double> gamma;
    std::vector<double> gamma_err;
    double p1_sig = 0.0, p2_sig = 0.0, p1_ref = 0.0, p2_ref = 0.0;
    double noise_offset() const { return p1_ref * p2_ref; }
};

// tau values must be non-negative multiples of the sample period.
CrossPowerEstimate estimate_cross_power(const QuadratureRecord& signal, const QuadratureRecord& reference,
                                        std::span<const double> tau_grid, const EstimatorOptions& opts = {});

// Gamma(tau) divided by its mean over the tail window, with jackknife error
// bars over blocks of segments. Throws StatisticsError when the tail window
// shows a significant drift or the normalization is not positive.
CorrelationTrace estimate_g2(const QuadratureRecord& signal, const QuadratureRecord& reference,
                             std::span<const double> tau_grid, const EstimatorOptions& opts = {});

// Segment-averaged Re[conj(FFT ch1) FFT ch2] of the signal minus the same
// quantity for the reference, as a flux density (photons/s per rad/s) over
// angular frequency offsets from the carrier. A field e^{-i w t} appears at +w.
SpectrumTrace estimate_cross_spectrum(const QuadratureRecord& signal, const QuadratureRecord& reference);

} // namespace blockade
