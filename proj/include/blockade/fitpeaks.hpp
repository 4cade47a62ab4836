#pragma once

#include <array>
#include <optional>

#include "blockade/correlate.hpp"

namespace blockade {

// Unit-peak Lorentzian w^2 / (d^2 + w^2).
inline double lorentzian(double d, double w) { return w * w / (d * d + w * w); }

// S(d) = A_c L(d - c; w_c) + A_s [L(d - c - W; w_s) + L(d - c + W; w_s)].
struct TripletParams {
    double center_amp = 0.0;
    double center_width = 0.0;
    double center = 0.0;
    double side_amp = 0.0;
    double side_width = 0.0;
    double offset = 0.0;

    double operator()(double d) const;
};

// Peaks ordered lower side, centre, upper side.
struct TripletFit {
    double center_freq = 0.0;          // rad/s
    std::optional<double> omega_sp;    // rad/s; empty when the side peaks are unresolved
    std::array<double, 3> widths{};    // HWHM, rad/s
    std::array<double, 3> amplitudes{};
    double residual_rms = 0.0;         // in units of the spectrum
    bool converged = false;
    double offset = 0.0;               // fitted |W| even when omega_sp is empty

    TripletParams params() const;
};

struct FitOptions {
    // Side-peak offset guess used when the spectrum has fewer than three maxima.
    double drive_hint = 0.0;
    // Bins within this many points of zero frequency are excluded (Rayleigh line
    // of estimated spectra).
    int mask_half_width_bins = 0;
    int max_evaluations = 4000;
};

TripletFit fit_triplet(const SpectrumTrace& spec, const FitOptions& opts = {});

} // namespace blockade
