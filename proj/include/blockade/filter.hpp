#pragma once

#include <vector>

namespace blockade {

// Windowed-sinc (Hamming) low-pass FIR, the only filter kind supported.
struct FilterSpec {
    double cutoff_hz = 20e6;
    int n_taps = 129;
    double sample_rate_hz = 100e6;

    void validate() const;
    int group_delay() const { return (n_taps - 1) / 2; }
};

// Tap weights normalized to unit DC gain. n_taps must be odd so that the
// group delay is an integer number of samples.
std::vector<double> design_lowpass(const FilterSpec& spec);

// Continuous-time version of the same impulse response (same cutoff and
// window length, in seconds), evaluated at time t relative to the centre tap.
// Units are 1/s; the area is close to, not exactly, one.
double lowpass_impulse(const FilterSpec& spec, double t);

// Frequency response of a symmetric tap set at f (Hz) with the group delay
// removed, which makes it real.
double lowpass_gain(const std::vector<double>& taps, double f, double sample_rate_hz);

} // namespace blockade
