#include <doctest.h>

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "blockade/detchain.hpp"
#include "blockade/filter.hpp"

using namespace blockade;

TEST_CASE("low-pass taps: symmetric, odd length, unit DC gain")
{
    const FilterSpec f;
    const auto taps = design_lowpass(f);
    REQUIRE(taps.size() == 129);
    double sum = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
        sum += taps[k];
        CHECK(taps[k] == taps[taps.size() - 1 - k]);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.group_delay() == 64);
    FilterSpec even = f;
    even.n_taps = 128;
    CHECK_THROWS_AS(design_lowpass(even), std::invalid_argument);
    FilterSpec bad = f;
    bad.cutoff_hz = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("frequency response agrees with the FFT of the impulse response")
{
    const FilterSpec f;
    const auto taps = design_lowpass(f);
    const int nfft = 4096;
    std::vector<double> padded(nfft, 0.0);
    std::copy(taps.begin(), taps.end(), padded.begin());
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, padded);
    for (int k = 0; k < nfft / 2; k += 7) {
        const double freq = f.sample_rate_hz * k / nfft;
        CHECK(std::abs(lowpass_gain(taps, freq, f.sample_rate_hz)) == doctest::Approx(std::abs(spectrum[k])).epsilon(1e-9).scale(1e-12));
    }
}

TEST_CASE("pass band near unity, stop band at least 40 dB down")
{
    const FilterSpec f;
    const auto taps = design_lowpass(f);
    for (double freq = 0.0; freq <= 15e6; freq += 0.5e6)
        CHECK(std::abs(lowpass_gain(taps, freq, f.sample_rate_hz) - 1.0) < 0.01);
    CHECK(lowpass_gain(taps, 20e6, f.sample_rate_hz) == doctest::Approx(0.5).epsilon(0.02));
    for (double freq = 25e6; freq <= 50e6; freq += 0.25e6)
        CHECK(20.0 * std::log10(std::abs(lowpass_gain(taps, freq, f.sample_rate_hz))) < -40.0);
}

TEST_CASE("continuous impulse response reproduces the taps at sample instants")
{
    const FilterSpec f;
    const auto taps = design_lowpass(f);
    double norm = 0.0;
    for (int k = -64; k <= 64; ++k)
        norm += lowpass_impulse(f, k / f.sample_rate_hz) / f.sample_rate_hz;
    for (int k = -64; k <= 64; ++k)
        CHECK(lowpass_impulse(f, k / f.sample_rate_hz) / f.sample_rate_hz / norm
              == doctest::Approx(taps[k + 64]).epsilon(1e-12).scale(1e-15));
    CHECK(lowpass_impulse(f, 1e-6) == 0.0);
}

TEST_CASE("record filtering: sinusoid above cutoff attenuated, all-pass is identity")
{
    RecordGeometry g{100e6, 4096, 2};
    std::vector<cplx> tone(g.total_samples());
    for (std::size_t k = 0; k < tone.size(); ++k)
        tone[k] = std::polar(1.0, 2.0 * std::numbers::pi * 30e6 * k / g.sample_rate);
    const QuadratureRecord rec = split_field(tone, g, 0);
    const QuadratureRecord out = apply_digital_filter(rec, FilterSpec{});
    CHECK(out.edge_invalid == 64);
    double pin = 0.0, pout = 0.0;
    for (std::uint32_t s = 0; s < g.n_segments; ++s) {
        const auto a = rec.segment(1, s), b = out.segment(1, s);
        for (std::size_t k = out.edge_invalid; k < g.segment_len - out.edge_invalid; ++k) {
            pin += std::norm(a[k]);
            pout += std::norm(b[k]);
        }
    }
    CHECK(10.0 * std::log10(pout / pin) < -40.0);

    FilterSpec allpass;
    allpass.n_taps = 1;
    const QuadratureRecord same = apply_digital_filter(rec, allpass);
    CHECK(same.edge_invalid == 0);
    CHECK(same.ch1 == rec.ch1);
    CHECK(same.ch2 == rec.ch2);

    FilterSpec other_rate;
    other_rate.sample_rate_hz = 50e6;
    CHECK_THROWS_AS(apply_digital_filter(rec, other_rate), std::invalid_argument);
}

TEST_CASE("filtered white noise has the |H|^2 power spectrum")
{
    const RecordGeometry g{100e6, 1024, 400};
    // Noise-only record: vacuum plus amplifier noise, white.
    const QuadratureRecord white = beamsplit_and_amplify(split_field(std::vector<cplx>(g.total_samples()), g, 0), 1.0, 17);
    const FilterSpec f;
    const QuadratureRecord out = apply_digital_filter(white, f);
    const auto taps = design_lowpass(f);

    // Averaged periodogram of the valid interior of each segment.
    const std::size_t n = 512;
    const std::size_t start = out.edge_invalid;
    Eigen::FFT<double> fft;
    std::vector<double> psd(n, 0.0);
    std::vector<cplx> in(n), spec;
    for (std::uint32_t s = 0; s < g.n_segments; ++s) {
        const auto seg = out.segment(1, s);
        std::copy(seg.begin() + start, seg.begin() + start + n, in.begin());
        fft.fwd(spec, in);
        for (std::size_t k = 0; k < n; ++k)
            psd[k] += std::norm(spec[k]) / n / g.n_segments;
    }
    // Input variance per sample: 1/2 vacuum + 1 amplifier.
    const double level = 1.5;
    for (std::size_t k = 0; k < n; k += 4) {
        const double freq = (k < n / 2 ? double(k) : double(k) - n) * g.sample_rate / n;
        const double expected = level * std::pow(lowpass_gain(taps, freq, g.sample_rate), 2);
        // Periodogram average of 400 segments: relative scatter 5%.
        CHECK(std::abs(psd[k] - expected) < 0.2 * level * 1.0 + 1e-3);
    }
    double pass = 0.0, stop = 0.0;
    for (std::size_t k = 1; k < 60; ++k)
        pass += psd[k];
    for (std::size_t k = 170; k < 230; ++k)
        stop += psd[k];
    CHECK(pass / 59.0 == doctest::Approx(level).epsilon(0.05));
    CHECK(stop / 60.0 < 1e-3 * level);
}
