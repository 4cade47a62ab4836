#include "blockade/filter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace blockade {

namespace {

double sinc(double x)
{
    if (std::abs(x) < 1e-12)
        return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

double hamming(double u) // u in [-1/2, 1/2]
{
    return 0.54 + 0.46 * std::cos(2.0 * std::numbers::pi * u);
}

} // namespace

void FilterSpec::validate() const
{
    if (!(cutoff_hz > 0.0) || !std::isfinite(cutoff_hz))
        throw std::invalid_argument("filter cutoff must be positive");
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
        throw std::invalid_argument("filter sample rate must be positive");
    if (n_taps < 1 || n_taps % 2 == 0)
        throw std::invalid_argument("filter tap count must be odd and positive");
}

std::vector<double> design_lowpass(const FilterSpec& spec)
{
    spec.validate();
    const int m = spec.n_taps - 1;
    const double fc = spec.cutoff_hz / spec.sample_rate_hz;
    std::vector<double> taps(spec.n_taps);
    double sum = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double x = k - 0.5 * m;
        const double w = m == 0 ? 1.0 : hamming(x / m);
        taps[k] = 2.0 * fc * sinc(2.0 * fc * x) * w;
        sum += taps[k];
    }
    for (double& t : taps)
        t /= sum;
    return taps;
}

double lowpass_impulse(const FilterSpec& spec, double t)
{
    spec.validate();
    const double span = (spec.n_taps - 1) / spec.sample_rate_hz;
    if (span == 0.0)
        return t == 0.0 ? 1.0 : 0.0;
    if (std::abs(t) > 0.5 * span)
        return 0.0;
    const double fc = spec.cutoff_hz;
    return 2.0 * fc * sinc(2.0 * fc * t) * hamming(t / span);
}

double lowpass_gain(const std::vector<double>& taps, double f, double sample_rate_hz)
{
    const double m = 0.5 * (static_cast<double>(taps.size()) - 1.0);
    double re = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k)
        re += taps[k] * std::cos(2.0 * std::numbers::pi * f / sample_rate_hz * (static_cast<double>(k) - m));
    // Symmetric taps: the delay-compensated response is real.
    return re;
}

} // namespace blockade
