#include "blockade/detchain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "blockade/errors.hpp"
#include "blockade/rng.hpp"
#include "blockade/units.hpp"

namespace blockade {

namespace {

cplx complex_normal(CounterRng& rng, double variance)
{
    const double s = std::sqrt(0.5 * variance);
    const double re = rng.normal();
    const double im = rng.normal();
    return {s * re, s * im};
}

QuadratureRecord empty_record(const RecordGeometry& geom, std::uint64_t seed)
{
    geom.validate();
    QuadratureRecord rec;
    rec.geometry = geom;
    rec.seed = seed;
    rec.ch1.assign(geom.total_samples(), cplx{});
    rec.ch2.assign(geom.total_samples(), cplx{});
    return rec;
}

void require_compatible(const QuadratureRecord& a, const QuadratureRecord& b)
{
    a.validate();
    b.validate();
    if (!(a.geometry == b.geometry))
        throw std::invalid_argument("signal and reference records have different geometry");
    if (a.edge_invalid != b.edge_invalid)
        throw std::invalid_argument("signal and reference records were filtered differently");
    if (2u * a.edge_invalid >= a.geometry.segment_len)
        throw std::invalid_argument("filter edges cover the whole segment");
}

struct Sums {
    double p1 = 0.0, p2 = 0.0, n = 0.0;
    std::vector<double> cross, cross_n;

    void add(const Sums& o, double sign)
    {
        p1 += sign * o.p1;
        p2 += sign * o.p2;
        n += sign * o.n;
        for (std::size_t m = 0; m < cross.size(); ++m) {
            cross[m] += sign * o.cross[m];
            cross_n[m] += sign * o.cross_n[m];
        }
    }
};

Sums make_sums(std::size_t n_lags) { return Sums{0.0, 0.0, 0.0, std::vector<double>(n_lags), std::vector<double>(n_lags)}; }

struct Accumulated {
    std::vector<Sums> sig_blocks, ref_blocks;
    Sums sig_total, ref_total;
    std::vector<long> lags;
};

Accumulated accumulate(const QuadratureRecord& signal, const QuadratureRecord& reference,
                       std::span<const double> tau_grid, int blocks_wanted)
{
    require_compatible(signal, reference);
    const auto& geom = signal.geometry;
    Accumulated acc;
    for (double tau : tau_grid) {
        const double x = tau * geom.sample_rate;
        const long m = std::lround(x);
        if (tau < 0.0 || std::abs(x - static_cast<double>(m)) > 1e-6)
            throw std::invalid_argument("tau values must be non-negative multiples of the sample period");
        acc.lags.push_back(m);
    }
    const long L = geom.segment_len;
    const long e = signal.edge_invalid;
    for (long m : acc.lags)
        if (m >= L - 2 * e)
            throw std::invalid_argument("lag exceeds the valid part of a segment");

    const std::uint32_t n_seg = geom.n_segments;
    const int blocks = static_cast<int>(std::clamp<std::uint32_t>(static_cast<std::uint32_t>(std::max(blocks_wanted, 2)), 2u, n_seg));
    const std::size_t nl = acc.lags.size();
    acc.sig_blocks.assign(blocks, make_sums(nl));
    acc.ref_blocks.assign(blocks, make_sums(nl));

    std::vector<double> P1(L), P2(L);
    for (std::uint32_t s = 0; s < n_seg; ++s) {
        const int b = static_cast<int>(static_cast<std::uint64_t>(s) * blocks / n_seg);
        for (int which = 0; which < 2; ++which) {
            const QuadratureRecord& rec = which == 0 ? signal : reference;
            Sums& sums = which == 0 ? acc.sig_blocks[b] : acc.ref_blocks[b];
            const auto c1 = rec.segment(1, s);
            const auto c2 = rec.segment(2, s);
            for (long t = 0; t < L; ++t) {
                P1[t] = std::norm(c1[t]);
                P2[t] = std::norm(c2[t]);
            }
            for (long t = e; t < L - e; ++t) {
                sums.p1 += P1[t];
                sums.p2 += P2[t];
            }
            sums.n += static_cast<double>(L - 2 * e);
            if (which == 1)
                continue;
            for (std::size_t k = 0; k < nl; ++k) {
                const long m = acc.lags[k];
                double c = 0.0;
                for (long t = e; t < L - e - m; ++t)
                    c += P1[t] * P2[t + m];
                sums.cross[k] += c;
                sums.cross_n[k] += static_cast<double>(L - 2 * e - m);
            }
        }
    }
    acc.sig_total = make_sums(nl);
    acc.ref_total = make_sums(nl);
    for (int b = 0; b < blocks; ++b) {
        acc.sig_total.add(acc.sig_blocks[b], 1.0);
        acc.ref_total.add(acc.ref_blocks[b], 1.0);
    }
    return acc;
}

std::vector<double> gamma_from(const Sums& sig, const Sums& ref)
{
    const double p1s = sig.p1 / sig.n, p2s = sig.p2 / sig.n;
    const double p1r = ref.p1 / ref.n, p2r = ref.p2 / ref.n;
    std::vector<double> g(sig.cross.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        g[k] = sig.cross[k] / sig.cross_n[k] - p1s * p2r - p1r * p2s + p1r * p2r;
    return g;
}

// Leave-one-block-out replicas of Gamma(tau).
std::vector<std::vector<double>> jackknife_gammas(const Accumulated& acc)
{
    std::vector<std::vector<double>> reps;
    for (std::size_t b = 0; b < acc.sig_blocks.size(); ++b) {
        Sums sig = acc.sig_total, ref = acc.ref_total;
        sig.add(acc.sig_blocks[b], -1.0);
        ref.add(acc.ref_blocks[b], -1.0);
        reps.push_back(gamma_from(sig, ref));
    }
    return reps;
}

double jackknife_sigma(const std::vector<double>& reps)
{
    const double nb = static_cast<double>(reps.size());
    double mean = 0.0;
    for (double r : reps)
        mean += r;
    mean /= nb;
    double ss = 0.0;
    for (double r : reps)
        ss += (r - mean) * (r - mean);
    return std::sqrt((nb - 1.0) / nb * ss);
}

double ols_slope(std::span<const double> x, std::span<const double> y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

} // namespace

void RecordGeometry::validate() const
{
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
        throw std::invalid_argument("sample rate must be positive");
    if (segment_len == 0 || n_segments == 0)
        throw std::invalid_argument("record geometry must have at least one sample");
}

void QuadratureRecord::validate() const
{
    geometry.validate();
    if (ch1.size() != geometry.total_samples() || ch2.size() != geometry.total_samples())
        throw std::invalid_argument("channel length does not match record geometry");
}

std::span<const cplx> QuadratureRecord::segment(int channel, std::uint32_t s) const
{
    const auto& ch = channel == 1 ? ch1 : ch2;
    const std::size_t L = geometry.segment_len;
    return std::span<const cplx>(ch).subspan(static_cast<std::size_t>(s) * L, L);
}

double noise_photons(double T_n, double carrier_hz)
{
    if (!(T_n >= 0.0) || !std::isfinite(T_n))
        throw std::invalid_argument("noise temperature must be non-negative");
    if (!(carrier_hz > 0.0))
        throw std::invalid_argument("carrier frequency must be positive");
    return units::boltzmann * T_n / (units::planck * carrier_hz);
}

double NoiseModel::n_noise() const { return noise_photons(T_n, carrier_hz); }

QuadratureRecord split_field(std::span<const cplx> field, const RecordGeometry& geom, std::uint64_t seed)
{
    QuadratureRecord rec = empty_record(geom, seed);
    if (field.size() != geom.total_samples())
        throw std::invalid_argument("field length does not match record geometry");
    const double r = std::sqrt(0.5);
    for (std::size_t k = 0; k < field.size(); ++k) {
        rec.ch1[k] = r * field[k];
        rec.ch2[k] = r * field[k];
    }
    return rec;
}

QuadratureRecord synth_coherent(cplx alpha, double kappa, const RecordGeometry& geom, std::uint64_t seed)
{
    if (!(kappa >= 0.0))
        throw std::invalid_argument("kappa must be non-negative");
    geom.validate();
    const cplx x = std::sqrt(kappa * geom.dt()) * alpha;
    return split_field(std::vector<cplx>(geom.total_samples(), x), geom, seed);
}

QuadratureRecord synth_thermal(double n_th, double kappa, const RecordGeometry& geom, std::uint64_t seed)
{
    if (!(n_th >= 0.0) || !(kappa > 0.0))
        throw std::invalid_argument("thermal source needs n_th >= 0 and kappa > 0");
    geom.validate();
    const double var = kappa * n_th * geom.dt();
    const double rho = std::exp(-0.5 * kappa * geom.dt());
    const double drive = std::sqrt(1.0 - rho * rho);
    std::vector<cplx> field(geom.total_samples());
    const std::size_t L = geom.segment_len;
    for (std::uint32_t s = 0; s < geom.n_segments; ++s) {
        CounterRng rng(seed, s);
        cplx x = complex_normal(rng, var);
        for (std::size_t k = 0; k < L; ++k) {
            field[s * L + k] = x;
            x = rho * x + drive * complex_normal(rng, var);
        }
    }
    return split_field(field, geom, seed);
}

QuadratureRecord synth_blockade(const RecordGeometry& geom, const EmissionRecord& emission, double kappa,
                                std::uint64_t seed)
{
    if (!(kappa > 0.0))
        throw std::invalid_argument("kappa must be positive");
    emission.validate();
    QuadratureRecord rec = empty_record(geom, seed);
    if (emission.duration < geom.duration() * (1.0 - 1e-12))
        throw std::invalid_argument("emission record shorter than the quadrature record");

    const double dt = geom.dt();
    const double q = std::exp(-kappa * dt);
    const double first = std::sqrt(1.0 - q);
    const double decay = std::sqrt(q);
    const std::size_t L = geom.segment_len;
    CounterRng rng(seed, 0);
    for (double tj : emission.cavity_jumps) {
        const double arm = rng.uniform();
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        const std::size_t k0 = static_cast<std::size_t>(std::ceil(tj / dt - 1e-12));
        if (k0 >= geom.total_samples())
            continue;
        const std::size_t seg_end = (k0 / L + 1) * L;
        auto& ch = arm < 0.5 ? rec.ch1 : rec.ch2;
        double amp = first;
        for (std::size_t k = k0; k < seg_end && amp > 1e-9; ++k) {
            ch[k] += std::polar(amp, phase);
            amp *= decay;
        }
    }
    return rec;
}

QuadratureRecord beamsplit_and_amplify(const QuadratureRecord& src, double n_noise, std::uint64_t seed)
{
    src.validate();
    if (!(n_noise >= 0.0))
        throw std::invalid_argument("added noise must be non-negative");
    QuadratureRecord out = src;
    out.seed = seed;
    const std::size_t L = src.geometry.segment_len;
    for (std::uint32_t s = 0; s < src.geometry.n_segments; ++s) {
        for (int c = 0; c < 2; ++c) {
            CounterRng rng(seed, 2ull * s + static_cast<std::uint64_t>(c));
            auto& ch = c == 0 ? out.ch1 : out.ch2;
            for (std::size_t k = s * L; k < (s + 1) * L; ++k)
                ch[k] += complex_normal(rng, 0.5) + complex_normal(rng, n_noise);
        }
    }
    return out;
}

QuadratureRecord beamsplit_and_amplify(const QuadratureRecord& src, const NoiseModel& noise, std::uint64_t seed)
{
    return beamsplit_and_amplify(src, noise.n_noise(), seed);
}

QuadratureRecord apply_digital_filter(const QuadratureRecord& rec, const FilterSpec& filt)
{
    rec.validate();
    filt.validate();
    if (std::abs(filt.sample_rate_hz - rec.geometry.sample_rate) > 1e-9 * rec.geometry.sample_rate)
        throw std::invalid_argument("filter sample rate differs from record sample rate");
    const std::vector<double> taps = design_lowpass(filt);
    const long half = filt.group_delay();
    const long L = rec.geometry.segment_len;

    QuadratureRecord out = rec;
    out.edge_invalid = rec.edge_invalid + static_cast<std::uint32_t>(half);
    for (std::uint32_t s = 0; s < rec.geometry.n_segments; ++s) {
        for (int c = 1; c <= 2; ++c) {
            const auto in = rec.segment(c, s);
            auto& dst = c == 1 ? out.ch1 : out.ch2;
            for (long k = 0; k < L; ++k) {
                cplx acc = 0.0;
                const long j_lo = std::max(0L, half - k);
                const long j_hi = std::min(static_cast<long>(taps.size()) - 1, L - 1 - k + half);
                for (long j = j_lo; j <= j_hi; ++j)
                    acc += taps[static_cast<std::size_t>(j)] * in[static_cast<std::size_t>(k + j - half)];
                dst[static_cast<std::size_t>(s) * L + k] = acc;
            }
        }
    }
    return out;
}

CrossPowerEstimate estimate_cross_power(const QuadratureRecord& signal, const QuadratureRecord& reference,
                                        std::span<const double> tau_grid, const EstimatorOptions& opts)
{
    const Accumulated acc = accumulate(signal, reference, tau_grid, opts.jackknife_blocks);
    CrossPowerEstimate est;
    est.tau.assign(tau_grid.begin(), tau_grid.end());
    est.gamma = gamma_from(acc.sig_total, acc.ref_total);
    est.p1_sig = acc.sig_total.p1 / acc.sig_total.n;
    est.p2_sig = acc.sig_total.p2 / acc.sig_total.n;
    est.p1_ref = acc.ref_total.p1 / acc.ref_total.n;
    est.p2_ref = acc.ref_total.p2 / acc.ref_total.n;
    const auto reps = jackknife_gammas(acc);
    est.gamma_err.resize(est.gamma.size());
    for (std::size_t k = 0; k < est.gamma.size(); ++k) {
        std::vector<double> col(reps.size());
        for (std::size_t b = 0; b < reps.size(); ++b)
            col[b] = reps[b][k];
        est.gamma_err[k] = jackknife_sigma(col);
    }
    return est;
}

CorrelationTrace estimate_g2(const QuadratureRecord& signal, const QuadratureRecord& reference,
                             std::span<const double> tau_grid, const EstimatorOptions& opts)
{
    if (tau_grid.size() < 3)
        throw std::invalid_argument("estimate_g2 needs at least three tau points");
    const Accumulated acc = accumulate(signal, reference, tau_grid, opts.jackknife_blocks);
    const std::size_t n = tau_grid.size();
    const std::size_t n_tail = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(opts.tail_fraction * n)));
    const std::span<const double> tail_tau = tau_grid.subspan(n - n_tail);

    struct Normalized {
        std::vector<double> g2;
        double norm = 0.0;
        double drift = 0.0;
    };
    auto normalize = [&](const std::vector<double>& gamma) {
        Normalized r;
        r.norm = tail_mean(gamma, static_cast<double>(n_tail) / static_cast<double>(n));
        r.g2.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            r.g2[k] = gamma[k] / r.norm;
        const std::span<const double> tail_vals(r.g2.data() + (n - n_tail), n_tail);
        r.drift = ols_slope(tail_tau, tail_vals) * (tail_tau.back() - tail_tau.front());
        return r;
    };

    const Normalized full = normalize(gamma_from(acc.sig_total, acc.ref_total));
    if (!(full.norm > 0.0))
        throw StatisticsError("cross power in the tail window is not positive; normalization undefined");

    std::vector<Normalized> reps;
    for (const auto& gamma : jackknife_gammas(acc))
        reps.push_back(normalize(gamma));

    CorrelationTrace tr;
    tr.kind = TraceKind::g2;
    tr.tau.assign(tau_grid.begin(), tau_grid.end());
    tr.values.resize(n);
    tr.errors.resize(n);
    tr.normalized = true;
    tr.normalization_constant = full.norm;
    for (std::size_t k = 0; k < n; ++k) {
        tr.values[k] = full.g2[k];
        std::vector<double> col;
        for (const auto& r : reps)
            col.push_back(r.g2[k]);
        tr.errors[k] = jackknife_sigma(col);
    }

    std::vector<double> drifts;
    for (const auto& r : reps)
        drifts.push_back(r.drift);
    const double drift_sigma = jackknife_sigma(drifts);
    if (std::abs(full.drift) > opts.tail_sigma * drift_sigma && std::abs(full.drift) > opts.tail_drift_limit) {
        std::ostringstream msg;
        msg << "tail window is not flat: drift " << full.drift << " +- " << drift_sigma;
        throw StatisticsError(msg.str());
    }
    return tr;
}

SpectrumTrace estimate_cross_spectrum(const QuadratureRecord& signal, const QuadratureRecord& reference)
{
    require_compatible(signal, reference);
    const auto& geom = signal.geometry;
    const std::size_t L = geom.segment_len;
    const std::uint32_t n_seg = geom.n_segments;
    Eigen::FFT<double> fft;

    auto segment_spectra = [&](const QuadratureRecord& rec) {
        std::vector<std::vector<double>> per_seg(n_seg, std::vector<double>(L));
        std::vector<cplx> in(L), f1, f2;
        for (std::uint32_t s = 0; s < n_seg; ++s) {
            auto c1 = rec.segment(1, s);
            std::copy(c1.begin(), c1.end(), in.begin());
            fft.fwd(f1, in);
            auto c2 = rec.segment(2, s);
            std::copy(c2.begin(), c2.end(), in.begin());
            fft.fwd(f2, in);
            for (std::size_t k = 0; k < L; ++k)
                per_seg[s][k] = (std::conj(f1[k]) * f2[k]).real();
        }
        return per_seg;
    };
    const auto sig = segment_spectra(signal);
    const auto ref = segment_spectra(reference);

    // Sum over bins of conj(F1) F2 / L^2 equals the sample mean of conj(x1) x2,
    // i.e. photons per sample; times sample_rate gives flux; divided by the bin
    // width in rad/s gives flux density.
    const double bin_w = units::two_pi * geom.sample_rate / static_cast<double>(L);
    const double scale = geom.sample_rate / (static_cast<double>(L) * static_cast<double>(L) * bin_w);

    SpectrumTrace out;
    out.freq.resize(L);
    out.psd.resize(L);
    out.errors.resize(L);
    const double ns = static_cast<double>(n_seg);
    for (std::size_t j = 0; j < L; ++j) {
        // Ascending angular frequency; forward-FFT bin of e^{-i w t} sits at -w.
        const long signed_bin = static_cast<long>(j) - static_cast<long>(L / 2);
        const std::size_t k = static_cast<std::size_t>((-signed_bin % static_cast<long>(L) + static_cast<long>(L)) % static_cast<long>(L));
        out.freq[j] = bin_w * static_cast<double>(signed_bin);
        double ms = 0.0, mr = 0.0, vs = 0.0, vr = 0.0;
        for (std::uint32_t s = 0; s < n_seg; ++s) {
            ms += sig[s][k];
            mr += ref[s][k];
        }
        ms /= ns;
        mr /= ns;
        for (std::uint32_t s = 0; s < n_seg; ++s) {
            vs += (sig[s][k] - ms) * (sig[s][k] - ms);
            vr += (ref[s][k] - mr) * (ref[s][k] - mr);
        }
        const double var = n_seg > 1 ? (vs + vr) / ((ns - 1.0) * ns) : 0.0;
        out.psd[j] = scale * (ms - mr);
        out.errors[j] = scale * std::sqrt(var);
    }
    return out;
}

} // namespace blockade
