#include "blockade/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "blockade/errors.hpp"

namespace blockade {

namespace {

// Row vector w with w . vec(X) = Tr[A X].
Eigen::RowVectorXcd trace_functional(const Operator& A)
{
    const Eigen::MatrixXcd At = A.transpose();
    return Eigen::Map<const Eigen::RowVectorXcd>(At.data(), At.size());
}

void check_tau_grid(std::span<const double> tau)
{
    if (tau.empty())
        throw std::invalid_argument("tau grid is empty");
    if (tau.front() != 0.0)
        throw std::invalid_argument("tau grid must start at 0");
}

bool is_uniform(const std::vector<double>& x, double& step)
{
    if (x.size() < 2)
        return false;
    step = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t k = 1; k < x.size(); ++k)
        if (std::abs((x[k] - x[k - 1]) - step) > 1e-9 * step)
            return false;
    return step > 0.0;
}

} // namespace

std::vector<double> CorrelationTrace::real_values() const
{
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](cplx z) { return z.real(); });
    return out;
}

double SpectrumTrace::integrated() const
{
    double s = 0.0;
    for (std::size_t k = 1; k < freq.size(); ++k)
        s += 0.5 * (psd[k] + psd[k - 1]) * (freq[k] - freq[k - 1]);
    return s;
}

std::vector<double> uniform_grid(double start, double stop, std::size_t n)
{
    if (n == 0)
        return {};
    if (n == 1)
        return {start};
    std::vector<double> g(n);
    const double step = (stop - start) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k)
        g[k] = start + step * static_cast<double>(k);
    g.back() = stop;
    return g;
}

void require_stationary(const Liouvillian& L, const DensityMatrix& rho)
{
    if (rho.dim() != L.dim())
        throw std::invalid_argument("state dimension does not match superoperator");
    const double r = L.relative_residual(rho.matrix());
    if (r > 1e-8) {
        std::ostringstream msg;
        msg << "state is not stationary under L (relative residual " << r << ")";
        throw std::invalid_argument(msg.str());
    }
}

CorrelationTrace g1_trace(const Liouvillian& L, const DensityMatrix& rho_ss, const Operator& a,
                          std::span<const double> tau_grid, const IntegratorOptions& opts)
{
    require_stationary(L, rho_ss);
    check_tau_grid(tau_grid);
    const Eigen::RowVectorXcd w = trace_functional(a.adjoint());
    CorrelationTrace tr;
    tr.kind = TraceKind::g1;
    tr.tau.assign(tau_grid.begin(), tau_grid.end());
    tr.values.resize(tau_grid.size());
    evolve_visit(
        L, vec(a * rho_ss.matrix()), tau_grid,
        [&](std::size_t k, const Eigen::VectorXcd& v) { tr.values[k] = w * v; }, opts);
    return tr;
}

CorrelationTrace g2_trace(const Liouvillian& L, const DensityMatrix& rho_ss, const Operator& a,
                          std::span<const double> tau_grid, bool normalize, const IntegratorOptions& opts)
{
    require_stationary(L, rho_ss);
    check_tau_grid(tau_grid);
    const Operator n_op = a.adjoint() * a;
    const Eigen::RowVectorXcd w = trace_functional(n_op);
    const double n_mean = rho_ss.expect(n_op).real();

    CorrelationTrace tr;
    tr.kind = TraceKind::g2;
    tr.tau.assign(tau_grid.begin(), tau_grid.end());
    tr.values.resize(tau_grid.size());
    evolve_visit(
        L, vec(a * rho_ss.matrix() * a.adjoint()), tau_grid,
        [&](std::size_t k, const Eigen::VectorXcd& v) { tr.values[k] = w * v; }, opts);

    double scale = 0.0;
    for (const cplx& z : tr.values)
        scale = std::max(scale, std::abs(z));
    for (cplx& z : tr.values) {
        if (std::abs(z.imag()) > 1e-10 * std::max(scale, 1e-300))
            throw NumericError("G2 acquired an imaginary part");
        z = z.real();
    }
    if (normalize) {
        if (!(n_mean > 0.0))
            throw NumericError("cannot normalize G2: mean occupation is zero");
        tr.normalized = true;
        tr.normalization_constant = n_mean * n_mean;
        for (cplx& z : tr.values)
            z /= tr.normalization_constant;
    }
    return tr;
}

SpectrumTrace emission_spectrum(const CorrelationTrace& g1, const DensityMatrix& rho_ss, const Operator& a,
                                std::span<const double> freq_grid)
{
    if (g1.kind != TraceKind::g1)
        throw std::invalid_argument("emission_spectrum needs a g1 trace");
    check_tau_grid(g1.tau);
    const cplx alpha = rho_ss.expect(a);
    const double coherent = std::norm(alpha);

    const std::size_t n = g1.tau.size();
    std::vector<cplx> f(n);
    for (std::size_t k = 0; k < n; ++k)
        f[k] = g1.values[k] - coherent;

    const double peak = std::abs(f.front());
    if (peak > 0.0 && std::abs(f.back()) > 1e-4 * peak) {
        std::ostringstream msg;
        msg << "tau span too short: incoherent g1 at tau_max is " << std::abs(f.back()) / peak
            << " of its peak (need < 1e-4)";
        throw NumericError(msg.str());
    }

    SpectrumTrace s;
    s.freq.assign(freq_grid.begin(), freq_grid.end());
    s.psd.resize(freq_grid.size());
    s.coherent_weight = coherent;
    s.coherent_freq = 0.0;
    for (std::size_t j = 0; j < freq_grid.size(); ++j) {
        const double w = freq_grid[j];
        cplx acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double weight = 0.0;
            if (k > 0)
                weight += 0.5 * (g1.tau[k] - g1.tau[k - 1]);
            if (k + 1 < n)
                weight += 0.5 * (g1.tau[k + 1] - g1.tau[k]);
            acc += weight * std::polar(1.0, -w * g1.tau[k]) * f[k];
        }
        s.psd[j] = acc.real() / std::numbers::pi;
    }
    return s;
}

std::vector<double> intensity_kernel(const FilterSpec& filt, double dtau)
{
    filt.validate();
    if (!(dtau > 0.0))
        throw std::invalid_argument("kernel grid spacing must be positive");
    if (dtau > 1.0 / (4.0 * filt.cutoff_hz))
        throw std::invalid_argument("tau grid too coarse for the filter bandwidth (need dtau <= 1/(4 cutoff))");

    const double half_span = 0.5 * (filt.n_taps - 1) / filt.sample_rate_hz;
    const int half = static_cast<int>(std::floor(half_span / dtau + 1e-9));
    std::vector<double> intensity(2 * half + 1);
    for (int j = -half; j <= half; ++j) {
        const double h = lowpass_impulse(filt, j * dtau);
        intensity[j + half] = h * h;
    }
    const int n = static_cast<int>(intensity.size());
    std::vector<double> k(n);
    for (int lag = 0; lag < n; ++lag) {
        double s = 0.0;
        for (int i = 0; i + lag < n; ++i)
            s += intensity[i] * intensity[i + lag];
        k[lag] = s;
    }
    double total = k[0];
    for (int lag = 1; lag < n; ++lag)
        total += 2.0 * k[lag];
    for (double& x : k)
        x /= total;
    while (k.size() > 1 && k.back() < 1e-15 * k.front())
        k.pop_back();
    return k;
}

double tail_mean(const std::vector<double>& values, double fraction)
{
    if (values.empty())
        throw std::invalid_argument("tail_mean of empty trace");
    const std::size_t n = values.size();
    const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n)));
    double s = 0.0;
    for (std::size_t k = n - m; k < n; ++k)
        s += values[k];
    return s / static_cast<double>(m);
}

CorrelationTrace filter_g2(const CorrelationTrace& g2, const FilterSpec& filt)
{
    if (g2.kind != TraceKind::g2 || !g2.normalized)
        throw std::invalid_argument("filter_g2 needs a normalized g2 trace");
    check_tau_grid(g2.tau);
    double dtau = 0.0;
    if (!is_uniform(g2.tau, dtau))
        throw std::invalid_argument("filter_g2 needs a uniform tau grid");

    const std::vector<double> kernel = intensity_kernel(filt, dtau);
    const std::vector<double> in = g2.real_values();
    const long n = static_cast<long>(in.size());
    const long m = static_cast<long>(kernel.size());
    auto sample = [&](long idx) { return in[static_cast<std::size_t>(std::min(std::labs(idx), n - 1))]; };

    std::vector<double> out(in.size());
    for (long k = 0; k < n; ++k) {
        double s = kernel[0] * sample(k);
        for (long j = 1; j < m; ++j)
            s += kernel[static_cast<std::size_t>(j)] * (sample(k - j) + sample(k + j));
        out[static_cast<std::size_t>(k)] = s;
    }
    const double tail = tail_mean(out);
    CorrelationTrace res = g2;
    res.errors.clear();
    for (long k = 0; k < n; ++k)
        res.values[static_cast<std::size_t>(k)] = out[static_cast<std::size_t>(k)] / tail;
    res.normalization_constant = g2.normalization_constant * tail;
    return res;
}

} // namespace blockade
