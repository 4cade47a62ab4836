#include "blockade/fitpeaks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

namespace blockade {

double TripletParams::operator()(double d) const
{
    const double x = d - center;
    return center_amp * lorentzian(x, center_width)
        + side_amp * (lorentzian(x - offset, side_width) + lorentzian(x + offset, side_width));
}

TripletParams TripletFit::params() const
{
    return {amplitudes[1], widths[1], center_freq, amplitudes[0], widths[0], offset};
}

namespace {

std::vector<double> median5(const std::vector<double>& y)
{
    const std::size_t n = y.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(n, i + 3);
        std::vector<double> w(y.begin() + static_cast<long>(lo), y.begin() + static_cast<long>(hi));
        std::nth_element(w.begin(), w.begin() + static_cast<long>(w.size() / 2), w.end());
        out[i] = w[w.size() / 2];
    }
    return out;
}

// The fitted curve dips between the centre and the upper side peak.
bool side_resolved(const TripletParams& t)
{
    const int n = 400;
    const double step = t.offset / n;
    double lowest = t(t.center);
    for (int k = 1; k <= n; ++k)
        lowest = std::min(lowest, t(t.center + k * step));
    return lowest < t(t.center + t.offset) * (1.0 - 1e-9);
}

// Parameters in scaled units: frequencies / f_scale, amplitudes / y_scale.
struct TripletFunctor : Eigen::DenseFunctor<double> {
    const std::vector<double>& x;
    const std::vector<double>& y;

    TripletFunctor(const std::vector<double>& x_, const std::vector<double>& y_)
        : Eigen::DenseFunctor<double>(6, static_cast<int>(x_.size())), x(x_), y(y_)
    {
    }

    int operator()(const InputType& p, ValueType& r) const
    {
        const TripletParams m{p(0), p(1), p(2), p(3), p(4), p(5)};
        for (std::size_t i = 0; i < x.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = m(x[i]) - y[i];
        return 0;
    }

    int df(const InputType& p, JacobianType& J) const
    {
        // dL/dd = -2 d w^2 / (d^2+w^2)^2, dL/dw = 2 w d^2 / (d^2+w^2)^2
        auto parts = [](double d, double w, double& L, double& dLdd, double& dLdw) {
            const double den = d * d + w * w;
            L = w * w / den;
            dLdd = -2.0 * d * w * w / (den * den);
            dLdw = 2.0 * w * d * d / (den * den);
        };
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double u = x[i] - p(2);
            double Lc, Lc_d, Lc_w, Lm, Lm_d, Lm_w, Lp, Lp_d, Lp_w;
            parts(u, p(1), Lc, Lc_d, Lc_w);
            parts(u - p(5), p(4), Lm, Lm_d, Lm_w);
            parts(u + p(5), p(4), Lp, Lp_d, Lp_w);
            J(k, 0) = Lc;
            J(k, 1) = p(0) * Lc_w;
            J(k, 2) = -(p(0) * Lc_d + p(3) * (Lm_d + Lp_d));
            J(k, 3) = Lm + Lp;
            J(k, 4) = p(3) * (Lm_w + Lp_w);
            J(k, 5) = p(3) * (-Lm_d + Lp_d);
        }
        return 0;
    }
};

// Half width at half maximum around index i0 of y, in x units.
double half_width(const std::vector<double>& x, const std::vector<double>& y, std::size_t i0)
{
    const double half = 0.5 * y[i0];
    std::size_t lo = i0, hi = i0;
    while (lo > 0 && y[lo] > half)
        --lo;
    while (hi + 1 < y.size() && y[hi] > half)
        ++hi;
    return 0.5 * (x[hi] - x[lo]);
}

} // namespace

TripletFit fit_triplet(const SpectrumTrace& spec, const FitOptions& opts)
{
    if (spec.freq.size() != spec.psd.size() || spec.freq.size() < 8)
        throw std::invalid_argument("fit_triplet needs at least eight spectral points");
    for (std::size_t i = 1; i < spec.freq.size(); ++i)
        if (!(spec.freq[i] > spec.freq[i - 1]))
            throw std::invalid_argument("spectrum frequencies must be strictly ascending");

    // Rayleigh mask: points within mask_half_width_bins of zero frequency.
    std::vector<double> x, y;
    {
        const auto zero = std::lower_bound(spec.freq.begin(), spec.freq.end(), 0.0) - spec.freq.begin();
        for (std::size_t i = 0; i < spec.freq.size(); ++i) {
            const long rel = static_cast<long>(i) - static_cast<long>(zero);
            if (opts.mask_half_width_bins > 0 && rel >= -opts.mask_half_width_bins
                && rel <= opts.mask_half_width_bins)
                continue;
            if (!std::isfinite(spec.psd[i]))
                continue;
            x.push_back(spec.freq[i]);
            y.push_back(spec.psd[i]);
        }
    }
    if (x.size() < 8)
        throw std::invalid_argument("too few unmasked spectral points to fit");

    const std::vector<double> ys = median5(y);
    const double y_scale = *std::max_element(ys.begin(), ys.end());
    if (!(y_scale > 0.0))
        throw std::invalid_argument("spectrum has no positive content to fit");

    std::vector<std::size_t> maxima;
    for (std::size_t i = 1; i + 1 < ys.size(); ++i)
        if (ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])
            maxima.push_back(i);
    std::sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });

    double c0, w0, wc0, ws0, ac0, as0;
    const double bin = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    if (maxima.size() >= 3) {
        std::array<std::size_t, 3> idx{maxima[0], maxima[1], maxima[2]};
        std::sort(idx.begin(), idx.end());
        c0 = x[idx[1]];
        w0 = 0.5 * (x[idx[2]] - x[idx[0]]);
        ac0 = ys[idx[1]];
        as0 = 0.5 * (ys[idx[0]] + ys[idx[2]]);
        wc0 = half_width(x, ys, idx[1]);
        ws0 = 0.5 * (half_width(x, ys, idx[0]) + half_width(x, ys, idx[2]));
    } else {
        const std::size_t top = maxima.empty() ? static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin()) : maxima[0];
        c0 = 0.0;
        w0 = opts.drive_hint > 0.0 ? opts.drive_hint : half_width(x, ys, top);
        ac0 = ys[top];
        as0 = 0.5 * ys[top];
        wc0 = half_width(x, ys, top);
        ws0 = wc0;
    }
    wc0 = std::max({wc0, bin, 1e-3 * w0});
    ws0 = std::max({ws0, bin, 1e-3 * w0});
    const double f_scale = std::max({w0, wc0, ws0});

    std::vector<double> xs(x.size()), yn(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xs[i] = x[i] / f_scale;
        yn[i] = y[i] / y_scale;
    }
    Eigen::VectorXd p(6);
    p << ac0 / y_scale, wc0 / f_scale, c0 / f_scale, as0 / y_scale, ws0 / f_scale, w0 / f_scale;

    TripletFunctor fn(xs, yn);
    Eigen::LevenbergMarquardt<TripletFunctor> lm(fn);
    lm.setMaxfev(opts.max_evaluations);
    lm.setXtol(1e-15);
    lm.setFtol(1e-15);
    lm.setGtol(0.0);
    lm.minimize(p);

    Eigen::VectorXd r(static_cast<Eigen::Index>(xs.size()));
    Eigen::MatrixXd J(static_cast<Eigen::Index>(xs.size()), 6);
    fn(p, r);
    fn.df(p, J);
    const double grad = (J.transpose() * r).norm();
    const double grad_scale = J.norm() * std::sqrt(static_cast<double>(xs.size()));

    TripletFit fit;
    fit.converged = std::isfinite(grad) && grad < 1e-8 * grad_scale;
    fit.center_freq = p(2) * f_scale;
    fit.offset = std::abs(p(5)) * f_scale;
    const double ws = std::abs(p(4)) * f_scale;
    fit.widths = {ws, std::abs(p(1)) * f_scale, ws};
    fit.amplitudes = {p(3) * y_scale, p(0) * y_scale, p(3) * y_scale};
    fit.residual_rms = y_scale * r.norm() / std::sqrt(static_cast<double>(r.size()));
    if (fit.offset >= 0.5 * ws && p(3) > 0.0 && side_resolved(fit.params()))
        fit.omega_sp = fit.offset;
    return fit;
}

} // namespace blockade
