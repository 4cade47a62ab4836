#include "blockade/mollow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace blockade {

void TwoLevelParams::validate() const
{
    const double xs[] = {gamma1, gamma2, omega, delta};
    for (double x : xs)
        if (!std::isfinite(x))
            throw std::invalid_argument("two-level parameters must be finite");
    if (gamma1 < 0.0 || omega < 0.0)
        throw std::invalid_argument("Gamma1 and Omega must be non-negative");
    if (gamma2 < 0.5 * gamma1 * (1.0 - 1e-12))
        throw std::invalid_argument("Gamma2 must be at least Gamma1/2");
}

TwoLevelParams effective_two_level(const DeviceParams& device, const DriveParams& drive)
{
    device.validate();
    drive.validate();
    if (!device.resonant())
        throw std::invalid_argument("effective two-level model assumes omega_r == omega_a");
    TwoLevelParams p;
    p.gamma1 = 0.5 * (device.kappa + device.gamma);
    p.gamma2 = 0.5 * p.gamma1 + 0.5 * device.gamma_phi;
    p.omega = drive.omega_R;
    p.delta = (device.omega_r - device.g) - drive.omega_d;
    return p;
}

BlochSystem bloch_matrix(const TwoLevelParams& p)
{
    p.validate();
    BlochSystem s;
    // H = (Delta/2) s_z + (Omega/2) s_x.
    s.M << -p.gamma2, -p.delta, 0.0,
            p.delta, -p.gamma2, -p.omega,
            0.0, p.omega, -p.gamma1;
    s.b << 0.0, 0.0, -p.gamma1;
    return s;
}

SpectrumTrace tls_spectrum(const TwoLevelParams& p, std::span<const double> freq_grid)
{
    const BlochSystem sys = bloch_matrix(p);
    if (p.gamma1 <= 0.0)
        throw std::invalid_argument("tls_spectrum needs Gamma1 > 0 for a steady state");
    const Eigen::Vector3d v = sys.steady_state();
    const cplx I{0.0, 1.0};
    const cplx s_minus = 0.5 * (v(0) - I * v(1));
    const double z = v(2);

    // Regression: u_i(tau) = <s_i(tau) s-(0)> - v_i <s->, du/dtau = M u.
    Eigen::Vector3cd u0;
    u0 << 0.5 * (1.0 + z) - v(0) * s_minus,
          -I * 0.5 * (1.0 + z) - v(1) * s_minus,
          -s_minus - v(2) * s_minus;
    // s+ = (s_x + i s_y)/2.
    const Eigen::RowVector3cd c(0.5, 0.5 * I, 0.0);

    Eigen::Matrix3cd M = sys.M.cast<cplx>();
    Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(M);
    Eigen::Matrix3cd V = es.eigenvectors();
    Eigen::Vector3cd lam = es.eigenvalues();
    // Near an exceptional point V is singular; a tiny perturbation splits the
    // eigenvalues and the partial-fraction sum stays accurate.
    Eigen::JacobiSVD<Eigen::Matrix3cd> svd(V);
    const auto sv = svd.singularValues();
    if (sv(2) < 1e-6 * sv(0)) {
        Eigen::Matrix3d bump = Eigen::Matrix3d::Zero();
        bump(0, 0) = 1e-9 * std::max(p.gamma1, 1e-300);
        bump(2, 2) = -1e-9 * std::max(p.gamma1, 1e-300);
        M = (sys.M + bump).cast<cplx>();
        es.compute(M);
        V = es.eigenvectors();
        lam = es.eigenvalues();
    }
    const Eigen::Vector3cd w = V.partialPivLu().solve(u0);
    const Eigen::RowVector3cd cv = c * V;

    SpectrumTrace s;
    s.freq.assign(freq_grid.begin(), freq_grid.end());
    s.psd.resize(freq_grid.size());
    s.coherent_weight = std::norm(s_minus);
    s.coherent_freq = 0.0;
    for (std::size_t j = 0; j < freq_grid.size(); ++j) {
        cplx acc = 0.0;
        for (int k = 0; k < 3; ++k)
            acc += cv(k) * w(k) / (I * freq_grid[j] - lam(k));
        s.psd[j] = acc.real() / std::numbers::pi;
    }
    return s;
}

std::optional<double> side_peak_offset(const TwoLevelParams& p)
{
    const BlochSystem sys = bloch_matrix(p);
    Eigen::EigenSolver<Eigen::Matrix3d> es(sys.M, false);
    double best = 0.0;
    for (int k = 0; k < 3; ++k)
        best = std::max(best, std::abs(es.eigenvalues()(k).imag()));
    const double scale = std::max({p.gamma1, p.gamma2, p.omega, std::abs(p.delta)});
    if (best <= 1e-12 * scale)
        return std::nullopt;
    return best;
}

} // namespace blockade
