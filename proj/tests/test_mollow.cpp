#include <doctest.h>

#include <cmath>
#include <numbers>

#include "blockade/correlate.hpp"
#include "blockade/mollow.hpp"
#include "blockade/units.hpp"
#include "oracles.hpp"

using namespace blockade;

namespace {

// Two-level master equation with H = (Delta/2) s_z + (Omega/2) s_x, decay
// Gamma1 and pure dephasing making the transverse rate Gamma2.
struct Tls {
    oracle::Mat sm, sp, sz, sx;
    oracle::RowMajorLindblad lind;

    static oracle::Mat H(const TwoLevelParams& p, oracle::Mat& sm, oracle::Mat& sz, oracle::Mat& sx)
    {
        sm = oracle::Mat::Zero(2, 2);
        sm(1, 0) = 1.0; // basis (e, g): s- = |g><e|
        sz = oracle::Mat::Zero(2, 2);
        sz(0, 0) = 1.0;
        sz(1, 1) = -1.0;
        sx = sm + sm.adjoint();
        return 0.5 * p.delta * sz + 0.5 * p.omega * sx;
    }

    explicit Tls(const TwoLevelParams& p) : lind(make(p)) {}

    oracle::RowMajorLindblad make(const TwoLevelParams& p)
    {
        const oracle::Mat h = H(p, sm, sz, sx);
        sp = sm.adjoint();
        const double dephase = 0.5 * (p.gamma2 - 0.5 * p.gamma1);
        return oracle::RowMajorLindblad(h, {std::sqrt(p.gamma1) * sm, std::sqrt(dephase) * sz});
    }
};

TwoLevelParams paper_like(double omega_mhz, double delta_mhz = 0.0)
{
    const DeviceParams d = DeviceParams::reference();
    TwoLevelParams p = effective_two_level(d, DriveParams::lower_polariton(d, units::mhz(omega_mhz)));
    p.delta = units::mhz(delta_mhz);
    return p;
}

} // namespace

TEST_CASE("effective rates of the |g0> <-> |1-> transition")
{
    const DeviceParams d = DeviceParams::reference();
    const TwoLevelParams p = effective_two_level(d, DriveParams::lower_polariton(d, units::mhz(7.9)));
    CHECK(p.gamma1 == doctest::Approx(0.5 * (d.kappa + d.gamma)));
    CHECK(p.gamma2 == doctest::Approx(0.5 * p.gamma1 + 0.5 * d.gamma_phi));
    CHECK(p.omega == doctest::Approx(units::mhz(7.9)));
    CHECK(p.delta == doctest::Approx(0.0).scale(1.0));
    DeviceParams detuned = d;
    detuned.omega_a += 1.0;
    CHECK_THROWS_AS(effective_two_level(detuned, DriveParams::lower_polariton(d, 1.0)), std::invalid_argument);
}

TEST_CASE("Bloch steady state: closed form on resonance and the master-equation oracle off resonance")
{
    TwoLevelParams p = paper_like(5.0);
    Eigen::Vector3d v = bloch_matrix(p).steady_state();
    const double s = p.omega * p.omega / (p.gamma1 * p.gamma2);
    CHECK(v(0) == doctest::Approx(0.0).scale(1.0));
    CHECK(v(2) == doctest::Approx(-1.0 / (1.0 + s)));
    CHECK(v(1) == doctest::Approx(-p.omega * v(2) / p.gamma2));

    p = paper_like(5.0, 3.0);
    v = bloch_matrix(p).steady_state();
    const Tls t(p);
    const oracle::Mat rho = t.lind.steady_state();
    CHECK(v(0) == doctest::Approx((t.sx * rho).trace().real()).epsilon(1e-9));
    CHECK(v(1) == doctest::Approx((cplx{0, -1} * (t.sp - t.sm) * rho).trace().real()).epsilon(1e-9));
    CHECK(v(2) == doctest::Approx((t.sz * rho).trace().real()).epsilon(1e-9));
}

TEST_CASE("two-level spectrum equals the resolvent of the two-level master equation")
{
    for (const auto& [om, de] : {std::pair{7.9, 0.0}, std::pair{2.0, 0.0}, std::pair{5.0, 3.0}, std::pair{1.1, 0.0}}) {
        const TwoLevelParams p = paper_like(om, de);
        const auto freq = uniform_grid(-units::mhz(30.0), units::mhz(30.0), 121);
        const SpectrumTrace s = tls_spectrum(p, freq);
        const Tls t(p);
        const oracle::Mat rho = t.lind.steady_state();
        const cplx sm = (t.sm * rho).trace();
        const oracle::Mat X = t.sm * rho - sm * rho;
        double peak = 0.0;
        std::vector<double> ref(freq.size());
        for (std::size_t j = 0; j < freq.size(); ++j) {
            ref[j] = t.lind.laplace(t.sp, X, rho, freq[j]).real() / std::numbers::pi;
            peak = std::max(peak, ref[j]);
        }
        for (std::size_t j = 0; j < freq.size(); ++j)
            CHECK(std::abs(s.psd[j] - ref[j]) < 1e-7 * peak);
        CHECK(s.coherent_weight == doctest::Approx(std::norm(sm)).epsilon(1e-9));
    }
}

TEST_CASE("detuned emission sits on the side of the transition")
{
    const TwoLevelParams p = paper_like(0.5, 10.0);
    const auto freq = uniform_grid(-units::mhz(20.0), units::mhz(20.0), 401);
    const SpectrumTrace s = tls_spectrum(p, freq);
    const auto peak = std::max_element(s.psd.begin(), s.psd.end()) - s.psd.begin();
    CHECK(freq[peak] > 0.0);
}

TEST_CASE("side-peak offset on resonance: sqrt(Omega^2 - (Gamma1 - Gamma2)^2 / 4)")
{
    for (double om : {0.5, 1.0, 2.0, 5.0, 7.9, 13.0}) {
        const TwoLevelParams p = paper_like(om);
        const double arg = p.omega * p.omega - 0.25 * std::pow(p.gamma1 - p.gamma2, 2);
        const auto w = side_peak_offset(p);
        if (arg > 1e-6 * p.omega * p.omega) {
            REQUIRE(w.has_value());
            CHECK(*w == doctest::Approx(std::sqrt(arg)).epsilon(1e-9));
        } else {
            CHECK_FALSE(w.has_value());
        }
    }
    // Strong drive limit.
    const TwoLevelParams strong = paper_like(500.0);
    CHECK(*side_peak_offset(strong) / strong.omega == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("two-level spectral weight equals the incoherent excited population")
{
    const TwoLevelParams p = paper_like(7.9);
    const auto freq = uniform_grid(-units::mhz(3000.0), units::mhz(3000.0), 600001);
    const SpectrumTrace s = tls_spectrum(p, freq);
    const Eigen::Vector3d v = bloch_matrix(p).steady_state();
    const double excited = 0.5 * (1.0 + v(2));
    CHECK(s.integrated() + s.coherent_weight == doctest::Approx(excited).epsilon(2e-3));
}

TEST_CASE("spectrum stays finite at the exceptional point")
{
    TwoLevelParams p = paper_like(1.0);
    p.omega = 0.5 * std::abs(p.gamma1 - p.gamma2); // Im lambda = 0, degenerate pair
    const auto freq = uniform_grid(-units::mhz(5.0), units::mhz(5.0), 41);
    const SpectrumTrace s = tls_spectrum(p, freq);
    for (double x : s.psd)
        CHECK(std::isfinite(x));
}

TEST_CASE("parameter validation")
{
    TwoLevelParams p = paper_like(1.0);
    p.gamma2 = 0.3 * p.gamma1;
    CHECK_THROWS_AS(bloch_matrix(p), std::invalid_argument);
    p = paper_like(1.0);
    p.omega = -1.0;
    CHECK_THROWS_AS(bloch_matrix(p), std::invalid_argument);
}
