#include "blockade/hilbert.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "blockade/units.hpp"

namespace blockade {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

Operator kron(const Operator& A, const Operator& B)
{
    Operator out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

} // namespace

void DeviceParams::validate() const
{
    const double fields[] = {omega_r, omega_a, g, kappa, gamma, gamma_phi};
    for (double x : fields)
        if (!finite_nonneg(x))
            throw std::invalid_argument("device rates and frequencies must be finite and non-negative");
    if (n_fock < 2)
        throw std::invalid_argument("n_fock must be at least 2, got " + std::to_string(n_fock));
}

DeviceParams DeviceParams::reference()
{
    DeviceParams p;
    p.omega_r = units::ghz(6.769);
    p.omega_a = units::ghz(6.769);
    p.g = units::mhz(73.0);
    p.kappa = units::mhz(4.0);
    p.gamma = units::mhz(0.4);
    p.gamma_phi = units::mhz(0.1);
    p.n_fock = 5;
    return p;
}

void DriveParams::validate() const
{
    if (!std::isfinite(omega_d) || !finite_nonneg(omega_R))
        throw std::invalid_argument("drive amplitude must be finite and non-negative");
}

DriveParams DriveParams::lower_polariton(const DeviceParams& device, double omega_R)
{
    return DriveParams{device.omega_r - device.g, omega_R};
}

StateVector basis_state(int n_fock, Qubit q, int n)
{
    if (n < 0 || n >= n_fock)
        throw std::out_of_range("Fock index outside truncation");
    StateVector psi = StateVector::Zero(2 * n_fock);
    psi(basis_index(n_fock, q, n)) = 1.0;
    return psi;
}

OperatorSet build_space(const DeviceParams& device)
{
    device.validate();
    const int nf = device.n_fock;

    Operator a_c = Operator::Zero(nf, nf);
    for (int n = 1; n < nf; ++n)
        a_c(n - 1, n) = std::sqrt(static_cast<double>(n));

    Operator sm_q = Operator::Zero(2, 2);
    sm_q(0, 1) = 1.0; // |g><e|
    Operator sz_q = Operator::Zero(2, 2);
    sz_q(0, 0) = -1.0;
    sz_q(1, 1) = 1.0;

    const Operator id_c = Operator::Identity(nf, nf);
    const Operator id_q = Operator::Identity(2, 2);

    OperatorSet ops;
    ops.n_fock = nf;
    ops.a = kron(id_q, a_c);
    ops.a_dag = ops.a.adjoint();
    ops.sigma_minus = kron(sm_q, id_c);
    ops.sigma_plus = ops.sigma_minus.adjoint();
    ops.sigma_z = kron(sz_q, id_c);
    ops.identity = Operator::Identity(2 * nf, 2 * nf);
    return ops;
}

double cavity_drive_amplitude(double omega_R) { return std::sqrt(2.0) * omega_R; }

Operator build_hamiltonian(const OperatorSet& ops, const DeviceParams& device, const DriveParams& drive)
{
    device.validate();
    drive.validate();
    if (ops.n_fock != device.n_fock)
        throw std::invalid_argument("operator set built on a different truncation");

    const double dr = device.omega_r - drive.omega_d;
    const double da = device.omega_a - drive.omega_d;
    const double drive_coeff = 0.5 * cavity_drive_amplitude(drive.omega_R);

    Operator H = dr * ops.a_dag * ops.a + da * ops.sigma_plus * ops.sigma_minus
        + device.g * (ops.a_dag * ops.sigma_minus + ops.a * ops.sigma_plus)
        + drive_coeff * (ops.a + ops.a_dag);
    // Hermitian by construction; symmetrize away rounding in the products.
    return 0.5 * (H + H.adjoint());
}

Operator build_hamiltonian(const DeviceParams& device, const DriveParams& drive)
{
    return build_hamiltonian(build_space(device), device, drive);
}

std::pair<DressedState, DressedState> dressed_states(const DeviceParams& device, int n)
{
    device.validate();
    if (n < 1 || n >= device.n_fock)
        throw std::out_of_range("excitation number must satisfy 1 <= n < n_fock");
    if (device.g <= 0.0)
        throw std::invalid_argument("dressed states need g > 0");

    // Block on (|g n>, |e n-1>) relative to n*omega_r.
    const double delta = device.omega_a - device.omega_r;
    const double coupling = device.g * std::sqrt(static_cast<double>(n));
    const double half = 0.5 * delta;
    const double root = std::hypot(half, coupling);

    auto make = [&](double energy) {
        // (H - E) v = 0 on the 2x2 block: -E v0 + c v1 = 0.
        double v0 = coupling;
        double v1 = energy;
        const double norm = std::hypot(v0, v1);
        v0 /= norm;
        v1 /= norm;
        DressedState s;
        s.energy = energy;
        s.state = StateVector::Zero(device.dim());
        s.state(basis_index(device.n_fock, Qubit::ground, n)) = v0;
        s.state(basis_index(device.n_fock, Qubit::excited, n - 1)) = v1;
        return s;
    };
    return {make(half - root), make(half + root)};
}

} // namespace blockade
