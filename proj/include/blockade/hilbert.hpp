#pragma once

#include <complex>
#include <utility>

#include <Eigen/Dense>

namespace blockade {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

// Physical parameters of the qubit-cavity system. All rates and frequencies are
// angular (rad/s). The Hilbert space is qubit (x) cavity with the cavity
// truncated to n_fock levels.
struct DeviceParams {
    double omega_r = 0.0;
    double omega_a = 0.0;
    double g = 0.0;
    double kappa = 0.0;
    double gamma = 0.0;
    double gamma_phi = 0.0;
    int n_fock = 5;

    void validate() const;
    int dim() const { return 2 * n_fock; }
    bool resonant() const { return omega_r == omega_a; }

    // 6.769 GHz resonator and qubit, g/2pi = 73 MHz, kappa/2pi = 4 MHz,
    // gamma/2pi = 0.4 MHz, gamma_phi/2pi = 0.1 MHz, five Fock levels.
    static DeviceParams reference();
};

struct DriveParams {
    double omega_d = 0.0;
    // Effective Rabi frequency of the |g0> <-> |1-> transition.
    double omega_R = 0.0;

    void validate() const;

    // Drive at omega_r - g, resonant with |1->.
    static DriveParams lower_polariton(const DeviceParams& device, double omega_R);
};

enum class Qubit : int { ground = 0, excited = 1 };

// Tensor order is qubit (x) cavity: basis index = qubit * n_fock + photon number.
inline constexpr const char* tensor_order = "qubit(x)cavity";

inline int basis_index(int n_fock, Qubit q, int n) { return static_cast<int>(q) * n_fock + n; }
StateVector basis_state(int n_fock, Qubit q, int n);

struct OperatorSet {
    int n_fock = 0;
    Operator a;
    Operator a_dag;
    Operator sigma_minus;
    Operator sigma_plus;
    Operator sigma_z;
    Operator identity;

    int dim() const { return 2 * n_fock; }
};

OperatorSet build_space(const DeviceParams& device);

// H/hbar in the frame rotating at the drive frequency:
//   dr a^dag a + da s+ s- + g (a^dag s- + a s+) + (Omega_eff/2)(a + a^dag)
// with Omega_eff = sqrt(2) * omega_R so that the |g0> <-> |1-> Rabi
// frequency equals omega_R.
Operator build_hamiltonian(const OperatorSet& ops, const DeviceParams& device, const DriveParams& drive);
Operator build_hamiltonian(const DeviceParams& device, const DriveParams& drive);

// Cavity drive coefficient for a given effective |g0> <-> |1-> Rabi frequency.
double cavity_drive_amplitude(double omega_R);

struct DressedState {
    double energy = 0.0; // relative to n * omega_r
    StateVector state;
};

// |n,-> and |n,+> of the undriven n-excitation doublet, ordered (minus, plus).
// Sign convention: <g n|n,-> > 0 and <g n|n,+> > 0.
std::pair<DressedState, DressedState> dressed_states(const DeviceParams& device, int n);

} // namespace blockade
