#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "blockade/hilbert.hpp"

namespace blockade {

struct BathParams {
    double n_th = 0.0; // thermal occupation of the cavity bath
};

// A validated density matrix. Construction checks Hermiticity, unit trace and
// positivity; use DensityMatrix::unchecked for intermediate states.
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(Eigen::MatrixXcd rho);

    static DensityMatrix pure(const StateVector& psi);
    static DensityMatrix unchecked(Eigen::MatrixXcd rho);

    const Eigen::MatrixXcd& matrix() const { return rho_; }
    int dim() const { return static_cast<int>(rho_.rows()); }

    cplx expect(const Operator& op) const { return (op * rho_).trace(); }
    double trace_deviation() const { return std::abs(rho_.trace() - 1.0); }
    double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
    double min_eigenvalue() const;

    // Throws NumericError if any invariant is violated beyond the given tolerances.
    void check(double herm_tol = 1e-10, double trace_tol = 1e-10, double pos_tol = 1e-8) const;

private:
    Eigen::MatrixXcd rho_;
};

// Column-stacked vectorization: vec(A rho B) = (B^T (x) A) vec(rho).
Eigen::VectorXcd vec(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, int dim);

using SparseSuperop = Eigen::SparseMatrix<cplx>;

class Liouvillian {
public:
    Liouvillian(int dim, SparseSuperop generator);

    int dim() const { return dim_; }
    const SparseSuperop& sparse() const { return generator_; }
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(generator_); }
    // Largest absolute entry, the natural rate scale for relative tolerances.
    double scale() const { return scale_; }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return generator_ * v; }
    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;

    // ||L(rho)|| / (scale * ||rho||), max-norms.
    double relative_residual(const Eigen::MatrixXcd& rho) const;

private:
    int dim_;
    SparseSuperop generator_;
    double scale_;
};

// L(rho) = -i[H, rho] + kappa (1 + n_th) D[a] + kappa n_th D[a^dag]
//          + gamma D[s-] + (gamma_phi / 2) D[s_z]
Liouvillian build_liouvillian(const Operator& H, const DeviceParams& device, const BathParams& bath);

// Superoperator of a single dissipator D[c] = c . c^dag - 1/2 {c^dag c, .}.
SparseSuperop dissipator(const Operator& c);

struct SteadyStateReport {
    double relative_residual = 0.0;
    // |second smallest eigenvalue| / |smallest eigenvalue|; zero when the
    // sparse route is used and the full spectrum is not computed.
    double gap_ratio = 0.0;
    bool used_eigensolver = false;
};

// Hilbert dimensions up to this size take the dense eigen-decomposition route.
inline constexpr int dense_steady_state_max_dim = 20;

// Null vector of L, trace normalized. Small systems select it as the
// smallest-magnitude eigenvector and check uniqueness through the spectral
// gap; the vector is then polished with a trace-constrained linear solve.
DensityMatrix steady_state(const Liouvillian& L, SteadyStateReport* report = nullptr);

enum class Integrator {
    automatic,          // matrix exponential for small systems, Runge-Kutta otherwise
    matrix_exponential, // exact steps exp(L dt), cached per distinct dt
    runge_kutta,        // adaptive Dormand-Prince 5(4), rtol 1e-10
};

struct IntegratorOptions {
    Integrator method = Integrator::automatic;
    double rtol = 1e-10;
    std::size_t max_steps = 50'000'000;
};

// e^{L t} v0 at each t of an ascending grid starting at or after 0. Works on
// any vectorized operator, not just density matrices (quantum regression).
std::vector<Eigen::VectorXcd> evolve(const Liouvillian& L, const Eigen::VectorXcd& v0,
                                     std::span<const double> t_grid, const IntegratorOptions& opts = {});

// Streaming form of evolve(): visit(k, v(t_k)) is called once per grid point in order.
void evolve_visit(const Liouvillian& L, const Eigen::VectorXcd& v0, std::span<const double> t_grid,
                  const std::function<void(std::size_t, const Eigen::VectorXcd&)>& visit,
                  const IntegratorOptions& opts = {});

// Same as evolve() for a density matrix; every sample is validated.
std::vector<DensityMatrix> propagate(const Liouvillian& L, const DensityMatrix& rho0,
                                     std::span<const double> t_grid, const IntegratorOptions& opts = {});

} // namespace blockade
