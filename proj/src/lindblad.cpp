#include "blockade/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include "blockade/errors.hpp"

namespace blockade {

namespace {

using Triplets = std::vector<Eigen::Triplet<cplx>>;

// Appends coeff * (A (x) B) to the triplet list, skipping structural zeros.
void add_kron(Triplets& out, const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B, cplx coeff)
{
    const Eigen::Index nb = B.rows();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            const cplx aij = A(i, j);
            if (aij == cplx{})
                continue;
            for (Eigen::Index k = 0; k < nb; ++k)
                for (Eigen::Index l = 0; l < B.cols(); ++l) {
                    const cplx bkl = B(k, l);
                    if (bkl != cplx{})
                        out.emplace_back(i * nb + k, j * nb + l, coeff * aij * bkl);
                }
        }
}

void add_dissipator(Triplets& out, const Operator& c, double rate)
{
    if (rate == 0.0)
        return;
    const Eigen::Index d = c.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    const Eigen::MatrixXcd cdc = c.adjoint() * c;
    add_kron(out, c.conjugate(), c, rate);
    add_kron(out, id, cdc, -0.5 * rate);
    add_kron(out, cdc.transpose(), id, -0.5 * rate);
}

double max_abs(const SparseSuperop& m)
{
    double s = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseSuperop::InnerIterator it(m, k); it; ++it)
            s = std::max(s, std::abs(it.value()));
    return s;
}

// Indices of vec(rho) holding the diagonal of rho.
Eigen::RowVectorXcd trace_row(int dim)
{
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(dim * dim);
    for (int i = 0; i < dim; ++i)
        row(i + i * dim) = 1.0;
    return row;
}

Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

Eigen::VectorXcd solve_with_trace_row_dense(const Liouvillian& L, int replaced_row)
{
    const int n = L.dim() * L.dim();
    Eigen::MatrixXcd A = L.dense();
    A.row(replaced_row) = L.scale() * trace_row(L.dim());
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(replaced_row) = L.scale();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(A);
    if (!lu.isInvertible())
        throw NumericError("steady state: trace-constrained Liouvillian is singular");
    return lu.solve(rhs);
}

Eigen::VectorXcd solve_with_trace_row_sparse(const Liouvillian& L, int replaced_row)
{
    const int d = L.dim();
    const int n = d * d;
    Triplets trip;
    trip.reserve(L.sparse().nonZeros() + d);
    // Row-major walk is awkward on a column-major matrix; filter by row instead.
    for (int k = 0; k < L.sparse().outerSize(); ++k)
        for (SparseSuperop::InnerIterator it(L.sparse(), k); it; ++it)
            if (it.row() != replaced_row)
                trip.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < d; ++i)
        trip.emplace_back(replaced_row, i + i * d, L.scale());
    SparseSuperop A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();

    Eigen::SparseLU<SparseSuperop> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw NumericError("steady state: sparse factorization failed (degenerate null space?)");
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(replaced_row) = L.scale();
    Eigen::VectorXcd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw NumericError("steady state: sparse solve failed");
    return x;
}

Eigen::VectorXcd normalize_trace(const Eigen::VectorXcd& v, int dim)
{
    cplx tr = 0.0;
    for (int i = 0; i < dim; ++i)
        tr += v(i + i * dim);
    if (std::abs(tr) == 0.0)
        throw NumericError("steady state: null vector has zero trace");
    return v / tr;
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class DormandPrince {
public:
    DormandPrince(const Liouvillian& L, const IntegratorOptions& opts, double atol)
        : L_(L), opts_(opts), atol_(atol)
    {
    }

    Eigen::VectorXcd apply_v(const Eigen::VectorXcd& v) const { return L_.apply(v); }

    // Advances y from t to t_end in place.
    void advance(Eigen::VectorXcd& y, double t, double t_end)
    {
        if (t_end <= t)
            return;
        if (h_ <= 0.0)
            h_ = 0.01 / std::max(L_.scale(), 1e-300);
        if (!have_k1_) {
            k1_ = apply_v(y);
            have_k1_ = true;
        }
        const double span = t_end - t;
        while (t < t_end) {
            if (++steps_ > opts_.max_steps)
                throw NumericError("Runge-Kutta: step budget exhausted");
            bool last = false;
            double h = h_;
            if (t + h >= t_end) {
                h = t_end - t;
                last = true;
            }
            if (h < 1e-14 * (std::abs(t) + span))
                throw NumericError("Runge-Kutta: step size underflow");

            const Eigen::VectorXcd k2 = apply_v(y + h * (a21 * k1_));
            const Eigen::VectorXcd k3 = apply_v(y + h * (a31 * k1_ + a32 * k2));
            const Eigen::VectorXcd k4 = apply_v(y + h * (a41 * k1_ + a42 * k2 + a43 * k3));
            const Eigen::VectorXcd k5 = apply_v(y + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
            const Eigen::VectorXcd k6
                = apply_v(y + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            Eigen::VectorXcd y_new = y + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            Eigen::VectorXcd k7 = apply_v(y_new);
            const Eigen::VectorXcd err
                = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double err_norm = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double sc = atol_ + opts_.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
                err_norm = std::max(err_norm, std::abs(err(i)) / sc);
            }
            if (!std::isfinite(err_norm))
                throw NumericError("Runge-Kutta: non-finite error estimate");

            const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
            if (err_norm <= 1.0) {
                t = last ? t_end : t + h;
                y = std::move(y_new);
                k1_ = std::move(k7);
                if (!last || factor < 1.0)
                    h_ = h * factor;
            } else {
                h_ = h * std::min(factor, 1.0);
            }
        }
    }

private:
    const Liouvillian& L_;
    IntegratorOptions opts_;
    double atol_;
    double h_ = 0.0;
    Eigen::VectorXcd k1_;
    bool have_k1_ = false;
    std::size_t steps_ = 0;
};

void check_grid(std::span<const double> t_grid)
{
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!std::isfinite(t_grid[k]) || t_grid[k] < 0.0)
            throw std::invalid_argument("time grid must be finite and non-negative");
        if (k > 0 && t_grid[k] < t_grid[k - 1])
            throw std::invalid_argument("time grid must be ascending");
    }
}

} // namespace

DensityMatrix::DensityMatrix(Eigen::MatrixXcd rho) : rho_(std::move(rho))
{
    if (rho_.rows() != rho_.cols())
        throw std::invalid_argument("density matrix must be square");
    check();
}

DensityMatrix DensityMatrix::pure(const StateVector& psi)
{
    const StateVector n = psi / psi.norm();
    return DensityMatrix(n * n.adjoint());
}

DensityMatrix DensityMatrix::unchecked(Eigen::MatrixXcd rho)
{
    DensityMatrix d;
    d.rho_ = std::move(rho);
    return d;
}

double DensityMatrix::min_eigenvalue() const
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitize(rho_), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void DensityMatrix::check(double herm_tol, double trace_tol, double pos_tol) const
{
    std::ostringstream msg;
    if (hermiticity_error() > herm_tol)
        msg << "density matrix not Hermitian (" << hermiticity_error() << "); ";
    if (trace_deviation() > trace_tol)
        msg << "trace deviates from 1 by " << trace_deviation() << "; ";
    if (const double lam = min_eigenvalue(); lam < -pos_tol)
        msg << "negative eigenvalue " << lam << "; ";
    if (!msg.str().empty())
        throw NumericError(msg.str());
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& m)
{
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, int dim)
{
    if (v.size() != static_cast<Eigen::Index>(dim) * dim)
        throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim);
}

Liouvillian::Liouvillian(int dim, SparseSuperop generator)
    : dim_(dim), generator_(std::move(generator)), scale_(max_abs(generator_))
{
    if (generator_.rows() != static_cast<Eigen::Index>(dim) * dim || generator_.cols() != generator_.rows())
        throw std::invalid_argument("superoperator size does not match Hilbert dimension");
    generator_.makeCompressed();
}

Eigen::MatrixXcd Liouvillian::apply(const Eigen::MatrixXcd& rho) const
{
    return unvec(generator_ * vec(rho), dim_);
}

double Liouvillian::relative_residual(const Eigen::MatrixXcd& rho) const
{
    const double denom = std::max(scale_, 1e-300) * rho.cwiseAbs().maxCoeff();
    return apply(rho).cwiseAbs().maxCoeff() / denom;
}

SparseSuperop dissipator(const Operator& c)
{
    Triplets trip;
    add_dissipator(trip, c, 1.0);
    const Eigen::Index n = c.rows() * c.rows();
    SparseSuperop D(n, n);
    D.setFromTriplets(trip.begin(), trip.end());
    return D;
}

Liouvillian build_liouvillian(const Operator& H, const DeviceParams& device, const BathParams& bath)
{
    device.validate();
    if (!std::isfinite(bath.n_th) || bath.n_th < 0.0)
        throw std::invalid_argument("bath occupation must be finite and non-negative");
    const OperatorSet ops = build_space(device);
    const int d = ops.dim();
    if (H.rows() != d || H.cols() != d)
        throw std::invalid_argument("Hamiltonian dimension does not match device truncation");

    Triplets trip;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    const cplx minus_i{0.0, -1.0};
    add_kron(trip, id, H, minus_i);
    add_kron(trip, H.transpose(), id, -minus_i);
    add_dissipator(trip, ops.a, device.kappa * (1.0 + bath.n_th));
    add_dissipator(trip, ops.a_dag, device.kappa * bath.n_th);
    add_dissipator(trip, ops.sigma_minus, device.gamma);
    add_dissipator(trip, ops.sigma_z, 0.5 * device.gamma_phi);

    SparseSuperop L(d * d, d * d);
    L.setFromTriplets(trip.begin(), trip.end());
    L.prune(cplx{}, 0.0);
    return Liouvillian(d, std::move(L));
}

DensityMatrix steady_state(const Liouvillian& L, SteadyStateReport* report)
{
    const int d = L.dim();
    SteadyStateReport rep;
    Eigen::VectorXcd x;

    if (d <= dense_steady_state_max_dim) {
        const Eigen::MatrixXcd A = L.dense();
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, true);
        if (es.info() != Eigen::Success)
            throw NumericError("steady state: eigen-decomposition failed");
        const auto& lam = es.eigenvalues();
        Eigen::Index i0 = 0;
        for (Eigen::Index i = 1; i < lam.size(); ++i)
            if (std::abs(lam(i)) < std::abs(lam(i0)))
                i0 = i;
        double second = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            if (i != i0)
                second = std::min(second, std::abs(lam(i)));
        const double smallest = std::abs(lam(i0));
        rep.gap_ratio = smallest > 0.0 ? second / smallest : std::numeric_limits<double>::infinity();
        rep.used_eigensolver = true;
        if (rep.gap_ratio < 1e6) {
            std::ostringstream msg;
            msg << "steady state is not unique: smallest |eigenvalues| " << smallest << " and " << second;
            throw NumericError(msg.str());
        }
        const Eigen::VectorXcd null_vec = normalize_trace(es.eigenvectors().col(i0), d);
        x = normalize_trace(solve_with_trace_row_dense(L, 0), d);
        const double mismatch = (x - null_vec).cwiseAbs().maxCoeff();
        if (mismatch > 1e-7)
            throw NumericError("steady state: eigenvector and linear solve disagree");
    } else {
        x = normalize_trace(solve_with_trace_row_sparse(L, 0), d);
        // A second constrained solve with a different replaced row exposes a
        // null space of dimension > 1: the two solutions then differ.
        const Eigen::VectorXcd y = normalize_trace(solve_with_trace_row_sparse(L, d * d - 1), d);
        if ((x - y).cwiseAbs().maxCoeff() > 1e-6)
            throw NumericError("steady state is not unique (constrained solves disagree)");
    }

    Eigen::MatrixXcd rho = hermitize(unvec(x, d));
    rho /= rho.trace();
    rep.relative_residual = L.relative_residual(rho);
    if (rep.relative_residual > 1e-10) {
        std::ostringstream msg;
        msg << "steady state residual too large: " << rep.relative_residual;
        throw NumericError(msg.str());
    }
    if (report)
        *report = rep;
    return DensityMatrix(std::move(rho));
}

void evolve_visit(const Liouvillian& L, const Eigen::VectorXcd& v0, std::span<const double> t_grid,
                  const std::function<void(std::size_t, const Eigen::VectorXcd&)>& visit,
                  const IntegratorOptions& opts)
{
    check_grid(t_grid);
    if (v0.size() != static_cast<Eigen::Index>(L.dim()) * L.dim())
        throw std::invalid_argument("evolve: vector size does not match superoperator");

    Integrator method = opts.method;
    if (method == Integrator::automatic)
        method = L.dim() <= dense_steady_state_max_dim ? Integrator::matrix_exponential : Integrator::runge_kutta;

    Eigen::VectorXcd y = v0;
    double t = 0.0;

    if (method == Integrator::matrix_exponential) {
        const Eigen::MatrixXcd A = L.dense();
        std::vector<std::pair<double, Eigen::MatrixXcd>> cache;
        auto step_for = [&](double dt) -> const Eigen::MatrixXcd& {
            for (const auto& [key, P] : cache)
                if (std::abs(key - dt) <= 1e-10 * dt)
                    return P;
            if (cache.size() > 64)
                cache.erase(cache.begin());
            cache.emplace_back(dt, (A * dt).exp());
            return cache.back().second;
        };
        for (std::size_t k = 0; k < t_grid.size(); ++k) {
            const double dt = t_grid[k] - t;
            if (dt > 0.0)
                y = step_for(dt) * y;
            t = t_grid[k];
            visit(k, y);
        }
        return;
    }

    const double atol = 1e-3 * opts.rtol * std::max(v0.cwiseAbs().maxCoeff(), 1e-300);
    DormandPrince rk(L, opts, atol);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        rk.advance(y, t, t_grid[k]);
        t = t_grid[k];
        visit(k, y);
    }
}

std::vector<Eigen::VectorXcd> evolve(const Liouvillian& L, const Eigen::VectorXcd& v0,
                                     std::span<const double> t_grid, const IntegratorOptions& opts)
{
    std::vector<Eigen::VectorXcd> out(t_grid.size());
    evolve_visit(L, v0, t_grid, [&](std::size_t k, const Eigen::VectorXcd& v) { out[k] = v; }, opts);
    return out;
}

std::vector<DensityMatrix> propagate(const Liouvillian& L, const DensityMatrix& rho0,
                                     std::span<const double> t_grid, const IntegratorOptions& opts)
{
    if (rho0.dim() != L.dim())
        throw std::invalid_argument("propagate: state dimension does not match superoperator");
    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    evolve_visit(
        L, vec(rho0.matrix()), t_grid,
        [&](std::size_t, const Eigen::VectorXcd& v) {
            DensityMatrix rho = DensityMatrix::unchecked(unvec(v, L.dim()));
            rho.check(1e-9, 1e-8, 1e-8);
            out.push_back(std::move(rho));
        },
        opts);
    return out;
}

} // namespace blockade
