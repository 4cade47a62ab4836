#include "blockade/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "blockade/errors.hpp"
#include "blockade/rng.hpp"

namespace blockade {

namespace {

struct Channel {
    Operator op;
    bool cavity = false;
    bool qubit = false;
};

// exp(-i H_eff s) applied to a fixed state, for arbitrary s.
class NonHermitianPropagator {
public:
    explicit NonHermitianPropagator(const Operator& h_eff) : h_eff_(h_eff)
    {
        Eigen::ComplexEigenSolver<Operator> es(h_eff);
        if (es.info() == Eigen::Success) {
            Eigen::JacobiSVD<Operator> svd(es.eigenvectors());
            const auto& sv = svd.singularValues();
            if (sv(sv.size() - 1) > 1e-8 * sv(0)) {
                diagonal_ = true;
                V_ = es.eigenvectors();
                lu_ = V_.partialPivLu();
                lambda_ = es.eigenvalues();
            }
        }
    }

    // Prepares evaluations starting from psi.
    void load(const StateVector& psi)
    {
        psi0_ = psi;
        if (diagonal_)
            coeff_ = lu_.solve(psi);
    }

    StateVector at(double s) const
    {
        if (!diagonal_)
            return (cplx{0.0, -s} * h_eff_).exp() * psi0_;
        Eigen::VectorXcd c(coeff_.size());
        for (Eigen::Index k = 0; k < c.size(); ++k)
            c(k) = std::exp(cplx{0.0, -s} * lambda_(k)) * coeff_(k);
        return V_ * c;
    }

private:
    Operator h_eff_;
    bool diagonal_ = false;
    Operator V_;
    Eigen::PartialPivLU<Operator> lu_;
    Eigen::VectorXcd lambda_;
    StateVector psi0_;
    Eigen::VectorXcd coeff_;
};

} // namespace

void EmissionRecord::validate() const
{
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw std::invalid_argument("emission record duration must be positive");
    for (const auto* list : {&cavity_jumps, &qubit_jumps}) {
        for (std::size_t k = 0; k < list->size(); ++k) {
            const double t = (*list)[k];
            if (!(t > 0.0 && t < duration))
                throw std::invalid_argument("jump time outside (0, duration)");
            if (k > 0 && !(t > (*list)[k - 1]))
                throw std::invalid_argument("jump times not strictly ascending");
        }
    }
}

EmissionRecord EmissionRecord::trimmed(double t0) const
{
    if (!(t0 >= 0.0 && t0 < duration))
        throw std::invalid_argument("trim point outside record");
    EmissionRecord out;
    out.duration = duration - t0;
    out.seed = seed;
    for (double t : cavity_jumps)
        if (t > t0)
            out.cavity_jumps.push_back(t - t0);
    for (double t : qubit_jumps)
        if (t > t0)
            out.qubit_jumps.push_back(t - t0);
    return out;
}

McwfTrajectory mcwf_trajectory(const Operator& H, const DeviceParams& device, const BathParams& bath,
                               double duration, std::uint64_t seed, const McwfOptions& opts)
{
    device.validate();
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw std::invalid_argument("trajectory duration must be positive");
    const OperatorSet ops = build_space(device);
    const int d = ops.dim();
    if (H.rows() != d || H.cols() != d)
        throw std::invalid_argument("Hamiltonian dimension does not match device truncation");

    std::vector<Channel> channels;
    auto add = [&](const Operator& c, double rate, bool cavity, bool qubit) {
        if (rate > 0.0)
            channels.push_back({std::sqrt(rate) * c, cavity, qubit});
    };
    add(ops.a, device.kappa * (1.0 + bath.n_th), true, false);
    add(ops.a_dag, device.kappa * bath.n_th, false, false);
    add(ops.sigma_minus, device.gamma, false, true);
    add(ops.sigma_z, 0.5 * device.gamma_phi, false, false);

    Operator h_eff = H;
    double total_rate = 0.0;
    for (const auto& ch : channels) {
        h_eff -= cplx{0.0, 0.5} * (ch.op.adjoint() * ch.op);
        total_rate += ch.op.squaredNorm() / d;
    }
    const double dt = opts.step > 0.0 ? opts.step : (total_rate > 0.0 ? 0.1 / total_rate : duration);

    NonHermitianPropagator prop(h_eff);
    const Operator step_op = (cplx{0.0, -dt} * h_eff).exp();
    const Operator n_op = ops.a_dag * ops.a;

    CounterRng rng(seed, opts.stream);
    StateVector psi = opts.initial.size() ? opts.initial : basis_state(device.n_fock, Qubit::ground, 0);
    if (psi.size() != d)
        throw std::invalid_argument("initial state dimension does not match device truncation");
    psi /= psi.norm();

    McwfTrajectory out;
    out.record.duration = duration;
    out.record.seed = seed;
    out.cavity_occupation.resize(opts.sample_times.size());
    std::size_t next_sample = 0;
    auto record_samples = [&](double t_from, double t_to, bool inclusive, const StateVector& from_state) {
        while (next_sample < opts.sample_times.size()) {
            const double ts = opts.sample_times[next_sample];
            if (ts > t_to || (!inclusive && ts == t_to))
                break;
            const StateVector p = ts == t_from ? from_state : prop.at(ts - t_from);
            out.cavity_occupation[next_sample] = (p.adjoint() * n_op * p)(0).real() / p.squaredNorm();
            ++next_sample;
        }
    };

    double t = 0.0;
    double threshold = rng.uniform();
    prop.load(psi);
    record_samples(0.0, 0.0, true, psi);

    while (t < duration) {
        const double t_end = std::min(t + dt, duration);
        const double h = t_end - t;
        StateVector psi_end = h == dt ? StateVector(step_op * psi) : prop.at(h);
        const double norm_end = psi_end.squaredNorm();
        if (!(norm_end > 1e-300))
            throw NumericError("trajectory norm underflow between jumps");
        if (norm_end > threshold) {
            record_samples(t, t_end, true, psi);
            psi = std::move(psi_end);
            t = t_end;
            prop.load(psi);
            continue;
        }

        // The norm decays monotonically, so the crossing is unique.
        double lo = 0.0, hi = h;
        while (hi - lo > opts.jump_time_tolerance)
        {
            const double mid = 0.5 * (lo + hi);
            if (prop.at(mid).squaredNorm() > threshold)
                lo = mid;
            else
                hi = mid;
        }
        const double t_jump = t + hi;
        record_samples(t, t_jump, false, psi);
        const StateVector psi_jump = prop.at(hi);

        std::vector<double> weights(channels.size());
        double total = 0.0;
        for (std::size_t k = 0; k < channels.size(); ++k) {
            weights[k] = (channels[k].op * psi_jump).squaredNorm();
            total += weights[k];
        }
        if (!(total > 0.0))
            throw NumericError("jump with vanishing channel weights");
        double pick = rng.uniform() * total;
        std::size_t which = 0;
        while (which + 1 < channels.size() && pick > weights[which]) {
            pick -= weights[which];
            ++which;
        }
        psi = channels[which].op * psi_jump;
        psi /= psi.norm();
        if (t_jump < duration) {
            if (channels[which].cavity)
                out.record.cavity_jumps.push_back(t_jump);
            if (channels[which].qubit)
                out.record.qubit_jumps.push_back(t_jump);
        }
        t = t_jump;
        threshold = rng.uniform();
        prop.load(psi);
        record_samples(t, t, true, psi);
    }
    return out;
}

EmissionRecord mcwf_run(const Operator& H, const DeviceParams& device, double duration, std::uint64_t seed,
                        const BathParams& bath)
{
    return mcwf_trajectory(H, device, bath, duration, seed).record;
}

std::vector<McwfTrajectory> mcwf_ensemble(const Operator& H, const DeviceParams& device, const BathParams& bath,
                                          double duration, std::uint64_t seed, std::size_t n,
                                          const McwfOptions& opts, unsigned threads)
{
    std::vector<McwfTrajectory> out(n);
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < n; i += stride) {
            McwfOptions o = opts;
            o.stream = i;
            out[i] = mcwf_trajectory(H, device, bath, duration, seed, o);
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        work(0, 1);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                try {
                    work(w, threads);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

CorrelationTrace jump_g2(std::span<const EmissionRecord> records, std::span<const double> tau_grid,
                         double bin_width)
{
    if (records.empty())
        throw std::invalid_argument("jump_g2: no records");
    if (tau_grid.empty() || !(bin_width > 0.0))
        throw std::invalid_argument("jump_g2: empty tau grid or non-positive bin width");
    for (std::size_t k = 1; k < tau_grid.size(); ++k)
        if (!(tau_grid[k] > tau_grid[k - 1]))
            throw std::invalid_argument("jump_g2: tau grid must be strictly ascending");

    const std::size_t nb = tau_grid.size();
    const double half = 0.5 * bin_width;
    const double reach = tau_grid.back() + half;
    std::vector<double> counts(nb, 0.0);
    double total_jumps = 0.0, total_time = 0.0;

    auto bin_pairs = [&](double delta) {
        // delta may be negative; bins are [tau - w/2, tau + w/2).
        for (std::size_t k = 0; k < nb; ++k) {
            if (tau_grid[k] - half > delta)
                break;
            if (delta < tau_grid[k] + half)
                counts[k] += 1.0;
        }
    };

    for (const auto& rec : records) {
        rec.validate();
        const auto& t = rec.cavity_jumps;
        total_jumps += static_cast<double>(t.size());
        total_time += rec.duration;
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t j = i + 1; j < t.size(); ++j) {
                const double delta = t[j] - t[i];
                if (delta >= reach)
                    break;
                bin_pairs(delta);
                bin_pairs(-delta);
            }
    }
    if (total_jumps < 2.0)
        throw StatisticsError("jump_g2: fewer than two jumps in total");

    const double rate = total_jumps / total_time;
    CorrelationTrace tr;
    tr.kind = TraceKind::g2;
    tr.tau.assign(tau_grid.begin(), tau_grid.end());
    tr.values.resize(nb);
    tr.errors.resize(nb);
    tr.normalized = true;
    tr.normalization_constant = rate * rate;
    // Poisson expectation: rate^2 * int_a^b (T - |u|)_+ du, summed over records.
    auto overlap = [](double T, double a, double b) {
        auto prim = [T](double u) { // antiderivative of (T - |u|)_+, odd in u
            const double x = std::min(std::abs(u), T);
            const double v = T * x - 0.5 * x * x;
            return u < 0.0 ? -v : v;
        };
        return prim(b) - prim(a);
    };
    for (std::size_t k = 0; k < nb; ++k) {
        double expected = 0.0;
        for (const auto& rec : records)
            expected += overlap(rec.duration, tau_grid[k] - half, tau_grid[k] + half);
        expected *= rate * rate;
        tr.values[k] = counts[k] / expected;
        tr.errors[k] = std::sqrt(std::max(counts[k], 1.0)) / expected;
    }
    return tr;
}

} // namespace blockade
