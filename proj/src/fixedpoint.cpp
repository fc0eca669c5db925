#include "parseq/fixedpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "parseq/kernels.hpp"
#include "parseq/parallel.hpp"

namespace parseq {

Scheme Scheme::scale_elk(double k, Kind base) {
    if (k < 0.0 || k > 1.0) {
        throw std::invalid_argument("scale_elk: k must lie in [0, 1]");
    }
    if (base != Kind::Newton && base != Kind::QuasiNewtonDiag) {
        throw std::invalid_argument("scale_elk: base must be Newton or QuasiNewtonDiag");
    }
    Scheme s;
    s.kind = Kind::ScaleElk;
    s.elk_scale = k;
    s.base = base;
    return s;
}

std::string Scheme::name() const {
    switch (kind) {
        case Kind::Newton: return "newton";
        case Kind::QuasiNewtonDiag: return "quasi-newton";
        case Kind::Picard: return "picard";
        case Kind::Jacobi: return "jacobi";
        case Kind::ScaleElk: return "scale-elk";
        case Kind::ClipElk: return "clip-elk";
    }
    return "unknown";
}

DivergedError::DivergedError(std::size_t it, double m)
    : std::runtime_error("diverged at iteration " + std::to_string(it) +
                         " (merit " + std::to_string(m) + ")"),
      iteration(it),
      merit(m) {}

std::pair<std::vector<double>, double> residual_and_merit(std::span<const double> x0,
                                                          const StateTrajectory& traj,
                                                          const DynamicsFunction& f) {
    const std::size_t t_len = traj.length;
    const std::size_t d = traj.dim;
    if (d != f.dim || x0.size() != d) {
        throw std::invalid_argument("residual_and_merit: dimension mismatch");
    }
    if (!traj.all_finite()) {
        throw std::invalid_argument("residual_and_merit: non-finite trajectory");
    }

    std::vector<double> residual(t_len * d);
    std::vector<double> merit_terms(t_len);
    parallel_for(
        0, t_len,
        [&](std::size_t i) {
            const std::size_t t = i + 1;
            std::span<const double> prev = (t == 1) ? x0 : traj.state(t - 1);
            std::vector<double> fx(d);
            f.eval(t, prev, fx);
            std::span<const double> cur = traj.state(t);
            double* r = residual.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) r[j] = cur[j] - fx[j];
            merit_terms[i] = kernels::active_ops().sum_sq_diff(cur.data(), fx.data(), d);
        },
        /*grain=*/8);

    double merit = 0.0;
    for (double m : merit_terms) merit += m;
    return {std::move(residual), 0.5 * merit};
}

namespace {

TransitionMatrix scheme_transition(const Scheme& scheme, const DynamicsFunction& f,
                                   std::size_t t, std::span<const double> x,
                                   const JacobianMode& mode) {
    const std::size_t d = f.dim;
    switch (scheme.kind) {
        case Scheme::Kind::Newton:
            return TransitionMatrix::dense(d, full_jacobian(f, t, x, mode));
        case Scheme::Kind::QuasiNewtonDiag:
            return TransitionMatrix::diagonal(diagonal_jacobian(f, t, x, mode));
        case Scheme::Kind::Picard:
            return TransitionMatrix::identity(d);
        case Scheme::Kind::Jacobi:
            return TransitionMatrix::zero(d);
        case Scheme::Kind::ScaleElk: {
            const double factor = 1.0 - scheme.elk_scale;
            if (scheme.base == Scheme::Kind::Newton) {
                std::vector<double> jac = full_jacobian(f, t, x, mode);
                for (double& v : jac) v *= factor;
                return TransitionMatrix::dense(d, std::move(jac));
            }
            std::vector<double> diag = diagonal_jacobian(f, t, x, mode);
            for (double& v : diag) v *= factor;
            return TransitionMatrix::diagonal(std::move(diag));
        }
        case Scheme::Kind::ClipElk: {
            std::vector<double> diag = diagonal_jacobian(f, t, x, mode);
            for (double& v : diag) v = std::clamp(v, -1.0, 1.0);
            return TransitionMatrix::diagonal(std::move(diag));
        }
    }
    throw std::logic_error("scheme_transition: unknown scheme");
}

}  // namespace

std::vector<AffineElement> linearize(const Scheme& scheme, const DynamicsFunction& f,
                                     const StateTrajectory& guess,
                                     std::span<const double> x0,
                                     const JacobianMode& mode) {
    const std::size_t t_len = guess.length;
    const std::size_t d = f.dim;
    if (guess.dim != d || x0.size() != d) {
        throw std::invalid_argument("linearize: dimension mismatch");
    }

    std::vector<AffineElement> elems(t_len);
    parallel_for(
        0, t_len,
        [&](std::size_t i) {
            const std::size_t t = i + 1;
            std::span<const double> prev = (t == 1) ? x0 : guess.state(t - 1);
            TransitionMatrix a = scheme_transition(scheme, f, t, prev, mode);
            std::vector<double> b(d);
            f.eval(t, prev, b);  // b = f_t(x_prev) - A_t x_prev
            if (a.tag() != MatrixTag::Zero) {
                std::vector<double> ax = parseq::apply(a, prev);
                for (std::size_t j = 0; j < d; ++j) b[j] -= ax[j];
            }
            elems[i] = AffineElement{std::move(a), std::move(b)};
        },
        /*grain=*/4);
    return elems;
}

namespace {

StateTrajectory initial_trajectory(const DynamicsFunction& f, std::span<const double> x0,
                                   const SolverConfig& config) {
    StateTrajectory traj;
    traj.x0.assign(x0.begin(), x0.end());
    traj.length = f.horizon;
    traj.dim = f.dim;
    switch (config.initial_guess) {
        case InitialGuess::ReplicateX0:
            traj.states.resize(f.horizon * f.dim);
            for (std::size_t t = 0; t < f.horizon; ++t) {
                std::copy(x0.begin(), x0.end(), traj.states.begin() + t * f.dim);
            }
            break;
        case InitialGuess::Zeros:
            traj.states.assign(f.horizon * f.dim, 0.0);
            break;
        case InitialGuess::Provided:
            if (config.provided_guess.size() != f.horizon * f.dim) {
                throw std::invalid_argument("solve: provided guess has wrong size");
            }
            traj.states = config.provided_guess;
            break;
    }
    return traj;
}

}  // namespace

SolveReport solve(const DynamicsFunction& f, std::span<const double> x0,
                  const SolverConfig& config, const Scheme& scheme) {
    if (!f.eval) throw std::invalid_argument("solve: dynamics has no eval");
    if (f.horizon < 1 || f.dim < 1) throw std::invalid_argument("solve: empty dynamics");
    if (x0.size() != f.dim) throw std::invalid_argument("solve: x0 dimension mismatch");
    if (config.tolerance < 0.0) throw std::invalid_argument("solve: negative tolerance");
    const std::size_t max_iter = config.max_iterations.value_or(f.horizon);
    if (max_iter < 1) throw std::invalid_argument("solve: max_iterations must be >= 1");

    SolveReport report;
    report.trajectory = initial_trajectory(f, x0, config);

    double merit = residual_and_merit(x0, report.trajectory, f).second;
    report.merit_history.push_back(merit);
    if (merit <= config.tolerance) {
        report.converged = true;
        return report;
    }

    using clock = std::chrono::steady_clock;
    for (std::size_t i = 1; i <= max_iter; ++i) {
        const auto tic = clock::now();
        std::vector<AffineElement> elems =
            linearize(scheme, f, report.trajectory, x0, config.jacobian_mode);
        StateTrajectory next;
        try {
            next = (config.evaluation == Evaluation::ParallelScan)
                       ? evaluate_lds_parallel(x0, elems)
                       : evaluate_lds_sequential(x0, elems);
        } catch (const DivergedError&) {
            throw;
        } catch (const std::runtime_error&) {
            throw DivergedError(i, std::numeric_limits<double>::infinity());
        }
        report.trajectory = std::move(next);
        if (!report.trajectory.all_finite()) {
            throw DivergedError(i, std::numeric_limits<double>::infinity());
        }
        merit = residual_and_merit(x0, report.trajectory, f).second;
        const auto toc = clock::now();

        report.merit_history.push_back(merit);
        report.per_iteration_nanos.push_back(
            std::chrono::duration_cast<std::chrono::nanoseconds>(toc - tic).count());
        report.iterations = i;

        if (!std::isfinite(merit) || merit > config.divergence_limit) {
            throw DivergedError(i, merit);
        }
        if (merit <= config.tolerance) break;
    }
    report.converged = merit <= config.tolerance;
    return report;
}

std::vector<SolveReport> compare_methods(const DynamicsFunction& f,
                                         std::span<const double> x0,
                                         std::span<const Scheme> schemes,
                                         const SolverConfig& config) {
    std::vector<SolveReport> reports;
    reports.reserve(schemes.size());
    for (const Scheme& scheme : schemes) {
        try {
            reports.push_back(solve(f, x0, config, scheme));
        } catch (const std::exception& err) {
            throw std::runtime_error(scheme.name() + ": " + err.what());
        }
    }
    return reports;
}

}  // namespace parseq
