#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "parseq/jacobian.hpp"
#include "parseq/lds.hpp"

namespace parseq {

// How the per-step transition matrix A_t approximates df_t/dx:
//   Newton         the full Jacobian (dense)
//   QuasiNewtonDiag its diagonal
//   Picard         the identity
//   Jacobi         zero
//   ScaleElk       (1 - k) times a Newton or QuasiNewtonDiag base
//   ClipElk        the diagonal with entries clamped to [-1, 1]
struct Scheme {
    enum class Kind { Newton, QuasiNewtonDiag, Picard, Jacobi, ScaleElk, ClipElk };

    Kind kind = Kind::Newton;
    double elk_scale = 0.0;    // k in [0, 1] for ScaleElk
    Kind base = Kind::Newton;  // ScaleElk base: Newton or QuasiNewtonDiag

    static Scheme newton() { return {Kind::Newton}; }
    static Scheme quasi_newton() { return {Kind::QuasiNewtonDiag}; }
    static Scheme picard() { return {Kind::Picard}; }
    static Scheme jacobi() { return {Kind::Jacobi}; }
    static Scheme scale_elk(double k, Kind base = Kind::Newton);
    static Scheme clip_elk() { return {Kind::ClipElk}; }

    std::string name() const;
};

enum class Evaluation { ParallelScan, SequentialLds };
enum class InitialGuess { ReplicateX0, Zeros, Provided };

struct SolverConfig {
    double tolerance = 5e-4;
    std::optional<std::size_t> max_iterations;  // unset: the horizon T
    InitialGuess initial_guess = InitialGuess::ReplicateX0;
    std::vector<double> provided_guess;  // T x D row-major, Provided only
    JacobianMode jacobian_mode = JacobianMode::analytic();
    Evaluation evaluation = Evaluation::ParallelScan;

    // Merit above this (or non-finite) aborts the solve as diverged. The
    // default caps nothing but non-finite values: zeroth-order schemes
    // overshoot any fixed ceiling transiently on non-contractive dynamics and
    // still converge within T iterations.
    double divergence_limit = std::numeric_limits<double>::infinity();
};

struct SolveReport {
    StateTrajectory trajectory;
    std::size_t iterations = 0;
    std::vector<double> merit_history;  // length iterations + 1, guess first
    bool converged = false;
    std::vector<std::int64_t> per_iteration_nanos;
};

class DivergedError : public std::runtime_error {
public:
    DivergedError(std::size_t iteration, double merit);
    std::size_t iteration;
    double merit;
};

// Stepwise residual r_t = x_t - f_t(x_{t-1}) (with x_0 from the argument) and
// the merit L = 0.5 ||r||^2 used as the stopping criterion.
std::pair<std::vector<double>, double> residual_and_merit(std::span<const double> x0,
                                                          const StateTrajectory& traj,
                                                          const DynamicsFunction& f);

// Builds the T affine elements of one linearized pass around `guess`:
// A_t per the scheme at x_{t-1} (x_0 for t = 1) and b_t = f_t(x_{t-1}) - A_t x_{t-1},
// so A_t x + b_t reproduces the common-form update exactly.
std::vector<AffineElement> linearize(const Scheme& scheme, const DynamicsFunction& f,
                                     const StateTrajectory& guess,
                                     std::span<const double> x0,
                                     const JacobianMode& mode);

// Iteratively linearize and evaluate until the merit reaches tolerance or the
// iteration cap (default T). The guess is checked before the first iteration,
// so an exact guess reports zero iterations. Throws DivergedError when the
// merit leaves the finite/limit range.
SolveReport solve(const DynamicsFunction& f, std::span<const double> x0,
                  const SolverConfig& config, const Scheme& scheme);

// solve() per scheme on identical inputs, in order.
std::vector<SolveReport> compare_methods(const DynamicsFunction& f,
                                         std::span<const double> x0,
                                         std::span<const Scheme> schemes,
                                         const SolverConfig& config);

}  // namespace parseq
