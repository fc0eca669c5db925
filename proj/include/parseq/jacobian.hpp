#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace parseq {

// A time-indexed dynamics map f_t(x), t in 1..horizon. eval must be
// deterministic in (t, x): any stochastic input is pre-sampled into the
// closure. jacobian (row-major D x D) and jvp (directional derivative) are
// optional analytic callbacks.
struct DynamicsFunction {
    std::size_t dim = 0;
    std::size_t horizon = 0;
    std::function<void(std::size_t t, std::span<const double> x, std::span<double> out)>
        eval;
    std::function<void(std::size_t t, std::span<const double> x, std::span<double> out)>
        jacobian;
    std::function<void(std::size_t t, std::span<const double> x,
                       std::span<const double> v, std::span<double> out)>
        jvp;

    std::vector<double> eval_at(std::size_t t, std::span<const double> x) const;

    // Plain left-to-right rollout x_t = f_t(x_{t-1}); the sequential baseline.
    std::vector<double> rollout(std::span<const double> x0) const;  // T x D
};

struct JacobianMode {
    enum class Kind { Analytic, CentralDifference, HutchinsonDiagonal };
    Kind kind = Kind::Analytic;
    double step = 1e-5;       // central-difference half-width
    int probes = 4;           // Hutchinson probe count m
    std::uint64_t seed = 0;   // Hutchinson probe stream

    static JacobianMode analytic() { return {}; }
    static JacobianMode central_difference(double step = 1e-5) {
        return {Kind::CentralDifference, step, 4, 0};
    }
    static JacobianMode hutchinson(int probes = 4, std::uint64_t seed = 0) {
        return {Kind::HutchinsonDiagonal, 1e-5, probes, seed};
    }
};

// df_t/dx at x, row-major D x D. Analytic requires the jacobian callback;
// CentralDifference uses (f(x + h e_c) - f(x - h e_c)) / 2h per column.
std::vector<double> full_jacobian(const DynamicsFunction& f, std::size_t t,
                                  std::span<const double> x, const JacobianMode& mode);

// diag(df_t/dx) at x. Analytic and CentralDifference return the exact diagonal
// of full_jacobian; HutchinsonDiagonal averages z .* (J z) over m Rademacher
// probes drawn statelessly from (seed, t, probe index), using the jvp callback
// when present and central differences otherwise.
std::vector<double> diagonal_jacobian(const DynamicsFunction& f, std::size_t t,
                                      std::span<const double> x,
                                      const JacobianMode& mode);

}  // namespace parseq
