#pragma once

#include <span>
#include <vector>

#include "parseq/fixedpoint.hpp"

namespace parseq {

// Desk-scale view of one solver iteration as a whole-trajectory linear solve.
// Both operators are TD x TD, row-major, unit lower block-bidiagonal:
//   residual_jacobian  dF/dx with -df_t/dx(x_{t-1}) sub-diagonal blocks
//   scheme_operator    T with -A_t sub-diagonal blocks (A_t per the scheme)
// Flattening is timestep-major: x_flat = (x_1, ..., x_T).
struct BlockSystem {
    std::size_t t_len = 0;
    std::size_t dim = 0;
    std::vector<double> residual_jacobian;
    std::vector<double> scheme_operator;

    std::size_t order() const { return t_len * dim; }
};

// Assembles both operators from the per-step Jacobians and the scheme's A_t
// at the given trajectory. Guarded to t_len * dim <= 4096.
BlockSystem build_block_system(const DynamicsFunction& f, const StateTrajectory& traj,
                               std::span<const double> x0, const Scheme& scheme,
                               const JacobianMode& mode = JacobianMode::analytic());

// One chord update x - T^{-1} F via forward substitution; matches one solver
// iteration from the same trajectory.
std::vector<double> parallel_chord_step(const BlockSystem& sys,
                                        std::span<const double> x_flat,
                                        std::span<const double> residual);

// M = I - T^{-1} dF/dx, the iteration matrix whose powers drive convergence.
std::vector<double> iteration_matrix(const BlockSystem& sys);

// Frobenius norm of M^t_len; structurally zero for these block systems.
double nilpotency_defect(const BlockSystem& sys);

// Spectral radius of M as a max absolute eigenvalue. Verifies M^t_len = 0
// (within 1e-8 Frobenius) first and throws if that fails; eigensolvers on
// these nilpotent matrices report noise-level magnitudes, so tests should
// assert the nilpotency defect rather than the returned radius.
double sigma_factor(const BlockSystem& sys);

}  // namespace parseq
