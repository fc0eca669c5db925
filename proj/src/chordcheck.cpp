#include "parseq/chordcheck.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "parseq/kernels.hpp"

namespace parseq {

namespace {

constexpr std::size_t kMaxOrder = 4096;

// Writes a D x D block into a TD x TD row-major matrix at block (br, bc).
void place_block(std::vector<double>& m, std::size_t order, std::size_t d,
                 std::size_t br, std::size_t bc, const std::vector<double>& block,
                 double scale) {
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            m[(br * d + i) * order + bc * d + j] = scale * block[i * d + j];
        }
    }
}

// Solve U y = b where U is unit lower triangular (general dense forward
// substitution; the systems here are block-bidiagonal but small).
void unit_lower_solve(const std::vector<double>& u, std::size_t n,
                      std::span<const double> b, std::span<double> y) {
    for (std::size_t r = 0; r < n; ++r) {
        double acc = b[r];
        const double* row = u.data() + r * n;
        for (std::size_t c = 0; c < r; ++c) acc -= row[c] * y[c];
        y[r] = acc;
    }
}

}  // namespace

BlockSystem build_block_system(const DynamicsFunction& f, const StateTrajectory& traj,
                               std::span<const double> x0, const Scheme& scheme,
                               const JacobianMode& mode) {
    const std::size_t t_len = traj.length;
    const std::size_t d = traj.dim;
    if (d != f.dim || x0.size() != d) {
        throw std::invalid_argument("build_block_system: dimension mismatch");
    }
    if (t_len * d > kMaxOrder) {
        throw std::invalid_argument("build_block_system: t_len * dim exceeds 4096");
    }

    const std::size_t order = t_len * d;
    BlockSystem sys;
    sys.t_len = t_len;
    sys.dim = d;
    sys.residual_jacobian.assign(order * order, 0.0);
    sys.scheme_operator.assign(order * order, 0.0);
    for (std::size_t i = 0; i < order; ++i) {
        sys.residual_jacobian[i * order + i] = 1.0;
        sys.scheme_operator[i * order + i] = 1.0;
    }

    // The scheme's A_t come from the same linearization the solver uses, so
    // the chord step below reproduces one solver iteration by construction.
    std::vector<AffineElement> elems = linearize(scheme, f, traj, x0, mode);
    for (std::size_t t = 2; t <= t_len; ++t) {
        std::vector<double> jac = full_jacobian(f, t, traj.state(t - 1), mode);
        place_block(sys.residual_jacobian, order, d, t - 1, t - 2, jac, -1.0);
        place_block(sys.scheme_operator, order, d, t - 1, t - 2,
                    densify(elems[t - 1].A), -1.0);
    }
    return sys;
}

std::vector<double> parallel_chord_step(const BlockSystem& sys,
                                        std::span<const double> x_flat,
                                        std::span<const double> residual) {
    const std::size_t n = sys.order();
    if (x_flat.size() != n || residual.size() != n) {
        throw std::invalid_argument("parallel_chord_step: size mismatch");
    }
    std::vector<double> delta(n);
    unit_lower_solve(sys.scheme_operator, n, residual, delta);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = x_flat[i] - delta[i];
    return next;
}

std::vector<double> iteration_matrix(const BlockSystem& sys) {
    const std::size_t n = sys.order();
    // Column c of T^{-1} dF/dx by forward substitution.
    std::vector<double> m(n * n);
    std::vector<double> column(n), solved(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) column[r] = sys.residual_jacobian[r * n + c];
        unit_lower_solve(sys.scheme_operator, n, column, solved);
        for (std::size_t r = 0; r < n; ++r) {
            m[r * n + c] = (r == c ? 1.0 : 0.0) - solved[r];
        }
    }
    return m;
}

double nilpotency_defect(const BlockSystem& sys) {
    const std::size_t n = sys.order();
    std::vector<double> power = iteration_matrix(sys);
    const std::vector<double> m = power;
    std::vector<double> next(n * n);
    for (std::size_t k = 1; k < sys.t_len; ++k) {
        kernels::active_ops().matmul(next.data(), power.data(), m.data(), n);
        power.swap(next);
    }
    double frob = 0.0;
    for (double v : power) frob += v * v;
    return std::sqrt(frob);
}

double sigma_factor(const BlockSystem& sys) {
    const double defect = nilpotency_defect(sys);
    if (!(defect <= 1e-8)) {
        throw std::runtime_error("sigma_factor: iteration matrix is not nilpotent");
    }
    const std::size_t n = sys.order();
    std::vector<double> m = iteration_matrix(sys);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        mat(m.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(mat, /*computeEigenvectors=*/false);
    double radius = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        radius = std::max(radius, std::abs(solver.eigenvalues()[i]));
    }
    return radius;
}

}  // namespace parseq
