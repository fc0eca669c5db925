#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "parseq/fixedpoint.hpp"
#include "parseq/models.hpp"
#include "parseq/rng.hpp"

using namespace parseq;

namespace {

StateTrajectory rollout_trajectory(const DynamicsFunction& f,
                                   std::span<const double> x0) {
    StateTrajectory traj;
    traj.x0.assign(x0.begin(), x0.end());
    traj.length = f.horizon;
    traj.dim = f.dim;
    traj.states = f.rollout(x0);
    return traj;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

// Central-difference oracle for a full Jacobian.
std::vector<double> fd_jacobian(const DynamicsFunction& f, std::size_t t,
                                std::span<const double> x) {
    return full_jacobian(f, t, x, JacobianMode::central_difference(1e-5));
}

}  // namespace

// ---------------------------------------------------------------------------
// Word problem
// ---------------------------------------------------------------------------

TEST_CASE("identity word keeps the state at x0") {
    PermutationWordProblem problem;
    problem.group_dim = 4;
    problem.x0 = {1.0, 2.0, 3.0, 4.0};
    problem.sequence.assign(5, {0, 1, 2, 3});
    DynamicsFunction f = permutation_word_dynamics(problem);
    std::vector<double> states = f.rollout(problem.x0);
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t i = 0; i < 4; ++i) CHECK(states[t * 4 + i] == problem.x0[i]);
    }
}

TEST_CASE("a single swap permutes the first two entries") {
    PermutationWordProblem problem;
    problem.group_dim = 3;
    problem.x0 = {1.0, 2.0, 3.0};
    problem.sequence = {{1, 0, 2}};
    DynamicsFunction f = permutation_word_dynamics(problem);
    std::vector<double> states = f.rollout(problem.x0);
    CHECK(states == std::vector<double>{2.0, 1.0, 3.0});
}

TEST_CASE("rollout of two permutations equals their composition applied once") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        PermutationWordProblem problem = random_word_problem(5, 2, rng.next_u64());
        DynamicsFunction f = permutation_word_dynamics(problem);
        std::vector<double> states = f.rollout(problem.x0);
        // Oracle: compose the two gathers by hand, apply to x0.
        const auto& p = problem.sequence[0];
        const auto& q = problem.sequence[1];
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(states[5 + i] == problem.x0[p[q[i]]]);
        }
    }
}

TEST_CASE("decode_word inverts the rollout") {
    PermutationWordProblem problem = random_word_problem(5, 12, 99);
    DynamicsFunction f = permutation_word_dynamics(problem);
    StateTrajectory traj = rollout_trajectory(f, problem.x0);
    auto words = decode_word(traj, problem.x0);

    // Oracle: prefix products in the group, composed tabularly.
    std::vector<std::uint32_t> prefix{0, 1, 2, 3, 4};
    for (std::size_t t = 0; t < 12; ++t) {
        std::vector<std::uint32_t> next(5);
        for (std::size_t i = 0; i < 5; ++i) next[i] = prefix[problem.sequence[t][i]];
        prefix = next;
        CHECK(words[t] == prefix);
    }

    // A state where x_t == x0 decodes to the identity.
    StateTrajectory fixed;
    fixed.x0 = problem.x0;
    fixed.dim = 5;
    fixed.length = 1;
    fixed.states = problem.x0;
    CHECK(decode_word(fixed, problem.x0)[0] == std::vector<std::uint32_t>{0, 1, 2, 3, 4});

    // Garbage states are flagged.
    fixed.states = {9.0, 9.0, 9.0, 9.0, 9.0};
    CHECK_THROWS_AS(decode_word(fixed, problem.x0), std::runtime_error);
}

TEST_CASE("word dynamics are exactly linear: Newton solves in one iteration") {
    for (std::size_t t_len : {1u, 8u, 33u}) {
        PermutationWordProblem problem = random_word_problem(5, t_len, 7 + t_len);
        DynamicsFunction f = permutation_word_dynamics(problem);
        SolverConfig config;
        SolveReport report = solve(f, problem.x0, config, Scheme::newton());
        CHECK(report.converged);
        CHECK(report.iterations == 1);
        CHECK(max_abs_diff(report.trajectory.states, f.rollout(problem.x0)) == 0.0);
    }
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

TEST_CASE("zero-weight GRU halves its state") {
    GruParameters params;
    params.dim = 3;
    params.input_dim = 2;
    params.w_update.assign(3 * 5, 0.0);
    params.b_update.assign(3, 0.0);
    params.w_reset.assign(3 * 5, 0.0);
    params.b_reset.assign(3, 0.0);
    params.w_cand.assign(3 * 5, 0.0);
    params.b_cand.assign(3, 0.0);
    params.inputs.assign(4 * 2, 1.0);
    DynamicsFunction f = gru_dynamics(params);
    std::vector<double> x{1.0, -2.0, 4.0}, out(3);
    f.eval(1, x, out);
    CHECK(out == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("GRU analytic Jacobian matches central differences") {
    Rng rng(13);
    for (std::size_t d : {2u, 5u}) {
        GruParameters params = random_gru(d, d, 3, rng.next_u64());
        DynamicsFunction f = gru_dynamics(params);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(d);
            for (double& v : x) v = rng.uniform(-2.0, 2.0);
            const std::size_t t = 1 + rng.below(3);
            auto analytic = full_jacobian(f, t, x, JacobianMode::analytic());
            auto fd = fd_jacobian(f, t, x);
            CHECK(max_abs_diff(analytic, fd) <= 1e-5);
        }
    }
}

TEST_CASE("GRU jvp agrees with the Jacobian") {
    Rng rng(17);
    GruParameters params = random_gru(4, 4, 2, 5);
    DynamicsFunction f = gru_dynamics(params);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(4), v(4), jv(4);
        for (double& a : x) a = rng.uniform(-1.0, 1.0);
        for (double& a : v) a = rng.uniform(-1.0, 1.0);
        f.jvp(1, x, v, jv);
        auto jac = full_jacobian(f, 1, x, JacobianMode::analytic());
        for (std::size_t r = 0; r < 4; ++r) {
            double want = 0.0;
            for (std::size_t c = 0; c < 4; ++c) want += jac[r * 4 + c] * v[c];
            CHECK(jv[r] == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("GRU states stay bounded by max(|x|, 1) elementwise") {
    Rng rng(19);
    GruParameters params = random_gru(4, 4, 8, 3);
    DynamicsFunction f = gru_dynamics(params);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(4), out(4);
        for (double& v : x) v = rng.uniform(-3.0, 3.0);
        f.eval(1 + rng.below(8), x, out);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(std::abs(out[i]) <= std::max(std::abs(x[i]), 1.0) + 1e-12);
        }
    }
}

TEST_CASE("GRU Jacobians carry off-diagonal mass") {
    GruParameters params = random_gru(8, 8, 4, 21);
    DynamicsFunction f = gru_dynamics(params);
    Rng rng(23);
    std::vector<double> x(8);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    auto jac = full_jacobian(f, 1, x, JacobianMode::analytic());
    double off = 0.0;
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 8; ++c) {
            if (r != c) off += jac[r * 8 + c] * jac[r * 8 + c];
        }
    }
    CHECK(std::sqrt(off) > 0.0);
}

// ---------------------------------------------------------------------------
// Gaussian mixture and Langevin
// ---------------------------------------------------------------------------

TEST_CASE("standard normal potential has gradient x") {
    GaussianMixturePotential pot({1.0}, {0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}, 2);
    std::vector<double> x{0.7, -1.3};
    auto grad = mixture_grad(pot, x);
    CHECK(grad[0] == doctest::Approx(0.7));
    CHECK(grad[1] == doctest::Approx(-1.3));
}

TEST_CASE("gradient vanishes along the axis at the midpoint of a symmetric pair") {
    // Equal weights, means at +/- e_1, shared unit covariance.
    GaussianMixturePotential pot({0.5, 0.5}, {1.0, 0.0, -1.0, 0.0},
                                 {1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0}, 2);
    std::vector<double> x{0.0, 0.4};
    auto grad = mixture_grad(pot, x);
    CHECK(std::abs(grad[0]) <= 1e-12);
}

TEST_CASE("mixture gradient and Hessian match central differences") {
    Rng rng(29);
    for (std::size_t d : {2u, 4u}) {
        GaussianMixturePotential pot = random_mixture(d, 3, rng.next_u64());
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(d);
            for (double& v : x) v = rng.uniform(-2.0, 2.0);

            auto grad = mixture_grad(pot, x);
            const double h = 1e-5;
            std::vector<double> xp(x), xm(x);
            for (std::size_t c = 0; c < d; ++c) {
                xp[c] = x[c] + h;
                xm[c] = x[c] - h;
                const double fd = (pot.value(xp) - pot.value(xm)) / (2.0 * h);
                CHECK(std::abs(grad[c] - fd) <= 1e-5);
                xp[c] = x[c];
                xm[c] = x[c];
            }

            std::vector<double> hess(d * d);
            pot.hessian(x, hess);
            std::vector<double> gp(d), gm(d);
            for (std::size_t c = 0; c < d; ++c) {
                xp[c] = x[c] + h;
                xm[c] = x[c] - h;
                pot.gradient(xp, gp);
                pot.gradient(xm, gm);
                for (std::size_t r = 0; r < d; ++r) {
                    const double fd = (gp[r] - gm[r]) / (2.0 * h);
                    CHECK(std::abs(hess[r * d + c] - fd) <= 1e-4);
                }
                xp[c] = x[c];
                xm[c] = x[c];
            }
        }
    }
}

TEST_CASE("covariances must be SPD") {
    CHECK_THROWS_AS(GaussianMixturePotential({1.0}, {0.0}, {-1.0}, 1),
                    std::invalid_argument);
}

TEST_CASE("unit Gaussian Langevin Jacobian is (1 - eps) I") {
    LangevinSpec spec{GaussianMixturePotential({1.0}, {0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}, 2),
                      1e-5,
                      std::vector<double>(2 * 2, 0.0),
                      {0.0, 0.0}};
    DynamicsFunction f = langevin_dynamics(spec);
    std::vector<double> x{0.3, -0.8}, jac(4);
    f.jacobian(1, x, jac);
    CHECK(jac[0] == doctest::Approx(1.0 - 1e-5));
    CHECK(jac[3] == doctest::Approx(1.0 - 1e-5));
    CHECK(std::abs(jac[1]) <= 1e-15);
    CHECK(std::abs(jac[2]) <= 1e-15);
}

TEST_CASE("vanishing step makes Langevin the identity map") {
    LangevinSpec spec = random_langevin(3, 2, 4, 1e-12, 31);
    DynamicsFunction f = langevin_dynamics(spec);
    Rng rng(37);
    std::vector<double> x(3), jac(9);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    f.jacobian(1, x, jac);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(jac[r * 3 + c] == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("Langevin Jacobian matches central differences on random mixtures") {
    Rng rng(41);
    LangevinSpec spec = random_langevin(3, 2, 5, 1e-3, 43);
    DynamicsFunction f = langevin_dynamics(spec);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(3);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        const std::size_t t = 1 + rng.below(5);
        auto analytic = full_jacobian(f, t, x, JacobianMode::analytic());
        auto fd = fd_jacobian(f, t, x);
        CHECK(max_abs_diff(analytic, fd) <= 1e-5);
    }
}

TEST_CASE("Langevin Jacobian stays near the identity at small steps") {
    LangevinSpec spec = random_langevin(4, 2, 32, 1e-5, 47);
    DynamicsFunction f = langevin_dynamics(spec);
    StateTrajectory traj = rollout_trajectory(f, spec.x0);
    std::vector<double> jac(16), eye(16, 0.0);
    for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0;
    for (std::size_t t = 1; t <= traj.length; ++t) {
        std::span<const double> x = (t == 1) ? std::span<const double>(spec.x0)
                                             : traj.state(t - 1);
        f.jacobian(t, x, jac);
        CHECK(max_abs_diff(jac, eye) <= 1e-3);
    }
}

TEST_CASE("Langevin jvp agrees with the Jacobian") {
    LangevinSpec spec = random_langevin(3, 2, 2, 1e-4, 53);
    DynamicsFunction f = langevin_dynamics(spec);
    Rng rng(59);
    std::vector<double> x(3), v(3), jv(3), jac(9);
    for (double& a : x) a = rng.uniform(-1.0, 1.0);
    for (double& a : v) a = rng.uniform(-1.0, 1.0);
    f.jvp(1, x, v, jv);
    f.jacobian(1, x, jac);
    for (std::size_t r = 0; r < 3; ++r) {
        double want = 0.0;
        for (std::size_t c = 0; c < 3; ++c) want += jac[r * 3 + c] * v[c];
        CHECK(jv[r] == doctest::Approx(want).epsilon(1e-10));
    }
}
