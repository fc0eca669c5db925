#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "parseq/jacobian.hpp"
#include "parseq/lds.hpp"

namespace parseq {

// ---------------------------------------------------------------------------
// Group word problem on S_D: states carry the running product of permutations
// as a reordering of the D distinct entries of x0.
// ---------------------------------------------------------------------------

struct PermutationWordProblem {
    std::size_t group_dim = 0;                         // D
    std::vector<std::vector<std::uint32_t>> sequence;  // T permutations of 0..D-1
    std::vector<double> x0;                            // D pairwise-distinct entries
};

// Uniform random length-T word over S_degree, x0 = [1, 2, ..., degree].
PermutationWordProblem random_word_problem(std::size_t degree, std::size_t length,
                                           std::uint64_t seed);

// f_t(x) = P_t x where P_t gathers by the t-th permutation; the Jacobian is
// P_t itself, constant in x.
DynamicsFunction permutation_word_dynamics(const PermutationWordProblem& problem);

// Recovers, per step, the permutation mapping x0 to x_t (the running product).
// Throws when a state is not a reordering of x0's entries.
std::vector<std::vector<std::uint32_t>> decode_word(const StateTrajectory& traj,
                                                    std::span<const double> x0);

// ---------------------------------------------------------------------------
// GRU cell driven by pre-sampled inputs
// ---------------------------------------------------------------------------

struct GruParameters {
    std::size_t dim = 0;        // D
    std::size_t input_dim = 0;  // U
    // Each weight block is D x (D+U) row-major over the concatenation [x, u].
    std::vector<double> w_update, b_update;
    std::vector<double> w_reset, b_reset;
    std::vector<double> w_cand, b_cand;
    std::vector<double> inputs;  // T x U row-major
};

// Weights and biases uniform on [-1/sqrt(D+U), 1/sqrt(D+U)], standard normal inputs.
GruParameters random_gru(std::size_t dim, std::size_t input_dim, std::size_t horizon,
                         std::uint64_t seed);

// z = logistic(Linear_z[x, u]), r = logistic(Linear_r[x, u]),
// h = tanh(Linear_h[r .* x, u]), f(x) = (1 - z) .* x + z .* h.
// Carries the chain-rule Jacobian and a matching jvp.
DynamicsFunction gru_dynamics(const GruParameters& params);

// ---------------------------------------------------------------------------
// Gaussian-mixture potential and discretized Langevin dynamics
// ---------------------------------------------------------------------------

// phi(x) = -log sum_k pi_k N(x; mu_k, Sigma_k). Cholesky factors, precisions
// and log-normalizers are cached at construction; covariances must be SPD.
class GaussianMixturePotential {
public:
    GaussianMixturePotential(std::vector<double> weights, std::vector<double> means,
                             std::vector<double> covariances, std::size_t dim);

    std::size_t dim() const { return dim_; }
    std::size_t components() const { return weights_.size(); }

    double value(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    void hessian(std::span<const double> x, std::span<double> out) const;  // D x D
    void hessian_vector(std::span<const double> x, std::span<const double> v,
                        std::span<double> out) const;

private:
    // Responsibilities and precision-weighted displacements at x.
    void components_at(std::span<const double> x, std::vector<double>& resp,
                       std::vector<double>& prec_disp) const;

    std::size_t dim_;
    std::vector<double> weights_;
    std::vector<double> means_;       // K x D
    std::vector<double> precisions_;  // K x D x D
    std::vector<double> log_weights_;
    std::vector<double> log_norms_;   // per-component log normalizer
};

// Mixture with equal weights, standard-normal means, and covariances
// L^T L + delta I from a standard-normal D x D draw L, delta = 1e-3 * D.
GaussianMixturePotential random_mixture(std::size_t dim, std::size_t components,
                                        std::uint64_t seed);

std::vector<double> mixture_grad(const GaussianMixturePotential& potential,
                                 std::span<const double> x);

struct LangevinSpec {
    GaussianMixturePotential potential;
    double step = 1e-5;          // epsilon
    std::vector<double> noise;   // T x D pre-sampled standard normal draws
    std::vector<double> x0;
};

LangevinSpec random_langevin(std::size_t dim, std::size_t components,
                             std::size_t horizon, double step, std::uint64_t seed);

// f_t(x) = x - eps grad(phi)(x) + sqrt(2 eps) w_t; Jacobian I - eps hess(phi)(x).
DynamicsFunction langevin_dynamics(const LangevinSpec& spec);

// ---------------------------------------------------------------------------
// Time-varying linear dynamics f_t(x) = A_t x + c_t (exact-linearization probe
// and the custom-lds experiment)
// ---------------------------------------------------------------------------

struct LinearDynamicsSpec {
    std::size_t dim = 0;
    std::vector<TransitionMatrix> transitions;  // T
    std::vector<double> offsets;                // T x D
    std::vector<double> x0;
};

// Random dense A_t scaled to infinity-norm 0.9 (stable products), standard
// normal offsets and x0.
LinearDynamicsSpec random_linear_dynamics(std::size_t dim, std::size_t horizon,
                                          std::uint64_t seed);

DynamicsFunction linear_dynamics(const LinearDynamicsSpec& spec);

}  // namespace parseq
