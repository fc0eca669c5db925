#include "parseq/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "parseq/kernels.hpp"
#include "parseq/rng.hpp"

namespace parseq {

namespace {

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

// ---------------------------------------------------------------------------
// Permutation word problem
// ---------------------------------------------------------------------------

PermutationWordProblem random_word_problem(std::size_t degree, std::size_t length,
                                           std::uint64_t seed) {
    if (degree < 1 || length < 1) {
        throw std::invalid_argument("random_word_problem: degree and length must be >= 1");
    }
    Rng rng(seed);
    PermutationWordProblem problem;
    problem.group_dim = degree;
    problem.x0.resize(degree);
    for (std::size_t i = 0; i < degree; ++i) problem.x0[i] = static_cast<double>(i + 1);
    problem.sequence.resize(length);
    for (auto& perm : problem.sequence) {
        perm.resize(degree);
        for (std::size_t i = 0; i < degree; ++i) perm[i] = static_cast<std::uint32_t>(i);
        for (std::size_t i = degree; i > 1; --i) {  // Fisher-Yates
            std::swap(perm[i - 1], perm[rng.below(i)]);
        }
    }
    return problem;
}

DynamicsFunction permutation_word_dynamics(const PermutationWordProblem& problem) {
    const std::size_t d = problem.group_dim;
    if (problem.x0.size() != d) {
        throw std::invalid_argument("permutation_word_dynamics: x0 size mismatch");
    }
    struct State {
        std::vector<TransitionMatrix> transitions;
        std::vector<std::vector<double>> dense;
    };
    auto state = std::make_shared<State>();
    state->transitions.reserve(problem.sequence.size());
    state->dense.reserve(problem.sequence.size());
    for (const auto& perm : problem.sequence) {
        TransitionMatrix p = TransitionMatrix::permutation(perm);  // validates
        state->dense.push_back(densify(p));
        state->transitions.push_back(std::move(p));
    }

    DynamicsFunction f;
    f.dim = d;
    f.horizon = problem.sequence.size();
    f.eval = [state](std::size_t t, std::span<const double> x, std::span<double> out) {
        parseq::apply(state->transitions[t - 1], x, out);
    };
    f.jacobian = [state, d](std::size_t t, std::span<const double>, std::span<double> out) {
        std::memcpy(out.data(), state->dense[t - 1].data(), d * d * sizeof(double));
    };
    f.jvp = [state](std::size_t t, std::span<const double>, std::span<const double> v,
                    std::span<double> out) {
        parseq::apply(state->transitions[t - 1], v, out);
    };
    return f;
}

std::vector<std::vector<std::uint32_t>> decode_word(const StateTrajectory& traj,
                                                    std::span<const double> x0) {
    const std::size_t d = traj.dim;
    if (x0.size() != d) throw std::invalid_argument("decode_word: x0 size mismatch");

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            min_gap = std::min(min_gap, std::abs(x0[i] - x0[j]));
        }
    }
    if (d > 1 && min_gap == 0.0) {
        throw std::invalid_argument("decode_word: x0 entries must be distinct");
    }
    const double tol = (d > 1) ? 0.25 * min_gap : 0.25;

    std::vector<std::vector<std::uint32_t>> words(traj.length);
    std::vector<bool> used(d);
    for (std::size_t t = 1; t <= traj.length; ++t) {
        std::span<const double> x = traj.state(t);
        auto& word = words[t - 1];
        word.resize(d);
        std::fill(used.begin(), used.end(), false);
        for (std::size_t i = 0; i < d; ++i) {
            std::size_t best = 0;
            double best_err = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < d; ++j) {
                const double err = std::abs(x[i] - x0[j]);
                if (err < best_err) {
                    best_err = err;
                    best = j;
                }
            }
            if (best_err > tol || used[best]) {
                throw std::runtime_error("decode_word: state is not a permutation of x0");
            }
            used[best] = true;
            word[i] = static_cast<std::uint32_t>(best);
        }
    }
    return words;
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

GruParameters random_gru(std::size_t dim, std::size_t input_dim, std::size_t horizon,
                         std::uint64_t seed) {
    if (dim < 1 || horizon < 1) {
        throw std::invalid_argument("random_gru: dim and horizon must be >= 1");
    }
    Rng rng(seed);
    const std::size_t cols = dim + input_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    auto fill = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        for (double& x : v) x = rng.uniform(-bound, bound);
    };
    GruParameters p;
    p.dim = dim;
    p.input_dim = input_dim;
    fill(p.w_update, dim * cols);
    fill(p.b_update, dim);
    fill(p.w_reset, dim * cols);
    fill(p.b_reset, dim);
    fill(p.w_cand, dim * cols);
    fill(p.b_cand, dim);
    p.inputs.resize(horizon * input_dim);
    for (double& x : p.inputs) x = rng.normal();
    return p;
}

namespace {

struct GruState {
    GruParameters p;

    std::size_t cols() const { return p.dim + p.input_dim; }

    // pre = W [x, u] + bias for one gate.
    void gate_pre(const std::vector<double>& w, const std::vector<double>& bias,
                  std::span<const double> x, const double* u,
                  std::vector<double>& pre) const {
        const std::size_t d = p.dim, c = cols();
        pre.resize(d);
        for (std::size_t r = 0; r < d; ++r) {
            const double* row = w.data() + r * c;
            double acc = bias[r];
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
            for (std::size_t j = 0; j < p.input_dim; ++j) acc += row[d + j] * u[j];
            pre[r] = acc;
        }
    }

    // All gate activations at (t, x).
    void gates(std::size_t t, std::span<const double> x, std::vector<double>& z,
               std::vector<double>& r, std::vector<double>& h) const {
        const double* u = p.inputs.data() + (t - 1) * p.input_dim;
        const std::size_t d = p.dim;
        std::vector<double> pre;
        gate_pre(p.w_update, p.b_update, x, u, pre);
        z.resize(d);
        for (std::size_t i = 0; i < d; ++i) z[i] = logistic(pre[i]);
        gate_pre(p.w_reset, p.b_reset, x, u, pre);
        r.resize(d);
        for (std::size_t i = 0; i < d; ++i) r[i] = logistic(pre[i]);
        std::vector<double> rx(d);
        for (std::size_t i = 0; i < d; ++i) rx[i] = r[i] * x[i];
        gate_pre(p.w_cand, p.b_cand, rx, u, pre);
        h.resize(d);
        for (std::size_t i = 0; i < d; ++i) h[i] = std::tanh(pre[i]);
    }

    // y = W_x v using the left D x D block of a gate matrix.
    void state_block_matvec(const std::vector<double>& w, std::span<const double> v,
                            std::vector<double>& y) const {
        const std::size_t d = p.dim, c = cols();
        y.resize(d);
        for (std::size_t r = 0; r < d; ++r) {
            const double* row = w.data() + r * c;
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += row[j] * v[j];
            y[r] = acc;
        }
    }
};

}  // namespace

DynamicsFunction gru_dynamics(const GruParameters& params) {
    if (params.w_update.size() != params.dim * (params.dim + params.input_dim) ||
        params.inputs.size() % std::max<std::size_t>(params.input_dim, 1) != 0) {
        throw std::invalid_argument("gru_dynamics: inconsistent shapes");
    }
    auto s = std::make_shared<GruState>(GruState{params});
    const std::size_t d = params.dim;

    DynamicsFunction f;
    f.dim = d;
    f.horizon = params.input_dim ? params.inputs.size() / params.input_dim : 0;
    f.eval = [s, d](std::size_t t, std::span<const double> x, std::span<double> out) {
        std::vector<double> z, r, h;
        s->gates(t, x, z, r, h);
        for (std::size_t i = 0; i < d; ++i) out[i] = (1.0 - z[i]) * x[i] + z[i] * h[i];
    };
    f.jacobian = [s, d](std::size_t t, std::span<const double> x, std::span<double> out) {
        std::vector<double> z, r, h;
        s->gates(t, x, z, r, h);
        const std::size_t c = s->cols();
        // Gate slopes.
        std::vector<double> zp(d), rp(d), hp(d);
        for (std::size_t i = 0; i < d; ++i) {
            zp[i] = z[i] * (1.0 - z[i]);
            rp[i] = r[i] * (1.0 - r[i]);
            hp[i] = 1.0 - h[i] * h[i];
        }
        // Candidate path: dh/dx = diag(hp) (Whx diag(r) + Whx diag(x .* rp) Wrx).
        std::vector<double> whx_scaled(d * d), wrx(d * d), cross(d * d);
        for (std::size_t row = 0; row < d; ++row) {
            for (std::size_t col = 0; col < d; ++col) {
                whx_scaled[row * d + col] = s->p.w_cand[row * c + col] * x[col] * rp[col];
                wrx[row * d + col] = s->p.w_reset[row * c + col];
            }
        }
        kernels::active_ops().matmul(cross.data(), whx_scaled.data(), wrx.data(), d);
        for (std::size_t row = 0; row < d; ++row) {
            for (std::size_t col = 0; col < d; ++col) {
                const double dz = zp[row] * s->p.w_update[row * c + col];
                const double dh =
                    hp[row] * (s->p.w_cand[row * c + col] * r[col] + cross[row * d + col]);
                double v = (h[row] - x[row]) * dz + z[row] * dh;
                if (row == col) v += 1.0 - z[row];
                out[row * d + col] = v;
            }
        }
    };
    f.jvp = [s, d](std::size_t t, std::span<const double> x, std::span<const double> v,
                   std::span<double> out) {
        std::vector<double> z, r, h;
        s->gates(t, x, z, r, h);
        std::vector<double> tmp, dz(d), dr(d), dh(d);
        s->state_block_matvec(s->p.w_update, v, tmp);
        for (std::size_t i = 0; i < d; ++i) dz[i] = z[i] * (1.0 - z[i]) * tmp[i];
        s->state_block_matvec(s->p.w_reset, v, tmp);
        for (std::size_t i = 0; i < d; ++i) dr[i] = r[i] * (1.0 - r[i]) * tmp[i];
        std::vector<double> inner(d);
        for (std::size_t i = 0; i < d; ++i) inner[i] = r[i] * v[i] + x[i] * dr[i];
        s->state_block_matvec(s->p.w_cand, inner, tmp);
        for (std::size_t i = 0; i < d; ++i) dh[i] = (1.0 - h[i] * h[i]) * tmp[i];
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = (h[i] - x[i]) * dz[i] + (1.0 - z[i]) * v[i] + z[i] * dh[i];
        }
    };
    return f;
}

// ---------------------------------------------------------------------------
// Gaussian mixture potential
// ---------------------------------------------------------------------------

namespace {

// In-place lower Cholesky of a row-major SPD matrix; throws when not SPD.
void cholesky(std::vector<double>& a, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) acc -= a[i * d + k] * a[j * d + k];
            if (i == j) {
                if (acc <= 0.0) {
                    throw std::invalid_argument("covariance matrix is not SPD");
                }
                a[i * d + i] = std::sqrt(acc);
            } else {
                a[i * d + j] = acc / a[j * d + j];
            }
        }
        for (std::size_t j = i + 1; j < d; ++j) a[i * d + j] = 0.0;
    }
}

// Solve (L L^T) y = b given the lower factor.
void cholesky_solve(const std::vector<double>& l, std::size_t d,
                    std::span<const double> b, std::span<double> y) {
    for (std::size_t i = 0; i < d; ++i) {
        double acc = b[i];
        for (std::size_t k = 0; k < i; ++k) acc -= l[i * d + k] * y[k];
        y[i] = acc / l[i * d + i];
    }
    for (std::size_t ii = d; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double acc = y[i];
        for (std::size_t k = i + 1; k < d; ++k) acc -= l[k * d + i] * y[k];
        y[i] = acc / l[i * d + i];
    }
}

}  // namespace

GaussianMixturePotential::GaussianMixturePotential(std::vector<double> weights,
                                                   std::vector<double> means,
                                                   std::vector<double> covariances,
                                                   std::size_t dim)
    : dim_(dim), weights_(std::move(weights)), means_(std::move(means)) {
    const std::size_t k = weights_.size();
    if (k == 0 || means_.size() != k * dim || covariances.size() != k * dim * dim) {
        throw std::invalid_argument("GaussianMixturePotential: inconsistent shapes");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (w <= 0.0) throw std::invalid_argument("mixture weights must be positive");
        total += w;
    }
    for (double& w : weights_) w /= total;

    precisions_.resize(k * dim * dim);
    log_weights_.resize(k);
    log_norms_.resize(k);
    std::vector<double> unit(dim), column(dim);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> l(covariances.begin() + c * dim * dim,
                              covariances.begin() + (c + 1) * dim * dim);
        cholesky(l, dim);
        double log_det_half = 0.0;
        for (std::size_t i = 0; i < dim; ++i) log_det_half += std::log(l[i * dim + i]);
        log_norms_[c] =
            -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi) -
            log_det_half;
        log_weights_[c] = std::log(weights_[c]);
        for (std::size_t j = 0; j < dim; ++j) {
            std::fill(unit.begin(), unit.end(), 0.0);
            unit[j] = 1.0;
            cholesky_solve(l, dim, unit, column);
            for (std::size_t i = 0; i < dim; ++i) {
                precisions_[c * dim * dim + i * dim + j] = column[i];
            }
        }
    }
}

void GaussianMixturePotential::components_at(std::span<const double> x,
                                             std::vector<double>& resp,
                                             std::vector<double>& prec_disp) const {
    const std::size_t k = components(), d = dim_;
    if (x.size() != d) throw std::invalid_argument("mixture: dimension mismatch");
    resp.resize(k);
    prec_disp.resize(k * d);
    std::vector<double> disp(d);
    double max_term = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < d; ++i) disp[i] = x[i] - means_[c * d + i];
        kernels::active_ops().matvec(prec_disp.data() + c * d,
                                     precisions_.data() + c * d * d, disp.data(), d);
        double mahal = 0.0;
        for (std::size_t i = 0; i < d; ++i) mahal += disp[i] * prec_disp[c * d + i];
        resp[c] = log_weights_[c] + log_norms_[c] - 0.5 * mahal;
        max_term = std::max(max_term, resp[c]);
    }
    double lse = 0.0;
    for (std::size_t c = 0; c < k; ++c) lse += std::exp(resp[c] - max_term);
    lse = max_term + std::log(lse);
    for (std::size_t c = 0; c < k; ++c) resp[c] = std::exp(resp[c] - lse);
}

double GaussianMixturePotential::value(std::span<const double> x) const {
    const std::size_t k = components(), d = dim_;
    if (x.size() != d) throw std::invalid_argument("mixture: dimension mismatch");
    std::vector<double> disp(d), pd(d);
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(k);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < d; ++i) disp[i] = x[i] - means_[c * d + i];
        kernels::active_ops().matvec(pd.data(), precisions_.data() + c * d * d,
                                     disp.data(), d);
        double mahal = 0.0;
        for (std::size_t i = 0; i < d; ++i) mahal += disp[i] * pd[i];
        terms[c] = log_weights_[c] + log_norms_[c] - 0.5 * mahal;
        max_term = std::max(max_term, terms[c]);
    }
    double lse = 0.0;
    for (std::size_t c = 0; c < k; ++c) lse += std::exp(terms[c] - max_term);
    return -(max_term + std::log(lse));
}

void GaussianMixturePotential::gradient(std::span<const double> x,
                                        std::span<double> out) const {
    const std::size_t k = components(), d = dim_;
    std::vector<double> resp, prec_disp;
    components_at(x, resp, prec_disp);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < d; ++i) out[i] += resp[c] * prec_disp[c * d + i];
    }
}

void GaussianMixturePotential::hessian(std::span<const double> x,
                                       std::span<double> out) const {
    const std::size_t k = components(), d = dim_;
    std::vector<double> resp, prec_disp;
    components_at(x, resp, prec_disp);
    std::vector<double> grad(d, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < d; ++i) grad[i] += resp[c] * prec_disp[c * d + i];
    }
    // hess = sum_c resp_c (S_c - g_c g_c^T) + grad grad^T
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        const double* s = precisions_.data() + c * d * d;
        const double* g = prec_disp.data() + c * d;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                out[i * d + j] += resp[c] * (s[i * d + j] - g[i] * g[j]);
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] += grad[i] * grad[j];
    }
}

void GaussianMixturePotential::hessian_vector(std::span<const double> x,
                                              std::span<const double> v,
                                              std::span<double> out) const {
    const std::size_t k = components(), d = dim_;
    std::vector<double> resp, prec_disp;
    components_at(x, resp, prec_disp);
    std::vector<double> grad(d, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < d; ++i) grad[i] += resp[c] * prec_disp[c * d + i];
    }
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> sv(d);
    for (std::size_t c = 0; c < k; ++c) {
        const double* g = prec_disp.data() + c * d;
        kernels::active_ops().matvec(sv.data(), precisions_.data() + c * d * d, v.data(),
                                     d);
        double gv = 0.0;
        for (std::size_t i = 0; i < d; ++i) gv += g[i] * v[i];
        for (std::size_t i = 0; i < d; ++i) out[i] += resp[c] * (sv[i] - g[i] * gv);
    }
    double mv = 0.0;
    for (std::size_t i = 0; i < d; ++i) mv += grad[i] * v[i];
    for (std::size_t i = 0; i < d; ++i) out[i] += grad[i] * mv;
}

GaussianMixturePotential random_mixture(std::size_t dim, std::size_t components,
                                        std::uint64_t seed) {
    if (dim < 1 || components < 1) {
        throw std::invalid_argument("random_mixture: dim and components must be >= 1");
    }
    Rng rng(seed);
    std::vector<double> weights(components, 1.0 / static_cast<double>(components));
    std::vector<double> means(components * dim);
    for (double& m : means) m = rng.normal();
    std::vector<double> covs(components * dim * dim);
    const double delta = 1e-3 * static_cast<double>(dim);
    std::vector<double> l(dim * dim);
    for (std::size_t c = 0; c < components; ++c) {
        for (double& v : l) v = rng.normal();
        double* cov = covs.data() + c * dim * dim;
        for (std::size_t i = 0; i < dim; ++i) {  // L^T L + delta I
            for (std::size_t j = 0; j < dim; ++j) {
                double acc = 0.0;
                for (std::size_t m = 0; m < dim; ++m) acc += l[m * dim + i] * l[m * dim + j];
                cov[i * dim + j] = acc + (i == j ? delta : 0.0);
            }
        }
    }
    return {std::move(weights), std::move(means), std::move(covs), dim};
}

std::vector<double> mixture_grad(const GaussianMixturePotential& potential,
                                 std::span<const double> x) {
    std::vector<double> out(potential.dim());
    potential.gradient(x, out);
    return out;
}

// ---------------------------------------------------------------------------
// Langevin dynamics
// ---------------------------------------------------------------------------

LangevinSpec random_langevin(std::size_t dim, std::size_t components,
                             std::size_t horizon, double step, std::uint64_t seed) {
    if (horizon < 1) throw std::invalid_argument("random_langevin: horizon must be >= 1");
    if (step <= 0.0) throw std::invalid_argument("random_langevin: step must be > 0");
    LangevinSpec spec{random_mixture(dim, components, mix_seed(seed, 1)), step, {}, {}};
    Rng rng(mix_seed(seed, 2));
    spec.noise.resize(horizon * dim);
    for (double& w : spec.noise) w = rng.normal();
    spec.x0.resize(dim);
    for (double& x : spec.x0) x = rng.normal();
    return spec;
}

DynamicsFunction langevin_dynamics(const LangevinSpec& spec) {
    const std::size_t d = spec.potential.dim();
    if (spec.x0.size() != d || spec.noise.size() % d != 0) {
        throw std::invalid_argument("langevin_dynamics: inconsistent shapes");
    }
    auto s = std::make_shared<LangevinSpec>(spec);
    const double eps = spec.step;
    const double noise_scale = std::sqrt(2.0 * eps);

    DynamicsFunction f;
    f.dim = d;
    f.horizon = spec.noise.size() / d;
    f.eval = [s, d, eps, noise_scale](std::size_t t, std::span<const double> x,
                                      std::span<double> out) {
        std::vector<double> grad(d);
        s->potential.gradient(x, grad);
        const double* w = s->noise.data() + (t - 1) * d;
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = x[i] - eps * grad[i] + noise_scale * w[i];
        }
    };
    f.jacobian = [s, d, eps](std::size_t, std::span<const double> x,
                             std::span<double> out) {
        s->potential.hessian(x, out);
        for (std::size_t i = 0; i < d * d; ++i) out[i] = -eps * out[i];
        for (std::size_t i = 0; i < d; ++i) out[i * d + i] += 1.0;
    };
    f.jvp = [s, d, eps](std::size_t, std::span<const double> x, std::span<const double> v,
                        std::span<double> out) {
        s->potential.hessian_vector(x, v, out);
        for (std::size_t i = 0; i < d; ++i) out[i] = v[i] - eps * out[i];
    };
    return f;
}

// ---------------------------------------------------------------------------
// Time-varying linear dynamics
// ---------------------------------------------------------------------------

LinearDynamicsSpec random_linear_dynamics(std::size_t dim, std::size_t horizon,
                                          std::uint64_t seed) {
    if (dim < 1 || horizon < 1) {
        throw std::invalid_argument("random_linear_dynamics: dim and horizon must be >= 1");
    }
    Rng rng(seed);
    LinearDynamicsSpec spec;
    spec.dim = dim;
    spec.transitions.reserve(horizon);
    std::vector<double> a(dim * dim);
    for (std::size_t t = 0; t < horizon; ++t) {
        for (double& v : a) v = rng.uniform(-1.0, 1.0);
        double inf_norm = 0.0;
        for (std::size_t r = 0; r < dim; ++r) {
            double row = 0.0;
            for (std::size_t c = 0; c < dim; ++c) row += std::abs(a[r * dim + c]);
            inf_norm = std::max(inf_norm, row);
        }
        const double scale = inf_norm > 0.0 ? 0.9 / inf_norm : 1.0;
        std::vector<double> scaled(a);
        for (double& v : scaled) v *= scale;
        spec.transitions.push_back(TransitionMatrix::dense(dim, std::move(scaled)));
    }
    spec.offsets.resize(horizon * dim);
    for (double& v : spec.offsets) v = rng.normal();
    spec.x0.resize(dim);
    for (double& v : spec.x0) v = rng.normal();
    return spec;
}

DynamicsFunction linear_dynamics(const LinearDynamicsSpec& spec) {
    const std::size_t d = spec.dim;
    if (spec.offsets.size() != spec.transitions.size() * d || spec.x0.size() != d) {
        throw std::invalid_argument("linear_dynamics: inconsistent shapes");
    }
    struct State {
        LinearDynamicsSpec spec;
        std::vector<std::vector<double>> dense;
    };
    auto s = std::make_shared<State>(State{spec, {}});
    s->dense.reserve(spec.transitions.size());
    for (const auto& a : spec.transitions) s->dense.push_back(densify(a));

    DynamicsFunction f;
    f.dim = d;
    f.horizon = spec.transitions.size();
    f.eval = [s, d](std::size_t t, std::span<const double> x, std::span<double> out) {
        parseq::apply(s->spec.transitions[t - 1], x, out);
        const double* c = s->spec.offsets.data() + (t - 1) * d;
        for (std::size_t i = 0; i < d; ++i) out[i] += c[i];
    };
    f.jacobian = [s, d](std::size_t t, std::span<const double>, std::span<double> out) {
        std::memcpy(out.data(), s->dense[t - 1].data(), d * d * sizeof(double));
    };
    f.jvp = [s](std::size_t t, std::span<const double>, std::span<const double> v,
                std::span<double> out) { parseq::apply(s->spec.transitions[t - 1], v, out); };
    return f;
}

}  // namespace parseq
