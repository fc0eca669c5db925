#include "parseq/jacobian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "parseq/rng.hpp"

namespace parseq {

namespace {

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::runtime_error(std::string(what) + ": non-finite value");
        }
    }
}

// (f(x + h v) - f(x - h v)) / 2h
std::vector<double> directional_difference(const DynamicsFunction& f, std::size_t t,
                                           std::span<const double> x,
                                           std::span<const double> v, double h) {
    const std::size_t d = f.dim;
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> xm(x.begin(), x.end());
    for (std::size_t i = 0; i < d; ++i) {
        xp[i] += h * v[i];
        xm[i] -= h * v[i];
    }
    std::vector<double> fp(d), fm(d);
    f.eval(t, xp, fp);
    f.eval(t, xm, fm);
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = (fp[i] - fm[i]) / (2.0 * h);
    return out;
}

}  // namespace

std::vector<double> DynamicsFunction::eval_at(std::size_t t,
                                              std::span<const double> x) const {
    std::vector<double> out(dim);
    eval(t, x, out);
    return out;
}

std::vector<double> DynamicsFunction::rollout(std::span<const double> x0) const {
    std::vector<double> states(horizon * dim);
    std::span<const double> prev = x0;
    for (std::size_t t = 1; t <= horizon; ++t) {
        std::span<double> cur{states.data() + (t - 1) * dim, dim};
        eval(t, prev, cur);
        prev = cur;
    }
    return states;
}

std::vector<double> full_jacobian(const DynamicsFunction& f, std::size_t t,
                                  std::span<const double> x, const JacobianMode& mode) {
    const std::size_t d = f.dim;
    if (x.size() != d) throw std::invalid_argument("full_jacobian: dimension mismatch");

    std::vector<double> jac(d * d);
    switch (mode.kind) {
        case JacobianMode::Kind::Analytic:
            if (!f.jacobian) {
                throw std::invalid_argument(
                    "full_jacobian: analytic mode without a jacobian callback");
            }
            f.jacobian(t, x, jac);
            break;
        case JacobianMode::Kind::CentralDifference: {
            if (mode.step <= 0.0) throw std::invalid_argument("full_jacobian: step <= 0");
            std::vector<double> xp(x.begin(), x.end());
            std::vector<double> xm(x.begin(), x.end());
            std::vector<double> fp(d), fm(d);
            for (std::size_t c = 0; c < d; ++c) {
                xp[c] = x[c] + mode.step;
                xm[c] = x[c] - mode.step;
                f.eval(t, xp, fp);
                f.eval(t, xm, fm);
                for (std::size_t r = 0; r < d; ++r) {
                    jac[r * d + c] = (fp[r] - fm[r]) / (2.0 * mode.step);
                }
                xp[c] = x[c];
                xm[c] = x[c];
            }
            break;
        }
        case JacobianMode::Kind::HutchinsonDiagonal:
            throw std::invalid_argument(
                "full_jacobian: Hutchinson mode only estimates a diagonal");
    }
    check_finite(jac, "full_jacobian");
    return jac;
}

std::vector<double> diagonal_jacobian(const DynamicsFunction& f, std::size_t t,
                                      std::span<const double> x,
                                      const JacobianMode& mode) {
    const std::size_t d = f.dim;
    if (x.size() != d) {
        throw std::invalid_argument("diagonal_jacobian: dimension mismatch");
    }

    std::vector<double> diag(d);
    switch (mode.kind) {
        case JacobianMode::Kind::Analytic:
        case JacobianMode::Kind::CentralDifference: {
            std::vector<double> jac = full_jacobian(f, t, x, mode);
            for (std::size_t i = 0; i < d; ++i) diag[i] = jac[i * d + i];
            return diag;
        }
        case JacobianMode::Kind::HutchinsonDiagonal: {
            if (mode.probes < 1) {
                throw std::invalid_argument("diagonal_jacobian: probes must be >= 1");
            }
            std::vector<double> z(d), jz(d);
            for (int k = 0; k < mode.probes; ++k) {
                // Probe streams keyed by (seed, t, k): identical regardless of
                // the order timesteps are processed in.
                Rng rng(mix_seed(mode.seed, static_cast<std::uint64_t>(t),
                                 static_cast<std::uint64_t>(k)));
                for (std::size_t i = 0; i < d; ++i) z[i] = rng.rademacher();
                if (f.jvp) {
                    f.jvp(t, x, z, jz);
                } else {
                    jz = directional_difference(f, t, x, z, mode.step);
                }
                for (std::size_t i = 0; i < d; ++i) diag[i] += z[i] * jz[i];
            }
            for (std::size_t i = 0; i < d; ++i) diag[i] /= mode.probes;
            check_finite(diag, "diagonal_jacobian");
            return diag;
        }
    }
    throw std::logic_error("diagonal_jacobian: unknown mode");
}

}  // namespace parseq
