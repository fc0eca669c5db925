#include "parseq/lds.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "parseq/kernels.hpp"
#include "parseq/parallel.hpp"
#include "parseq/scan.hpp"

namespace parseq {

namespace {

void check_dim(std::size_t have, std::size_t want, const char* what) {
    if (have != want) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(have) + " vs " +
                                    std::to_string(want) + ")");
    }
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// TransitionMatrix factories
// ---------------------------------------------------------------------------

TransitionMatrix TransitionMatrix::identity(std::size_t dim) {
    TransitionMatrix m;
    m.tag_ = MatrixTag::Identity;
    m.dim_ = dim;
    return m;
}

TransitionMatrix TransitionMatrix::zero(std::size_t dim) {
    TransitionMatrix m;
    m.tag_ = MatrixTag::Zero;
    m.dim_ = dim;
    return m;
}

TransitionMatrix TransitionMatrix::scaled_identity(std::size_t dim, double scale) {
    TransitionMatrix m;
    m.tag_ = MatrixTag::ScaledIdentity;
    m.dim_ = dim;
    m.scale_ = scale;
    return m;
}

TransitionMatrix TransitionMatrix::diagonal(std::vector<double> entries) {
    TransitionMatrix m;
    m.tag_ = MatrixTag::Diagonal;
    m.dim_ = entries.size();
    m.values_ = std::move(entries);
    return m;
}

TransitionMatrix TransitionMatrix::permutation(std::vector<std::uint32_t> index_map) {
    const std::size_t d = index_map.size();
    std::vector<bool> seen(d, false);
    for (std::uint32_t i : index_map) {
        if (i >= d || seen[i]) {
            throw std::invalid_argument("permutation: index map is not a bijection");
        }
        seen[i] = true;
    }
    TransitionMatrix m;
    m.tag_ = MatrixTag::Permutation;
    m.dim_ = d;
    m.perm_ = std::move(index_map);
    return m;
}

TransitionMatrix TransitionMatrix::dense(std::size_t dim, std::vector<double> row_major) {
    if (row_major.size() != dim * dim) {
        throw std::invalid_argument("dense: payload must hold dim*dim values");
    }
    TransitionMatrix m;
    m.tag_ = MatrixTag::Dense;
    m.dim_ = dim;
    m.values_ = std::move(row_major);
    return m;
}

// ---------------------------------------------------------------------------
// apply / densify
// ---------------------------------------------------------------------------

void apply(const TransitionMatrix& m, std::span<const double> x, std::span<double> out) {
    check_dim(x.size(), m.dim(), "apply");
    check_dim(out.size(), m.dim(), "apply");
    const auto& K = kernels::active_ops();
    switch (m.tag()) {
        case MatrixTag::Identity:
            std::memcpy(out.data(), x.data(), x.size() * sizeof(double));
            break;
        case MatrixTag::Zero:
            std::memset(out.data(), 0, out.size() * sizeof(double));
            break;
        case MatrixTag::ScaledIdentity:
            K.scale(out.data(), m.scale(), x.data(), x.size());
            break;
        case MatrixTag::Diagonal:
            K.mul(out.data(), m.values().data(), x.data(), x.size());
            break;
        case MatrixTag::Permutation: {
            const auto map = m.index_map();
            for (std::size_t i = 0; i < map.size(); ++i) out[i] = x[map[i]];
            break;
        }
        case MatrixTag::Dense:
            K.matvec(out.data(), m.values().data(), x.data(), m.dim());
            break;
    }
}

std::vector<double> apply(const TransitionMatrix& m, std::span<const double> x) {
    std::vector<double> out(m.dim());
    parseq::apply(m, x, out);
    return out;
}

std::vector<double> densify(const TransitionMatrix& m) {
    const std::size_t d = m.dim();
    std::vector<double> out(d * d, 0.0);
    switch (m.tag()) {
        case MatrixTag::Identity:
            for (std::size_t i = 0; i < d; ++i) out[i * d + i] = 1.0;
            break;
        case MatrixTag::Zero:
            break;
        case MatrixTag::ScaledIdentity:
            for (std::size_t i = 0; i < d; ++i) out[i * d + i] = m.scale();
            break;
        case MatrixTag::Diagonal:
            for (std::size_t i = 0; i < d; ++i) out[i * d + i] = m.values()[i];
            break;
        case MatrixTag::Permutation:
            for (std::size_t i = 0; i < d; ++i) out[i * d + m.index_map()[i]] = 1.0;
            break;
        case MatrixTag::Dense:
            std::memcpy(out.data(), m.values().data(), d * d * sizeof(double));
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// compose
// ---------------------------------------------------------------------------

TransitionMatrix compose(const TransitionMatrix& later, const TransitionMatrix& earlier) {
    check_dim(earlier.dim(), later.dim(), "compose");
    const std::size_t d = later.dim();

    if (later.tag() == MatrixTag::Zero || earlier.tag() == MatrixTag::Zero) {
        return TransitionMatrix::zero(d);
    }
    if (later.tag() == MatrixTag::Identity) return earlier;
    if (earlier.tag() == MatrixTag::Identity) return later;

    if (later.tag() == earlier.tag()) {
        switch (later.tag()) {
            case MatrixTag::ScaledIdentity:
                return TransitionMatrix::scaled_identity(d, later.scale() * earlier.scale());
            case MatrixTag::Diagonal: {
                std::vector<double> prod(d);
                kernels::active_ops().mul(prod.data(), later.values().data(),
                                          earlier.values().data(), d);
                return TransitionMatrix::diagonal(std::move(prod));
            }
            case MatrixTag::Permutation: {
                // apply(L*E, x)[i] = x[E.map[L.map[i]]]
                std::vector<std::uint32_t> map(d);
                for (std::size_t i = 0; i < d; ++i) {
                    map[i] = earlier.index_map()[later.index_map()[i]];
                }
                return TransitionMatrix::permutation(std::move(map));
            }
            case MatrixTag::Dense: {
                std::vector<double> prod(d * d);
                kernels::active_ops().matmul(prod.data(), later.values().data(),
                                             earlier.values().data(), d);
                return TransitionMatrix::dense(d, std::move(prod));
            }
            default:
                break;  // unreachable
        }
    }

    // Mixed pair with no closed structured form: promote to dense.
    std::vector<double> ld = densify(later);
    std::vector<double> ed = densify(earlier);
    std::vector<double> prod(d * d);
    kernels::active_ops().matmul(prod.data(), ld.data(), ed.data(), d);
    return TransitionMatrix::dense(d, std::move(prod));
}

// ---------------------------------------------------------------------------
// Affine elements
// ---------------------------------------------------------------------------

AffineElement affine_identity(std::size_t dim) {
    return {TransitionMatrix::identity(dim), std::vector<double>(dim, 0.0)};
}

AffineElement compose_affine(const AffineElement& earlier, const AffineElement& later) {
    check_dim(earlier.b.size(), earlier.A.dim(), "compose_affine");
    check_dim(later.b.size(), later.A.dim(), "compose_affine");
    check_dim(earlier.A.dim(), later.A.dim(), "compose_affine");

    const std::size_t d = later.A.dim();
    const auto& K = kernels::active_ops();

    AffineElement out;
    out.A = compose(later.A, earlier.A);
    out.b.resize(d);
    // b = A_later * b_earlier + b_later, fused per tag.
    switch (later.A.tag()) {
        case MatrixTag::Identity:
            K.scale_add(out.b.data(), 1.0, earlier.b.data(), later.b.data(), d);
            break;
        case MatrixTag::Zero:
            out.b = later.b;
            break;
        case MatrixTag::ScaledIdentity:
            K.scale_add(out.b.data(), later.A.scale(), earlier.b.data(), later.b.data(), d);
            break;
        case MatrixTag::Diagonal:
            K.mul_add(out.b.data(), later.A.values().data(), earlier.b.data(),
                      later.b.data(), d);
            break;
        case MatrixTag::Permutation: {
            const auto map = later.A.index_map();
            for (std::size_t i = 0; i < d; ++i) out.b[i] = earlier.b[map[i]] + later.b[i];
            break;
        }
        case MatrixTag::Dense:
            K.matvec_add(out.b.data(), later.A.values().data(), earlier.b.data(),
                         later.b.data(), d);
            break;
    }
    return out;
}

void affine_apply(const AffineElement& e, std::span<const double> x, std::span<double> out) {
    check_dim(x.size(), e.A.dim(), "affine_apply");
    check_dim(out.size(), e.A.dim(), "affine_apply");
    const std::size_t d = e.A.dim();
    const auto& K = kernels::active_ops();
    switch (e.A.tag()) {
        case MatrixTag::Identity:
            K.scale_add(out.data(), 1.0, x.data(), e.b.data(), d);
            break;
        case MatrixTag::Zero:
            std::memcpy(out.data(), e.b.data(), d * sizeof(double));
            break;
        case MatrixTag::ScaledIdentity:
            K.scale_add(out.data(), e.A.scale(), x.data(), e.b.data(), d);
            break;
        case MatrixTag::Diagonal:
            K.mul_add(out.data(), e.A.values().data(), x.data(), e.b.data(), d);
            break;
        case MatrixTag::Permutation: {
            const auto map = e.A.index_map();
            for (std::size_t i = 0; i < d; ++i) out[i] = x[map[i]] + e.b[i];
            break;
        }
        case MatrixTag::Dense:
            K.matvec_add(out.data(), e.A.values().data(), x.data(), e.b.data(), d);
            break;
    }
}

// ---------------------------------------------------------------------------
// Trajectory evaluation
// ---------------------------------------------------------------------------

bool StateTrajectory::all_finite() const {
    return parseq::all_finite(x0) && parseq::all_finite(states);
}

namespace {

StateTrajectory prepare_trajectory(std::span<const double> x0,
                                   std::span<const AffineElement> elems) {
    if (elems.empty()) throw std::invalid_argument("evaluate_lds: no elements");
    const std::size_t d = x0.size();
    for (const AffineElement& e : elems) {
        check_dim(e.A.dim(), d, "evaluate_lds");
        check_dim(e.b.size(), d, "evaluate_lds");
    }
    if (!all_finite(x0)) throw std::invalid_argument("evaluate_lds: non-finite x0");
    StateTrajectory traj;
    traj.x0.assign(x0.begin(), x0.end());
    traj.length = elems.size();
    traj.dim = d;
    traj.states.resize(elems.size() * d);
    return traj;
}

bool element_finite(const AffineElement& e) {
    if (!all_finite(e.b)) return false;
    switch (e.A.tag()) {
        case MatrixTag::ScaledIdentity:
            return std::isfinite(e.A.scale());
        case MatrixTag::Diagonal:
        case MatrixTag::Dense:
            return all_finite(e.A.values());
        default:
            return true;
    }
}

}  // namespace

StateTrajectory evaluate_lds_sequential(std::span<const double> x0,
                                        std::span<const AffineElement> elems) {
    StateTrajectory traj = prepare_trajectory(x0, elems);
    std::span<const double> prev = x0;
    for (std::size_t t = 1; t <= traj.length; ++t) {
        affine_apply(elems[t - 1], prev, traj.state(t));
        prev = traj.state(t);
    }
    return traj;
}

StateTrajectory evaluate_lds_parallel(std::span<const double> x0,
                                      std::span<const AffineElement> elems) {
    StateTrajectory traj = prepare_trajectory(x0, elems);
    const std::size_t d = traj.dim;

    // prefix[t-1] is the affine map x0 -> x_t.
    std::vector<AffineElement> prefix = inclusive_scan<AffineElement>(
        elems,
        [](const AffineElement& later, const AffineElement& earlier) {
            return compose_affine(earlier, later);
        },
        affine_identity(d));

    std::atomic<bool> overflow{false};
    parallel_for(
        0, traj.length,
        [&](std::size_t i) {
            if (!element_finite(prefix[i])) {
                overflow.store(true, std::memory_order_relaxed);
                return;
            }
            affine_apply(prefix[i], traj.x0, traj.state(i + 1));
        },
        /*grain=*/16);
    if (overflow.load() || !all_finite(traj.states)) {
        throw std::runtime_error("numerical overflow in scan");
    }
    return traj;
}

}  // namespace parseq
