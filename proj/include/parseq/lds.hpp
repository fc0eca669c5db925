#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace parseq {

enum class MatrixTag { Identity, Zero, ScaledIdentity, Diagonal, Permutation, Dense };

// Structured D x D transition matrix. Payload per tag:
//   Dense           D*D values, row-major
//   Diagonal        D values
//   ScaledIdentity  one scale a, representing a * I
//   Permutation     index map with apply(M, x)[i] = x[map[i]]
//   Identity, Zero  none
// Instances are immutable values; composition promotes tags only as far as
// the product requires (see compose).
class TransitionMatrix {
public:
    TransitionMatrix() = default;

    static TransitionMatrix identity(std::size_t dim);
    static TransitionMatrix zero(std::size_t dim);
    static TransitionMatrix scaled_identity(std::size_t dim, double scale);
    static TransitionMatrix diagonal(std::vector<double> entries);
    static TransitionMatrix permutation(std::vector<std::uint32_t> index_map);
    static TransitionMatrix dense(std::size_t dim, std::vector<double> row_major);

    MatrixTag tag() const { return tag_; }
    std::size_t dim() const { return dim_; }

    double scale() const { return scale_; }                       // ScaledIdentity
    std::span<const double> values() const { return values_; }    // Dense / Diagonal
    std::span<const std::uint32_t> index_map() const { return perm_; }  // Permutation

    std::span<double> mutable_values() { return values_; }

private:
    MatrixTag tag_ = MatrixTag::Identity;
    std::size_t dim_ = 0;
    double scale_ = 1.0;
    std::vector<double> values_;
    std::vector<std::uint32_t> perm_;
};

// out = M x. Diagonal multiplies elementwise, Permutation gathers, Dense is a
// matrix-vector product; all tags agree with densify(M) * x.
void apply(const TransitionMatrix& m, std::span<const double> x, std::span<double> out);
std::vector<double> apply(const TransitionMatrix& m, std::span<const double> x);

// Row-major dense equivalent (test oracle and chord-system assembly).
std::vector<double> densify(const TransitionMatrix& m);

// later * earlier as matrices. Homogeneous structured tags stay closed
// (Diagonal*Diagonal, Permutation*Permutation, ScaledIdentity*ScaledIdentity);
// Identity is neutral, Zero absorbs, and any other mixed pair goes Dense.
TransitionMatrix compose(const TransitionMatrix& later, const TransitionMatrix& earlier);

// The affine map x -> A x + b, the element the scan composes.
struct AffineElement {
    TransitionMatrix A;
    std::vector<double> b;
};

// (Identity, 0): neutral element of compose_affine, also the scan padding.
AffineElement affine_identity(std::size_t dim);

// Composition of x -> A_e x + b_e followed by x -> A_l x + b_l:
// (A_l A_e, A_l b_e + b_l).
AffineElement compose_affine(const AffineElement& earlier, const AffineElement& later);

// out = A x + b.
void affine_apply(const AffineElement& e, std::span<const double> x, std::span<double> out);

struct StateTrajectory {
    std::vector<double> x0;
    std::size_t length = 0;      // T
    std::size_t dim = 0;         // D
    std::vector<double> states;  // T x D row-major, x_1 .. x_T

    std::span<double> state(std::size_t t) {  // t in 1..T
        return {states.data() + (t - 1) * dim, dim};
    }
    std::span<const double> state(std::size_t t) const {
        return {states.data() + (t - 1) * dim, dim};
    }
    bool all_finite() const;
};

// x_t = A_t x_{t-1} + b_t, evaluated left to right.
StateTrajectory evaluate_lds_sequential(std::span<const double> x0,
                                        std::span<const AffineElement> elems);

// Same recursion through the work-efficient scan over compose_affine; the
// prefix maps are then applied to x0 in parallel. Throws "numerical overflow
// in scan" if composed elements or states go non-finite.
StateTrajectory evaluate_lds_parallel(std::span<const double> x0,
                                      std::span<const AffineElement> elems);

}  // namespace parseq
