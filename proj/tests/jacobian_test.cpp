#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <memory>
#include <vector>

#include "parseq/jacobian.hpp"
#include "parseq/rng.hpp"

using namespace parseq;

namespace {

DynamicsFunction linear_map(std::vector<double> m, std::size_t d) {
    DynamicsFunction f;
    f.dim = d;
    f.horizon = 1;
    auto mat = std::make_shared<std::vector<double>>(std::move(m));
    f.eval = [mat, d](std::size_t, std::span<const double> x, std::span<double> out) {
        for (std::size_t r = 0; r < d; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += (*mat)[r * d + c] * x[c];
            out[r] = acc;
        }
    };
    f.jacobian = [mat, d](std::size_t, std::span<const double>, std::span<double> out) {
        std::copy(mat->begin(), mat->end(), out.begin());
    };
    f.jvp = [mat, d](std::size_t, std::span<const double>, std::span<const double> v,
                     std::span<double> out) {
        for (std::size_t r = 0; r < d; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += (*mat)[r * d + c] * v[c];
            out[r] = acc;
        }
    };
    return f;
}

}  // namespace

TEST_CASE("identity map has the identity Jacobian") {
    DynamicsFunction f;
    f.dim = 3;
    f.horizon = 1;
    f.eval = [](std::size_t, std::span<const double> x, std::span<double> out) {
        std::copy(x.begin(), x.end(), out.begin());
    };
    std::vector<double> x{0.4, -1.2, 2.0};
    auto jac = full_jacobian(f, 1, x, JacobianMode::central_difference());
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(jac[r * 3 + c] == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("derivative of x^2 at 3 is 6") {
    DynamicsFunction f;
    f.dim = 1;
    f.horizon = 1;
    f.eval = [](std::size_t, std::span<const double> x, std::span<double> out) {
        out[0] = x[0] * x[0];
    };
    std::vector<double> x{3.0};
    auto jac = full_jacobian(f, 1, x, JacobianMode::central_difference(1e-5));
    CHECK(std::abs(jac[0] - 6.0) <= 1e-6);
}

TEST_CASE("linear maps are differentiated exactly") {
    Rng rng(5);
    const std::size_t d = 4;
    std::vector<double> m(d * d);
    for (double& v : m) v = rng.uniform(-1.0, 1.0);
    DynamicsFunction f = linear_map(m, d);
    std::vector<double> x(d);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);

    auto analytic = full_jacobian(f, 1, x, JacobianMode::analytic());
    CHECK(analytic == m);
    auto fd = full_jacobian(f, 1, x, JacobianMode::central_difference());
    for (std::size_t i = 0; i < d * d; ++i) CHECK(std::abs(fd[i] - m[i]) <= 1e-9);
}

TEST_CASE("analytic mode requires the callback") {
    DynamicsFunction f;
    f.dim = 1;
    f.horizon = 1;
    f.eval = [](std::size_t, std::span<const double> x, std::span<double> out) {
        out[0] = x[0];
    };
    std::vector<double> x{1.0};
    CHECK_THROWS_AS(full_jacobian(f, 1, x, JacobianMode::analytic()),
                    std::invalid_argument);
    CHECK_THROWS_AS(full_jacobian(f, 1, x, JacobianMode::hutchinson()),
                    std::invalid_argument);
}

TEST_CASE("diagonal of a dense linear map") {
    DynamicsFunction f = linear_map({1.0, 2.0, 3.0, 4.0}, 2);
    std::vector<double> x{0.5, -0.5};
    auto diag = diagonal_jacobian(f, 1, x, JacobianMode::analytic());
    CHECK(diag == std::vector<double>{1.0, 4.0});
}

TEST_CASE("one Rademacher probe is exact for elementwise dynamics") {
    // diag-only Jacobian: z .* (J z) = d .* z .* z = d regardless of z.
    DynamicsFunction f;
    f.dim = 3;
    f.horizon = 1;
    f.eval = [](std::size_t, std::span<const double> x, std::span<double> out) {
        out[0] = 2.0 * x[0];
        out[1] = -0.5 * x[1];
        out[2] = 3.0 * x[2];
    };
    std::vector<double> x{1.0, 1.0, 1.0};
    auto est = diagonal_jacobian(f, 1, x, JacobianMode::hutchinson(1, 99));
    CHECK(std::abs(est[0] - 2.0) <= 1e-6);
    CHECK(std::abs(est[1] + 0.5) <= 1e-6);
    CHECK(std::abs(est[2] - 3.0) <= 1e-6);
}

TEST_CASE("Hutchinson with many probes approaches the dense diagonal") {
    DynamicsFunction f = linear_map({1.0, 2.0, 3.0, 4.0}, 2);
    std::vector<double> x{0.0, 0.0};
    auto est = diagonal_jacobian(f, 1, x, JacobianMode::hutchinson(10000, 4));
    CHECK(std::abs(est[0] - 1.0) <= 0.1);
    CHECK(std::abs(est[1] - 4.0) <= 0.1);
}

TEST_CASE("Hutchinson error shrinks with probe count") {
    DynamicsFunction f = linear_map({1.0, 2.0, 3.0, 4.0}, 2);
    std::vector<double> x{0.0, 0.0};
    auto error_with = [&](int probes, std::uint64_t seed) {
        auto est = diagonal_jacobian(f, 1, x, JacobianMode::hutchinson(probes, seed));
        return std::max(std::abs(est[0] - 1.0), std::abs(est[1] - 4.0));
    };
    std::vector<double> err4, err400;
    for (std::uint64_t s = 0; s < 100; ++s) {
        err4.push_back(error_with(4, s));
        err400.push_back(error_with(400, s));
    }
    std::sort(err4.begin(), err4.end());
    std::sort(err400.begin(), err400.end());
    CHECK(err400[50] < err4[50]);
}

TEST_CASE("Hutchinson estimates are deterministic in the seed") {
    DynamicsFunction f = linear_map({1.0, 2.0, 3.0, 4.0}, 2);
    std::vector<double> x{0.3, 0.7};
    auto a = diagonal_jacobian(f, 1, x, JacobianMode::hutchinson(16, 1234));
    auto b = diagonal_jacobian(f, 1, x, JacobianMode::hutchinson(16, 1234));
    CHECK(a == b);
    auto c = diagonal_jacobian(f, 1, x, JacobianMode::hutchinson(16, 1235));
    CHECK(a != c);
}

TEST_CASE("probe count must be positive") {
    DynamicsFunction f = linear_map({1.0}, 1);
    std::vector<double> x{0.0};
    CHECK_THROWS_AS(diagonal_jacobian(f, 1, x, JacobianMode::hutchinson(0, 1)),
                    std::invalid_argument);
}
