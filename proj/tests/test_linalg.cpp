#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "hyperstab/linalg.hpp"

using namespace hyperstab::linalg;

namespace {

double analytic_min_2x2(double a, double b, double c) {
    return 0.5 * (a + c - std::sqrt((a - c) * (a - c) + 4.0 * b * b));
}

/// Closed-form eigenvalues of a symmetric 3x3 matrix (trigonometric method).
std::array<double, 3> analytic_3x3(const Matrix& A) {
    const double p1 = A(0, 1) * A(0, 1) + A(0, 2) * A(0, 2) + A(1, 2) * A(1, 2);
    if (p1 == 0.0) {
        std::array<double, 3> d = {A(0, 0), A(1, 1), A(2, 2)};
        std::sort(d.begin(), d.end());
        return d;
    }
    const double q = (A(0, 0) + A(1, 1) + A(2, 2)) / 3.0;
    const double p2 = (A(0, 0) - q) * (A(0, 0) - q) + (A(1, 1) - q) * (A(1, 1) - q) +
                      (A(2, 2) - q) * (A(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Matrix B(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) B(i, j) = (A(i, j) - (i == j ? q : 0.0)) / p;
    const double det = B(0, 0) * (B(1, 1) * B(2, 2) - B(1, 2) * B(2, 1)) -
                       B(0, 1) * (B(1, 0) * B(2, 2) - B(1, 2) * B(2, 0)) +
                       B(0, 2) * (B(1, 0) * B(2, 1) - B(1, 1) * B(2, 0));
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    std::array<double, 3> e = {e1, e2, e3};
    std::sort(e.begin(), e.end());
    return e;
}

Matrix random_symmetric(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix a(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = u(rng);
    return a;
}

}  // namespace

TEST_CASE("smallest eigenvalue examples") {
    CHECK(smallest_eigenvalue(SymMatrix(Matrix::identity(2))) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(smallest_eigenvalue(SymMatrix(Matrix{{2, 1}, {1, 2}})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(smallest_eigenvalue(SymMatrix::diagonal({1.28125, 0.0}))) <= 1e-15);
    CHECK_THROWS(smallest_eigenvalue(SymMatrix()));
}

TEST_CASE("2x2 eigenvalues agree with the analytic formula") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int k = 0; k < 1000; ++k) {
        const double a = u(rng), b = u(rng), c = u(rng);
        const SymMatrix A(Matrix{{a, b}, {b, c}});
        const double err = std::abs(smallest_eigenvalue(A) - analytic_min_2x2(a, b, c));
        CHECK(err <= 1e-10 * std::max(1.0, A.frobenius()));
    }
}

TEST_CASE("3x3 eigenvalues agree with the trigonometric formula") {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 1000; ++k) {
        const Matrix A = random_symmetric(rng, 3, 10.0);
        const auto exact = analytic_3x3(A);
        const auto ev = eigenvalues(SymMatrix(A));
        REQUIRE(ev.size() == 3);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(ev[i] - exact[i]) <= 1e-10 * std::max(1.0, A.frobenius()));
    }
}

TEST_CASE("diagonal matrices give their sorted diagonal") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> d(1 + k % 8);
        for (auto& v : d) v = u(rng);
        const auto ev = eigenvalues(SymMatrix::diagonal(d));
        std::sort(d.begin(), d.end());
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(ev[i] - d[i]) <= 1e-12);
    }
}

TEST_CASE("smallest eigenvalue bounds every Rayleigh quotient") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> g;
    for (int k = 0; k < 40; ++k) {
        const std::size_t n = 1 + k % 8;
        const Matrix A = random_symmetric(rng, n);
        const double lmin = smallest_eigenvalue(SymMatrix(A));
        for (int s = 0; s < 1000; ++s) {
            std::vector<double> v(n);
            for (auto& x : v) x = g(rng);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                den += v[i] * v[i];
                for (std::size_t j = 0; j < n; ++j) num += v[i] * A(i, j) * v[j];
            }
            CHECK(lmin <= num / den + 1e-12);
        }
    }
}

TEST_CASE("symmetrization on construction") {
    const SymMatrix S(Matrix{{1, 2}, {4, 3}});
    CHECK(S(0, 1) == 3.0);
    CHECK(S(1, 0) == 3.0);
}

TEST_CASE("psd and pd tests") {
    CHECK(is_psd(SymMatrix::diagonal({1.28125, 0.0})));
    CHECK_FALSE(is_pd(SymMatrix::diagonal({1.28125, 0.0})));
    CHECK_FALSE(is_psd(SymMatrix::diagonal({-2.0, 0.0})));
    CHECK(is_pd(SymMatrix::diagonal({0.50343, 0.9375})));
    // Tolerance is relative to max(1, ||A||_F).
    CHECK(is_psd(SymMatrix::diagonal({-5e-10, 1.0})));
    CHECK_FALSE(is_psd(SymMatrix::diagonal({-2e-9, 1.0})));
    CHECK(is_psd(SymMatrix::diagonal({-5e-7, 1000.0})));
    CHECK_FALSE(is_pd(SymMatrix::diagonal({5e-7, 1000.0})));
    CHECK(is_pd(SymMatrix::diagonal({2e-6, 1000.0})));
}

TEST_CASE("congruence") {
    const double a = 2.0, b = 3.0, k = 0.75;
    const auto C = congruence(Matrix{{0, 1}, {1 - k, 0}}, SymMatrix::diagonal({a, b}));
    CHECK(C(0, 0) == doctest::Approx(b * (1 - k) * (1 - k)));
    CHECK(C(1, 1) == doctest::Approx(a));
    CHECK(C(0, 1) == 0.0);

    const auto Z = congruence(Matrix(3), SymMatrix::diagonal({1, 2, 3}));
    CHECK(Z.frobenius() == 0.0);

    std::mt19937_64 rng(15);
    const Matrix W = random_symmetric(rng, 4);
    const auto I = congruence(Matrix::identity(4), SymMatrix(W));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(I(i, j) == doctest::Approx(W(i, j)).epsilon(1e-15));

    CHECK_THROWS_AS(congruence(Matrix(3), SymMatrix::diagonal({1, 2})), DimensionError);
}

TEST_CASE("congruence of a PSD weight stays PSD and exactly symmetric") {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 3.0);
    for (int k = 0; k < 300; ++k) {
        const std::size_t n = 1 + k % 6;
        Matrix K(n);
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = pos(rng);
            for (std::size_t j = 0; j < n; ++j) K(i, j) = u(rng);
        }
        const auto C = congruence(K, SymMatrix::diagonal(w));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) CHECK(C(i, j) == C(j, i));
        CHECK(smallest_eigenvalue(C) >= -1e-12 * std::max(1.0, C.frobenius()));
    }
}
