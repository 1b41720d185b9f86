#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace hyperstab::linalg {

/// Dense row-major n x n matrix.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const std::vector<double>& d);

    std::size_t order() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    Matrix transpose() const;
    double frobenius() const;
    double max_abs() const;

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// Symmetric matrix; the input is replaced by (A + A^T)/2 on construction.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& a);
    explicit SymMatrix(std::size_t n) : m_(n) {}

    static SymMatrix diagonal(const std::vector<double>& d) { return SymMatrix(Matrix::diagonal(d)); }

    std::size_t order() const { return m_.order(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& matrix() const { return m_; }
    double frobenius() const { return m_.frobenius(); }

private:
    Matrix m_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(int sweeps, double residual);
    double residual() const { return residual_; }

private:
    double residual_;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double default_psd_tol = 1e-9;
inline constexpr int jacobi_max_sweeps = 100;

/// All eigenvalues, ascending, by cyclic Jacobi rotations. Stops when the
/// off-diagonal Frobenius norm is <= 1e-14 ||A||_F.
std::vector<double> eigenvalues(const SymMatrix& a);
double smallest_eigenvalue(const SymMatrix& a);

/// lambda_min >= -tol * max(1, ||A||_F)
bool is_psd(const SymMatrix& a, double tol = default_psd_tol);
/// lambda_min >= +tol * max(1, ||A||_F)
bool is_pd(const SymMatrix& a, double tol = default_psd_tol);

/// K^T W K, symmetric by construction.
SymMatrix congruence(const Matrix& k, const SymMatrix& w);

}  // namespace hyperstab::linalg
