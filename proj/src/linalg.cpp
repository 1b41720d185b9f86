#include "hyperstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hyperstab::linalg {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
    a_.reserve(n_ * n_);
    for (const auto& r : rows) {
        if (r.size() != n_) throw DimensionError("Matrix: rows must form a square matrix");
        a_.insert(a_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(const std::vector<double>& d) {
    Matrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::fabs(v));
    return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.order() != b.order()) throw DimensionError("matrix product: order mismatch");
    const std::size_t n = a.order();
    Matrix c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.order() != b.order()) throw DimensionError("matrix difference: order mismatch");
    Matrix c(a.order());
    for (std::size_t i = 0; i < a.order(); ++i)
        for (std::size_t j = 0; j < a.order(); ++j) c(i, j) = a(i, j) - b(i, j);
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c(a.order());
    for (std::size_t i = 0; i < a.order(); ++i)
        for (std::size_t j = 0; j < a.order(); ++j) c(i, j) = s * a(i, j);
    return c;
}

SymMatrix::SymMatrix(const Matrix& a) : m_(a.order()) {
    const std::size_t n = a.order();
    for (std::size_t i = 0; i < n; ++i) {
        m_(i, i) = a(i, i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            m_(i, j) = v;
            m_(j, i) = v;
        }
    }
}

ConvergenceError::ConvergenceError(int sweeps, double residual)
    : std::runtime_error("Jacobi eigensolver did not converge after " + std::to_string(sweeps) +
                         " sweeps (off-diagonal residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.order(); ++i)
        for (std::size_t j = 0; j < a.order(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

std::vector<double> eigenvalues(const SymMatrix& sym) {
    Matrix a = sym.matrix();
    const std::size_t n = a.order();
    const double scale = a.frobenius();
    const double target = 1e-14 * scale;

    int sweep = 0;
    double off = off_diagonal_norm(a);
    while (off > target) {
        if (sweep == jacobi_max_sweeps) throw ConvergenceError(sweep, off);
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation angle zeroing a(p,q) (Golub & Van Loan, sym.schur2).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
        ++sweep;
        off = off_diagonal_norm(a);
    }

    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

double smallest_eigenvalue(const SymMatrix& a) {
    if (a.order() == 0) throw DimensionError("smallest_eigenvalue: empty matrix");
    return eigenvalues(a).front();
}

bool is_psd(const SymMatrix& a, double tol) {
    return smallest_eigenvalue(a) >= -tol * std::max(1.0, a.frobenius());
}

bool is_pd(const SymMatrix& a, double tol) {
    return smallest_eigenvalue(a) >= tol * std::max(1.0, a.frobenius());
}

SymMatrix congruence(const Matrix& k, const SymMatrix& w) {
    if (k.order() != w.order()) throw DimensionError("congruence: K and W orders differ");
    const std::size_t n = k.order();
    Matrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
                const double ka_i = k(a, i);
                if (ka_i == 0.0) continue;
                for (std::size_t b = 0; b < n; ++b) s += ka_i * w(a, b) * k(b, j);
            }
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return SymMatrix(out);
}

}  // namespace hyperstab::linalg
