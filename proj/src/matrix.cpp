#include "slaglab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "slaglab/errors.hpp"

namespace slaglab {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ArgumentError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector Matrix::column(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_column(std::size_t j, std::span<const double> v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ArgumentError("Matrix product: shape mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw ArgumentError("Matrix-vector product: shape mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) += b(i, j);
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) -= b(i, j);
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) *= s;
    return c;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(std::size_t n, double fill) : m_(n, n, fill) {
    if (!std::isfinite(fill)) throw DomainError("SymMatrix: non-finite fill");
}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SymMatrix(Matrix(rows)) {}

SymMatrix::SymMatrix(const Matrix& m) : m_(m.rows(), m.cols()) {
    if (m.rows() != m.cols()) throw ArgumentError("SymMatrix: matrix is not square");
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = i == j ? m(i, i) : 0.5 * (m(i, j) + m(j, i));
            if (!std::isfinite(v)) throw DomainError("SymMatrix: non-finite entry");
            m_(i, j) = v;
            m_(j, i) = v;
        }
}

SymMatrix SymMatrix::identity(std::size_t n) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
    SymMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
    return m;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> d) {
    return diagonal(std::span<const double>(d.begin(), d.size()));
}

SymMatrix SymMatrix::from_spectrum(const Matrix& q, std::span<const double> d) {
    const std::size_t n = d.size();
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += q(i, k) * d[k] * q(j, k);
            m(i, j) = s;
            m(j, i) = s;
        }
    return SymMatrix(m);
}

void SymMatrix::set(std::size_t i, std::size_t j, double v) {
    if (!std::isfinite(v)) throw DomainError("SymMatrix: non-finite entry");
    m_(i, j) = v;
    m_(j, i) = v;
}

void SymMatrix::add(std::size_t i, std::size_t j, double v) { set(i, j, m_(i, j) + v); }

double SymMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
    return t;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
    if (o.dim() != dim()) throw ArgumentError("SymMatrix +: dimension mismatch");
    m_ = m_ + o.m_;
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
    if (o.dim() != dim()) throw ArgumentError("SymMatrix -: dimension mismatch");
    m_ = m_ - o.m_;
    return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
    m_ = s * m_;
    return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

double frobenius_norm(const SymMatrix& a) { return frobenius_norm(a.as_matrix()); }

double frobenius_inner(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw ArgumentError("frobenius_inner: dimension mismatch");
    double s = 0.0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t k = 0; k < da.size(); ++k) s += da[k] * db[k];
    return s;
}

SymMatrix congruence(const Matrix& q, const SymMatrix& m) {
    return SymMatrix(q.transposed() * m.as_matrix() * q);
}

Matrix product(const SymMatrix& a, const SymMatrix& b) { return a.as_matrix() * b.as_matrix(); }

namespace {

// Row-reduces [a | rhs] in place; returns the determinant sign/scale.
double eliminate(Matrix& a, Matrix& rhs, double pivot_tol, bool allow_singular) {
    const std::size_t n = a.rows();
    const double scale = std::max(1.0, frobenius_norm(a));
    double det = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) <= pivot_tol * scale) {
            if (allow_singular) return 0.0;
            throw DomainError("singular matrix: pivot " + std::to_string(a(piv, col)) +
                              " in column " + std::to_string(col));
        }
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            for (std::size_t j = 0; j < rhs.cols(); ++j) std::swap(rhs(piv, j), rhs(col, j));
            det = -det;
        }
        const double p = a(col, col);
        det *= p;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col) / p;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(r, j) -= f * rhs(col, j);
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double p = a(r, r);
        for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(r, j) /= p;
    }
    return det;
}

}  // namespace

Matrix inverse(const Matrix& a, double pivot_tol) {
    if (a.rows() != a.cols()) throw ArgumentError("inverse: matrix is not square");
    Matrix work = a;
    Matrix inv = Matrix::identity(a.rows());
    eliminate(work, inv, pivot_tol, false);
    return inv;
}

Vector solve(Matrix a, Vector b, double pivot_tol) {
    if (a.rows() != a.cols() || a.rows() != b.size()) throw ArgumentError("solve: shape mismatch");
    Matrix rhs(b.size(), 1);
    rhs.set_column(0, b);
    eliminate(a, rhs, pivot_tol, false);
    return rhs.column(0);
}

double determinant(const Matrix& a) {
    if (a.rows() != a.cols()) throw ArgumentError("determinant: matrix is not square");
    Matrix work = a;
    Matrix none(a.rows(), 0);
    return eliminate(work, none, 0.0, true);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ArgumentError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace slaglab
