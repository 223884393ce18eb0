#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace slaglab {

using Vector = std::vector<double>;

/// Dense row-major matrix. Used for eigenvector bases and general products;
/// Hessian samples live in SymMatrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vector column(std::size_t j) const;
    void set_column(std::size_t j, std::span<const double> v);
    Matrix transposed() const;

    std::span<const double> data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double frobenius_norm(const Matrix& a);

/// Symmetric n×n matrix with finite entries. Construction from possibly
/// asymmetric data stores the symmetric part (a + aᵀ)/2, so entries(i,j) and
/// entries(j,i) are bit-identical.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n, double fill = 0.0);
    SymMatrix(std::initializer_list<std::initializer_list<double>> rows);
    explicit SymMatrix(const Matrix& m);

    static SymMatrix identity(std::size_t n);
    static SymMatrix diagonal(std::span<const double> d);
    static SymMatrix diagonal(std::initializer_list<double> d);
    /// Q diag(d) Qᵀ.
    static SymMatrix from_spectrum(const Matrix& q, std::span<const double> d);

    std::size_t dim() const noexcept { return m_.rows(); }

    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    /// Writes both (i,j) and (j,i).
    void set(std::size_t i, std::size_t j, double v);
    void add(std::size_t i, std::size_t j, double v);

    double trace() const;
    const Matrix& as_matrix() const noexcept { return m_; }
    std::span<const double> data() const noexcept { return m_.data(); }

    SymMatrix& operator+=(const SymMatrix& o);
    SymMatrix& operator-=(const SymMatrix& o);
    SymMatrix& operator*=(double s);

private:
    Matrix m_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double s, SymMatrix a);

double frobenius_norm(const SymMatrix& a);
/// ⟨A, B⟩ = Σ A_ij B_ij.
double frobenius_inner(const SymMatrix& a, const SymMatrix& b);
/// QᵀMQ for a square Q.
SymMatrix congruence(const Matrix& q, const SymMatrix& m);
/// Product of two symmetric matrices (generally not symmetric).
Matrix product(const SymMatrix& a, const SymMatrix& b);

/// Inverse by Gauss-Jordan with partial pivoting. Throws DomainError when a
/// pivot falls below `pivot_tol`·max(1, ‖A‖_F).
Matrix inverse(const Matrix& a, double pivot_tol = 1e-14);
/// Solves A x = b by Gaussian elimination with partial pivoting.
Vector solve(Matrix a, Vector b, double pivot_tol = 1e-14);
double determinant(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace slaglab
