#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "slaglab/matrix.hpp"

namespace slaglab {

/// Default relative tolerance for grouping equal eigenvalues.
inline constexpr double kMultiplicityTol = 1e-9;

/// Inclusive 0-based index range [first, last] of eigenvalues that agree
/// within the grouping tolerance.
struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const noexcept { return last - first + 1; }
    bool contains(std::size_t i) const noexcept { return first <= i && i <= last; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Sorted eigen-decomposition of a SymMatrix.
///
/// eigenvalues are nondecreasing; column k of eigenvectors belongs to
/// eigenvalues[k] and has its largest-magnitude component positive.
struct Spectrum {
    Vector eigenvalues;
    Matrix eigenvectors;
    std::vector<IndexRange> multiplicity_blocks;

    std::size_t dim() const noexcept { return eigenvalues.size(); }
    double min() const { return eigenvalues.front(); }
    double max() const { return eigenvalues.back(); }
    /// Block holding index i.
    const IndexRange& block_of(std::size_t i) const;
};

/// Orthonormal basis of one eigenspace E (columns).
struct EigenBlock {
    IndexRange range;
    Matrix basis;
};

/// Cyclic Jacobi eigen-decomposition.
///
/// At most 30 sweeps in fixed (p, q) order; converged once the off-diagonal
/// Frobenius norm drops below 1e-13·‖M‖_F. Eigenvalues within
/// tol·max(1, ‖M‖_F) of their neighbour are chained into one multiplicity
/// block. Throws ConvergenceError with the residual off-diagonal norm when the
/// sweep budget runs out.
Spectrum eig_sym(const SymMatrix& m, double tol = kMultiplicityTol);

/// Eigenvalues only; same algorithm as eig_sym.
Vector eigenvalues(const SymMatrix& m);

EigenBlock eigen_block(const Spectrum& s, std::size_t i);

/// k-th elementary symmetric polynomial; σ₀ = 1.
double sigma_k(std::span<const double> lambda, std::size_t k);

/// All σ₀ … σₙ at once (one O(n²) pass).
Vector elementary_symmetric(std::span<const double> lambda);

/// Right derivative d⁺/dt λᵢ(M + tA) at t = 0 (i is 0-based).
///
/// M is diagonalized internally; with E the eigenspace of λᵢ spanning indices
/// [j, k], the value is the (i−j)-th smallest eigenvalue of the compression
/// A|_E = Q_Eᵀ A Q_E. For a simple eigenvalue this is qᵢᵀ A qᵢ.
double one_sided_eig_derivative(const SymMatrix& m, const SymMatrix& a, std::size_t i,
                                double tol = kMultiplicityTol);

/// True iff the right and left derivatives of λᵢ(M + tA) agree, i.e.
/// λ_{i−j+1}(A|_E) = λ_{k−i+1}(A|_E).
bool is_direction_differentiable(const SymMatrix& m, const SymMatrix& a, std::size_t i,
                                 double tol = kMultiplicityTol);

/// Inverse of a symmetric matrix through its spectrum. Throws DomainError if
/// some |λ| ≤ tol·max(1, ‖M‖_F).
SymMatrix spectral_inverse(const SymMatrix& m, double tol = 1e-14);

/// Apply a scalar function to the eigenvalues: Q diag(f(λ)) Qᵀ.
template <typename F>
SymMatrix spectral_apply(const Spectrum& s, F&& f) {
    Vector d(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) d[i] = f(s.eigenvalues[i]);
    return SymMatrix::from_spectrum(s.eigenvectors, d);
}

}  // namespace slaglab
