#include "slaglab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "slaglab/errors.hpp"

namespace slaglab {

namespace {

constexpr int kMaxSweeps = 30;
constexpr double kOffDiagRelTol = 1e-13;

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

// Zeroes a(p,q) by a plane rotation; accumulates into v.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) return;
    const std::size_t n = a.rows();
    const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;

    a(p, p) -= t * apq;
    a(q, q) += t * apq;
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r == p || r == q) continue;
        const double arp = a(r, p);
        const double arq = a(r, q);
        a(r, p) = a(p, r) = c * arp - s * arq;
        a(r, q) = a(q, r) = s * arp + c * arq;
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double vrp = v(r, p);
        const double vrq = v(r, q);
        v(r, p) = c * vrp - s * vrq;
        v(r, q) = s * vrp + c * vrq;
    }
}

void jacobi(const SymMatrix& m, Matrix& a, Matrix& v) {
    const std::size_t n = m.dim();
    a = m.as_matrix();
    v = Matrix::identity(n);
    const double norm = frobenius_norm(a);
    const double target = kOffDiagRelTol * norm;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_norm(a) <= target) return;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
    }
    const double off = off_diagonal_norm(a);
    if (off > target)
        throw ConvergenceError("eig_sym: Jacobi did not converge in " + std::to_string(kMaxSweeps) +
                               " sweeps; off-diagonal norm " + std::to_string(off));
}

}  // namespace

const IndexRange& Spectrum::block_of(std::size_t i) const {
    for (const auto& b : multiplicity_blocks)
        if (b.contains(i)) return b;
    throw ArgumentError("Spectrum::block_of: index " + std::to_string(i) + " out of range");
}

Spectrum eig_sym(const SymMatrix& m, double tol) {
    if (!(tol > 0.0)) throw ArgumentError("eig_sym: tol must be positive");
    const std::size_t n = m.dim();
    if (n == 0) throw ArgumentError("eig_sym: empty matrix");
    Matrix a;
    Matrix v;
    jacobi(m, a, v);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    Spectrum s;
    s.eigenvalues.resize(n);
    s.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        s.eigenvalues[k] = a(src, src);
        std::size_t big = 0;
        for (std::size_t r = 1; r < n; ++r)
            if (std::abs(v(r, src)) > std::abs(v(big, src))) big = r;
        const double sign = v(big, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) s.eigenvectors(r, k) = sign * v(r, src);
    }

    const double gap = tol * std::max(1.0, frobenius_norm(m));
    std::size_t start = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        if (k == n || s.eigenvalues[k] - s.eigenvalues[k - 1] > gap) {
            s.multiplicity_blocks.push_back({start, k - 1});
            start = k;
        }
    }
    return s;
}

Vector eigenvalues(const SymMatrix& m) { return eig_sym(m).eigenvalues; }

EigenBlock eigen_block(const Spectrum& s, std::size_t i) {
    if (i >= s.dim()) throw ArgumentError("eigen_block: index out of range");
    EigenBlock b;
    b.range = s.block_of(i);
    b.basis = Matrix(s.dim(), b.range.size());
    for (std::size_t c = 0; c < b.range.size(); ++c)
        b.basis.set_column(c, s.eigenvectors.column(b.range.first + c));
    return b;
}

Vector elementary_symmetric(std::span<const double> lambda) {
    const std::size_t n = lambda.size();
    Vector e(n + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k >= 1; --k) e[k] += lambda[i] * e[k - 1];
    return e;
}

double sigma_k(std::span<const double> lambda, std::size_t k) {
    if (k > lambda.size())
        throw ArgumentError("sigma_k: k = " + std::to_string(k) + " exceeds n = " +
                            std::to_string(lambda.size()));
    return elementary_symmetric(lambda)[k];
}

namespace {

// Sorted eigenvalues of the compression of A onto the eigenspace of λᵢ(M).
struct Compression {
    IndexRange range;
    Vector eig;
    double scale;
};

Compression compress(const SymMatrix& m, const SymMatrix& a, std::size_t i, double tol) {
    if (m.dim() != a.dim()) throw ArgumentError("eigen derivative: dimension mismatch");
    if (i >= m.dim())
        throw ArgumentError("eigen derivative: index " + std::to_string(i) + " out of range");
    const Spectrum s = eig_sym(m, tol);
    const EigenBlock block = eigen_block(s, i);
    const SymMatrix restricted(block.basis.transposed() * a.as_matrix() * block.basis);
    return {block.range, eigenvalues(restricted), std::max(1.0, frobenius_norm(a))};
}

}  // namespace

double one_sided_eig_derivative(const SymMatrix& m, const SymMatrix& a, std::size_t i, double tol) {
    const Compression c = compress(m, a, i, tol);
    return c.eig[i - c.range.first];
}

bool is_direction_differentiable(const SymMatrix& m, const SymMatrix& a, std::size_t i,
                                 double tol) {
    const Compression c = compress(m, a, i, tol);
    const double right = c.eig[i - c.range.first];
    const double left = c.eig[c.range.last - i];
    return std::abs(right - left) <= 1e-10 * c.scale;
}

SymMatrix spectral_inverse(const SymMatrix& m, double tol) {
    const Spectrum s = eig_sym(m);
    const double floor = tol * std::max(1.0, frobenius_norm(m));
    for (double l : s.eigenvalues)
        if (std::abs(l) <= floor)
            throw DomainError("spectral_inverse: eigenvalue " + std::to_string(l) + " is singular");
    return spectral_apply(s, [](double l) { return 1.0 / l; });
}

}  // namespace slaglab
