#include "slaglab/random.hpp"

#include "slaglab/matrix.hpp"

namespace slaglab {

Matrix random_orthogonal(std::size_t n, Rng& rng) {
    Matrix q(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vector v(n);
        for (auto& x : v) x = rng.normal();
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                const Vector qk = q.column(k);
                const double d = dot(v, qk);
                for (std::size_t i = 0; i < n; ++i) v[i] -= d * qk[i];
            }
        const double nv = norm2(v);
        for (auto& x : v) x /= nv;
        q.set_column(j, v);
    }
    return q;
}

SymMatrix random_symmetric(std::size_t n, Rng& rng, double scale) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) m.set(i, j, scale * rng.normal());
    return m;
}

}  // namespace slaglab
