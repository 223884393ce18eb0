#include <cmath>
#include <numbers>

#include "doctest.h"
#include "slaglab/catalog.hpp"
#include "slaglab/errors.hpp"
#include "slaglab/operators.hpp"
#include "slaglab/random.hpp"
#include "slaglab/spectral.hpp"
#include "slaglab/transforms.hpp"

using namespace slaglab;
using std::numbers::pi;

namespace {

GridField quadratic_field(const SymMatrix& q, std::size_t nodes, double half) {
    const Vector zero(q.dim(), 0.0);
    return GridField::sample(GridField::cube(static_cast<int>(q.dim()), nodes, -half, half),
                             [&](std::span<const double> x) { return eval_quadratic(q, zero, 0.0, x).value; });
}

// Max over interior nodes of depth ≥ 2 of ‖FD D²f − expected‖_F.
double hessian_deviation(const GridField& f, const std::function<SymMatrix(std::span<const double>)>& expected) {
    double err = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (f.depth(k) >= 2) err = std::max(err, frobenius_norm(fd_hessian(f, k) - expected(f.coords(k))));
    return err;
}

// Whether y = Ax lands back in [−half + margin, half − margin]ⁿ, A = q (+ shift·I).
bool preimage_inside(const SymMatrix& a, std::span<const double> y, double half, double margin) {
    const Vector x = spectral_inverse(a).as_matrix() * y;
    for (double v : x)
        if (std::abs(v) > half - margin) return false;
    return true;
}

// preimage_inside for node k of w and its whole 3ⁿ stencil.
bool stencil_inside(const GridField& w, std::size_t k, const SymMatrix& a, double half, double margin) {
    if (w.depth(k) < 1) return false;
    const Node c = w.node(k);
    const int n = w.n_dims();
    int count = 1;
    for (int d = 0; d < n; ++d) count *= 3;
    for (int s = 0; s < count; ++s) {
        Node q = c;
        for (int d = 0, r = s; d < n; ++d, r /= 3) q[d] += r % 3 - 1;
        if (!preimage_inside(a, w.coords(q), half, margin)) return false;
    }
    return true;
}

// Sub-field of the nodes with every coordinate in [lo, hi].
GridField crop(const GridField& f, double lo, double hi) {
    std::vector<std::size_t> first(f.n_dims()), shape(f.n_dims());
    Vector origin(f.n_dims());
    for (int d = 0; d < f.n_dims(); ++d) {
        const auto a = static_cast<std::size_t>(std::ceil((lo - f.origin()[d]) / f.spacing() - 1e-9));
        const auto b = static_cast<std::size_t>(std::floor((hi - f.origin()[d]) / f.spacing() + 1e-9));
        first[d] = a;
        shape[d] = b - a + 1;
        origin[d] = f.origin()[d] + f.spacing() * static_cast<double>(a);
    }
    GridField out(shape, origin, f.spacing());
    for (std::size_t k = 0; k < out.size(); ++k) {
        Node n = out.node(k);
        for (int d = 0; d < f.n_dims(); ++d) n[d] += static_cast<std::ptrdiff_t>(first[d]);
        out.set(k, f.at(n));
    }
    return out;
}

}  // namespace

TEST_CASE("rotation parameters") {
    Rng rng(51);
    for (int t = 0; t < 100; ++t) {
        const auto p = RotationParams::from_beta(rng.uniform(0.01, pi));
        CHECK(std::abs(p.c * p.c + p.s * p.s - 1.0) < 1e-15);
        CHECK(p.alpha == doctest::Approx(p.beta - pi / 2));
        REQUIRE(p.a);
        CHECK(std::abs(std::tan(p.beta) * *p.a + 1.0) < 1e-12 * std::max(1.0, std::abs(std::tan(p.beta))));
    }
    CHECK(RotationParams::from_beta(pi / 2).a == 0.0);
    const auto q = RotationParams::from_threshold(-0.4, 0.1);
    CHECK(q.beta == doctest::Approx(pi / 2 - 0.4 + 0.1));
    CHECK(q.validity_margin == 0.1);
    CHECK_THROWS_AS(RotationParams::from_beta(4.0), DomainError);
    CHECK_THROWS_AS(RotationParams::from_beta(1.0, -0.1), DomainError);
}

TEST_CASE("eigen_rotation_map") {
    CHECK(eigen_rotation_map(1 / std::sqrt(3.0), RotationParams::from_beta(pi / 3)) ==
          doctest::Approx(-1 / std::sqrt(3.0)).epsilon(1e-14));
    for (double l : {-3.0, 0.0, 0.7, 12.0})
        CHECK(eigen_rotation_map(l, RotationParams::from_beta(0.0)) == doctest::Approx(l).epsilon(1e-15));
    CHECK_THROWS_AS(eigen_rotation_map(0.0, RotationParams::from_beta(pi / 2)), PoleError);

    // All angles at Θ/n, rotated by π/2 + (Θ − π)/n: the sum lands on (2 − n)π/2.
    for (int n : {3, 4, 5})
        for (double theta : {0.0, 0.5, -1.0}) {
            const Vector l(static_cast<std::size_t>(n), std::tan(theta / n));
            const double beta = pi / 2 + (theta - pi) / n;
            CHECK(rotated_phase_tracked(l, beta) == doctest::Approx((2 - n) * pi / 2).epsilon(1e-12));
        }
}

TEST_CASE("Mobius map of the Hessian") {
    const double r = 1 / std::sqrt(3.0);
    const auto out = mobius_hessian_map(SymMatrix::diagonal({r, r, r}), -r);
    CHECK(frobenius_norm(out - SymMatrix::diagonal({-r, -r, -r})) < 1e-14);
    const double a = 0.7;
    const auto shifted = mobius_hessian_map((a + 1.0) * SymMatrix::identity(3), a);
    CHECK(frobenius_norm(shifted - (-a - (1 + a * a)) * SymMatrix::identity(3)) < 1e-13);
    CHECK_THROWS_AS(mobius_hessian_map(SymMatrix::identity(2), 1.0), PoleError);

    Rng rng(52);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + t % 4;
        const auto p = RotationParams::from_beta(rng.uniform(0.05, pi - 0.05));
        const SymMatrix m = random_symmetric(n, rng, 2.0);
        bool near_pole = false;
        for (double l : eigenvalues(m)) near_pole |= std::abs(std::cos(std::atan(l) - p.beta)) < 1e-3;
        if (near_pole) continue;
        const Vector got = eigenvalues(mobius_hessian_map(m, *p.a));
        Vector want;
        for (double l : eigenvalues(m)) want.push_back(eigen_rotation_map(l, p));
        std::sort(want.begin(), want.end());
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10 * std::max(1.0, std::abs(want[i])));

        // Diagonal input: entrywise.
        const Vector d = eigenvalues(m);
        const auto diag = mobius_hessian_map(SymMatrix::diagonal(d), *p.a);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(diag(i, i) - eigen_rotation_map(d[i], p)) < 1e-12 * std::max(1.0, std::abs(diag(i, i))));

        // Phase drops by nβ when the angles stay inside (β − π/2, β + π/2).
        bool inside = true;
        for (double l : d) inside &= std::atan(l) > p.beta - pi / 2;
        if (inside) CHECK(slag_phase(diag) == doctest::Approx(slag_phase(m) - n * p.beta).epsilon(1e-10));
        CHECK(rotated_phase_tracked(d, p.beta) == doctest::Approx(slag_phase(m) - n * p.beta).epsilon(1e-10));
    }
}

TEST_CASE("rotating the graph of a quadratic") {
    const double lambda = 1.5;
    const auto u = quadratic_field(lambda * SymMatrix::identity(3), 17, 1.0);
    const auto p = RotationParams::from_beta(0.6);
    const auto r = rotate_graph(u, p);
    const double expected = std::tan(std::atan(lambda) - 0.6);
    CHECK(hessian_deviation(r.u_bar, [&](auto) { return expected * SymMatrix::identity(3); }) < 1e-6);
    CHECK(r.inversion_residual < 1e-10);
    for (const auto& s : r.samples) {
        REQUIRE(s.hessian);
        CHECK(frobenius_norm(*s.hessian - expected * SymMatrix::identity(3)) < 1e-10);
    }
    CHECK_THROWS_AS(rotate_graph(u, RotationParams::from_beta(std::atan(lambda) + pi / 2)), PoleError);
}

TEST_CASE("quarter rotation is the Legendre transform up to reflection") {
    const SymMatrix q{{1.2, 0.2}, {0.2, 0.8}};
    const auto u = quadratic_field(q, 33, 1.0);
    const auto r = rotate_graph(u, RotationParams::from_beta(pi / 2));
    const SymMatrix want = -1.0 * spectral_inverse(q);
    CHECK(hessian_deviation(r.u_bar, [&](auto) { return want; }) < 1e-6);
    const auto w = legendre_transform(u);
    const auto dr = gradient_field(r.u_bar);
    double err = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const Vector y = w.coords(k);
        if (!stencil_inside(w, k, q, 1.0, 2 * u.spacing())) continue;
        CHECK(frobenius_norm(fd_hessian(w, k) - spectral_inverse(q)) < 1e-8);
        // ū(x̄) = −w(x̄) up to a constant: compare gradients at x̄ = y.
        if (!inside(r.u_bar, y, -r.u_bar.spacing())) continue;
        const Vector dw = fd_gradient(w, w.node(k));
        for (int d = 0; d < 2; ++d) err = std::max(err, std::abs(interpolate(dr[d], y) + dw[d]));
    }
    CHECK(err < 1e-3);
}

TEST_CASE("rotation round trip") {
    // Convex, non-quadratic.
    const auto u = GridField::sample(GridField::cube(2, 41, -1, 1), [](std::span<const double> x) {
        return 0.5 * (x[0] * x[0] + 1.5 * x[1] * x[1]) + 0.1 * std::cos(x[0] + 0.5 * x[1]);
    });
    const auto fwd = rotate_graph(u, RotationParams::from_beta(0.4));
    const auto back = rotate_graph(fwd.u_bar, RotationParams::from_beta(-0.4));
    const auto du = gradient_field(u);
    const auto db = gradient_field(back.u_bar);
    double err = 0.0;
    const double h = u.spacing();
    for (std::size_t k = 0; k < back.u_bar.size(); ++k) {
        if (back.u_bar.depth(k) < 1) continue;
        const Vector x = back.u_bar.coords(k);
        if (!inside(du[0], x, -h)) continue;
        for (int d = 0; d < 2; ++d) err = std::max(err, std::abs(db[d][k] - interpolate(du[d], x)));
    }
    MESSAGE("round trip gradient error ", err, " at h = ", h);
    CHECK(err < 5.0 * h * h);
}

TEST_CASE("distance expansion") {
    const double lambda = 0.8;
    const auto u = quadratic_field(lambda * SymMatrix::identity(3), 9, 1.0);
    const auto samples = graph_samples(u);
    const auto p = RotationParams::from_beta(1.0);
    const double ratio = distance_expansion_check(samples, p, std::atan(lambda));
    CHECK(ratio == doctest::Approx(std::abs(p.c + p.s * lambda)).epsilon(1e-12));
    CHECK(ratio >= distance_expansion_bound(p, std::atan(lambda)) - 1e-12);

    const auto convex = GridField::sample(GridField::cube(2, 17, -1, 1), [](std::span<const double> x) {
        return std::exp(0.5 * x[0]) + x[1] * x[1] + 0.3 * x[0] * x[1];
    });
    const double r0 = distance_expansion_check(graph_samples(convex), p, 0.0);
    CHECK(r0 >= p.c - 1e-6);

    // Closed form c(1 − tan|γ|/tan|α + δ|) for β = π/2 + α + δ, γ = α + 2δ.
    const double alpha = -0.7, delta = 0.1;
    const auto q = RotationParams::from_threshold(alpha, delta);
    CHECK(distance_expansion_bound(q, alpha + 2 * delta) ==
          doctest::Approx(q.c * (1 - std::tan(std::abs(alpha + 2 * delta)) / std::tan(std::abs(alpha + delta)))));

    // Warren on a box where arctan λ_min ≥ γ.
    const auto w = catalog_entry("warren");
    const auto wf = GridField::sample(GridField::cube(3, 9, -0.4, 0.4),
                                      [&](std::span<const double> x) { return w.evaluator(x).value; });
    double gamma = pi / 2;
    for (const auto& s : graph_samples(wf)) gamma = std::min(gamma, std::atan(eigenvalues(*s.hessian).front()));
    const auto pw = RotationParams::from_beta(pi / 2 + gamma - 0.05);
    CHECK(distance_expansion_check(graph_samples(wf), pw, gamma) >= distance_expansion_bound(pw, gamma) - 1e-6);

    CHECK_THROWS_AS(distance_expansion_check({}, p, 0.0), ArgumentError);
}

TEST_CASE("Legendre transform") {
    const double lambda = 2.0;
    const auto u = quadratic_field(lambda * SymMatrix::identity(2), 33, 1.0);
    const auto w = legendre_transform(u);
    double err = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const Vector y = w.coords(k);
        if (!preimage_inside(lambda * SymMatrix::identity(2), y, 1.0, 2 * u.spacing())) continue;
        err = std::max(err, std::abs(w[k] - dot(y, y) / (2 * lambda)));
        ++used;
    }
    CHECK(used > w.size() / 2);
    CHECK(err < 1e-10);

    const SymMatrix a = SymMatrix::diagonal({1.0, 2.0});
    const auto wa = legendre_transform(quadratic_field(a, 33, 1.0));
    for (std::size_t k = 0; k < wa.size(); ++k)
        if (stencil_inside(wa, k, a, 1.0, 0.1))
            CHECK(frobenius_norm(fd_hessian(wa, k) - SymMatrix::diagonal({1.0, 0.5})) < 1e-8);

    // Biconjugation of a convex non-quadratic field.
    const auto f = GridField::sample(GridField::cube(2, 65, -1, 1), [](std::span<const double> x) {
        return std::cosh(x[0]) + 0.5 * x[1] * x[1] + 0.2 * x[0] * x[1];
    });
    // Second pass on the part of the y-grid inside the gradient image.
    const auto ff = legendre_transform(crop(legendre_transform(f), -0.6, 0.6));
    double bi = 0.0;
    const double h = f.spacing();
    for (std::size_t k = 0; k < ff.size(); ++k) {
        const Vector x = ff.coords(k);
        // Compare where Df(x) lies inside the cropped y-box.
        const Vector df{std::sinh(x[0]) + 0.2 * x[1], x[1] + 0.2 * x[0]};
        if (std::max(std::abs(df[0]), std::abs(df[1])) > 0.6 - 0.1) continue;
        if (inside(f, x, -2 * h)) bi = std::max(bi, std::abs(ff[k] - interpolate(f, x)));
    }
    MESSAGE("biconjugate error ", bi, " at h = ", h);
    CHECK(bi < 5.0 * h * h);

    const auto saddle = quadratic_field(SymMatrix::diagonal({1.0, -0.5}), 9, 1.0);
    CHECK_THROWS_AS(legendre_transform(saddle), DomainError);
}

TEST_CASE("Legendre transform pairs the gradient graphs") {
    const auto f = GridField::sample(GridField::cube(2, 65, -1, 1), [](std::span<const double> x) {
        return std::cosh(x[0]) + 0.5 * x[1] * x[1];
    });
    const auto w = legendre_transform(f);
    const auto dw = gradient_field(w);
    double err = 0.0;
    for (const auto& s : graph_samples(f)) {
        if (!inside(w, s.y, -2 * w.spacing())) continue;
        for (int d = 0; d < 2; ++d) err = std::max(err, std::abs(interpolate(dw[d], s.y) - s.x[d]));
    }
    CHECK(err < 1e-2);
}

TEST_CASE("Legendre-Lewy transform") {
    const double m = 1 / std::sqrt(3.0);
    const auto zero = legendre_lewy_transform(quadratic_field(SymMatrix(3), 17, 1.0), 3);
    CHECK(zero.m == doctest::Approx(m));
    CHECK(zero.mu_range.first == doctest::Approx(std::sqrt(3.0)));
    CHECK(zero.mu_range.second == doctest::Approx(std::sqrt(3.0)));
    double err = 0.0;
    for (std::size_t k = 0; k < zero.w_field.size(); ++k) {
        const Vector y = zero.w_field.coords(k);
        if (!preimage_inside(m * SymMatrix::identity(3), y, 1.0, 0.2)) continue;
        err = std::max(err, std::abs(zero.w_field[k] - dot(y, y) / (2 * m)));
    }
    CHECK(err < 1e-10);

    const auto pl = legendre_lewy_transform(quadratic_field(SymMatrix::diagonal({1, 1, 0}), 17, 1.0), 3);
    const SymMatrix want = SymMatrix::diagonal({1 / (1 + m), 1 / (1 + m), 1 / m});
    const SymMatrix pshift = SymMatrix::diagonal({1 + m, 1 + m, m});
    for (std::size_t k = 0; k < pl.w_field.size(); ++k)
        if (stencil_inside(pl.w_field, k, pshift, 1.0, 0.2))
            CHECK(frobenius_norm(fd_hessian(pl.w_field, k) - want) < 1e-8);
    CHECK(lambda_ratio(eigenvalues(want)) == doctest::Approx(1 / (2 * m)).epsilon(1e-14));
    CHECK(pl.mu_contract_error < 1e-8);

    Rng rng(53);
    for (int t = 0; t < 5; ++t) {
        Vector d{rng.uniform(-0.5, 2), rng.uniform(-0.5, 2), rng.uniform(-0.5, 2)};
        const SymMatrix q = congruence(random_orthogonal(3, rng), SymMatrix::diagonal(d));
        const auto r = legendre_lewy_transform(quadratic_field(q, 17, 1.0), 3);
        const SymMatrix shifted = q + m * SymMatrix::identity(3);
        double worst = 0.0;
        for (std::size_t k = 0; k < r.w_field.size(); ++k)
            if (stencil_inside(r.w_field, k, shifted, 1.0, 0.2))
                worst = std::max(worst, frobenius_norm(product(fd_hessian(r.w_field, k), shifted) - Matrix::identity(3)));
        CHECK(worst < 1e-8);
        CHECK(r.mu_range.first > 0.0);
    }

    const auto below = quadratic_field(SymMatrix::diagonal({1, 1, -0.7}), 9, 1.0);
    CHECK_THROWS_AS(legendre_lewy_transform(below, 3), DomainError);
}

TEST_CASE("mu_from_lambda") {
    const double m = 1 / std::sqrt(3.0);
    const Vector mu = mu_from_lambda(Vector{1, 1, 0}, m);
    CHECK(mu[0] == doctest::Approx(0.6339746).epsilon(1e-7));
    CHECK(mu[2] == doctest::Approx(1.7320508).epsilon(1e-7));
    CHECK(mu_from_lambda(Vector{0, 0}, 0.5) == Vector{2.0, 2.0});
    Rng rng(54);
    Vector l{rng.uniform(-0.5, 3), rng.uniform(-0.5, 3), rng.uniform(-0.5, 3)};
    const Vector back = mu_from_lambda(l, m);
    for (std::size_t i = 0; i < 3; ++i) CHECK(1 / back[i] - m == doctest::Approx(l[i]).epsilon(1e-14));
    CHECK_THROWS_AS(mu_from_lambda(Vector{1, -m}, m), DomainError);
}
