#include <cmath>
#include <numbers>

#include "doctest.h"
#include "slaglab/catalog.hpp"
#include "slaglab/errors.hpp"
#include "slaglab/random.hpp"
#include "slaglab/spectral.hpp"

using namespace slaglab;
using std::numbers::pi;

namespace {

double laplace_minus_det(const SymMatrix& h) { return h.trace() - determinant(h.as_matrix()); }

template <typename Eval>
void for_cube(int nodes, double half, Eval&& eval) {
    for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j)
            for (int k = 0; k < nodes; ++k) {
                const double s = 2.0 * half / (nodes - 1);
                eval(Vector{-half + i * s, -half + j * s, -half + k * s});
            }
}

// Max central-difference errors of Du and D²u at step h.
std::pair<double, double> jet_errors(const std::function<Jet(std::span<const double>)>& f,
                                     const Vector& x, double h) {
    const Jet j = f(x);
    double eg = 0.0, eh = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        Vector p = x, q = x;
        p[d] += h;
        q[d] -= h;
        const Jet jp = f(p), jq = f(q);
        eg = std::max(eg, std::abs((jp.value - jq.value) / (2 * h) - j.gradient[d]));
        for (std::size_t e = 0; e < x.size(); ++e)
            eh = std::max(eh, std::abs((jp.gradient[e] - jq.gradient[e]) / (2 * h) - j.hessian(d, e)));
    }
    return {eg, eh};
}

}  // namespace

TEST_CASE("Warren's solution at the origin") {
    const Jet j = eval_warren(Vector{0, 0, 0});
    CHECK(j.value == doctest::Approx(-0.75));
    CHECK(j.gradient == Vector{0, 0, -1.25});
    CHECK(frobenius_norm(j.hessian - SymMatrix::diagonal({2, 2, -0.75})) < 1e-15);
    CHECK(sigma_k(eigenvalues(j.hessian), 2) == doctest::Approx(1.0));
    for (double t : {-3.0, -1.0, 0.5, 2.0, 4.0})
        CHECK(std::abs(sigma_k(eigenvalues(eval_warren(Vector{0, 0, t}).hessian), 2) - 1.0) < 1e-12);
}

TEST_CASE("Warren's solution solves sigma2 = 1 at phase pi/2") {
    double worst = 0.0, worst_phase = 0.0;
    for_cube(17, 1.5, [&](const Vector& x) {
        const auto h = eval_warren(x).hessian;
        const auto s = sigma2_positive_branch(h);
        CHECK(s.on_branch);
        worst = std::max(worst, std::abs(s.value - 1.0));
        worst_phase = std::max(worst_phase, std::abs(slag_phase(h) - pi / 2));
    });
    CHECK(worst < 1e-11);
    CHECK(worst_phase < 1e-10);
}

TEST_CASE("Li's solution") {
    const Jet j = eval_li(Vector{1, 1, 1});
    CHECK(j.value == doctest::Approx(-2.0 / 3.0));
    CHECK(j.gradient == Vector{2, -2, -1});
    CHECK(frobenius_norm(j.hessian - SymMatrix{{2, 2, 0}, {2, -4, -1}, {0, -1, 0}}) == 0.0);
    CHECK(j.hessian.trace() == doctest::Approx(-2.0));
    CHECK(determinant(j.hessian.as_matrix()) == doctest::Approx(-2.0));
    const Jet o = eval_li(Vector{0, 0, 0});
    CHECK(frobenius_norm(o.hessian - SymMatrix{{0, 0, 0}, {0, 0, -1}, {0, -1, 0}}) == 0.0);

    double worst = 0.0, worst_phase = 0.0;
    for_cube(17, 1.5, [&](const Vector& x) {
        const auto h = eval_li(x).hessian;
        worst = std::max(worst, std::abs(laplace_minus_det(h)));
        worst_phase = std::max(worst_phase, std::abs(slag_phase(h)));
    });
    CHECK(worst < 1e-11);
    CHECK(worst_phase < 1e-10);
}

TEST_CASE("quadratic entries") {
    const Vector zero{0, 0, 0};
    const Jet j = eval_quadratic(SymMatrix::identity(3), zero, 0.0, Vector{1, 0, 0});
    CHECK(j.value == 0.5);
    CHECK(j.gradient == Vector{1, 0, 0});
    CHECK(std::abs(slag_phase(SymMatrix::diagonal({1, 0, -1}))) < 1e-15);
    const auto q = catalog_entry("quadratic");
    CHECK(sigma2_positive_branch(q.evaluator(Vector{0.3, -0.2, 0.9}).hessian).value == 1.0);
    CHECK_THROWS_AS(catalog_entry("nope"), ArgumentError);
}

TEST_CASE("catalog jets agree with central differences at second order") {
    const Vector x{0.31, -0.42, 0.27};
    for (const auto& name : catalog_names()) {
        const auto entry = catalog_entry(name);
        const auto [g2, h2] = jet_errors(entry.evaluator, x, 1e-2);
        const auto [g3, h3] = jet_errors(entry.evaluator, x, 1e-3);
        INFO(name);
        CHECK(g2 < 1e-3);
        CHECK(h2 < 1e-3);
        // Exact on polynomials of low degree; otherwise order ≥ 1.9.
        if (g2 > 1e-11) CHECK(std::log10(g2 / g3) >= 1.9);
        if (h2 > 1e-11) CHECK(std::log10(h2 / h3) >= 1.9);
    }
}

TEST_CASE("level-set completion and sampling") {
    const auto s0 = classify_phase(3, 0.0);
    auto l = complete_level_set(s0, Vector{1, 0});
    REQUIRE(l);
    CHECK((*l)[2] == doctest::Approx(-1.0));
    const auto s1 = classify_phase(3, pi / 2);
    l = complete_level_set(s1, Vector{1, 1});
    REQUIRE(l);
    CHECK(std::abs((*l)[2]) < 1e-15);
    CHECK_FALSE(complete_level_set(s0, Vector{1, 1}));

    Rng rng(31);
    for (double theta : {0.0, 1.0, -1.4, 4.5, -4.5}) {
        const auto spec = classify_phase(3, theta);
        for (int t = 0; t < 100; ++t) CHECK(std::abs(slag_phase(sample_level_set(spec, rng)) - theta) < 1e-12);
    }
    // Relabelling the free draws permutes the completed point.
    auto a = complete_level_set(s1, Vector{0.3, 2.0});
    auto b = complete_level_set(s1, Vector{2.0, 0.3});
    REQUIRE(a);
    REQUIRE(b);
    CHECK((*a)[2] == doctest::Approx((*b)[2]).epsilon(1e-14));
}

TEST_CASE("2-homogeneous extension") {
    Rng rng(32);
    const SymMatrix a = random_symmetric(3, rng);
    const QuadraticSphereFunction g(a);
    const Vector zero{0, 0, 0};
    for (int t = 0; t < 20; ++t) {
        Vector x{rng.normal(), rng.normal(), rng.normal()};
        const Jet u = homogeneous2_extension(g, x);
        const Jet q = eval_quadratic(a, zero, 0.0, x);
        CHECK(u.value == doctest::Approx(q.value).epsilon(1e-12));
        CHECK(frobenius_norm(u.hessian - a) < 1e-12);
        CHECK(dot(x, u.gradient) == doctest::Approx(2 * u.value).epsilon(1e-12));
        Vector x2 = x;
        for (auto& v : x2) v *= 2.0;
        CHECK(frobenius_norm(homogeneous2_extension(g, x2).hessian - u.hessian) < 1e-12);
    }
    CHECK_THROWS_AS(homogeneous2_extension(g, zero), DomainError);
}

TEST_CASE("geodesic sampling of a sphere function") {
    CHECK(icosphere_vertices(0).size() == 12);
    CHECK(icosphere_vertices(2).size() == 162);
    const QuadraticSphereFunction g(SymMatrix::diagonal({1, 0, -1}));
    const GeodesicSphereFunction coarse(g, 2), fine(g, 4);
    Rng rng(33);
    double e_coarse = 0.0, e_fine = 0.0;
    for (int t = 0; t < 200; ++t) {
        Vector x{rng.normal(), rng.normal(), rng.normal()};
        const double exact = homogeneous2_extension(g, x).value;
        e_coarse = std::max(e_coarse, std::abs(homogeneous2_extension(coarse, x).value - exact));
        e_fine = std::max(e_fine, std::abs(homogeneous2_extension(fine, x).value - exact));
        // Homogeneity survives interpolation: D²u(x/2) = D²u(x).
        Vector half = x;
        for (auto& v : half) v *= 0.5;
        CHECK(frobenius_norm(homogeneous2_extension(fine, half).hessian -
                             homogeneous2_extension(fine, x).hessian) < 1e-9);
    }
    CHECK(e_fine < e_coarse);
    CHECK(e_fine < 1e-2);
}

TEST_CASE("hom2 entry solves the Theta = 0 equation away from the origin") {
    const auto e = catalog_entry("hom2");
    CHECK(e.theta.value() == 0.0);
    for_cube(5, 1.0, [&](const Vector& x) {
        if (norm2(x) == 0.0) return;
        CHECK(std::abs(slag_phase(e.evaluator(x).hessian)) < 1e-12);
    });
}
