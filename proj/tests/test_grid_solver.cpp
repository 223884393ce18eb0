#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "slaglab/catalog.hpp"
#include "slaglab/errors.hpp"
#include "slaglab/grid.hpp"
#include "slaglab/random.hpp"
#include "slaglab/solver.hpp"
#include "slaglab/spectral.hpp"

using namespace slaglab;

namespace {

GridField from_entry(const std::string& name, std::size_t nodes, double half) {
    const auto e = catalog_entry(name);
    return GridField::sample(GridField::cube(3, nodes, -half, half),
                             [&](std::span<const double> x) { return e.evaluator(x).value; });
}

double interior_error(const GridField& u, const std::string& name) {
    const auto e = catalog_entry(name);
    double err = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k)
        if (u.depth(k) >= 1) err = std::max(err, std::abs(u[k] - e.evaluator(u.coords(k)).value));
    return err;
}

double max_hessian_error(const GridField& u, const std::string& name) {
    const auto e = catalog_entry(name);
    double err = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k)
        if (u.depth(k) >= 1) err = std::max(err, frobenius_norm(fd_hessian(u, k) - e.evaluator(u.coords(k)).hessian));
    return err;
}

}  // namespace

TEST_CASE("GridField geometry and validation") {
    const auto g = GridField::cube(3, 9, -1.0, 1.0);
    CHECK(g.spacing() == doctest::Approx(0.25));
    CHECK(g.size() == 729);
    CHECK(g.node(g.flat(Node{2, 3, 4})) == Node{2, 3, 4});
    CHECK(g.coords(Node{0, 8, 4}) == Vector{-1.0, 1.0, 0.0});
    CHECK(g.depth(Node{1, 4, 4}) == 1);
    CHECK(g.center() == Node{4, 4, 4});
    CHECK_THROWS_AS(GridField({4, 9}, {0, 0}, 0.1), ArgumentError);
    CHECK_THROWS_AS(GridField({5, 5}, {0, 0}, 0.0), ArgumentError);
    CHECK_THROWS_AS(GridField({5, 5}, {0, 0}, 0.1, Vector(24, 0.0)), ArgumentError);
    Vector bad(25, 0.0);
    bad[3] = NAN;
    CHECK_THROWS_AS(GridField({5, 5}, {0, 0}, 0.1, bad), DomainError);
}

TEST_CASE("finite differences") {
    const SymMatrix q{{1.0, 0.3, 0.0}, {0.3, 2.0, -0.5}, {0.0, -0.5, 1.5}};
    const Vector zero{0, 0, 0};
    const auto u = GridField::sample(GridField::cube(3, 7, -1, 1),
                                     [&](std::span<const double> x) { return eval_quadratic(q, zero, 0.0, x).value; });
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (u.depth(k) < 1) continue;
        CHECK(frobenius_norm(fd_hessian(u, k) - q) < 1e-12);
        const Vector g = fd_gradient(u, u.node(k));
        const Vector exact = q.as_matrix() * u.coords(k);
        for (int d = 0; d < 3; ++d) CHECK(g[d] == doctest::Approx(exact[d]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fd_hessian(u, Node{0, 3, 3}), ArgumentError);
    CHECK_THROWS_AS(fd_gradient(u, Node{3, 6, 3}), ArgumentError);

    const auto c = GridField::sample(GridField::cube(2, 9, 0, 1), [](std::span<const double>) { return 4.0; });
    CHECK(fd_gradient(c, Node{3, 3, 0}) == Vector{0.0, 0.0});

    // sin x₁: |error| ≤ h²/6 · max|u'''| + roundoff.
    const auto s = GridField::sample(GridField::cube(2, 65, 0, 2), [](std::span<const double> x) { return std::sin(x[0]); });
    const double h = s.spacing();
    for (std::size_t k = 0; k < s.size(); ++k)
        if (s.depth(k) >= 1)
            CHECK(std::abs(fd_gradient(s, s.node(k))[0] - std::cos(s.coords(k)[0])) <= h * h / 6.0 + 1e-12);

    // Li is a cubic: all second-difference stencils are exact.
    CHECK(max_hessian_error(from_entry("li", 9, 1.0), "li") < 1e-10);
    // Warren: O(h²).
    const double e1 = max_hessian_error(from_entry("warren", 21, 0.5), "warren");
    const double e2 = max_hessian_error(from_entry("warren", 41, 0.5), "warren");
    MESSAGE("warren FD hessian ratio ", e1 / e2);
    CHECK(std::log2(e1 / e2) >= 1.8);
}

TEST_CASE("residual_field") {
    const auto li = residual_field(from_entry("li", 9, 1.0), OperatorModel::slag(3, 0.0));
    CHECK(li.sup_norm < 1e-10);
    const auto q = residual_field(from_entry("quadratic", 9, 1.0), OperatorModel::sigma2(3));
    CHECK(q.sup_norm < 1e-12);
    CHECK(q.off_branch_count == 0);
    const double r1 = residual_field(from_entry("warren", 21, 0.5), OperatorModel::sigma2(3)).sup_norm;
    const double r2 = residual_field(from_entry("warren", 41, 0.5), OperatorModel::sigma2(3)).sup_norm;
    MESSAGE("warren residual ratio ", r1 / r2);
    CHECK(std::log2(r1 / r2) >= 1.8);
    const auto neg = GridField::sample(GridField::cube(3, 7, -1, 1), [](std::span<const double> x) {
        return -0.5 * (x[0] * x[0] + x[1] * x[1]);
    });
    const auto off = residual_field(neg, OperatorModel::sigma2(3));
    CHECK(off.off_branch_count == 125);
    CHECK(off.residual.at(Node{0, 0, 0}) == 0.0);
}

TEST_CASE("grid file round trip and validation") {
    Rng rng(41);
    Vector v(7 * 6 * 5);
    for (auto& x : v) x = rng.normal() * 1e3;
    const GridField f({7, 6, 5}, {-1.0, 0.5, 2.0}, 0.125, v);
    const std::string bytes = encode_field(f);
    const GridField g = decode_field(bytes);
    CHECK(g.same_geometry(f));
    CHECK(std::equal(f.values().begin(), f.values().end(), g.values().begin()));

    CHECK_THROWS_AS(decode_field(bytes.substr(0, bytes.size() - 8)), ParseError);
    std::string bad = bytes;
    bad.replace(bad.find("\"count\":210"), 11, "\"count\":211");
    CHECK_THROWS_AS(decode_field(bad), ParseError);
    CHECK_THROWS_AS(decode_field("not json\n"), ParseError);
    CHECK_THROWS_AS(decode_field("{\"magic\":\"other\"}\n"), ParseError);

    // Minimal header: origin defaults to 0, n_dims and count from the shape.
    std::string legacy = "{\"magic\":\"slaglab-grid\",\"shape\":[5,5],\"spacing\":0.5}\n";
    legacy.append(25 * 8, '\0');
    const GridField l = decode_field(legacy);
    CHECK(l.origin() == Vector{0.0, 0.0});
    CHECK(l.n_dims() == 2);

    std::string nan = bytes;
    const double q = NAN;
    std::memcpy(nan.data() + nan.find('\n') + 1 + 8 * 3, &q, 8);
    try {
        decode_field(nan);
        FAIL("accepted a NaN payload");
    } catch (const ParseError& e) {
        CHECK(e.offset() == bytes.find('\n') + 1 + 24);
    }
}

TEST_CASE("solver returns the quadratic sigma2 solution") {
    const auto b = from_entry("quadratic", 9, 1.0);
    const auto r = solve_dirichlet(OperatorModel::sigma2(3), b);
    CHECK(r.report.converged);
    CHECK(r.report.iterations <= 3);
    CHECK(r.report.final_residual <= 1e-10);
    CHECK(interior_error(r.u, "quadratic") < 1e-8);
    CHECK(r.report.branch_flag);
}

TEST_CASE("solver reproduces Li's solution at phase 0") {
    const auto b = from_entry("li", 9, 0.5);
    const auto r = solve_dirichlet(OperatorModel::slag(3, 0.0), b);
    CHECK(r.report.converged);
    CHECK(r.report.final_residual <= 1e-10);
    CHECK(interior_error(r.u, "li") < 1e-8);
    CHECK(r.report.min_ellipticity > 0.0);
}

TEST_CASE("solver converges at second order on Warren's data") {
    const auto r1 = solve_dirichlet(OperatorModel::sigma2(3), from_entry("warren", 9, 0.5));
    const auto r2 = solve_dirichlet(OperatorModel::sigma2(3), from_entry("warren", 17, 0.5));
    REQUIRE(r1.report.converged);
    REQUIRE(r2.report.converged);
    CHECK(r2.report.iterations <= 12);
    const double e1 = interior_error(r1.u, "warren"), e2 = interior_error(r2.u, "warren");
    CHECK(std::log2(e1 / e2) >= 1.8);
    // Quadratic convergence near the solution: r_{k+1} / r_k² stays bounded.
    const auto& hist = r2.report.residual_history;
    for (std::size_t k = 1; k + 1 < hist.size(); ++k)
        if (hist[k] < 1e-2 && hist[k + 1] > 1e-13) CHECK(hist[k + 1] / (hist[k] * hist[k]) < 1e3);
}

TEST_CASE("solver config validation") {
    SolveConfig bad;
    bad.damping.backtrack = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = {};
    bad.residual_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("2-D sigma2 solve from convex data keeps the positive branch") {
    const auto b = GridField::sample(GridField::cube(2, 33, -1, 1), [](std::span<const double> x) {
        return 0.5 * (0.8 * x[0] * x[0] + 1.25 * x[1] * x[1]) + 0.05 * std::cos(x[0] + x[1]);
    });
    const auto r = solve_dirichlet(OperatorModel::sigma2(2), b);
    CHECK(r.report.converged);
    CHECK(r.report.branch_flag);
    CHECK(residual_field(r.u, OperatorModel::sigma2(2)).off_branch_count == 0);
}
