#include "slaglab/catalog.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "slaglab/errors.hpp"
#include "slaglab/random.hpp"

namespace slaglab {

namespace {

void require_dim(std::span<const double> x, std::size_t n, const char* who) {
    if (x.size() != n)
        throw ArgumentError(std::string(who) + ": expected a " + std::to_string(n) + "-vector");
}

}  // namespace

Jet eval_warren(std::span<const double> x) {
    require_dim(x, 3, "eval_warren");
    const double e = std::exp(x[2]);
    const double ei = std::exp(-x[2]);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    Jet j;
    j.value = (r2 - 1.0) * e + 0.25 * ei;
    j.gradient = {2.0 * x[0] * e, 2.0 * x[1] * e, (r2 - 1.0) * e - 0.25 * ei};
    j.hessian = SymMatrix(3);
    j.hessian.set(0, 0, 2.0 * e);
    j.hessian.set(1, 1, 2.0 * e);
    j.hessian.set(0, 2, 2.0 * x[0] * e);
    j.hessian.set(1, 2, 2.0 * x[1] * e);
    j.hessian.set(2, 2, (r2 - 1.0) * e + 0.25 * ei);
    return j;
}

Jet eval_li(std::span<const double> x) {
    require_dim(x, 3, "eval_li");
    const double x1 = x[0], x2 = x[1], x3 = x[2];
    Jet j;
    j.value = x1 * x1 * x2 - (2.0 / 3.0) * x2 * x2 * x2 - x2 * x3;
    j.gradient = {2.0 * x1 * x2, x1 * x1 - 2.0 * x2 * x2 - x3, -x2};
    j.hessian = SymMatrix(3);
    j.hessian.set(0, 0, 2.0 * x2);
    j.hessian.set(0, 1, 2.0 * x1);
    j.hessian.set(1, 1, -4.0 * x2);
    j.hessian.set(1, 2, -1.0);
    return j;
}

Jet eval_quadratic(const SymMatrix& q, std::span<const double> b, double c,
                   std::span<const double> x) {
    const std::size_t n = q.dim();
    require_dim(x, n, "eval_quadratic");
    require_dim(b, n, "eval_quadratic");
    Jet j;
    j.gradient = q.as_matrix() * x;
    for (std::size_t i = 0; i < n; ++i) j.gradient[i] += b[i];
    j.value = c;
    for (std::size_t i = 0; i < n; ++i) j.value += x[i] * (0.5 * (j.gradient[i] - b[i]) + b[i]);
    j.hessian = q;
    return j;
}

CatalogEntry catalog_entry(const std::string& name) {
    if (name == "warren")
        return {"warren", 3, std::numbers::pi / 2.0, "sigma2(D2u)=1, sigma1>0", eval_warren, 1.5};
    if (name == "li") return {"li", 3, 0.0, "laplace(u)=det(D2u)", eval_li, 1.0};
    if (name == "quadratic") {
        const SymMatrix q = SymMatrix::diagonal({1.0, 1.0, 0.0});
        return {"quadratic", 3, std::numbers::pi / 2.0, "sigma2(D2u)=1, sigma1>0",
                [q](std::span<const double> x) {
                    const Vector zero(3, 0.0);
                    return eval_quadratic(q, zero, 0.0, x);
                },
                1.0};
    }
    if (name == "hom2") {
        // |x|² g(x/|x|) for g(ξ) = ½⟨ξ, Qξ⟩, Q = diag(1, 0, −1): Σ arctan λᵢ = 0.
        auto g = std::make_shared<QuadraticSphereFunction>(SymMatrix::diagonal({1.0, 0.0, -1.0}));
        return {"hom2", 3, 0.0, "sum arctan(lambda)=0, degree-2 homogeneous",
                [g](std::span<const double> x) {
                    if (norm2(x) > 0.0) return homogeneous2_extension(*g, x);
                    return Jet{0.0, Vector(3, 0.0), g->matrix()};
                },
                1.0};
    }
    throw ArgumentError("unknown catalog entry '" + name + "' (expected warren|li|quadratic|hom2)");
}

std::vector<std::string> catalog_names() { return {"warren", "li", "quadratic", "hom2"}; }

// ---------------------------------------------------------------------------

std::optional<Vector> complete_level_set(const PhaseSpec& spec, std::span<const double> free) {
    if (free.size() + 1 != static_cast<std::size_t>(spec.n))
        throw ArgumentError("complete_level_set: expected n-1 free eigenvalues");
    double used = 0.0;
    for (double l : free) used += std::atan(l);
    const double residual = spec.theta - used;
    constexpr double kEdge = std::numbers::pi / 2.0 - 1e-12;
    if (!(std::abs(residual) < kEdge)) return std::nullopt;
    Vector lambda(free.begin(), free.end());
    lambda.push_back(std::tan(residual));
    return lambda;
}

Vector sample_level_set(const PhaseSpec& spec, Rng& rng, const LevelSetBox& box) {
    if (!(box.angle_lo < box.angle_hi) || box.angle_lo <= -std::numbers::pi / 2.0 ||
        box.angle_hi >= std::numbers::pi / 2.0)
        throw ArgumentError("sample_level_set: angle box must lie inside (-pi/2, pi/2)");
    // Each free angle leaves the others at most (n − 1)·π/2 to make up, so
    // the box can shrink without changing the conditional distribution.
    const double reach = (spec.n - 1) * std::numbers::pi / 2.0;
    const double lo = std::max(box.angle_lo, spec.theta - reach);
    const double hi = std::min(box.angle_hi, spec.theta + reach);
    if (!(lo < hi))
        throw ConvergenceError("sample_level_set: angle box cannot reach the level set");
    Vector free(spec.n - 1);
    for (int attempt = 0; attempt < box.max_attempts; ++attempt) {
        for (auto& l : free) l = std::tan(rng.uniform(lo, hi));
        if (auto lambda = complete_level_set(spec, free)) return *lambda;
    }
    throw ConvergenceError("sample_level_set: no admissible draw in " +
                           std::to_string(box.max_attempts) + " attempts");
}

Vector sample_level_set(const PhaseSpec& spec, std::uint64_t rng_seed, const LevelSetBox& box) {
    Rng rng(rng_seed);
    return sample_level_set(spec, rng, box);
}

// ---------------------------------------------------------------------------

QuadraticSphereFunction::QuadraticSphereFunction(SymMatrix a) : a_(std::move(a)) {}

SphereJet QuadraticSphereFunction::eval(std::span<const double> xi) const {
    const std::size_t n = a_.dim();
    require_dim(xi, n, "QuadraticSphereFunction");
    const Vector axi = a_.as_matrix() * xi;
    const double q = dot(xi, axi);
    SphereJet j;
    j.value = 0.5 * q;
    j.gradient.resize(n);
    for (std::size_t i = 0; i < n; ++i) j.gradient[i] = axi[i] - q * xi[i];
    j.hessian = SymMatrix(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i; k < n; ++k) {
            const double v = a_(i, k) - 2.0 * axi[i] * xi[k] - 2.0 * xi[i] * axi[k] -
                             (i == k ? q : 0.0) + 4.0 * q * xi[i] * xi[k];
            j.hessian.set(i, k, v);
        }
    return j;
}

AnalyticSphereFunction::AnalyticSphereFunction(int n,
                                               std::function<SphereJet(std::span<const double>)> f)
    : n_(n), f_(std::move(f)) {}

namespace {

using Face = std::array<std::size_t, 3>;

void build_icosphere(int subdivisions, std::vector<Vector>& verts, std::vector<Face>& faces) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},  {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    auto normalize = [](Vector& p) {
        const double r = norm2(p);
        for (auto& c : p) c /= r;
    };
    for (auto& p : verts) normalize(p);
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
        auto mid = [&](std::size_t a, std::size_t b) {
            const std::pair<std::size_t, std::size_t> key{std::min(a, b), std::max(a, b)};
            if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
            Vector p(3);
            for (int k = 0; k < 3; ++k) p[k] = 0.5 * (verts[a][k] + verts[b][k]);
            normalize(p);
            verts.push_back(p);
            midpoint.emplace(key, verts.size() - 1);
            return verts.size() - 1;
        };
        std::vector<Face> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const std::size_t a = mid(f[0], f[1]);
            const std::size_t b = mid(f[1], f[2]);
            const std::size_t c = mid(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        faces = std::move(next);
    }
}

// Barycentric weights of the ray through xi on the flat triangle; empty when
// the ray misses it.
std::optional<std::array<double, 3>> ray_weights(const std::vector<Vector>& verts, const Face& f,
                                                 std::span<const double> xi) {
    Matrix m(3, 3);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) m(r, c) = verts[f[c]][r];
    Vector w;
    try {
        w = solve(m, Vector(xi.begin(), xi.end()));
    } catch (const DomainError&) {
        return std::nullopt;
    }
    constexpr double kSlack = -1e-12;
    if (w[0] < kSlack || w[1] < kSlack || w[2] < kSlack) return std::nullopt;
    const double s = w[0] + w[1] + w[2];
    return std::array<double, 3>{w[0] / s, w[1] / s, w[2] / s};
}

}  // namespace

std::vector<Vector> icosphere_vertices(int subdivisions) {
    std::vector<Vector> verts;
    std::vector<Face> faces;
    build_icosphere(subdivisions, verts, faces);
    return verts;
}

GeodesicSphereFunction::GeodesicSphereFunction(const SphereFunction& source, int subdivisions) {
    if (source.dim() != 3) throw ArgumentError("GeodesicSphereFunction: source must live on S^2");
    if (subdivisions < 0 || subdivisions > 7)
        throw ArgumentError("GeodesicSphereFunction: subdivisions must be in [0, 7]");
    build_icosphere(subdivisions, vertices_, faces_);
    samples_.reserve(vertices_.size());
    for (const auto& v : vertices_) samples_.push_back(source.eval(v));
}

SphereJet GeodesicSphereFunction::eval(std::span<const double> xi) const {
    require_dim(xi, 3, "GeodesicSphereFunction");
    std::optional<std::array<double, 3>> w;
    const Face* hit = nullptr;
    for (const auto& f : faces_) {
        // Cheap rejection: the ray must point into the face's hemisphere.
        if (dot(vertices_[f[0]], xi) < 0.0) continue;
        if ((w = ray_weights(vertices_, f, xi))) {
            hit = &f;
            break;
        }
    }
    if (!hit) throw DomainError("GeodesicSphereFunction: point location failed");

    SphereJet out;
    out.gradient.assign(3, 0.0);
    out.hessian = SymMatrix(3);
    for (int c = 0; c < 3; ++c) {
        const SphereJet& s = samples_[(*hit)[c]];
        const double wc = (*w)[c];
        out.value += wc * s.value;
        for (int k = 0; k < 3; ++k) out.gradient[k] += wc * s.gradient[k];
        out.hessian += wc * s.hessian;
    }
    const double radial = dot(out.gradient, xi);
    for (int k = 0; k < 3; ++k) out.gradient[k] -= radial * xi[k];
    return out;
}

Jet homogeneous2_extension(const SphereFunction& g, std::span<const double> x) {
    const std::size_t n = static_cast<std::size_t>(g.dim());
    require_dim(x, n, "homogeneous2_extension");
    const double r = norm2(x);
    if (!(r > 0.0)) throw DomainError("homogeneous2_extension: x = 0 (Hessian undefined at origin)");
    Vector xi(x.begin(), x.end());
    for (auto& c : xi) c /= r;
    SphereJet s = g.eval(xi);
    const double radial = dot(s.gradient, xi);
    for (std::size_t k = 0; k < n; ++k) s.gradient[k] -= radial * xi[k];

    Jet j;
    j.value = r * r * s.value;
    j.gradient.resize(n);
    for (std::size_t k = 0; k < n; ++k) j.gradient[k] = 2.0 * r * s.value * xi[k] + r * s.gradient[k];
    j.hessian = s.hessian;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i; k < n; ++k) {
            const double v = (i == k ? 2.0 * s.value : 0.0) +
                             2.0 * (xi[i] * s.gradient[k] + s.gradient[i] * xi[k]);
            j.hessian.add(i, k, v);
        }
    return j;
}

}  // namespace slaglab
