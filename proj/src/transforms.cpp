#include "slaglab/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "slaglab/errors.hpp"
#include "slaglab/parallel.hpp"
#include "slaglab/random.hpp"
#include "slaglab/spectral.hpp"

namespace slaglab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPoleTol = 1e-12;

std::string format_point(std::span<const double> x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

/// Representative of φ modulo π in (−π/2, π/2].
double wrap_half_pi(double phi) { return phi - kPi * std::round(phi / kPi); }

}  // namespace

RotationParams RotationParams::from_beta(double beta, double validity_margin) {
    if (!std::isfinite(beta) || std::abs(beta) > kPi)
        throw DomainError("RotationParams: beta must lie in [-pi, pi]");
    if (!(validity_margin >= 0.0)) throw DomainError("RotationParams: validity margin must be >= 0");
    RotationParams p;
    p.beta = beta;
    p.c = std::cos(beta);
    p.s = std::sin(beta);
    p.alpha = beta - kPi / 2.0;
    if (std::abs(std::cos(p.alpha)) > 1e-15) p.a = std::tan(p.alpha);
    p.validity_margin = validity_margin;
    return p;
}

RotationParams RotationParams::from_threshold(double alpha, double delta) {
    return from_beta(kPi / 2.0 + alpha + delta, delta);
}

double eigen_rotation_map(double lambda, const RotationParams& params) {
    const double phi = std::atan(lambda) - params.beta;
    if (std::abs(std::cos(phi)) <= kPoleTol)
        throw PoleError("eigen_rotation_map: arctan(lambda) - beta = " + std::to_string(phi) +
                        " sits on a pole of tan");
    return std::tan(phi);
}

SymMatrix mobius_hessian_map(const SymMatrix& m, double a) {
    const Spectrum sp = eig_sym(m);
    const double scale = kPoleTol * std::max(1.0, frobenius_norm(m));
    Vector d(sp.dim());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double gap = sp.eigenvalues[i] - a;
        if (std::abs(gap) <= scale)
            throw PoleError("mobius_hessian_map: D2u - aI is singular (lambda = " +
                            std::to_string(sp.eigenvalues[i]) + ", a = " + std::to_string(a) + ")");
        d[i] = -a - (1.0 + a * a) / gap;
    }
    return SymMatrix::from_spectrum(sp.eigenvectors, d);
}

double rotated_phase_tracked(std::span<const double> lambda, double beta, int steps) {
    if (steps < 1) throw ArgumentError("rotated_phase_tracked: steps must be >= 1");
    const std::size_t n = lambda.size();
    Vector track(n);
    for (std::size_t i = 0; i < n; ++i) track[i] = std::atan(lambda[i]);
    for (int k = 1; k <= steps; ++k) {
        const RotationParams p = RotationParams::from_beta(beta * k / steps);
        const double db = beta / steps;
        Vector angles;
        try {
            for (double l : lambda) angles.push_back(std::atan(eigen_rotation_map(l, p)));
        } catch (const PoleError&) {
            // An angle sits on the pole at this step; the prediction is exact there.
            for (double& t : track) t -= db;
            continue;
        }
        std::vector<bool> used(angles.size(), false);
        for (std::size_t i = 0; i < n; ++i) {
            const double predicted = track[i] - db;
            std::size_t best = 0;
            double best_gap = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < angles.size(); ++j) {
                if (used[j]) continue;
                const double gap = std::abs(wrap_half_pi(angles[j] - predicted));
                if (gap < best_gap) {
                    best_gap = gap;
                    best = j;
                }
            }
            used[best] = true;
            track[i] = predicted + wrap_half_pi(angles[best] - predicted);
        }
    }
    return std::accumulate(track.begin(), track.end(), 0.0);
}

std::vector<GraphSample> graph_samples(const GridField& u) {
    std::vector<GraphSample> out;
    for (std::size_t f = 0; f < u.size(); ++f) {
        const Node nd = u.node(f);
        if (!u.is_interior(nd)) continue;
        out.push_back({u.coords(nd), fd_gradient(u, nd), fd_hessian(u, f)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Field-level rotation

namespace {

/// Hessian component fields on every node: FD in the interior, copied from
/// the nearest interior node on the boundary.
std::vector<GridField> hessian_fields(const GridField& u) {
    const int n = u.n_dims();
    std::vector<GridField> h(n * n, GridField(u.shape(), u.origin(), u.spacing()));
    for (std::size_t f = 0; f < u.size(); ++f) {
        Node nd = u.node(f);
        for (int d = 0; d < n; ++d)
            nd[d] = std::clamp<std::ptrdiff_t>(nd[d], 1, static_cast<std::ptrdiff_t>(u.shape()[d]) - 2);
        const SymMatrix m = fd_hessian(u, u.flat(nd));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) h[i * n + j].set(f, m(i, j));
    }
    return h;
}

struct Interpolant {
    const VectorField& grad;
    const std::vector<GridField>& hess;
    int n;

    Vector gradient(std::span<const double> x) const {
        Vector g(n);
        for (int d = 0; d < n; ++d) g[d] = interpolate(grad[d], x);
        return g;
    }
    Matrix hessian(std::span<const double> x) const {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = interpolate(hess[i * n + j], x);
        return m;
    }
};

/// Solves c x + s Du(x) = target by damped Newton from x0. Returns the residual norm.
double invert_rotation(const Interpolant& ip, const RotationParams& p, std::span<const double> target,
                       Vector& x) {
    const int n = ip.n;
    auto residual = [&](const Vector& z) {
        const Vector g = ip.gradient(z);
        Vector r(n);
        for (int d = 0; d < n; ++d) r[d] = p.c * z[d] + p.s * g[d] - target[d];
        return r;
    };
    Vector r = residual(x);
    double rn = norm2(r);
    const double tol = 1e-13 * (1.0 + norm2(target));
    for (int it = 0; it < 60 && rn > tol; ++it) {
        Matrix j = ip.hessian(x);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) j(a, b) = p.s * j(a, b) + (a == b ? p.c : 0.0);
        Vector step;
        try {
            Vector minus_r(n);
            for (int d = 0; d < n; ++d) minus_r[d] = -r[d];
            step = solve(j, minus_r, 1e-13);
        } catch (const DomainError&) {
            break;
        }
        double t = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt, t *= 0.5) {
            Vector z = x;
            for (int d = 0; d < n; ++d) z[d] += t * step[d];
            const Vector rz = residual(z);
            const double zn = norm2(rz);
            if (zn < rn) {
                x = std::move(z);
                r = rz;
                rn = zn;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return rn;
}

struct CellKey {
    std::array<std::int64_t, 3> k;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& c) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (auto v : c.k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
        return static_cast<std::size_t>(h);
    }
};

void require_separated(const std::vector<Vector>& pts, double radius) {
    const int n = static_cast<int>(pts.front().size());
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells;
    auto key_of = [&](const Vector& p) {
        CellKey k{{0, 0, 0}};
        for (int d = 0; d < n; ++d) k.k[d] = static_cast<std::int64_t>(std::floor(p[d] / radius));
        return k;
    };
    for (std::size_t i = 0; i < pts.size(); ++i) cells[key_of(pts[i])].push_back(i);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const CellKey base = key_of(pts[i]);
        const int span = n == 3 ? 27 : 9;
        for (int code = 0; code < span; ++code) {
            CellKey k = base;
            int c = code;
            for (int d = 0; d < n; ++d) {
                k.k[d] += c % 3 - 1;
                c /= 3;
            }
            const auto it = cells.find(k);
            if (it == cells.end()) continue;
            for (std::size_t j : it->second) {
                if (j <= i) continue;
                Vector diff(n);
                for (int d = 0; d < n; ++d) diff[d] = pts[i][d] - pts[j][d];
                if (norm2(diff) < radius)
                    throw DomainError("rotate_graph: rotated samples " + format_point(pts[i]) + " and " +
                                      format_point(pts[j]) +
                                      " collide; the distance-expansion hypothesis fails");
            }
        }
    }
}

}  // namespace

RotationResult rotate_graph(const GridField& u, const RotationParams& params) {
    const int n = u.n_dims();
    const double c = params.c, s = params.s;
    RotationResult out;

    const std::vector<GraphSample> base = graph_samples(u);
    std::vector<Vector> xbar(base.size());
    int orientation = 0;
    for (std::size_t k = 0; k < base.size(); ++k) {
        const GraphSample& g = base[k];
        const Spectrum sp = eig_sym(*g.hessian);
        Vector rotated(n);
        int sign = 1;
        for (int i = 0; i < n; ++i) {
            const double phi = std::atan(sp.eigenvalues[i]) - params.beta;
            if (std::abs(std::cos(phi)) <= kPoleTol)
                throw PoleError("rotate_graph: pole at x = " + format_point(g.x) +
                                ": theta_" + std::to_string(i + 1) + " - beta = " + std::to_string(phi));
            if (std::cos(phi) < 0.0) sign = -sign;
            rotated[i] = std::tan(phi);
        }
        if (orientation == 0) orientation = sign;
        if (sign != orientation)
            throw DomainError("rotate_graph: the map x -> cx + sDu folds near x = " + format_point(g.x) +
                              "; the distance-expansion hypothesis fails");
        Vector xb(n), yb(n);
        for (int d = 0; d < n; ++d) {
            xb[d] = c * g.x[d] + s * g.y[d];
            yb[d] = -s * g.x[d] + c * g.y[d];
        }
        xbar[k] = xb;
        out.samples.push_back({xb, yb, SymMatrix::from_spectrum(sp.eigenvectors, rotated)});
    }
    require_separated(xbar, 0.5 * u.spacing());

    // Box inscribed in the image of the depth-1 shell, shrunk by 2%.
    Vector lo(n), hi(n);
    for (int d = 0; d < n; ++d) {
        const auto last = static_cast<std::ptrdiff_t>(u.shape()[d]) - 2;
        double lo_max = -1e300, lo_min = 1e300, hi_max = -1e300, hi_min = 1e300, lo_sum = 0, hi_sum = 0;
        std::size_t cnt = 0, cnt_hi = 0;
        for (std::size_t k = 0; k < base.size(); ++k) {
            const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(
                std::llround((base[k].x[d] - u.origin()[d]) / u.spacing()));
            const double v = xbar[k][d];
            if (idx == 1) {
                lo_max = std::max(lo_max, v);
                lo_min = std::min(lo_min, v);
                lo_sum += v;
                ++cnt;
            } else if (idx == last) {
                hi_max = std::max(hi_max, v);
                hi_min = std::min(hi_min, v);
                hi_sum += v;
                ++cnt_hi;
            }
        }
        const bool increasing = hi_sum / cnt_hi > lo_sum / cnt;
        lo[d] = increasing ? lo_max : hi_max;
        hi[d] = increasing ? hi_min : lo_min;
        if (!(hi[d] > lo[d]))
            throw DomainError("rotate_graph: rotated image contains no box along axis " + std::to_string(d));
        const double shrink = 0.01 * (hi[d] - lo[d]);
        lo[d] += shrink;
        hi[d] -= shrink;
    }
    double hbar = std::numeric_limits<double>::infinity();
    for (int d = 0; d < n; ++d) hbar = std::min(hbar, (hi[d] - lo[d]) / static_cast<double>(u.shape()[d] - 1));
    std::vector<std::size_t> shape(n);
    Vector origin(n);
    for (int d = 0; d < n; ++d) {
        shape[d] = static_cast<std::size_t>(std::floor((hi[d] - lo[d]) / hbar + 1e-9)) + 1;
        origin[d] = 0.5 * (lo[d] + hi[d]) - 0.5 * hbar * static_cast<double>(shape[d] - 1);
    }
    GridField target(shape, origin, hbar);

    const VectorField grad = gradient_field(u);
    const std::vector<GridField> hess = hessian_fields(u);
    const Interpolant ip{grad, hess, n};

    // Linear seed from the centre: x ≈ x_c + (cI + sH_c)⁻¹(x̄ − x̄_c).
    const Node uc = u.center();
    const Vector xc = u.coords(uc);
    Vector xbc(n);
    {
        const Vector g = ip.gradient(xc);
        for (int d = 0; d < n; ++d) xbc[d] = c * xc[d] + s * g[d];
    }
    Matrix jc = ip.hessian(xc);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) jc(a, b) = s * jc(a, b) + (a == b ? c : 0.0);

    VectorField dubar(n, target);
    Vector resid(target.size(), 0.0);
    const double accept = 1e-9 * (1.0 + hbar);
    parallel_for(target.size(), [&](std::size_t f) {
        const Vector tx = target.coords(f);
        Vector rhs(n);
        for (int d = 0; d < n; ++d) rhs[d] = tx[d] - xbc[d];
        Vector x = xc;
        try {
            const Vector dx = solve(jc, rhs, 1e-13);
            for (int d = 0; d < n; ++d) x[d] += dx[d];
        } catch (const DomainError&) {
        }
        double r = invert_rotation(ip, params, tx, x);
        if (r > accept) {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < xbar.size(); ++k) {
                double dd = 0.0;
                for (int d = 0; d < n; ++d) dd += (xbar[k][d] - tx[d]) * (xbar[k][d] - tx[d]);
                if (dd < bd) {
                    bd = dd;
                    best = k;
                }
            }
            Vector x2 = base[best].x;
            const double r2 = invert_rotation(ip, params, tx, x2);
            if (r2 < r) {
                r = r2;
                x = std::move(x2);
            }
        }
        resid[f] = r;
        const Vector g = ip.gradient(x);
        for (int d = 0; d < n; ++d) dubar[d].set(f, -s * x[d] + c * g[d]);
    });
    out.inversion_residual = *std::max_element(resid.begin(), resid.end());
    if (out.inversion_residual > 1e-6 * (1.0 + hbar))
        throw DomainError("rotate_graph: could not invert x -> cx + sDu on the target box (residual " +
                          std::to_string(out.inversion_residual) + ")");

    // Cumulative trapezoid integrals C_d along each axis from index 0.
    std::vector<Vector> cum(n, Vector(target.size(), 0.0));
    for (int d = 0; d < n; ++d) {
        const std::size_t st = target.stride(d);
        for (std::size_t f = 0; f < target.size(); ++f) {
            const Node nd = target.node(f);
            if (nd[d] == 0) continue;
            cum[d][f] = cum[d][f - st] + 0.5 * hbar * (dubar[d][f] + dubar[d][f - st]);
        }
    }
    const Node tc = target.center();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Vector> paths;
    do {
        Vector phi(target.size(), 0.0);
        for (std::size_t f = 0; f < target.size(); ++f) {
            const Node nd = target.node(f);
            Node q = tc;
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                const int d = perm[k];
                Node from = q, to = q;
                to[d] = nd[d];
                acc += cum[d][target.flat(to)] - cum[d][target.flat(from)];
                q = to;
            }
            phi[f] = acc;
        }
        paths.push_back(std::move(phi));
    } while (std::next_permutation(perm.begin(), perm.end()));

    Vector avg(target.size(), 0.0);
    for (const Vector& p : paths)
        for (std::size_t f = 0; f < avg.size(); ++f) avg[f] += p[f] / static_cast<double>(paths.size());
    for (const Vector& p : paths)
        for (std::size_t f = 0; f < avg.size(); ++f)
            out.curl_residual = std::max(out.curl_residual, std::abs(p[f] - avg[f]));
    target.set_values(std::move(avg));
    out.u_bar = std::move(target);
    return out;
}

double distance_expansion_bound(const RotationParams& params, double gamma) {
    if (!(std::abs(gamma) < kPi / 2.0)) throw DomainError("distance_expansion_bound: |gamma| must be < pi/2");
    return params.c + params.s * std::tan(gamma);
}

double distance_expansion_check(const std::vector<GraphSample>& samples, const RotationParams& params,
                                double gamma, std::size_t max_pairs, std::uint64_t seed) {
    (void)gamma;
    const std::size_t count = samples.size();
    if (count < 2) throw ArgumentError("distance_expansion_check: need at least two samples");
    const std::size_t n = samples.front().x.size();
    std::vector<Vector> xb(count, Vector(n));
    for (std::size_t k = 0; k < count; ++k)
        for (std::size_t d = 0; d < n; ++d) xb[k][d] = params.c * samples[k].x[d] + params.s * samples[k].y[d];

    auto ratio = [&](std::size_t i, std::size_t j) {
        double num = 0.0, den = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            const double a = xb[j][d] - xb[i][d];
            const double b = samples[j].x[d] - samples[i].x[d];
            num += a * a;
            den += b * b;
        }
        return den > 0.0 ? std::sqrt(num / den) : std::numeric_limits<double>::infinity();
    };

    const double all_pairs = 0.5 * static_cast<double>(count) * static_cast<double>(count - 1);
    if (all_pairs <= static_cast<double>(max_pairs)) {
        Vector best(count, std::numeric_limits<double>::infinity());
        parallel_for(count, [&](std::size_t i) {
            for (std::size_t j = i + 1; j < count; ++j) best[i] = std::min(best[i], ratio(i, j));
        });
        return *std::min_element(best.begin(), best.end());
    }
    Rng rng(seed);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < max_pairs; ++k) {
        const std::size_t i = rng.next() % count;
        std::size_t j = rng.next() % (count - 1);
        if (j >= i) ++j;
        best = std::min(best, ratio(i, j));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Legendre transforms

namespace {

/// Dense n-d array with explicit per-axis coordinates, used between the
/// stages of the factorized conjugate.
struct Stage {
    std::vector<std::size_t> shape;
    std::vector<Vector> coords;
    Vector values;

    std::size_t stride(std::size_t d) const {
        std::size_t s = 1;
        for (std::size_t e = d + 1; e < shape.size(); ++e) s *= shape[e];
        return s;
    }
};

/// max_j x_j y + f_j with parabolic refinement around the best node.
double line_conjugate(const Vector& x, const Vector& f, double y) {
    std::size_t best = 0;
    double bv = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double v = x[j] * y + f[j];
        if (v > bv) {
            bv = v;
            best = j;
        }
    }
    if (best == 0 || best + 1 == x.size()) return bv;
    const double pm = x[best - 1] * y + f[best - 1];
    const double pp = x[best + 1] * y + f[best + 1];
    const double curv = pm - 2.0 * bv + pp;
    if (!(curv < 0.0)) return bv;
    const double t = 0.5 * (pm - pp) / curv;
    if (std::abs(t) > 1.0) return bv;
    return std::max(bv, bv - 0.25 * (pm - pp) * t);
}

Stage conjugate_axis(const Stage& in, std::size_t axis, const Vector& ycoords) {
    Stage out = in;
    out.shape[axis] = ycoords.size();
    out.coords[axis] = ycoords;
    std::size_t total = 1;
    for (std::size_t s : out.shape) total *= s;
    out.values.assign(total, 0.0);

    const std::size_t nx = in.shape[axis];
    const std::size_t sin = in.stride(axis), sout = out.stride(axis);
    // Enumerate lines by the multi-index with the axis coordinate set to 0.
    std::vector<std::size_t> line_in, line_out;
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t rem = f, fin = 0;
        bool on_axis_zero = true;
        for (std::size_t d = 0; d < out.shape.size(); ++d) {
            const std::size_t so = out.stride(d);
            const std::size_t idx = rem / so;
            rem %= so;
            if (d == axis && idx != 0) on_axis_zero = false;
            fin += (d == axis ? 0 : idx) * in.stride(d);
        }
        if (!on_axis_zero) continue;
        line_out.push_back(f);
        line_in.push_back(fin);
    }
    parallel_for(line_in.size(), [&](std::size_t L) {
        Vector fx(nx);
        for (std::size_t j = 0; j < nx; ++j) fx[j] = in.values[line_in[L] + j * sin];
        for (std::size_t i = 0; i < ycoords.size(); ++i)
            out.values[line_out[L] + i * sout] = line_conjugate(in.coords[axis], fx, ycoords[i]);
    });
    return out;
}

Vector axis_coords(double origin, double h, std::size_t count) {
    Vector c(count);
    for (std::size_t i = 0; i < count; ++i) c[i] = origin + h * static_cast<double>(i);
    return c;
}

void require_convex(const GridField& u, double slack) {
    double worst = std::numeric_limits<double>::infinity();
    std::size_t where = 0;
    for (std::size_t f = 0; f < u.size(); ++f) {
        if (u.depth(f) < 1) continue;
        const double lo = eig_sym(fd_hessian(u, f)).min();
        if (lo < worst) {
            worst = lo;
            where = f;
        }
    }
    if (worst < slack)
        throw DomainError("legendre_transform: input is not convex: lambda_min = " + std::to_string(worst) +
                          " at x = " + format_point(u.coords(where)));
}

}  // namespace

GridField legendre_transform(const GridField& u) {
    require_convex(u, -1e-9);
    const int n = u.n_dims();
    const VectorField g = gradient_field(u);
    Vector centre(n), half(n);
    double h = 0.0;
    for (int d = 0; d < n; ++d) {
        const auto [lo, hi] = std::minmax_element(g[d].values().begin(), g[d].values().end());
        centre[d] = 0.5 * (*lo + *hi);
        half[d] = 0.5 * 1.05 * (*hi - *lo);
        h = std::max(h, 2.0 * half[d] / static_cast<double>(u.shape()[d] - 1));
    }
    if (!(h > 0.0)) throw DomainError("legendre_transform: gradient range is degenerate (u is affine)");
    std::vector<std::size_t> shape(n);
    Vector origin(n);
    for (int d = 0; d < n; ++d) {
        const auto need = static_cast<std::size_t>(std::ceil(2.0 * half[d] / h - 1e-9)) + 1;
        shape[d] = std::clamp(need, GridField::kMinNodes, std::max(GridField::kMinNodes, u.shape()[d]));
        origin[d] = centre[d] - 0.5 * h * static_cast<double>(shape[d] - 1);
    }

    Stage st;
    st.shape = u.shape();
    for (int d = 0; d < n; ++d) st.coords.push_back(axis_coords(u.origin()[d], u.spacing(), u.shape()[d]));
    st.values.resize(u.size());
    for (std::size_t f = 0; f < u.size(); ++f) st.values[f] = -u[f];
    for (int d = 0; d < n; ++d) st = conjugate_axis(st, d, axis_coords(origin[d], h, shape[d]));
    return GridField(shape, origin, h, std::move(st.values));
}

Vector mu_from_lambda(std::span<const double> lambda, double m) {
    Vector mu(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        const double shifted = lambda[i] + m;
        if (!(shifted > 0.0))
            throw DomainError("mu_from_lambda: lambda_" + std::to_string(i + 1) + " + m = " +
                              std::to_string(shifted) + " is not positive");
        mu[i] = 1.0 / shifted;
    }
    return mu;
}

LewyTransformResult legendre_lewy_transform(const GridField& u, int n) {
    if (n != u.n_dims()) throw ArgumentError("legendre_lewy_transform: n must equal the grid dimension");
    const double m = lewy_shift(n);
    LewyTransformResult res;
    res.m = m;
    res.mu_range = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t f = 0; f < u.size(); ++f) {
        if (u.depth(f) < 1) continue;
        const Vector lam = eigenvalues(fd_hessian(u, f));
        if (!(lam.front() + m > 1e-9))
            throw DomainError("legendre_lewy_transform: lambda_min = " + std::to_string(lam.front()) +
                              " <= -m = " + std::to_string(-m) + " at x = " + format_point(u.coords(f)) +
                              "; the Legendre-Lewy transform is not valid there");
        for (double mu : mu_from_lambda(lam, m)) {
            res.mu_range.first = std::min(res.mu_range.first, mu);
            res.mu_range.second = std::max(res.mu_range.second, mu);
        }
    }

    Vector shifted(u.values().begin(), u.values().end());
    for (std::size_t f = 0; f < u.size(); ++f) {
        const Vector x = u.coords(f);
        shifted[f] += 0.5 * m * dot(x, x);
    }
    const GridField vu(u.shape(), u.origin(), u.spacing(), std::move(shifted));
    res.w_field = legendre_transform(vu);
    const GridField& w = res.w_field;

    // μ contract at sampled y = Dv(x), using D²w interpolated from nodes at depth ≥ 1.
    const Vector wlo = w.origin(), whi = w.extent();
    const double margin = 2.0 * w.spacing();
    for (std::size_t f = 0; f < vu.size(); ++f) {
        if (vu.depth(f) < 3) continue;
        const Node nd = vu.node(f);
        const Vector y = fd_gradient(vu, nd);
        bool ok = true;
        for (int d = 0; d < n; ++d) ok = ok && y[d] >= wlo[d] + margin && y[d] <= whi[d] - margin;
        if (!ok) continue;
        SymMatrix hw(n);
        std::array<std::size_t, 3> base{};
        std::array<double, 3> frac{};
        for (int d = 0; d < n; ++d) {
            const double t = (y[d] - wlo[d]) / w.spacing();
            base[d] = static_cast<std::size_t>(std::floor(t));
            frac[d] = t - std::floor(t);
        }
        for (int corner = 0; corner < (1 << n); ++corner) {
            double wt = 1.0;
            Node q{0, 0, 0};
            for (int d = 0; d < n; ++d) {
                const int bit = (corner >> d) & 1;
                wt *= bit ? frac[d] : 1.0 - frac[d];
                q[d] = static_cast<std::ptrdiff_t>(base[d] + bit);
            }
            if (wt == 0.0) continue;
            hw += wt * fd_hessian(w, q);
        }
        Vector mu = mu_from_lambda(eigenvalues(fd_hessian(u, f)), m);
        std::sort(mu.begin(), mu.end());
        const Vector got = eigenvalues(hw);
        for (int i = 0; i < n; ++i) res.mu_contract_error = std::max(res.mu_contract_error, std::abs(got[i] - mu[i]));
        ++res.mu_samples;
    }
    return res;
}

}  // namespace slaglab
