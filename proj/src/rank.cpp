#include "slaglab/rank.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "slaglab/errors.hpp"
#include "slaglab/parallel.hpp"
#include "slaglab/random.hpp"
#include "slaglab/spectral.hpp"

namespace slaglab {
namespace {

GridField interior_grid(const GridField& u) {
    std::vector<std::size_t> shape = u.shape();
    for (auto& s : shape) {
        if (s < GridField::kMinNodes + 2)
            throw ArgumentError("eigen fields need at least 7 nodes per axis");
        s -= 2;
    }
    Vector origin = u.origin();
    for (auto& o : origin) o += u.spacing();
    return GridField(std::move(shape), std::move(origin), u.spacing());
}

Node to_parent(Node sub, int n) {
    for (int d = 0; d < n; ++d) ++sub[d];
    return sub;
}

std::vector<Node> neighbour_offsets(int n) {
    std::vector<Node> out;
    const int total = n == 2 ? 9 : 27;
    for (int k = 0; k < total; ++k) {
        Node o{};
        int r = k;
        bool zero = true;
        for (int d = n - 1; d >= 0; --d) {
            o[d] = r % 3 - 1;
            r /= 3;
            zero = zero && o[d] == 0;
        }
        if (!zero) out.push_back(o);
    }
    return out;
}

Node add(Node a, const Node& b) {
    for (std::size_t d = 0; d < a.size(); ++d) a[d] += b[d];
    return a;
}

// Per-node Hessians of u on the interior sub-grid.
std::vector<SymMatrix> hessians(const GridField& u, const GridField& sub) {
    std::vector<SymMatrix> h(sub.size());
    const int n = u.n_dims();
    parallel_for(sub.size(), [&](std::size_t k) { h[k] = fd_hessian(u, to_parent(sub.node(k), n)); });
    return h;
}

double phase_margin(double lambda_min, const PhaseSpec& spec) {
    return std::atan(lambda_min) - spec.lower_threshold;
}

}  // namespace

EigenFields eigen_fields(const GridField& u) {
    const GridField sub = interior_grid(u);
    const int n = u.n_dims();
    const auto nn = static_cast<std::size_t>(n);
    const auto h = hessians(u, sub);

    std::vector<Spectrum> spec(sub.size());
    parallel_for(sub.size(), [&](std::size_t k) { spec[k] = eig_sym(h[k]); });

    EigenFields out;
    out.values.assign(nn, sub);
    out.vectors.assign(nn, VectorField(nn, sub));
    std::vector<Vector> vals(nn, Vector(sub.size()));
    std::vector<std::vector<Vector>> vecs(nn, std::vector<Vector>(nn, Vector(sub.size())));

    // Breadth-first sign alignment: each node's eigenvectors are flipped to
    // agree with the node that discovered it.
    std::vector<char> seen(sub.size(), 0);
    std::deque<std::size_t> queue;
    const std::size_t root = sub.flat(sub.center());
    seen[root] = 1;
    queue.push_back(root);
    std::vector<std::size_t> parent(sub.size(), root);
    while (!queue.empty()) {
        const std::size_t k = queue.front();
        queue.pop_front();
        Matrix& q = spec[k].eigenvectors;
        if (k != root) {
            const Matrix& p = spec[parent[k]].eigenvectors;
            for (std::size_t c = 0; c < nn; ++c) {
                double d = 0.0;
                for (std::size_t r = 0; r < nn; ++r) d += q(r, c) * p(r, c);
                if (d < 0.0)
                    for (std::size_t r = 0; r < nn; ++r) q(r, c) = -q(r, c);
            }
        }
        const Node node = sub.node(k);
        for (std::size_t a = 0; a < static_cast<std::size_t>(n); ++a) {
            Node nb = node;
            for (int step : {-1, 1}) {
                nb[a] = node[a] + step;
                if (!sub.contains(nb)) continue;
                const std::size_t j = sub.flat(nb);
                if (seen[j]) continue;
                seen[j] = 1;
                parent[j] = k;
                queue.push_back(j);
            }
        }
    }

    for (std::size_t k = 0; k < sub.size(); ++k)
        for (std::size_t i = 0; i < nn; ++i) {
            vals[i][k] = spec[k].eigenvalues[i];
            for (std::size_t d = 0; d < nn; ++d) vecs[i][d][k] = spec[k].eigenvectors(d, i);
        }
    for (std::size_t i = 0; i < nn; ++i) {
        out.values[i].set_values(std::move(vals[i]));
        for (std::size_t d = 0; d < nn; ++d) out.vectors[i][d].set_values(std::move(vecs[i][d]));
    }
    return out;
}

std::string to_string(MinVerdict v) {
    switch (v) {
        case MinVerdict::constant: return "constant";
        case MinVerdict::boundary_min: return "boundary_min";
        case MinVerdict::interior_min: return "interior_min";
        case MinVerdict::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

MinPrincipleReport min_principle_check(const GridField& field, double tol) {
    MinPrincipleReport r;
    const auto v = field.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double scale = 1.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    r.tol = tol >= 0.0 ? tol : 1e-6 * scale;
    r.min_value = *lo;
    r.spread = *hi - *lo;
    if (r.spread < r.tol) {
        r.verdict = MinVerdict::constant;
        return r;
    }
    const auto offsets = neighbour_offsets(field.n_dims());
    for (std::size_t k = 0; k < field.size(); ++k) {
        const Node node = field.node(k);
        if (field.depth(node) < 1) continue;
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& o : offsets) lowest = std::min(lowest, field.at(add(node, o)));
        if (field[k] < lowest - r.tol)
            r.interior_min_sites.push_back(node);
        else if (field[k] <= lowest)
            ++r.plateau_sites;
    }
    if (!r.interior_min_sites.empty())
        r.verdict = MinVerdict::interior_min;
    else if (r.plateau_sites > 0)
        r.verdict = MinVerdict::indeterminate;
    else
        r.verdict = MinVerdict::boundary_min;
    return r;
}

RankReport rank_report(const GridField& u, double a, const PhaseSpec& spec, double tol_rank) {
    if (!(tol_rank >= 0.0)) throw ArgumentError("rank_report: tol_rank must be non-negative");
    const GridField sub = interior_grid(u);
    const int n = u.n_dims();
    const auto h = hessians(u, sub);

    Vector rank(sub.size()), lmin(sub.size()), lmax(sub.size());
    std::vector<double> norms(sub.size());
    parallel_for(sub.size(), [&](std::size_t k) {
        const Vector ev = eigenvalues(h[k]);
        norms[k] = frobenius_norm(h[k]);
        const double cut = tol_rank * std::max(1.0, norms[k]);
        rank[k] = static_cast<double>(std::count_if(ev.begin(), ev.end(), [&](double l) { return l - a > cut; }));
        lmin[k] = ev.front();
        lmax[k] = ev.back();
    });

    RankReport r;
    r.shift = a;
    r.tol_rank = tol_rank;
    const auto [rlo, rhi] = std::minmax_element(rank.begin(), rank.end());
    r.min_rank = static_cast<int>(*rlo);
    r.max_rank = static_cast<int>(*rhi);
    r.threshold_margin = phase_margin(*std::min_element(lmin.begin(), lmin.end()), spec);
    r.rank = GridField(sub.shape(), sub.origin(), sub.spacing(), std::move(rank));
    r.lambda_min_field = GridField(sub.shape(), sub.origin(), sub.spacing(), std::move(lmin));
    r.lambda_max_field = GridField(sub.shape(), sub.origin(), sub.spacing(), std::move(lmax));

    const double scale = *std::max_element(norms.begin(), norms.end());
    const auto mp = min_principle_check(r.lambda_min_field, tol_rank * std::max(1.0, scale));
    for (const auto& s : mp.interior_min_sites) r.interior_min_sites.push_back(to_parent(s, n));
    return r;
}

std::string to_string(SplitVerdict v) {
    switch (v) {
        case SplitVerdict::split: return "split";
        case SplitVerdict::no_split: return "no_split";
        case SplitVerdict::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

SplitReport splitting_detector(const GridField& u, const PhaseSpec& spec, const SplitTolerances& tols) {
    if (u.n_dims() != spec.n) throw ArgumentError("splitting_detector: field dimension differs from spec.n");
    const EigenFields ef = eigen_fields(u);
    const GridField& sub = ef.lambda_min();
    const auto nn = static_cast<std::size_t>(u.n_dims());

    SplitReport r;
    const auto lm = sub.values();
    const auto [lo, hi] = std::minmax_element(lm.begin(), lm.end());
    r.eigenvalue_spread = *hi - *lo;
    double sum = 0.0;
    for (double x : lm) sum += x;
    r.u_ee = sum / static_cast<double>(lm.size());
    r.threshold_margin = phase_margin(*lo, spec);

    r.direction.assign(nn, 0.0);
    for (std::size_t d = 0; d < nn; ++d)
        for (double x : ef.vectors[0][d].values()) r.direction[d] += x;
    const double len = norm2(r.direction);
    if (len > 0.0)
        for (auto& x : r.direction) x /= len;
    else
        r.direction[0] = 1.0;

    // Angle to the λ_min eigenspace, which may be more than one-dimensional.
    const auto h = hessians(u, interior_grid(u));
    std::vector<double> angle(sub.size());
    parallel_for(sub.size(), [&](std::size_t k) {
        const Spectrum s = eig_sym(h[k], 1e-6);
        const EigenBlock b = eigen_block(s, 0);
        double proj = 0.0;
        for (std::size_t c = 0; c < b.basis.cols(); ++c) {
            double d = 0.0;
            for (std::size_t i = 0; i < nn; ++i) d += b.basis(i, c) * r.direction[i];
            proj += d * d;
        }
        angle[k] = std::acos(std::clamp(std::sqrt(proj), 0.0, 1.0));
    });
    r.direction_spread = *std::max_element(angle.begin(), angle.end());

    if (r.eigenvalue_spread > 10.0 * tols.eigenvalue || r.direction_spread > 10.0 * tols.direction)
        r.verdict = SplitVerdict::no_split;
    else if (r.eigenvalue_spread < tols.eigenvalue && r.direction_spread < tols.direction && r.threshold_margin > 0.0)
        r.verdict = SplitVerdict::split;
    else
        r.verdict = SplitVerdict::indeterminate;
    return r;
}

std::string to_string(Hom2Verdict v) {
    switch (v) {
        case Hom2Verdict::quadratic: return "quadratic";
        case Hom2Verdict::violation: return "violation";
        case Hom2Verdict::not_asserted: return "not_asserted";
        case Hom2Verdict::abstain: return "abstain";
    }
    return "abstain";
}

Hom2Audit hom2_audit(const SphereFunction& g, const PhaseSpec& spec, const Hom2Options& opts) {
    const int n = g.dim();
    if (n != spec.n) throw ArgumentError("hom2_audit: sphere dimension differs from spec.n");
    std::vector<Vector> points;
    if (n == 3) {
        points = icosphere_vertices(opts.subdivisions);
    } else {
        if (opts.samples < 1) throw ArgumentError("hom2_audit: samples must be positive");
        Rng rng(opts.seed);
        while (points.size() < static_cast<std::size_t>(opts.samples)) {
            Vector p(static_cast<std::size_t>(n));
            for (auto& x : p) x = rng.normal();
            const double r = norm2(p);
            if (r < 1e-12) continue;
            for (auto& x : p) x /= r;
            points.push_back(std::move(p));
        }
    }

    std::vector<SymMatrix> hs(points.size());
    std::vector<Vector> evs(points.size());
    parallel_for(points.size(), [&](std::size_t k) {
        hs[k] = homogeneous2_extension(g, points[k]).hessian;
        evs[k] = eigenvalues(hs[k]);
    });

    Hom2Audit a;
    a.samples = points.size();
    a.min_lambda_min = std::numeric_limits<double>::infinity();
    for (const auto& ev : evs) {
        a.equation_residual = std::max(a.equation_residual, std::abs(slag_phase(ev) - spec.theta));
        a.min_lambda_min = std::min(a.min_lambda_min, ev.front());
    }
    a.min_arctan_lambda_min = std::atan(a.min_lambda_min);
    a.margin = a.min_arctan_lambda_min - spec.lower_threshold;
    a.tan_pi5_applies = n == 5 && spec.theta == 0.0;
    a.below_minus_tan_pi5 = a.min_lambda_min <= -std::tan(std::numbers::pi / 5.0);

    const auto nn = static_cast<std::size_t>(n);
    SymMatrix q(nn);
    for (const auto& h : hs) q = q + h;
    q = (1.0 / static_cast<double>(hs.size())) * q;
    for (const auto& h : hs) a.quadratic_deviation = std::max(a.quadratic_deviation, frobenius_norm(h - q));

    if (a.equation_residual > opts.equation_tol)
        a.verdict = Hom2Verdict::abstain;
    else if (a.margin <= 0.0)
        a.verdict = Hom2Verdict::not_asserted;
    else if (a.quadratic_deviation <= opts.quadratic_tol)
        a.verdict = Hom2Verdict::quadratic;
    else
        a.verdict = Hom2Verdict::violation;
    return a;
}

}  // namespace slaglab
