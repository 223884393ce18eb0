#include "slaglab/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "slaglab/errors.hpp"
#include "slaglab/parallel.hpp"
#include "slaglab/spectral.hpp"

namespace slaglab {
namespace {

// The operator written as a spectral function Φ of A = D²u + shift·I whose
// composition with the matrix inverse is convex on positive matrices.
struct Form {
    OperatorKind kind = OperatorKind::slag_phase;
    bool lewy = false;
    double shift = 0.0;
    bool needs_positive = true;  // inverse-convex regime is λ > 0
    bool positive_domain = false;  // Φ itself is only defined for λ > 0

    double value(std::span<const double> l) const {
        switch (kind) {
            case OperatorKind::slag_phase: return slag_phase(l);
            case OperatorKind::lambda_ratio: return lambda_ratio(l);
            case OperatorKind::sigma2_positive_branch:
                if (!lewy) return sigma_k(l, 2);
                Vector mu(l.size());
                for (std::size_t i = 0; i < l.size(); ++i) {
                    if (!(l[i] > 0.0)) throw DomainError("σ₂ surrogate needs λ > −m");
                    mu[i] = 1.0 / l[i];
                }
                return -lambda_ratio(mu);
        }
        return 0.0;
    }

    Vector gradient(std::span<const double> l) const {
        Vector g(l.size());
        switch (kind) {
            case OperatorKind::slag_phase:
                for (std::size_t i = 0; i < l.size(); ++i) g[i] = 1.0 / (1.0 + l[i] * l[i]);
                break;
            case OperatorKind::lambda_ratio: g = lambda_ratio_gradient(l); break;
            case OperatorKind::sigma2_positive_branch:
                if (!lewy) {
                    double s1 = 0.0;
                    for (double x : l) s1 += x;
                    for (std::size_t i = 0; i < l.size(); ++i) g[i] = s1 - l[i];
                } else {
                    Vector mu(l.size());
                    for (std::size_t i = 0; i < l.size(); ++i) mu[i] = 1.0 / l[i];
                    const Vector d = lambda_ratio_gradient(mu);
                    for (std::size_t i = 0; i < l.size(); ++i) g[i] = d[i] * mu[i] * mu[i];
                }
                break;
        }
        return g;
    }

    double value(const SymMatrix& a) const { return value(eigenvalues(a)); }
};

Form make_form(const OperatorModel& op, bool lewy_default, const std::optional<Sigma2Form>& choice) {
    Form f;
    f.kind = op.kind;
    f.positive_domain = op.kind == OperatorKind::lambda_ratio;
    if (op.kind == OperatorKind::sigma2_positive_branch) {
        f.lewy = choice ? *choice == Sigma2Form::lewy : lewy_default;
        f.shift = f.lewy ? lewy_shift(op.n) : 0.0;
        f.needs_positive = f.lewy;
        f.positive_domain = f.lewy;
    }
    return f;
}

double second_difference(const Form& f, const SymMatrix& a, const SymMatrix& x, double t) {
    return (f.value(a + t * x) - 2.0 * f.value(a) + f.value(a - t * x)) / (t * t);
}

// D²Φ(A)[X, X] by Richardson-extrapolated central differences.
double quadratic_form(const Form& f, const SymMatrix& a, std::span<const double> lt, const SymMatrix& x) {
    const double xn = frobenius_norm(x);
    if (xn == 0.0) return 0.0;
    double big = 1.0;
    for (double l : lt) big = std::max(big, std::abs(l));
    double eps = 1e-2 * big;
    if (f.positive_domain) eps = std::min(eps, 0.25 * lt.front());
    if (f.kind == OperatorKind::sigma2_positive_branch && !f.lewy) eps = 1.0;
    const SymMatrix xh = (1.0 / xn) * x;
    const double d1 = second_difference(f, a, xh, eps);
    const double d2 = second_difference(f, a, xh, 0.5 * eps);
    return (4.0 * d2 - d1) / 3.0 * xn * xn;
}

SymMatrix zero_leading(SymMatrix x, std::size_t k) {
    const std::size_t n = x.dim();
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) x.set(i, j, 0.0);
    return x;
}

// Terms of −D²Φ[X, X] with at least one index below k.
double drift_terms(const Form& f, const SymMatrix& a, std::span<const double> lt, const SymMatrix& x, std::size_t k) {
    return -quadratic_form(f, a, lt, x) + quadratic_form(f, a, lt, zero_leading(x, k));
}

GridField sub_grid(const GridField& u) {
    std::vector<std::size_t> shape = u.shape();
    for (auto& s : shape) {
        if (s < GridField::kMinNodes + 2) throw ArgumentError("viscosity checks need at least 7 nodes per axis");
        s -= 2;
    }
    Vector origin = u.origin();
    for (auto& o : origin) o += u.spacing();
    return GridField(std::move(shape), std::move(origin), u.spacing());
}

// Hessian components, sorted eigenvalues and prefix sums Σ_{m<k} λ_m of
// D²u + shift·I on the interior sub-grid.
struct Fields {
    GridField grid;
    std::vector<GridField> hess;     // n(n+1)/2 components, row-major upper triangle
    std::vector<GridField> prefix;   // prefix[k] = Σ_{m<k} λ_m, k = 0..n
    double hess_scale = 0.0;
};

std::size_t tri(std::size_t i, std::size_t j, std::size_t n) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i + 1) / 2 + j;
}

Fields build_fields(const GridField& u, double shift) {
    Fields fl;
    fl.grid = sub_grid(u);
    const auto n = static_cast<std::size_t>(u.n_dims());
    const std::size_t sz = fl.grid.size();
    std::vector<Vector> hv(n * (n + 1) / 2, Vector(sz));
    std::vector<Vector> pv(n + 1, Vector(sz, 0.0));
    std::vector<double> norms(sz);
    parallel_for(sz, [&](std::size_t k) {
        Node p = fl.grid.node(k);
        for (std::size_t d = 0; d < n; ++d) ++p[d];
        const SymMatrix h = fd_hessian(u, p);
        norms[k] = frobenius_norm(h);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) hv[tri(i, j, n)][k] = h(i, j);
        const Vector ev = eigenvalues(h);
        for (std::size_t m = 0; m < n; ++m) pv[m + 1][k] = pv[m][k] + ev[m] + shift;
    });
    for (auto& v : hv) fl.hess.emplace_back(fl.grid.shape(), fl.grid.origin(), fl.grid.spacing(), std::move(v));
    for (auto& v : pv) fl.prefix.emplace_back(fl.grid.shape(), fl.grid.origin(), fl.grid.spacing(), std::move(v));
    fl.hess_scale = *std::max_element(norms.begin(), norms.end());
    return fl;
}

// Eigen-frame data at one site of the sub-grid.
struct Site {
    SymMatrix a;    // diag(λ̃)
    Vector lt;      // λ̃ sorted
    Matrix q;
    Vector f;       // F_ii
    std::vector<SymMatrix> x;  // x[m](i, j) = u_ijm in the eigenframe
    double routing_tol = 0.0;
};

Site make_site(const Fields& fl, const Form& form, const Node& node) {
    const auto n = static_cast<std::size_t>(fl.grid.n_dims());
    SymMatrix h(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) h.set(i, j, fl.hess[tri(i, j, n)].at(node));
    Site s;
    s.routing_tol = kRoutingTol * std::max(1.0, frobenius_norm(h));
    for (std::size_t i = 0; i < n; ++i) h.set(i, i, h(i, i) + form.shift);
    const Spectrum sp = eig_sym(h);
    s.lt = sp.eigenvalues;
    s.q = sp.eigenvectors;
    s.a = SymMatrix::diagonal(s.lt);

    std::vector<Vector> grad(fl.hess.size());
    for (std::size_t c = 0; c < fl.hess.size(); ++c) grad[c] = fd_gradient(fl.hess[c], node);
    // T'_{ijm} = Σ Q_ai Q_bj Q_cm ∂_c u_ab
    std::vector<double> t(n * n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) {
                const double v = grad[tri(a, b, n)][c];
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        for (std::size_t m = 0; m < n; ++m)
                            t[(i * n + j) * n + m] += s.q(a, i) * s.q(b, j) * s.q(c, m) * v;
            }
    s.x.assign(n, SymMatrix(n));
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) s.x[m].set(i, j, t[(i * n + j) * n + m]);
    return s;
}

std::size_t block_end(const Vector& lt, std::size_t first, double tol) {
    std::size_t e = first + 1;
    while (e < lt.size() && lt[e] - lt[e - 1] <= tol) ++e;
    return e;
}

Vector rotate_to_frame(const Matrix& q, const Vector& g) {
    Vector out(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t d = 0; d < g.size(); ++d) out[i] += q(d, i) * g[d];
    return out;
}

// ⟨F, D²φ⟩ with F = Q diag(f) Qᵀ.
double weighted_laplacian(const Site& s, const SymMatrix& d2) {
    return frobenius_inner(SymMatrix::from_spectrum(s.q, s.f), d2);
}

std::vector<std::size_t> interior_sites(const GridField& g) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.depth(k) >= 1) out.push_back(k);
    return out;
}

void refuse_non_solution(const GridField& u, const OperatorModel& op, const ViscosityOptions& opts,
                         ViscosityReport& r, const char* who) {
    if (u.n_dims() != op.n) throw ArgumentError(std::string(who) + ": field dimension differs from operator n");
    const ResidualField rf = residual_field(u, op);
    r.max_residual = rf.sup_norm;
    if (rf.off_branch_count > 0 || !(rf.sup_norm <= opts.residual_tol)) {
        std::size_t worst = 0;
        const auto v = rf.residual.values();
        for (std::size_t k = 0; k < v.size(); ++k)
            if (std::abs(v[k]) > std::abs(v[worst])) worst = k;
        std::ostringstream msg;
        msg << who << " refuses: not a solution (sup residual " << rf.sup_norm << " > " << opts.residual_tol
            << ", worst at node";
        const Node nd = u.node(worst);
        for (int d = 0; d < u.n_dims(); ++d) msg << ' ' << nd[d];
        msg << ", off-branch nodes " << rf.off_branch_count << ')';
        throw DomainError(msg.str());
    }
}

void check_regime(const Form& form, const Site& s, const GridField& g, std::size_t k, double tol) {
    const bool bad = form.needs_positive ? !(s.lt.front() > 0.0) : s.lt.front() < -tol;
    if (!bad) return;
    std::ostringstream msg;
    msg << "outside the inverse-convex regime at x = (";
    const Vector x = g.coords(k);
    for (std::size_t d = 0; d < x.size(); ++d) msg << (d ? ", " : "") << x[d];
    msg << "): smallest shifted eigenvalue " << s.lt.front();
    throw DomainError(msg.str());
}

struct SiteResult {
    double margin = 0.0;
    double drift = 0.0;
    double grad_norm = 0.0;
    double level = 0.0;
    bool simple = true;
};

void reduce(const std::vector<SiteResult>& res, bool fit_level, ViscosityReport& r) {
    r.worst_violation = -std::numeric_limits<double>::infinity();
    double sxx = 0.0, sxy = 0.0, syy = 0.0, sbx = 0.0, sby = 0.0;
    for (const auto& s : res) {
        r.worst_violation = std::max(r.worst_violation, s.margin);
        (s.simple ? r.simple_sites : r.partial_sum_sites) += 1;
        if (s.grad_norm > 1e-8) r.drift_bound = std::max(r.drift_bound, std::abs(s.drift) / s.grad_norm);
        sxx += s.grad_norm * s.grad_norm;
        sxy += s.grad_norm * s.level;
        syy += s.level * s.level;
        sbx += s.drift * s.grad_norm;
        sby += s.drift * s.level;
    }
    r.sites_checked = res.size();
    if (res.empty()) r.worst_violation = 0.0;
    if (!fit_level) {
        r.b_fit = sxx > 0.0 ? sbx / sxx : 0.0;
        return;
    }
    const double det = sxx * syy - sxy * sxy;
    if (std::abs(det) > 1e-14 * std::max(1.0, sxx * syy)) {
        r.b_fit = (sbx * syy - sby * sxy) / det;
        r.c_fit = (sby * sxx - sbx * sxy) / det;
    } else if (sxx > 0.0) {
        r.b_fit = sbx / sxx;
    }
}

}  // namespace

std::string to_string(InequalityId id) {
    switch (id) {
        case InequalityId::gradient_identity: return "eq4.1";
        case InequalityId::inverse_convexity: return "eq4.2";
        case InequalityId::lambda1: return "eq4.3";
        case InequalityId::partial_sum: return "eq4.5";
        case InequalityId::higher_rank: return "eq_final";
    }
    return "eq4.3";
}

ViscosityReport check_gradient_identity(const GridField& u) {
    const Form form;  // the frame only depends on D²u
    const Fields fl = build_fields(u, 0.0);
    const auto sites = interior_sites(fl.grid);
    std::vector<double> err(sites.size(), -1.0);
    parallel_for(sites.size(), [&](std::size_t i) {
        const Node node = fl.grid.node(sites[i]);
        const Site s = make_site(fl, form, node);
        // λ₁ must stay separated across the whole stencil, not only at the site.
        double t2 = 0.0;
        for (const auto& x : s.x) t2 += frobenius_inner(x, x);
        const double n = static_cast<double>(s.lt.size());
        const double gap = std::max(10.0 * s.routing_tol, 2.0 * std::sqrt(n * t2) * u.spacing());
        if (block_end(s.lt, 0, gap) > 1) return;
        const Vector dl = rotate_to_frame(s.q, fd_gradient(fl.prefix[1], node));
        double e = 0.0;
        for (std::size_t m = 0; m < dl.size(); ++m) e = std::max(e, std::abs(dl[m] - s.x[m](0, 0)));
        err[i] = e;
    });
    ViscosityReport r;
    r.id = InequalityId::gradient_identity;
    r.spacing = u.spacing();
    for (double e : err) {
        if (e < 0.0) {
            ++r.excluded_sites;
            continue;
        }
        ++r.sites_checked;
        ++r.simple_sites;
        r.worst_violation = std::max(r.worst_violation, e);
    }
    if (r.excluded_sites > 0)
        r.notes.push_back(std::to_string(r.excluded_sites) + " sites with repeated λ₁ excluded");
    return r;
}

double check_inverse_convexity(const OperatorModel& op, const SymMatrix& m, const SymMatrix& x, double t) {
    const std::size_t n = m.dim();
    if (x.dim() != n) throw ArgumentError("check_inverse_convexity: M and X differ in size");
    if (!(t > 0.0)) throw ArgumentError("check_inverse_convexity: t must be positive");
    const Form form = make_form(op, true, std::nullopt);
    const Spectrum sp = eig_sym(m);
    Vector lt = sp.eigenvalues;
    for (auto& l : lt) l += form.shift;
    if (!(lt.front() > 0.0))
        throw DomainError("check_inverse_convexity: M outside the inverse-convex regime (smallest shifted eigenvalue " +
                          std::to_string(lt.front()) + ")");
    const SymMatrix xp = congruence(sp.eigenvectors, x);
    const double xs = std::max(1.0, frobenius_norm(x));
    for (std::size_t j = 0; j < n; ++j)
        if (std::abs(xp(0, j)) > 1e-9 * xs)
            throw ArgumentError("check_inverse_convexity: X must vanish on the first eigen-row of M");

    SymMatrix shifted = m;
    for (std::size_t i = 0; i < n; ++i) shifted.set(i, i, m(i, i) + form.shift);
    const double lhs = -second_difference(form, shifted, x, t);
    const Vector f = form.gradient(lt);
    double rhs = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 1; j < n; ++j) rhs += f[i] / lt[j] * xp(i, j) * xp(i, j);
    return lhs - 2.0 * rhs;
}

ViscosityReport check_supersolution_lambda1(const GridField& u, const OperatorModel& op,
                                            const ViscosityOptions& opts) {
    ViscosityReport r = check_higher_rank_inequality(u, op, 0, [&] {
        ViscosityOptions o = opts;
        if (!o.sigma2_form) o.sigma2_form = Sigma2Form::lewy;
        return o;
    }());
    r.id = r.partial_sum_sites > 0 ? InequalityId::partial_sum : InequalityId::lambda1;
    return r;
}

ViscosityReport check_higher_rank_inequality(const GridField& u, const OperatorModel& op, int a,
                                             const ViscosityOptions& opts) {
    ViscosityReport r;
    r.spacing = u.spacing();
    if (a < 0 || a >= op.n) throw ArgumentError("check_higher_rank_inequality: a must lie in [0, n)");
    refuse_non_solution(u, op, opts, r, a == 0 ? "check_supersolution_lambda1" : "check_higher_rank_inequality");
    const Form form = make_form(op, false, opts.sigma2_form);
    const Fields fl = build_fields(u, form.shift);
    const auto ua = static_cast<std::size_t>(a);
    const double null_tol = opts.tol_rank * std::max(1.0, fl.hess_scale);

    if (a > 0) {
        for (std::size_t k = 0; k < fl.grid.size(); ++k) {
            const double lo = fl.prefix[ua][k] - fl.prefix[ua - 1][k];  // λ_a
            const double next = fl.prefix[ua + 1][k] - fl.prefix[ua][k];
            const double first = fl.prefix[1][k];
            if (std::abs(lo) > null_tol || std::abs(first) > null_tol)
                throw DomainError("check_higher_rank_inequality refuses: λ_" + std::to_string(a) +
                                  " is not identically 0 (value " + std::to_string(lo) + ")");
            if (!(next > null_tol))
                throw DomainError("check_higher_rank_inequality refuses: λ_" + std::to_string(a + 1) +
                                  " vanishes too, so a is not the null multiplicity");
        }
    }

    const auto sites = interior_sites(fl.grid);
    std::vector<SiteResult> res(sites.size());
    parallel_for(sites.size(), [&](std::size_t i) {
        const Node node = fl.grid.node(sites[i]);
        Site s = make_site(fl, form, node);
        const std::size_t n = s.lt.size();
        if (a == 0) check_regime(form, s, fl.grid, sites[i], null_tol);
        s.f = form.gradient(s.lt);
        const std::size_t end = block_end(s.lt, ua, s.routing_tol * 10.0);

        const SymMatrix d2_block = fd_hessian(fl.prefix[end], node) - fd_hessian(fl.prefix[ua], node);
        double lhs = weighted_laplacian(s, d2_block);
        if (a > 0) lhs += 2.0 * weighted_laplacian(s, fd_hessian(fl.prefix[ua], node));

        double drift = 0.0;
        for (std::size_t m = ua; m < end; ++m) drift += drift_terms(form, s.a, s.lt, s.x[m], end);
        double helpful = 0.0;
        for (std::size_t m = 0; m < ua; ++m) {
            drift += 2.0 * drift_terms(form, s.a, s.lt, s.x[m], end);
            for (std::size_t ii = 0; ii < n; ++ii)
                for (std::size_t j = ua; j < n; ++j) helpful -= s.f[ii] * s.x[m](ii, j) * s.x[m](ii, j) / s.lt[j];
        }
        const double rhs = drift + 2.0 * helpful;

        const Vector dmu = fd_gradient(fl.prefix[end], node);
        const Vector dlo = fd_gradient(fl.prefix[ua], node);
        Vector g(n);
        for (std::size_t d = 0; d < n; ++d) g[d] = dmu[d] - dlo[d];

        SiteResult& out = res[i];
        out.margin = lhs - rhs;
        out.drift = rhs;
        out.grad_norm = norm2(g);
        out.level = fl.prefix[end].at(node) - fl.prefix[ua].at(node);
        out.simple = end == ua + 1;
    });
    reduce(res, a > 0, r);
    r.id = InequalityId::higher_rank;
    if (form.lewy) r.notes.push_back("σ₂ through the surrogate −Λ((D²u + mI)⁻¹)");
    if (r.partial_sum_sites > 0)
        r.notes.push_back(std::to_string(r.partial_sum_sites) + " sites with repeated eigenvalue routed to the partial-sum form");
    return r;
}

}  // namespace slaglab
