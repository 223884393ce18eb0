#include "slaglab/solver.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "slaglab/errors.hpp"
#include "slaglab/parallel.hpp"
#include "slaglab/spectral.hpp"

namespace slaglab {

void SolveConfig::validate() const {
    if (max_newton_iters < 1) throw ArgumentError("SolveConfig: max_newton_iters must be >= 1");
    if (!(residual_tol > 0.0)) throw ArgumentError("SolveConfig: residual_tol must be positive");
    if (!(linear_solver_tol > 0.0))
        throw ArgumentError("SolveConfig: linear_solver_tol must be positive");
    if (!(damping.backtrack > 0.0 && damping.backtrack < 1.0))
        throw ArgumentError("SolveConfig: backtrack factor must lie in (0, 1)");
    if (!(damping.sufficient_decrease > 0.0 && damping.sufficient_decrease < 1.0))
        throw ArgumentError("SolveConfig: sufficient_decrease must lie in (0, 1)");
    if (damping.max_backtracks < 0) throw ArgumentError("SolveConfig: negative max_backtracks");
    if (max_linear_iters < 1) throw ArgumentError("SolveConfig: max_linear_iters must be >= 1");
}

GridField transfinite_blend(const GridField& boundary) {
    const int n = boundary.n_dims();
    GridField out = boundary;
    for (std::size_t f = 0; f < boundary.size(); ++f) {
        const Node nd = boundary.node(f);
        if (boundary.depth(nd) == 0) continue;
        double acc = 0.0;
        for (int subset = 1; subset < (1 << n); ++subset) {
            const int k = std::popcount(static_cast<unsigned>(subset));
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            for (int corner = 0; corner < (1 << n); ++corner) {
                if ((corner & ~subset) != 0) continue;
                Node q = nd;
                double w = 1.0;
                for (int d = 0; d < n; ++d) {
                    if (!((subset >> d) & 1)) continue;
                    const auto last = static_cast<std::ptrdiff_t>(boundary.shape()[d]) - 1;
                    const double t = static_cast<double>(nd[d]) / static_cast<double>(last);
                    if ((corner >> d) & 1) {
                        w *= t;
                        q[d] = last;
                    } else {
                        w *= 1.0 - t;
                        q[d] = 0;
                    }
                }
                acc += sign * w * boundary.at(q);
            }
        }
        out.set(f, acc);
    }
    return out;
}

namespace {

std::string describe_node(const GridField& u, std::size_t f) {
    const Node nd = u.node(f);
    const Vector x = u.coords(nd);
    std::ostringstream os;
    os << "node (";
    for (int d = 0; d < u.n_dims(); ++d) os << (d ? "," : "") << nd[d];
    os << ") at x = (";
    for (int d = 0; d < u.n_dims(); ++d) os << (d ? "," : "") << x[d];
    os << ")";
    return os.str();
}

std::vector<std::size_t> interior_nodes(const GridField& u) {
    std::vector<std::size_t> idx;
    for (std::size_t f = 0; f < u.size(); ++f)
        if (u.depth(f) >= 1) idx.push_back(f);
    return idx;
}

/// First interior node with σ₁ ≤ 0, or size() when none.
std::size_t first_off_branch(const GridField& u, const std::vector<std::size_t>& interior) {
    for (std::size_t f : interior)
        if (!(fd_hessian(u, f).trace() > 0.0)) return f;
    return u.size();
}

struct Residual {
    Vector r;
    double sup = 0.0;
    double l2 = 0.0;
};

Residual compute_residual(const OperatorModel& op, const GridField& u,
                          const std::vector<std::size_t>& interior) {
    Residual res;
    res.r.assign(interior.size(), 0.0);
    parallel_for(interior.size(), [&](std::size_t k) {
        res.r[k] = op.evaluate(fd_hessian(u, interior[k])) - op.level;
    });
    for (double v : res.r) {
        if (!std::isfinite(v)) {
            res.sup = res.l2 = std::numeric_limits<double>::infinity();
            return res;
        }
        res.sup = std::max(res.sup, std::abs(v));
        res.l2 += v * v;
    }
    res.l2 = std::sqrt(res.l2);
    return res;
}

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

SparseMatrix assemble_jacobian(const OperatorModel& op, const GridField& u,
                               const std::vector<std::size_t>& interior,
                               const std::vector<std::ptrdiff_t>& slot) {
    const int n = u.n_dims();
    const double h2 = u.spacing() * u.spacing();
    const std::size_t per_node = 1 + 2 * n + 2 * n * (n - 1);
    std::vector<Eigen::Triplet<double>> trip(interior.size() * per_node);
    std::vector<std::size_t> used(interior.size(), 0);

    parallel_for(interior.size(), [&](std::size_t k) {
        const std::size_t f = interior[k];
        const SymMatrix lin = op.linearization(fd_hessian(u, f));
        std::size_t w = k * per_node;
        const auto row = static_cast<int>(k);
        auto emit = [&](std::size_t q, double c) {
            const std::ptrdiff_t col = slot[q];
            if (col >= 0 && c != 0.0) trip[w++] = {row, static_cast<int>(col), c};
        };
        double centre = 0.0;
        for (int d = 0; d < n; ++d) {
            const std::size_t s = u.stride(d);
            const double c = lin(d, d) / h2;
            centre -= 2.0 * c;
            emit(f + s, c);
            emit(f - s, c);
            for (int e = d + 1; e < n; ++e) {
                const std::size_t t = u.stride(e);
                const double m = lin(d, e) / (2.0 * h2);
                emit(f + s + t, m);
                emit(f - s - t, m);
                emit(f + s - t, -m);
                emit(f - s + t, -m);
            }
        }
        emit(f, centre);
        used[k] = w - k * per_node;
    });

    std::vector<Eigen::Triplet<double>> packed;
    packed.reserve(trip.size());
    for (std::size_t k = 0; k < interior.size(); ++k)
        for (std::size_t j = 0; j < used[k]; ++j) packed.push_back(trip[k * per_node + j]);
    const auto m = static_cast<Eigen::Index>(interior.size());
    SparseMatrix a(m, m);
    a.setFromTriplets(packed.begin(), packed.end());
    return a;
}

Eigen::VectorXd linear_solve(const SparseMatrix& a, const Eigen::VectorXd& b, double rel_tol,
                             int max_iters) {
    {
        Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> it;
        it.setTolerance(rel_tol);
        it.setMaxIterations(max_iters);
        it.compute(a);
        Eigen::VectorXd x = it.solve(b);
        if (it.info() == Eigen::Success && x.allFinite()) return x;
    }
    {
        Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it;
        it.setTolerance(rel_tol);
        it.setMaxIterations(max_iters);
        it.compute(a);
        if (it.info() == Eigen::Success) {
            Eigen::VectorXd x = it.solve(b);
            if (it.info() == Eigen::Success && x.allFinite()) return x;
        }
    }
    Eigen::SparseMatrix<double> col = a;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(col);
    if (lu.info() != Eigen::Success)
        throw ConvergenceError("solve_dirichlet: singular Newton linearization");
    return lu.solve(b);
}

double min_ellipticity(const OperatorModel& op, const GridField& u,
                       const std::vector<std::size_t>& interior) {
    Vector lo(interior.size());
    parallel_for(interior.size(), [&](std::size_t k) {
        lo[k] = eig_sym(op.linearization(fd_hessian(u, interior[k]))).min();
    });
    return lo.empty() ? 0.0 : *std::min_element(lo.begin(), lo.end());
}

}  // namespace

GridField default_initial_guess(const OperatorModel& op, const GridField& boundary) {
    GridField u = transfinite_blend(boundary);
    if (op.kind != OperatorKind::sigma2_positive_branch) return u;
    const auto interior = interior_nodes(u);
    if (first_off_branch(u, interior) == u.size()) return u;

    // Convex bump −Π t_d(1 − t_d): zero on the boundary, positive Laplacian inside.
    GridField bump(u.shape(), u.origin(), u.spacing());
    for (std::size_t f : interior) {
        const Node nd = u.node(f);
        double p = 1.0;
        for (int d = 0; d < u.n_dims(); ++d) {
            const double t = static_cast<double>(nd[d]) / static_cast<double>(u.shape()[d] - 1);
            p *= t * (1.0 - t);
        }
        bump.set(f, -p);
    }
    const GridField base = u;
    for (double kappa = 1.0; kappa < 1e12; kappa *= 2.0) {
        Vector v(base.values().begin(), base.values().end());
        for (std::size_t f : interior) v[f] += kappa * bump[f];
        u.set_values(std::move(v));
        if (first_off_branch(u, interior) == u.size()) return u;
    }
    throw DomainError("default_initial_guess: no convex lift brings the blend onto the sigma2 branch");
}

SolveResult solve_dirichlet(const OperatorModel& op, const GridField& boundary,
                            const SolveConfig& config, const std::optional<GridField>& initial) {
    config.validate();
    if (boundary.n_dims() != op.n)
        throw ArgumentError("solve_dirichlet: operator dimension " + std::to_string(op.n) +
                            " != grid dimension " + std::to_string(boundary.n_dims()));
    const bool sigma2 = op.kind == OperatorKind::sigma2_positive_branch;

    GridField u;
    if (initial) {
        if (!initial->same_geometry(boundary))
            throw ArgumentError("solve_dirichlet: initial guess geometry differs from boundary");
        Vector v(initial->values().begin(), initial->values().end());
        for (std::size_t f = 0; f < v.size(); ++f)
            if (boundary.depth(f) == 0) v[f] = boundary[f];
        u = GridField(boundary.shape(), boundary.origin(), boundary.spacing(), std::move(v));
    } else {
        u = default_initial_guess(op, boundary);
    }

    const auto interior = interior_nodes(u);
    std::vector<std::ptrdiff_t> slot(u.size(), -1);
    for (std::size_t k = 0; k < interior.size(); ++k) slot[interior[k]] = static_cast<std::ptrdiff_t>(k);

    if (sigma2) {
        const std::size_t bad = first_off_branch(u, interior);
        if (bad != u.size())
            throw DomainError("solve_dirichlet: initial iterate leaves the sigma2 branch at " +
                              describe_node(u, bad));
    }

    SolveReport rep;
    Residual res = compute_residual(op, u, interior);
    rep.residual_history.push_back(res.sup);
    rep.status = "max_iterations";

    for (int it = 0; it < config.max_newton_iters; ++it) {
        if (res.sup <= config.residual_tol) break;
        const SparseMatrix jac = assemble_jacobian(op, u, interior, slot);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(interior.size()));
        for (std::size_t k = 0; k < interior.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = -res.r[k];
        const double rel = std::clamp(config.linear_solver_tol * res.sup, 1e-14, 1e-1);
        const Eigen::VectorXd delta = linear_solve(jac, rhs, rel, config.max_linear_iters);

        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= config.damping.max_backtracks; ++bt, step *= config.damping.backtrack) {
            Vector v(u.values().begin(), u.values().end());
            for (std::size_t k = 0; k < interior.size(); ++k)
                v[interior[k]] += step * delta[static_cast<Eigen::Index>(k)];
            bool finite = true;
            for (std::size_t k = 0; k < interior.size() && finite; ++k) finite = std::isfinite(v[interior[k]]);
            if (!finite) continue;
            GridField trial(u.shape(), u.origin(), u.spacing(), std::move(v));
            if (sigma2 && first_off_branch(trial, interior) != trial.size()) continue;
            Residual tr = compute_residual(op, trial, interior);
            if (tr.l2 <= (1.0 - config.damping.sufficient_decrease * step) * res.l2 ||
                tr.sup <= config.residual_tol) {
                u = std::move(trial);
                res = std::move(tr);
                accepted = true;
                break;
            }
        }
        rep.iterations = it + 1;
        if (!accepted) {
            rep.status = "stagnation";
            break;
        }
        rep.residual_history.push_back(res.sup);
    }

    rep.final_residual = res.sup;
    rep.converged = res.sup <= config.residual_tol;
    if (rep.converged) rep.status = "converged";
    rep.branch_flag = !sigma2 || first_off_branch(u, interior) == u.size();
    rep.min_ellipticity = min_ellipticity(op, u, interior);
    return {std::move(u), std::move(rep)};
}

}  // namespace slaglab
