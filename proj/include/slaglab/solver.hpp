#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slaglab/grid.hpp"
#include "slaglab/operators.hpp"

namespace slaglab {

struct LineSearch {
    double backtrack = 0.5;             ///< step multiplier per rejection, in (0, 1)
    double sufficient_decrease = 1e-4;  ///< Armijo constant on the residual 2-norm
    int max_backtracks = 30;
};

struct SolveConfig {
    int max_newton_iters = 50;
    double residual_tol = 1e-10;  ///< sup-norm of F(D²u) − level over interior nodes
    LineSearch damping;
    /// Relative tolerance of each linear solve is linear_solver_tol times the
    /// current sup residual (clamped to [1e-14, 1e-1]).
    double linear_solver_tol = 1e-2;
    int max_linear_iters = 5000;

    /// Throws ArgumentError on a non-positive tolerance or a bad backtrack factor.
    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    double final_residual = 0.0;
    /// Smallest eigenvalue of ∂F/∂M over interior nodes of the returned iterate.
    double min_ellipticity = 0.0;
    /// σ₂ only: every interior node has σ₁ > 0. Always true for other operators.
    bool branch_flag = true;
    bool converged = false;
    std::string status;                 ///< "converged", "stagnation" or "max_iterations"
    std::vector<double> residual_history;  ///< sup residual before each Newton step and at exit
};

struct SolveResult {
    GridField u;
    SolveReport report;
};

/// Transfinite (Coons) blend of the boundary values of `boundary` into the
/// interior. Reproduces every function that is, in some coordinate, affine or
/// constant term by term; in particular quadratics.
GridField transfinite_blend(const GridField& boundary);

/// Default initial guess: the transfinite blend, plus for σ₂ a convex bump
/// vanishing on the boundary, doubled until σ₁ > 0 at every interior node.
GridField default_initial_guess(const OperatorModel& op, const GridField& boundary);

/// Damped Newton for F(D²u) = level with Dirichlet data taken from the
/// boundary nodes of `boundary` (its interior values are ignored).
///
/// Linearization coefficients are frozen per outer iteration; the sparse
/// system is solved by preconditioned BiCGSTAB. For σ₂ the line search halves
/// the step until σ₁ > 0 holds at every interior node.
///
/// Throws DomainError naming the first off-branch node if the initial iterate
/// is off the σ₂ branch, and ArgumentError on a dimension mismatch. Stagnation
/// is reported through SolveReport::converged = false.
SolveResult solve_dirichlet(const OperatorModel& op, const GridField& boundary,
                            const SolveConfig& config = {},
                            const std::optional<GridField>& initial = std::nullopt);

}  // namespace slaglab
