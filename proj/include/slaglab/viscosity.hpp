#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slaglab/grid.hpp"
#include "slaglab/matrix.hpp"
#include "slaglab/operators.hpp"

namespace slaglab {

enum class InequalityId { gradient_identity, inverse_convexity, lambda1, partial_sum, higher_rank };

/// "eq4.1", "eq4.2", "eq4.3", "eq4.5", "eq_final".
std::string to_string(InequalityId id);

struct ViscosityReport {
    InequalityId id = InequalityId::lambda1;
    double spacing = 0.0;
    std::size_t sites_checked = 0;
    std::size_t simple_sites = 0;       ///< λ₁ simple within the routing tolerance
    std::size_t partial_sum_sites = 0;  ///< routed to the partial-sum form
    std::size_t excluded_sites = 0;     ///< skipped (gradient identity at repeated λ₁)
    /// Largest signed margin over sites; positive means violated. For the
    /// gradient identity this is the largest deviation.
    double worst_violation = 0.0;
    /// sup over sites of |drift terms| / |Dλ|, where |Dλ| > 1e-8.
    double drift_bound = 0.0;
    /// Least-squares fit of the drift terms against |Dλ| (and λ for the
    /// higher-rank form).
    double b_fit = 0.0;
    double c_fit = 0.0;
    double max_residual = 0.0;  ///< sup |F(D²u) − level| of the input
    std::vector<std::string> notes;
};

/// How the σ₂ equation is put in inverse-convex form: through
/// F̃(D²u) = −Λ((D²u + mI)⁻¹), which needs λ > −m, or σ₂ itself on convex u.
enum class Sigma2Form { lewy, plain };

struct ViscosityOptions {
    /// Inputs whose sup residual exceeds this are refused.
    double residual_tol = 1e-8;
    /// Defaults: lewy for the λ₁ check, plain for the higher-rank check.
    std::optional<Sigma2Form> sigma2_form;
    double tol_rank = 1e-6;
};

/// Repeated-eigenvalue tolerance used for routing (relative to max(1, ‖D²u‖_F)).
inline constexpr double kRoutingTol = 1e-8;

/// ∂ᵢλ₁ against ∂ᵢu₁₁ in the eigenframe at every node of depth ≥ 2 with a
/// simple λ₁; repeated sites are excluded and counted.
ViscosityReport check_gradient_identity(const GridField& u);

/// LHS − RHS with LHS = −(F(M+tX) − 2F(M) + F(M−tX))/t² and
/// RHS = 2Σ_{i,j>1} F_ii λⱼ⁻¹ X'_ij², X' = QᵀXQ in the eigenframe of M.
///
/// F is the phase on positive definite M, Λ on positive definite M, and for
/// σ₂ the surrogate F̃(M) = −Λ((M + mI)⁻¹), whose eigenvalues λⱼ are those of
/// M + mI. Throws DomainError outside the regime and ArgumentError when X' has
/// a nonzero first row.
double check_inverse_convexity(const OperatorModel& op, const SymMatrix& m, const SymMatrix& x, double t);

/// △_F Σ_{m≤s} λ_m − (drift terms with an index ≤ s) at every node of depth
/// ≥ 2, with s the multiplicity of λ₁ there (s = 1 is the simple form).
/// △_F and Dλ come from finite differences of the eigenvalue fields; the
/// drift terms from third derivatives in the eigenframe. Refuses non-solutions
/// and fields leaving the inverse-convex regime (DomainError).
ViscosityReport check_supersolution_lambda1(const GridField& u, const OperatorModel& op,
                                            const ViscosityOptions& opts = {});

/// Step-2 form with λ₁ … λ_a ≡ 0: with μ the sum over the block of λ_{a+1},
/// checks △_F μ + 2△_F Σ_{m≤a} λ_m against the drift terms with an index
/// ≤ a + s plus 2Σ_i Σ_{j>a} Σ_{m≤a} F_ii u²_ijm / (−λⱼ). a = 0 is
/// check_supersolution_lambda1. Refuses when some λ_m, m ≤ a, is not within
/// tol_rank of 0 or λ_{a+1} is.
ViscosityReport check_higher_rank_inequality(const GridField& u, const OperatorModel& op, int a,
                                             const ViscosityOptions& opts = {});

}  // namespace slaglab
