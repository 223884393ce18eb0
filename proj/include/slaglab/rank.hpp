#pragma once

#include <string>
#include <vector>

#include "slaglab/catalog.hpp"
#include "slaglab/grid.hpp"
#include "slaglab/operators.hpp"

namespace slaglab {

/// Per-node sorted eigenvalues and eigenvectors of the FD Hessian of u.
///
/// Fields live on the interior sub-grid (every node of u at depth ≥ 1, so the
/// shape shrinks by 2 per axis and the origin moves in by one spacing).
/// values[k] holds λ_{k+1}; vectors[k][d] holds component d of its
/// eigenvector, sign-aligned along a breadth-first spanning tree from the
/// centre node.
struct EigenFields {
    std::vector<GridField> values;
    std::vector<VectorField> vectors;

    const GridField& lambda_min() const { return values.front(); }
    const GridField& lambda_max() const { return values.back(); }
};

/// Throws ArgumentError when u has fewer than 7 nodes on some axis.
EigenFields eigen_fields(const GridField& u);

enum class MinVerdict { constant, boundary_min, interior_min, indeterminate };
std::string to_string(MinVerdict v);

struct MinPrincipleReport {
    MinVerdict verdict = MinVerdict::constant;
    double spread = 0.0;
    double tol = 0.0;
    double min_value = 0.0;
    std::vector<Node> interior_min_sites;  ///< strict by more than tol over the full neighbourhood
    std::size_t plateau_sites = 0;         ///< interior weak minima within tol of a neighbour
};

/// Strong-minimum-principle verdict for a scalar field: constant when the
/// spread is below tol, interior_min when some node at depth ≥ 1 beats all
/// 3ⁿ − 1 neighbours by more than tol, indeterminate when only plateau
/// minima are found in the interior, boundary_min otherwise. tol defaults to
/// 1e-6·max(1, max|field|).
MinPrincipleReport min_principle_check(const GridField& field, double tol = -1.0);

struct RankReport {
    double shift = 0.0;
    double tol_rank = 0.0;
    GridField rank;  ///< on the interior sub-grid, stored as doubles
    int min_rank = 0;
    int max_rank = 0;
    GridField lambda_min_field;
    GridField lambda_max_field;
    std::vector<Node> interior_min_sites;  ///< node indices of u
    double threshold_margin = 0.0;         ///< min over nodes of arctan λ_min − (Θ − π)/n
};

/// rank = #{i : λᵢ − a > tol_rank·max(1, ‖D²u‖_F)} at every interior node.
RankReport rank_report(const GridField& u, double a, const PhaseSpec& spec, double tol_rank = 1e-6);

enum class SplitVerdict { split, no_split, indeterminate };
std::string to_string(SplitVerdict v);

struct SplitTolerances {
    double eigenvalue = 1e-8;  ///< on max − min of λ_min
    double direction = 1e-3;   ///< radians, on the angle spread of the λ_min eigenvector
};

struct SplitReport {
    Vector direction;
    double eigenvalue_spread = 0.0;
    double direction_spread = 0.0;
    double u_ee = 0.0;  ///< mean of λ_min
    double threshold_margin = 0.0;
    SplitVerdict verdict = SplitVerdict::indeterminate;
};

/// Hessian-splitting detector. e is the mean of the sign-aligned λ_min
/// eigenvectors, renormalized. split: both spreads below tolerance and the
/// threshold margin positive. no_split: a spread exceeds ten times its
/// tolerance. indeterminate: anything else.
SplitReport splitting_detector(const GridField& u, const PhaseSpec& spec, const SplitTolerances& tols = {});

enum class Hom2Verdict { quadratic, violation, not_asserted, abstain };
std::string to_string(Hom2Verdict v);

struct Hom2Options {
    double equation_tol = 1e-8;
    double quadratic_tol = 1e-6;
    int subdivisions = 3;     ///< icosphere level for n = 3
    int samples = 2000;       ///< random sphere points for n ≠ 3
    std::uint64_t seed = 0;
};

struct Hom2Audit {
    double equation_residual = 0.0;  ///< max |Σ arctan λᵢ − Θ| over the sphere samples
    double min_arctan_lambda_min = 0.0;
    double min_lambda_min = 0.0;
    double margin = 0.0;             ///< min arctan λ_min − (Θ − π)/n
    bool tan_pi5_applies = false;    ///< n = 5 and Θ = 0
    bool below_minus_tan_pi5 = false;  ///< min λ_min ≤ −tan(π/5)
    double quadratic_deviation = 0.0;  ///< max ‖D²u(ξ) − Q‖_F, Q the least-squares constant Hessian
    std::size_t samples = 0;
    Hom2Verdict verdict = Hom2Verdict::abstain;
};

/// Audit of u = |x|² g(x/|x|) against the rigidity statement for
/// 2-homogeneous solutions: abstains when u does not solve the phase
/// equation, reports not_asserted when the margin is ≤ 0, and otherwise
/// quadratic or violation according to the deviation from the best-fit
/// quadratic.
Hom2Audit hom2_audit(const SphereFunction& g, const PhaseSpec& spec, const Hom2Options& opts = {});

}  // namespace slaglab
