#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "slaglab/matrix.hpp"

namespace slaglab {

enum class PhaseClass { subcritical, critical, supercritical };

std::string to_string(PhaseClass c);

/// A phase Θ in dimension n, its criticality and the two Hessian-angle
/// thresholds (Θ ∓ π)/n.
struct PhaseSpec {
    int n = 3;
    double theta = 0.0;
    PhaseClass classification = PhaseClass::subcritical;
    double lower_threshold = 0.0;
    double upper_threshold = 0.0;

    /// (n−2)π/2.
    double critical_phase() const;
};

/// Classifies Θ against (n−2)π/2 with exact comparisons. Throws DomainError
/// when |Θ| ≥ nπ/2 (no Hessian attains it) or n < 2.
PhaseSpec classify_phase(int n, double theta);

/// Σ arctan λᵢ(M).
double slag_phase(const SymMatrix& m);
double slag_phase(std::span<const double> lambda);

/// ∂F/∂M for F = Σ arctan λᵢ, i.e. (I + M²)⁻¹.
SymMatrix slag_linearization(const SymMatrix& m);

struct Sigma2Value {
    double value = 0.0;
    bool on_branch = false;
};

/// σ₂(λ(M)) and whether σ₁ > 0 (strict, no tolerance).
Sigma2Value sigma2_positive_branch(const SymMatrix& m);

/// Λ(μ) = σ_{n−1}(μ)/σ_{n−2}(μ) for μ > 0 componentwise. Wide-range inputs
/// (max/min > 1e8) are evaluated through ν = 1/μ as σ₁(ν)/σ₂(ν), where the
/// common factor σₙ(μ) cancels. Throws DomainError on a non-positive entry.
double lambda_ratio(std::span<const double> mu);

/// ∂Λ/∂μᵢ.
Vector lambda_ratio_gradient(std::span<const double> mu);

/// √(2/[n(n−1)]): the semiconvexity shift of the quadratic Hessian equation.
double lewy_shift(int n);

enum class OperatorKind { slag_phase, sigma2_positive_branch, lambda_ratio };

std::string to_string(OperatorKind k);
OperatorKind operator_kind_from_string(const std::string& s);

/// One of the three nonlinear operators together with the level it is
/// solved at: Θ for the phase, 1 for σ₂, 1/((n−1)m) for Λ.
struct OperatorModel {
    OperatorKind kind = OperatorKind::slag_phase;
    int n = 3;
    double level = 0.0;

    static OperatorModel slag(int n, double theta);
    static OperatorModel sigma2(int n);
    static OperatorModel lambda_ratio(int n);

    /// F(M) (not shifted by level).
    double evaluate(const SymMatrix& m) const;
    /// F evaluated on a sorted eigenvalue vector.
    double evaluate_eigenvalues(std::span<const double> lambda) const;
    /// ∂F/∂λᵢ for a spectral operator; F_ij = Q diag(this) Qᵀ.
    Vector eigenvalue_gradient(std::span<const double> lambda) const;
    /// ∂F/∂M_ij.
    SymMatrix linearization(const SymMatrix& m) const;
    /// σ₁ > 0 for σ₂; μ > 0 for Λ; always true for the phase.
    bool admissible(const SymMatrix& m) const;
};

enum class ProbeSide { concave, convex };

struct ProbeReport {
    double theta = 0.0;
    int n = 0;
    int trials = 0;
    int violations = 0;
    /// Largest signed midpoint margin; positive means the midpoint left the
    /// expected side of the level set.
    double worst_margin = 0.0;
    std::uint64_t seed = 0;
    ProbeSide side = ProbeSide::concave;
};

/// Midpoint test of the level set {Σ arctan λᵢ = Θ}: sublevel side when
/// Θ ≤ (2−n)π/2, superlevel side when Θ ≥ (n−2)π/2. Refuses (DomainError) in
/// the open band between, where no convexity is asserted.
ProbeReport level_set_concavity_probe(const PhaseSpec& spec, int trials, std::uint64_t rng_seed,
                                      double violation_tol = 1e-12);

/// Signed midpoint margin for one pair on the level set; positive = violation.
double midpoint_margin(const PhaseSpec& spec, std::span<const double> a, std::span<const double> b);

ProbeSide probe_side(const PhaseSpec& spec);

}  // namespace slaglab
