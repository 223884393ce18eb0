#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "slaglab/grid.hpp"
#include "slaglab/matrix.hpp"

namespace slaglab {

/// Rotation of ℝⁿ × ℝⁿ by β in each (xᵢ, yᵢ) plane.
struct RotationParams {
    double beta = 0.0;
    double c = 1.0;
    double s = 0.0;
    double alpha = 0.0;       ///< β − π/2
    std::optional<double> a;  ///< tan α; empty when cos α = 0
    double validity_margin = 0.0;

    /// Throws DomainError unless |β| ≤ π and δ ≥ 0.
    static RotationParams from_beta(double beta, double validity_margin = 0.0);
    /// β = π/2 + α + δ: the angle that sends the threshold α to −π/2 + δ.
    static RotationParams from_threshold(double alpha, double delta);
};

struct GraphSample {
    Vector x;
    Vector y;
    std::optional<SymMatrix> hessian;
};

/// tan(arctan λ − β). Throws PoleError when cos(arctan λ − β) ≤ 1e-12.
double eigen_rotation_map(double lambda, const RotationParams& params);

/// −aI − (1 + a²)(M − aI)⁻¹, evaluated spectrally. Throws PoleError when some
/// |λᵢ − a| ≤ 1e-12·max(1, ‖M‖_F).
SymMatrix mobius_hessian_map(const SymMatrix& m, double a);

/// Σ arctan λ̄ᵢ of the β-rotated Hessian, with each angle followed
/// continuously along β·t, t ∈ [0, 1], so that a rotation carrying an angle
/// past −π/2 is not folded back by the principal branch.
double rotated_phase_tracked(std::span<const double> lambda, double beta, int steps = 32);

struct RotationResult {
    std::vector<GraphSample> samples;  ///< (x̄, ȳ) with the rotated Hessian
    GridField u_bar;
    /// Largest deviation between path orders of the potential integration.
    double curl_residual = 0.0;
    /// Largest |c x + s Du(x) − x̄| left by the per-node inversion.
    double inversion_residual = 0.0;
};

/// Rotates the gradient graph of u: x̄ = cx + sDu, ȳ = −sx + cDu at every
/// interior node, then resamples ū on a uniform box inscribed in the x̄ image
/// (same node count per axis as u) by inverting x ↦ x̄ with damped Newton on
/// the interpolated gradient. ū is recovered from Dū by trapezoid integration
/// along axis paths from the centre node, averaged over all axis orders, and
/// fixed to 0 at the centre.
///
/// Throws PoleError naming the point and θᵢ − β when the rotation is singular
/// at a node, and DomainError when the x̄ samples fold or collide within
/// spacing/2 (failure of the distance-expansion hypothesis).
RotationResult rotate_graph(const GridField& u, const RotationParams& params);

/// Samples of the gradient graph (x, Du(x), D²u(x)) at interior nodes.
std::vector<GraphSample> graph_samples(const GridField& u);

/// Lower bound c + s·tan γ on |x̄² − x̄¹| / |x² − x¹| for potentials with
/// arctan λ_min ≥ γ. With β = π/2 + α + δ and γ = α + 2δ ≤ 0 it equals
/// c(1 − tan|γ| / tan|α + δ|).
double distance_expansion_bound(const RotationParams& params, double gamma);

/// Minimum of |x̄² − x̄¹| / |x² − x¹| over pairs of samples (x, Du(x)). All
/// pairs are used up to `max_pairs`; beyond that, `max_pairs` random pairs
/// drawn with `seed`. Throws ArgumentError with fewer than two samples.
double distance_expansion_check(const std::vector<GraphSample>& samples,
                                const RotationParams& params, double gamma,
                                std::size_t max_pairs = 20'000'000, std::uint64_t seed = 0);

/// Discrete conjugate w(y) = max_x ⟨x, y⟩ − u(x), one axis at a time, with
/// parabolic refinement of each 1-D maximum (exact on quadratics). The y-grid
/// spans the range of the FD gradient padded 1.05× about its centre, with
/// spacing set by the widest axis at the input node count.
///
/// Throws DomainError with the worst eigenvalue and its location when some FD
/// Hessian has λ_min < −1e-9.
GridField legendre_transform(const GridField& u);

struct LewyTransformResult {
    GridField w_field;
    double m = 0.0;
    std::pair<double, double> mu_range;  ///< min/max of (λᵢ + m)⁻¹ over interior nodes of u
    /// Largest |eig(D²w(y)) − μ| at sampled y = Du(x) + mx well inside the w grid.
    double mu_contract_error = 0.0;
    std::size_t mu_samples = 0;
};

/// Legendre transform of u + m|x|²/2, m = √(2/[n(n−1)]). Throws DomainError
/// naming the point when λ_min + m ≤ 1e-9 at some interior node.
LewyTransformResult legendre_lewy_transform(const GridField& u, int n);

/// μᵢ = (λᵢ + m)⁻¹. Throws DomainError if some λᵢ + m ≤ 0.
Vector mu_from_lambda(std::span<const double> lambda, double m);

}  // namespace slaglab
