#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slaglab/matrix.hpp"
#include "slaglab/operators.hpp"

namespace slaglab {

class Rng;

/// Value, gradient and Hessian of a potential at one point.
struct Jet {
    double value = 0.0;
    Vector gradient;
    SymMatrix hessian;
};

/// W(x) = (x₁² + x₂² − 1)e^{x₃} + e^{−x₃}/4: σ₂(D²W) = 1 with σ₁ > 0,
/// equivalently Σ arctan λᵢ = π/2 (critical phase in n = 3).
Jet eval_warren(std::span<const double> x);

/// L(x) = x₁²x₂ − (2/3)x₂³ − x₂x₃: △L = det D²L, equivalently Σ arctan λᵢ = 0.
Jet eval_li(std::span<const double> x);

/// ½⟨x, Qx⟩ + ⟨b, x⟩ + c.
Jet eval_quadratic(const SymMatrix& q, std::span<const double> b, double c,
                   std::span<const double> x);

/// A named closed-form potential with its default evaluation box [−h, h]ⁿ.
struct CatalogEntry {
    std::string name;
    int n = 3;
    std::optional<double> theta;  ///< phase, when the entry solves the phase equation
    std::string equation;         ///< human-readable equation tag
    std::function<Jet(std::span<const double>)> evaluator;
    double box_half_width = 1.0;
};

/// "warren" (box 1.5), "li" (box 1.0), "quadratic" (Q = diag(1,1,0), solves σ₂ = 1),
/// "hom2" (the 2-homogeneous extension of ½⟨ξ, diag(1,0,−1)ξ⟩, Θ = 0).
CatalogEntry catalog_entry(const std::string& name);
std::vector<std::string> catalog_names();

/// Angle box for the free coordinates of the level-set sampler.
struct LevelSetBox {
    double angle_lo = -1.5697963267948966;  // ±(π/2 − 1e-3)
    double angle_hi = 1.5697963267948966;
    int max_attempts = 10000;
};

/// Completes free λ₁…λ_{n−1} to a point on Σ arctan λᵢ = Θ by
/// λₙ = tan(Θ − Σ arctan λᵢ). Empty when the residual angle leaves (−π/2, π/2).
std::optional<Vector> complete_level_set(const PhaseSpec& spec, std::span<const double> free);

/// Random point on the level set: free angles uniform on the box, rejection on
/// the residual angle. Throws ConvergenceError when the attempt budget is spent.
Vector sample_level_set(const PhaseSpec& spec, Rng& rng, const LevelSetBox& box = {});
Vector sample_level_set(const PhaseSpec& spec, std::uint64_t rng_seed, const LevelSetBox& box = {});

/// Jet of a function g on the unit sphere, expressed through its degree-0
/// homogeneous extension G(x) = g(x/|x|): value, DG(ξ) (tangential) and the
/// ambient Hessian D²G(ξ).
struct SphereJet {
    double value = 0.0;
    Vector gradient;
    SymMatrix hessian;
};

class SphereFunction {
public:
    virtual ~SphereFunction() = default;
    virtual int dim() const = 0;
    /// ξ must be a unit vector.
    virtual SphereJet eval(std::span<const double> xi) const = 0;
};

/// g(ξ) = ½⟨ξ, Aξ⟩ with exact derivatives of the 0-homogeneous extension.
class QuadraticSphereFunction final : public SphereFunction {
public:
    explicit QuadraticSphereFunction(SymMatrix a);
    int dim() const override { return static_cast<int>(a_.dim()); }
    SphereJet eval(std::span<const double> xi) const override;
    const SymMatrix& matrix() const noexcept { return a_; }

private:
    SymMatrix a_;
};

/// Sphere function given by a closed-form 0-homogeneous extension jet.
class AnalyticSphereFunction final : public SphereFunction {
public:
    AnalyticSphereFunction(int n, std::function<SphereJet(std::span<const double>)> f);
    int dim() const override { return n_; }
    SphereJet eval(std::span<const double> xi) const override { return f_(xi); }

private:
    int n_;
    std::function<SphereJet(std::span<const double>)> f_;
};

/// Icosphere sampling of a sphere function in ℝ³ with barycentric
/// interpolation of the jet. `subdivisions` = 0 is the bare icosahedron
/// (12 vertices); each level quadruples the face count.
class GeodesicSphereFunction final : public SphereFunction {
public:
    GeodesicSphereFunction(const SphereFunction& source, int subdivisions);
    int dim() const override { return 3; }
    SphereJet eval(std::span<const double> xi) const override;

    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    const std::vector<Vector>& vertices() const noexcept { return vertices_; }

private:
    std::vector<Vector> vertices_;
    std::vector<std::array<std::size_t, 3>> faces_;
    std::vector<SphereJet> samples_;
};

/// Vertices of a subdivided icosahedron on the unit sphere.
std::vector<Vector> icosphere_vertices(int subdivisions);

/// u(x) = |x|² g(x/|x|). Throws DomainError at x = 0.
Jet homogeneous2_extension(const SphereFunction& g, std::span<const double> x);

}  // namespace slaglab
