#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "slaglab/matrix.hpp"
#include "slaglab/operators.hpp"

namespace slaglab {

/// Multi-index of a grid node; entries past n_dims are zero.
using Node = std::array<std::ptrdiff_t, 3>;

/// Scalar field on a uniform rectangular grid with equal spacing on every
/// axis. Values are row-major with the last axis fastest.
class GridField {
public:
    static constexpr std::size_t kMinNodes = 5;

    GridField() = default;
    /// Throws ArgumentError on bad shape/spacing and DomainError on non-finite values.
    GridField(std::vector<std::size_t> shape, Vector origin, double spacing, Vector values);
    /// Zero-filled.
    GridField(std::vector<std::size_t> shape, Vector origin, double spacing);

    /// Cube [lo, hi]^d with `nodes` nodes per axis.
    static GridField cube(int n_dims, std::size_t nodes, double lo, double hi);
    /// Same geometry as `like`, values f(x) at each node.
    static GridField sample(const GridField& like, const std::function<double(std::span<const double>)>& f);

    int n_dims() const noexcept { return static_cast<int>(shape_.size()); }
    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    const Vector& origin() const noexcept { return origin_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    /// Replaces all values (checked finite).
    void set_values(Vector values);
    double operator[](std::size_t flat) const { return values_[flat]; }
    double at(const Node& node) const { return values_[flat(node)]; }
    void set(std::size_t flat, double v);

    std::size_t flat(const Node& node) const;
    Node node(std::size_t flat) const;
    /// Stride of axis d in the flat array.
    std::size_t stride(int d) const noexcept { return strides_[d]; }
    Vector coords(const Node& node) const;
    Vector coords(std::size_t flat) const { return coords(node(flat)); }
    /// Upper corner of the grid.
    Vector extent() const;

    bool contains(const Node& node) const;
    /// Number of node layers between `node` and the nearest face (0 = on the boundary).
    std::ptrdiff_t depth(const Node& node) const;
    std::ptrdiff_t depth(std::size_t flat) const { return depth(node(flat)); }
    bool is_interior(const Node& node) const { return depth(node) >= 1; }
    Node center() const;

    bool same_geometry(const GridField& o) const;

private:
    std::vector<std::size_t> shape_;
    Vector origin_;
    double spacing_ = 0.0;
    Vector values_;
    std::array<std::size_t, 3> strides_{};
};

/// Vector fields are tuples of scalar fields on a shared grid.
using VectorField = std::vector<GridField>;

/// Second-order central gradient. Throws ArgumentError off the interior.
Vector fd_gradient(const GridField& u, const Node& node);

/// Second-order central Hessian: 3-point diagonal stencil, 4-point cross for
/// mixed entries. Throws ArgumentError off the interior.
SymMatrix fd_hessian(const GridField& u, const Node& node);
SymMatrix fd_hessian(const GridField& u, std::size_t flat);

/// Gradient at every node: central in the interior, second-order one-sided on
/// faces.
VectorField gradient_field(const GridField& u);

/// Multilinear interpolation; points outside the grid are clamped to it.
double interpolate(const GridField& f, std::span<const double> x);
bool inside(const GridField& f, std::span<const double> x, double slack = 0.0);

struct ResidualField {
    GridField residual;        ///< F(D²u) − level at interior nodes, 0 on the boundary
    std::vector<bool> off_branch;  ///< σ₂ only: interior nodes with σ₁ ≤ 0
    double sup_norm = 0.0;
    std::size_t off_branch_count = 0;
};

ResidualField residual_field(const GridField& u, const OperatorModel& op);

/// Binary grid format: one JSON header line followed by `count` little-endian
/// IEEE-754 doubles.
void write_field(std::ostream& out, const GridField& f);
void write_field(const std::string& path, const GridField& f);
GridField read_field(std::istream& in);
GridField read_field(const std::string& path);
std::string encode_field(const GridField& f);
GridField decode_field(const std::string& bytes);

}  // namespace slaglab
