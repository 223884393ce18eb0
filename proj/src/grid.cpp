#include "slaglab/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "slaglab/errors.hpp"

namespace slaglab {

namespace {

constexpr const char* kMagic = "slaglab-grid";
constexpr int kVersion = 1;

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

GridField::GridField(std::vector<std::size_t> shape, Vector origin, double spacing, Vector values)
    : shape_(std::move(shape)), origin_(std::move(origin)), spacing_(spacing) {
    if (shape_.size() < 2 || shape_.size() > 3)
        throw ArgumentError("GridField: n_dims must be 2 or 3, got " + std::to_string(shape_.size()));
    if (origin_.size() != shape_.size()) throw ArgumentError("GridField: origin length != n_dims");
    for (std::size_t s : shape_)
        if (s < kMinNodes)
            throw ArgumentError("GridField: every axis needs at least " + std::to_string(kMinNodes) +
                                " nodes, got " + std::to_string(s));
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
        throw ArgumentError("GridField: spacing must be positive and finite");
    for (double o : origin_)
        if (!std::isfinite(o)) throw ArgumentError("GridField: non-finite origin");
    std::size_t stride = 1;
    for (int d = static_cast<int>(shape_.size()) - 1; d >= 0; --d) {
        strides_[d] = stride;
        stride *= shape_[d];
    }
    set_values(std::move(values));
}

GridField::GridField(std::vector<std::size_t> shape, Vector origin, double spacing)
    : GridField(shape, std::move(origin), spacing, Vector(product(shape), 0.0)) {}

GridField GridField::cube(int n_dims, std::size_t nodes, double lo, double hi) {
    if (!(hi > lo)) throw ArgumentError("GridField::cube: empty interval");
    if (nodes < 2) throw ArgumentError("GridField::cube: need at least two nodes");
    return GridField(std::vector<std::size_t>(n_dims, nodes), Vector(n_dims, lo),
                     (hi - lo) / static_cast<double>(nodes - 1));
}

GridField GridField::sample(const GridField& like,
                            const std::function<double(std::span<const double>)>& f) {
    Vector v(like.size());
    for (std::size_t k = 0; k < like.size(); ++k) v[k] = f(like.coords(k));
    return GridField(like.shape(), like.origin(), like.spacing(), std::move(v));
}

void GridField::set_values(Vector values) {
    if (values.size() != product(shape_))
        throw ArgumentError("GridField: " + std::to_string(values.size()) +
                            " values for shape product " + std::to_string(product(shape_)));
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!std::isfinite(values[k]))
            throw DomainError("GridField: non-finite value at flat index " + std::to_string(k));
    values_ = std::move(values);
}

void GridField::set(std::size_t flat, double v) {
    if (!std::isfinite(v))
        throw DomainError("GridField: non-finite value at flat index " + std::to_string(flat));
    values_[flat] = v;
}

std::size_t GridField::flat(const Node& node) const {
    std::size_t f = 0;
    for (int d = 0; d < n_dims(); ++d) f += static_cast<std::size_t>(node[d]) * strides_[d];
    return f;
}

Node GridField::node(std::size_t flat) const {
    Node n{0, 0, 0};
    for (int d = 0; d < n_dims(); ++d) {
        n[d] = static_cast<std::ptrdiff_t>(flat / strides_[d]);
        flat %= strides_[d];
    }
    return n;
}

Vector GridField::coords(const Node& node) const {
    Vector x(n_dims());
    for (int d = 0; d < n_dims(); ++d) x[d] = origin_[d] + spacing_ * static_cast<double>(node[d]);
    return x;
}

Vector GridField::extent() const {
    Vector x(n_dims());
    for (int d = 0; d < n_dims(); ++d)
        x[d] = origin_[d] + spacing_ * static_cast<double>(shape_[d] - 1);
    return x;
}

bool GridField::contains(const Node& node) const {
    for (int d = 0; d < n_dims(); ++d)
        if (node[d] < 0 || node[d] >= static_cast<std::ptrdiff_t>(shape_[d])) return false;
    return true;
}

std::ptrdiff_t GridField::depth(const Node& node) const {
    std::ptrdiff_t best = std::numeric_limits<std::ptrdiff_t>::max();
    for (int d = 0; d < n_dims(); ++d) {
        const auto last = static_cast<std::ptrdiff_t>(shape_[d]) - 1;
        best = std::min({best, node[d], last - node[d]});
    }
    return best;
}

Node GridField::center() const {
    Node n{0, 0, 0};
    for (int d = 0; d < n_dims(); ++d) n[d] = static_cast<std::ptrdiff_t>(shape_[d] / 2);
    return n;
}

bool GridField::same_geometry(const GridField& o) const {
    return shape_ == o.shape_ && origin_ == o.origin_ && spacing_ == o.spacing_;
}

// ---------------------------------------------------------------------------

namespace {

void require_interior(const GridField& u, const Node& node, const char* who) {
    if (!u.contains(node) || !u.is_interior(node))
        throw ArgumentError(std::string(who) + ": node is not strictly interior");
}

}  // namespace

Vector fd_gradient(const GridField& u, const Node& node) {
    require_interior(u, node, "fd_gradient");
    const std::size_t f = u.flat(node);
    const double inv = 1.0 / (2.0 * u.spacing());
    Vector g(u.n_dims());
    for (int d = 0; d < u.n_dims(); ++d) {
        const std::size_t s = u.stride(d);
        g[d] = (u[f + s] - u[f - s]) * inv;
    }
    return g;
}

SymMatrix fd_hessian(const GridField& u, std::size_t f) {
    const int n = u.n_dims();
    const double h2 = u.spacing() * u.spacing();
    SymMatrix m(n);
    for (int d = 0; d < n; ++d) {
        const std::size_t s = u.stride(d);
        m.set(d, d, (u[f + s] - 2.0 * u[f] + u[f - s]) / h2);
        for (int e = d + 1; e < n; ++e) {
            const std::size_t t = u.stride(e);
            m.set(d, e, (u[f + s + t] - u[f + s - t] - u[f - s + t] + u[f - s - t]) / (4.0 * h2));
        }
    }
    return m;
}

SymMatrix fd_hessian(const GridField& u, const Node& node) {
    require_interior(u, node, "fd_hessian");
    return fd_hessian(u, u.flat(node));
}

VectorField gradient_field(const GridField& u) {
    VectorField g(u.n_dims(), GridField(u.shape(), u.origin(), u.spacing()));
    const double inv = 1.0 / (2.0 * u.spacing());
    for (std::size_t f = 0; f < u.size(); ++f) {
        const Node nd = u.node(f);
        for (int d = 0; d < u.n_dims(); ++d) {
            const std::size_t s = u.stride(d);
            const auto last = static_cast<std::ptrdiff_t>(u.shape()[d]) - 1;
            double v;
            if (nd[d] == 0)
                v = (-3.0 * u[f] + 4.0 * u[f + s] - u[f + 2 * s]) * inv;
            else if (nd[d] == last)
                v = (3.0 * u[f] - 4.0 * u[f - s] + u[f - 2 * s]) * inv;
            else
                v = (u[f + s] - u[f - s]) * inv;
            g[d].set(f, v);
        }
    }
    return g;
}

bool inside(const GridField& f, std::span<const double> x, double slack) {
    const Vector hi = f.extent();
    for (int d = 0; d < f.n_dims(); ++d)
        if (x[d] < f.origin()[d] - slack || x[d] > hi[d] + slack) return false;
    return true;
}

double interpolate(const GridField& f, std::span<const double> x) {
    const int n = f.n_dims();
    std::array<std::size_t, 3> base{};
    std::array<double, 3> frac{};
    for (int d = 0; d < n; ++d) {
        const double last = static_cast<double>(f.shape()[d] - 1);
        double t = (x[d] - f.origin()[d]) / f.spacing();
        t = std::clamp(t, 0.0, last);
        double b = std::floor(t);
        if (b >= last) b = last - 1.0;
        base[d] = static_cast<std::size_t>(b);
        frac[d] = t - b;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (int d = 0; d < n; ++d) {
            const int bit = (corner >> d) & 1;
            w *= bit ? frac[d] : 1.0 - frac[d];
            flat += (base[d] + bit) * f.stride(d);
        }
        if (w != 0.0) acc += w * f[flat];
    }
    return acc;
}

ResidualField residual_field(const GridField& u, const OperatorModel& op) {
    if (u.n_dims() != op.n)
        throw ArgumentError("residual_field: operator dimension " + std::to_string(op.n) +
                            " != grid dimension " + std::to_string(u.n_dims()));
    ResidualField r{GridField(u.shape(), u.origin(), u.spacing()),
                    std::vector<bool>(u.size(), false), 0.0, 0};
    for (std::size_t f = 0; f < u.size(); ++f) {
        if (u.depth(f) < 1) continue;
        const SymMatrix h = fd_hessian(u, f);
        const double res = op.evaluate(h) - op.level;
        r.residual.set(f, res);
        r.sup_norm = std::max(r.sup_norm, std::abs(res));
        if (op.kind == OperatorKind::sigma2_positive_branch && !(h.trace() > 0.0)) {
            r.off_branch[f] = true;
            ++r.off_branch_count;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
    return v;
}

}  // namespace

void write_field(std::ostream& out, const GridField& f) {
    nlohmann::ordered_json h;
    h["magic"] = kMagic;
    h["version"] = kVersion;
    h["n_dims"] = f.n_dims();
    h["shape"] = f.shape();
    h["origin"] = f.origin();
    h["spacing"] = f.spacing();
    h["count"] = f.size();
    out << h.dump() << '\n';
    for (double v : f.values()) {
        const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
        char buf[8];
        std::memcpy(buf, &bits, 8);
        out.write(buf, 8);
    }
    if (!out) throw Error("write_field: stream error");
}

void write_field(const std::string& path, const GridField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_field: cannot open '" + path + "'");
    write_field(out, f);
}

GridField decode_field(const std::string& bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) throw ParseError("grid header: missing newline", bytes.size());
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("grid header: ") + e.what(), e.byte);
    }
    try {
        if (!h.is_object() || h.value("magic", std::string()) != kMagic)
            throw ParseError("grid header: bad magic", 0);
        const int version = h.value("version", kVersion);
        if (version != kVersion)
            throw ParseError("grid header: unsupported version " + std::to_string(version), 0);
        if (!h.contains("shape") || !h.contains("spacing"))
            throw ParseError("grid header: shape and spacing are required", 0);
        const auto shape = h.at("shape").get<std::vector<std::size_t>>();
        const int n_dims = h.value("n_dims", static_cast<int>(shape.size()));
        if (n_dims != static_cast<int>(shape.size()))
            throw ParseError("grid header: n_dims disagrees with shape", 0);
        const Vector origin = h.contains("origin") ? h.at("origin").get<Vector>() : Vector(n_dims, 0.0);
        const double spacing = h.at("spacing").get<double>();
        const std::size_t expected = product(shape);
        const std::size_t count = h.value("count", expected);
        if (count != expected)
            throw ParseError("grid header: count " + std::to_string(count) +
                                 " != shape product " + std::to_string(expected),
                             0);
        const std::size_t payload = bytes.size() - nl - 1;
        if (payload != count * 8)
            throw ParseError("grid payload: " + std::to_string(payload) + " bytes for " +
                                 std::to_string(count) + " values",
                             nl + 1);
        Vector values(count);
        for (std::size_t k = 0; k < count; ++k) {
            std::uint64_t bits;
            std::memcpy(&bits, bytes.data() + nl + 1 + 8 * k, 8);
            values[k] = std::bit_cast<double>(to_little_endian(bits));
            if (!std::isfinite(values[k]))
                throw ParseError("grid payload: non-finite value", nl + 1 + 8 * k);
        }
        try {
            return GridField(shape, origin, spacing, std::move(values));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(std::string("grid header: ") + e.what(), 0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("grid header: ") + e.what(), 0);
    }
}

std::string encode_field(const GridField& f) {
    std::ostringstream out(std::ios::binary);
    write_field(out, f);
    return out.str();
}

GridField read_field(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_field(buf.str());
}

GridField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_field: cannot open '" + path + "'");
    return read_field(in);
}

}  // namespace slaglab
