#include "slaglab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "slaglab/catalog.hpp"
#include "slaglab/errors.hpp"
#include "slaglab/random.hpp"
#include "slaglab/spectral.hpp"

namespace slaglab {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kWideRange = 1e8;
}  // namespace

std::string to_string(PhaseClass c) {
    switch (c) {
        case PhaseClass::subcritical: return "subcritical";
        case PhaseClass::critical: return "critical";
        case PhaseClass::supercritical: return "supercritical";
    }
    return "?";
}

double PhaseSpec::critical_phase() const { return (n - 2) * kPi / 2.0; }

PhaseSpec classify_phase(int n, double theta) {
    if (n < 2) throw DomainError("classify_phase: n must be at least 2");
    if (!std::isfinite(theta) || std::abs(theta) >= n * kPi / 2.0)
        throw DomainError("classify_phase: |theta| must be below n*pi/2 = " +
                          std::to_string(n * kPi / 2.0));
    PhaseSpec p;
    p.n = n;
    p.theta = theta;
    const double crit = p.critical_phase();
    const double mag = std::abs(theta);
    p.classification = mag > crit   ? PhaseClass::supercritical
                       : mag == crit ? PhaseClass::critical
                                     : PhaseClass::subcritical;
    p.lower_threshold = (theta - kPi) / n;
    p.upper_threshold = (theta + kPi) / n;
    return p;
}

double slag_phase(std::span<const double> lambda) {
    double s = 0.0;
    for (double l : lambda) s += std::atan(l);
    return s;
}

double slag_phase(const SymMatrix& m) { return slag_phase(eigenvalues(m)); }

SymMatrix slag_linearization(const SymMatrix& m) {
    return spectral_apply(eig_sym(m), [](double l) { return 1.0 / (1.0 + l * l); });
}

Sigma2Value sigma2_positive_branch(const SymMatrix& m) {
    const double tr = m.trace();
    double sq = 0.0;
    for (double v : m.data()) sq += v * v;
    return {0.5 * (tr * tr - sq), tr > 0.0};
}

namespace {

void require_positive(std::span<const double> mu) {
    if (mu.size() < 2) throw ArgumentError("lambda_ratio: need at least two entries");
    for (double v : mu)
        if (!(v > 0.0))
            throw DomainError("lambda_ratio: entries must be positive, got " + std::to_string(v));
}

bool wide_range(std::span<const double> mu) {
    const auto [lo, hi] = std::minmax_element(mu.begin(), mu.end());
    return *hi / *lo > kWideRange;
}

}  // namespace

double lambda_ratio(std::span<const double> mu) {
    require_positive(mu);
    const std::size_t n = mu.size();
    if (wide_range(mu)) {
        Vector nu(n);
        for (std::size_t i = 0; i < n; ++i) nu[i] = 1.0 / mu[i];
        const Vector e = elementary_symmetric(nu);
        return e[1] / e[2];
    }
    const Vector e = elementary_symmetric(mu);
    return e[n - 1] / e[n - 2];
}

Vector lambda_ratio_gradient(std::span<const double> mu) {
    require_positive(mu);
    const std::size_t n = mu.size();
    const Vector e = elementary_symmetric(mu);
    Vector g(n);
    Vector rest(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0, r = 0; k < n; ++k)
            if (k != i) rest[r++] = mu[k];
        const Vector er = elementary_symmetric(rest);
        const double d_top = er[n - 2];
        const double d_bot = n >= 3 ? er[n - 3] : 0.0;
        g[i] = (d_top * e[n - 2] - e[n - 1] * d_bot) / (e[n - 2] * e[n - 2]);
    }
    return g;
}

double lewy_shift(int n) {
    if (n < 2) throw DomainError("lewy_shift: n must be at least 2");
    return std::sqrt(2.0 / (n * (n - 1.0)));
}

std::string to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::slag_phase: return "slag";
        case OperatorKind::sigma2_positive_branch: return "sigma2";
        case OperatorKind::lambda_ratio: return "lambda";
    }
    return "?";
}

OperatorKind operator_kind_from_string(const std::string& s) {
    if (s == "slag") return OperatorKind::slag_phase;
    if (s == "sigma2") return OperatorKind::sigma2_positive_branch;
    if (s == "lambda") return OperatorKind::lambda_ratio;
    throw ArgumentError("unknown operator '" + s + "' (expected slag|sigma2|lambda)");
}

OperatorModel OperatorModel::slag(int n, double theta) {
    classify_phase(n, theta);
    return {OperatorKind::slag_phase, n, theta};
}

OperatorModel OperatorModel::sigma2(int n) {
    if (n < 2) throw DomainError("sigma2 operator needs n >= 2");
    return {OperatorKind::sigma2_positive_branch, n, 1.0};
}

OperatorModel OperatorModel::lambda_ratio(int n) {
    return {OperatorKind::lambda_ratio, n, 1.0 / ((n - 1) * lewy_shift(n))};
}

double OperatorModel::evaluate(const SymMatrix& m) const {
    switch (kind) {
        case OperatorKind::slag_phase: return slag_phase(m);
        case OperatorKind::sigma2_positive_branch: return sigma2_positive_branch(m).value;
        case OperatorKind::lambda_ratio: return slaglab::lambda_ratio(eigenvalues(m));
    }
    return 0.0;
}

double OperatorModel::evaluate_eigenvalues(std::span<const double> lambda) const {
    switch (kind) {
        case OperatorKind::slag_phase: return slag_phase(lambda);
        case OperatorKind::sigma2_positive_branch: return sigma_k(lambda, 2);
        case OperatorKind::lambda_ratio: return slaglab::lambda_ratio(lambda);
    }
    return 0.0;
}

Vector OperatorModel::eigenvalue_gradient(std::span<const double> lambda) const {
    Vector g(lambda.size());
    switch (kind) {
        case OperatorKind::slag_phase:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.0 / (1.0 + lambda[i] * lambda[i]);
            return g;
        case OperatorKind::sigma2_positive_branch: {
            double s1 = 0.0;
            for (double l : lambda) s1 += l;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = s1 - lambda[i];
            return g;
        }
        case OperatorKind::lambda_ratio: return lambda_ratio_gradient(lambda);
    }
    return g;
}

SymMatrix OperatorModel::linearization(const SymMatrix& m) const {
    switch (kind) {
        case OperatorKind::slag_phase: return slag_linearization(m);
        case OperatorKind::sigma2_positive_branch: {
            SymMatrix l = -1.0 * m;
            const double tr = m.trace();
            for (std::size_t i = 0; i < m.dim(); ++i) l.add(i, i, tr);
            return l;
        }
        case OperatorKind::lambda_ratio: {
            const Spectrum s = eig_sym(m);
            return SymMatrix::from_spectrum(s.eigenvectors, lambda_ratio_gradient(s.eigenvalues));
        }
    }
    return m;
}

bool OperatorModel::admissible(const SymMatrix& m) const {
    switch (kind) {
        case OperatorKind::slag_phase: return true;
        case OperatorKind::sigma2_positive_branch: return m.trace() > 0.0;
        case OperatorKind::lambda_ratio: return eig_sym(m).min() > 0.0;
    }
    return false;
}

// ---------------------------------------------------------------------------

ProbeSide probe_side(const PhaseSpec& spec) {
    const double crit = spec.critical_phase();
    if (spec.theta <= -crit) return ProbeSide::concave;
    if (spec.theta >= crit) return ProbeSide::convex;
    throw DomainError("level-set probe: theta " + std::to_string(spec.theta) +
                      " lies in the open subcritical band; probe not asserted");
}

double midpoint_margin(const PhaseSpec& spec, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(spec.n))
        throw ArgumentError("midpoint_margin: eigenvalue vectors must have length n");
    Vector mid(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
    const double f = slag_phase(mid) - spec.theta;
    return probe_side(spec) == ProbeSide::concave ? f : -f;
}

ProbeReport level_set_concavity_probe(const PhaseSpec& spec, int trials, std::uint64_t rng_seed,
                                      double violation_tol) {
    if (trials < 0) throw ArgumentError("level_set_concavity_probe: negative trial count");
    ProbeReport r;
    r.theta = spec.theta;
    r.n = spec.n;
    r.trials = trials;
    r.seed = rng_seed;
    r.side = probe_side(spec);
    r.worst_margin = -std::numeric_limits<double>::infinity();
    Rng rng(rng_seed);
    for (int t = 0; t < trials; ++t) {
        const Vector a = sample_level_set(spec, rng);
        const Vector b = sample_level_set(spec, rng);
        const double margin = midpoint_margin(spec, a, b);
        r.worst_margin = std::max(r.worst_margin, margin);
        if (margin > violation_tol) ++r.violations;
    }
    if (trials == 0) r.worst_margin = 0.0;
    return r;
}

}  // namespace slaglab
