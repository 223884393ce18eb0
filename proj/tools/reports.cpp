#include "reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "slaglab/errors.hpp"

namespace slaglab::cli {

json to_json(const Node& node, int n_dims) {
    json a = json::array();
    for (int d = 0; d < n_dims; ++d) a.push_back(node[static_cast<std::size_t>(d)]);
    return a;
}

json to_json(const SolveReport& r) {
    return {{"iterations", r.iterations},
            {"final_residual", r.final_residual},
            {"min_ellipticity", r.min_ellipticity},
            {"branch_flag", r.branch_flag},
            {"converged", r.converged},
            {"status", r.status},
            {"residual_history", r.residual_history}};
}

json to_json(const ProbeReport& r) {
    return {{"theta", r.theta},   {"n", r.n},
            {"trials", r.trials}, {"violations", r.violations},
            {"worst_margin", r.worst_margin}, {"seed", r.seed},
            {"side", r.side == ProbeSide::concave ? "concave" : "convex"}};
}

json to_json(const RankReport& r) {
    json sites = json::array();
    for (const auto& s : r.interior_min_sites) sites.push_back(to_json(s, r.rank.n_dims()));
    const auto lo = r.lambda_min_field.values();
    const auto hi = r.lambda_max_field.values();
    return {{"shift", r.shift},
            {"tol_rank", r.tol_rank},
            {"min_rank", r.min_rank},
            {"max_rank", r.max_rank},
            {"constant_rank", r.min_rank == r.max_rank},
            {"lambda_min_range", {*std::min_element(lo.begin(), lo.end()), *std::max_element(lo.begin(), lo.end())}},
            {"lambda_max_range", {*std::min_element(hi.begin(), hi.end()), *std::max_element(hi.begin(), hi.end())}},
            {"threshold_margin", r.threshold_margin},
            {"interior_min_sites", sites}};
}

json to_json(const MinPrincipleReport& r, int n_dims) {
    json sites = json::array();
    for (const auto& s : r.interior_min_sites) sites.push_back(to_json(s, n_dims));
    return {{"verdict", to_string(r.verdict)}, {"spread", r.spread},       {"tol", r.tol},
            {"min_value", r.min_value},        {"plateau_sites", r.plateau_sites},
            {"interior_min_sites", sites}};
}

json to_json(const SplitReport& r) {
    return {{"verdict", to_string(r.verdict)},
            {"direction", r.direction},
            {"eigenvalue_spread", r.eigenvalue_spread},
            {"direction_spread", r.direction_spread},
            {"u_ee", r.u_ee},
            {"threshold_margin", r.threshold_margin}};
}

json to_json(const Hom2Audit& r) {
    return {{"verdict", to_string(r.verdict)},
            {"samples", r.samples},
            {"equation_residual", r.equation_residual},
            {"min_lambda_min", r.min_lambda_min},
            {"min_arctan_lambda_min", r.min_arctan_lambda_min},
            {"margin", r.margin},
            {"tan_pi5_applies", r.tan_pi5_applies},
            {"below_minus_tan_pi5", r.below_minus_tan_pi5},
            {"quadratic_deviation", r.quadratic_deviation}};
}

json to_json(const ViscosityReport& r) {
    return {{"inequality", to_string(r.id)},
            {"spacing", r.spacing},
            {"sites_checked", r.sites_checked},
            {"simple_sites", r.simple_sites},
            {"partial_sum_sites", r.partial_sum_sites},
            {"excluded_sites", r.excluded_sites},
            {"worst_violation", r.worst_violation},
            {"drift_bound", r.drift_bound},
            {"b_fit", r.b_fit},
            {"c_fit", r.c_fit},
            {"max_residual", r.max_residual},
            {"notes", r.notes}};
}

json describe(const GridField& f) {
    const auto v = f.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return {{"n_dims", f.n_dims()}, {"shape", f.shape()}, {"origin", f.origin()},
            {"spacing", f.spacing()}, {"min", *lo}, {"max", *hi}};
}

Slice slice_of(const GridField& f, const std::string& spec) {
    const auto& shape = f.shape();
    Slice s;
    if (f.n_dims() == 2) {
        s.rows = shape[0];
        s.cols = shape[1];
        s.values.assign(f.values().begin(), f.values().end());
        return s;
    }
    int axis = 2;
    std::ptrdiff_t index = static_cast<std::ptrdiff_t>(shape[2] / 2);
    if (!spec.empty()) {
        const auto eq = spec.find('=');
        if (eq != 1 || std::string("xyz").find(spec[0]) == std::string::npos)
            throw ArgumentError("slice must look like z=0, got '" + spec + "'");
        axis = static_cast<int>(std::string("xyz").find(spec[0]));
        double value = 0.0;
        try {
            value = std::stod(spec.substr(2));
        } catch (const std::exception&) {
            throw ArgumentError("slice coordinate is not a number: '" + spec + "'");
        }
        const auto a = static_cast<std::size_t>(axis);
        const double t = std::round((value - f.origin()[a]) / f.spacing());
        index = static_cast<std::ptrdiff_t>(std::clamp(t, 0.0, static_cast<double>(shape[a] - 1)));
    }
    int other[2];
    for (int d = 0, k = 0; d < 3; ++d)
        if (d != axis) other[k++] = d;
    s.rows = shape[static_cast<std::size_t>(other[0])];
    s.cols = shape[static_cast<std::size_t>(other[1])];
    for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t j = 0; j < s.cols; ++j) {
            Node node{};
            node[static_cast<std::size_t>(axis)] = index;
            node[static_cast<std::size_t>(other[0])] = static_cast<std::ptrdiff_t>(i);
            node[static_cast<std::size_t>(other[1])] = static_cast<std::ptrdiff_t>(j);
            s.values.push_back(f.at(node));
        }
    return s;
}

void write_csv(const std::string& path, const Slice& s) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    out.precision(17);
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t j = 0; j < s.cols; ++j) out << (j ? "," : "") << s.values[i * s.cols + j];
        out << '\n';
    }
}

void write_pgm(const std::string& path, const Slice& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write " + path);
    const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
    const double span = *hi - *lo;
    out << "P5\n" << s.cols << ' ' << s.rows << "\n255\n";
    for (double v : s.values) {
        const double t = span > 0.0 ? (v - *lo) / span : 0.0;
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
}

}  // namespace slaglab::cli
