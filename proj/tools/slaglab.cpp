#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reports.hpp"
#include "slaglab/catalog.hpp"
#include "slaglab/errors.hpp"
#include "slaglab/grid.hpp"
#include "slaglab/parallel.hpp"
#include "slaglab/random.hpp"
#include "slaglab/rank.hpp"
#include "slaglab/solver.hpp"
#include "slaglab/spectral.hpp"
#include "slaglab/transforms.hpp"
#include "slaglab/viscosity.hpp"

namespace {

using namespace slaglab;
using cli::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { number, integer, text, flag };

struct Param {
    std::string key;
    Kind kind;
    std::string help;
};

// Effective configuration: JSON file values overridden by flags.
class Params {
public:
    json cfg = json::object();

    bool has(const std::string& k) const { return cfg.contains(k); }
    double num(const std::string& k) const {
        if (!has(k)) throw UsageError("missing --" + flag_name(k));
        return cfg[k].get<double>();
    }
    double num(const std::string& k, double def) const { return has(k) ? cfg[k].get<double>() : def; }
    long integer(const std::string& k, long def) const { return has(k) ? cfg[k].get<long>() : def; }
    std::string text(const std::string& k) const {
        if (!has(k)) throw UsageError("missing --" + flag_name(k));
        return cfg[k].get<std::string>();
    }
    std::string text(const std::string& k, const std::string& def) const {
        return has(k) ? cfg[k].get<std::string>() : def;
    }
    bool flag(const std::string& k) const { return has(k) && cfg[k].get<bool>(); }

    static std::string flag_name(std::string k) {
        for (auto& c : k)
            if (c == '_') c = '-';
        return k;
    }
};

struct Outcome {
    json result;
    bool pass = true;
    std::string report_path;  // empty: stdout
};

using Runner = std::function<Outcome(Params&)>;

class Command {
public:
    Command(CLI::App& parent, const std::string& name, const std::string& help, std::vector<Param> params, Runner run)
        : name_(parent.get_parent() ? parent.get_name() + " " + name : name),
          params_(std::move(params)),
          run_(std::move(run)) {
        app_ = parent.add_subcommand(name, help);
        app_->add_option("--config", config_path_, "JSON config; flags override its keys");
        for (const auto& p : params_) {
            const std::string f = "--" + Params::flag_name(p.key);
            if (p.kind == Kind::flag)
                app_->add_flag(f, p.help);
            else
                app_->add_option(f, raw_[p.key], p.help);
        }
    }

    CLI::App* app() const { return app_; }
    const std::string& name() const { return name_; }
    /// Commands that write a field take the report path from --json.
    std::string report_key() const { return find("json") ? "json" : "out"; }

    Params effective() const {
        Params p;
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw UsageError("cannot open config '" + config_path_ + "'");
            json file;
            try {
                file = json::parse(in);
            } catch (const json::exception& e) {
                throw UsageError("config '" + config_path_ + "' is not valid JSON: " + e.what());
            }
            if (!file.is_object()) throw UsageError("config must be a JSON object");
            for (auto it = file.begin(); it != file.end(); ++it) {
                const Param* spec = find(it.key());
                if (!spec) throw UsageError("unknown config key '" + it.key() + "'");
                check_type(*spec, it.value());
                p.cfg[it.key()] = it.value();
            }
        }
        for (const auto& spec : params_) {
            const std::string f = "--" + Params::flag_name(spec.key);
            if (app_->count(f) == 0) continue;
            p.cfg[spec.key] = convert(spec, spec.kind == Kind::flag ? std::string("true") : raw_.at(spec.key));
        }
        return p;
    }

    Outcome run(Params& p) const { return run_(p); }

private:
    const Param* find(const std::string& key) const {
        for (const auto& p : params_)
            if (p.key == key) return &p;
        return nullptr;
    }

    static void check_type(const Param& spec, const json& v) {
        const bool ok = (spec.kind == Kind::number && v.is_number()) ||
                        (spec.kind == Kind::integer && v.is_number_integer()) ||
                        (spec.kind == Kind::text && v.is_string()) || (spec.kind == Kind::flag && v.is_boolean());
        if (!ok) throw UsageError("config key '" + spec.key + "' has the wrong type");
    }

    static json convert(const Param& spec, const std::string& s) {
        try {
            std::size_t used = 0;
            switch (spec.kind) {
                case Kind::number: {
                    const double v = std::stod(s, &used);
                    if (used != s.size() || !std::isfinite(v)) break;
                    return v;
                }
                case Kind::integer: {
                    const long v = std::stol(s, &used);
                    if (used != s.size()) break;
                    return v;
                }
                case Kind::text: return s;
                case Kind::flag: return true;
            }
        } catch (const std::exception&) {
        }
        throw UsageError("--" + Params::flag_name(spec.key) + ": cannot parse '" + s + "'");
    }

    std::string name_;
    std::vector<Param> params_;
    Runner run_;
    CLI::App* app_ = nullptr;
    std::string config_path_;
    std::map<std::string, std::string> raw_;
};

void write_report(const json& report, const std::string& path) {
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write report '" + path + "'");
    out << text;
}

GridField load_field(const Params& p, const std::string& key) {
    const std::string path = p.text(key);
    if (!std::filesystem::exists(path)) throw UsageError("--" + Params::flag_name(key) + ": no such file '" + path + "'");
    return read_field(path);
}

OperatorModel make_operator(const Params& p, int n) {
    const OperatorKind kind = operator_kind_from_string(p.text("op"));
    switch (kind) {
        case OperatorKind::slag_phase: return OperatorModel::slag(n, p.num("theta"));
        case OperatorKind::sigma2_positive_branch: return OperatorModel::sigma2(n);
        case OperatorKind::lambda_ratio: return OperatorModel::lambda_ratio(n);
    }
    return OperatorModel::sigma2(n);
}

GridField sample_entry(const CatalogEntry& e, double box, long nodes) {
    if (nodes < static_cast<long>(GridField::kMinNodes)) throw UsageError("--nodes must be at least 5");
    if (!(box > 0.0)) throw UsageError("--box must be positive");
    const GridField g = GridField::cube(e.n, static_cast<std::size_t>(nodes), -box, box);
    return GridField::sample(g, [&](std::span<const double> x) { return e.evaluator(x).value; });
}

// ---------------------------------------------------------------------------

Outcome verify_catalog(Params& p) {
    const CatalogEntry e = catalog_entry(p.text("entry"));
    const double box = p.num("box", e.box_half_width);
    const long nodes = p.integer("nodes", 9);
    const double tol = p.num("tol", 1e-11);
    const GridField g = sample_entry(e, box, nodes);

    double eq = 0.0, phase = 0.0, grad_err = 0.0;
    std::size_t off_branch = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Vector x = g.coords(k);
        const Jet j = e.evaluator(x);
        const Vector ev = eigenvalues(j.hessian);
        if (e.name == "li") {
            eq = std::max(eq, std::abs(j.hessian.trace() - determinant(j.hessian.as_matrix())));
        } else if (e.name == "hom2") {
            eq = std::max(eq, std::abs(slag_phase(ev) - *e.theta));
        } else {
            const Sigma2Value s = sigma2_positive_branch(j.hessian);
            eq = std::max(eq, std::abs(s.value - 1.0));
            off_branch += s.on_branch ? 0 : 1;
        }
        if (e.theta) phase = std::max(phase, std::abs(slag_phase(ev) - *e.theta));
        if (g.is_interior(g.node(k))) {
            const Vector fd = fd_gradient(g, g.node(k));
            for (std::size_t d = 0; d < fd.size(); ++d) grad_err = std::max(grad_err, std::abs(fd[d] - j.gradient[d]));
        }
    }
    Outcome o;
    o.result = {{"entry", e.name},
                {"equation", e.equation},
                {"box", box},
                {"nodes", nodes},
                {"max_equation_residual", eq},
                {"max_phase_residual", phase},
                {"off_branch_nodes", off_branch},
                {"fd_gradient_error", grad_err}};
    o.pass = eq < tol && off_branch == 0;
    o.report_path = p.text("out", "");
    return o;
}

Outcome solve_cmd(Params& p) {
    const GridField boundary = load_field(p, "boundary");
    const int n = static_cast<int>(p.integer("n", boundary.n_dims()));
    if (n != boundary.n_dims()) throw UsageError("--n differs from the boundary field dimension");
    const OperatorModel op = make_operator(p, n);
    SolveConfig cfg;
    cfg.residual_tol = p.num("tol", cfg.residual_tol);
    cfg.max_newton_iters = static_cast<int>(p.integer("max_iters", cfg.max_newton_iters));
    cfg.validate();
    std::optional<GridField> initial;
    if (p.has("initial")) initial = load_field(p, "initial");
    const SolveResult r = solve_dirichlet(op, boundary, cfg, initial);
    if (p.has("out")) write_field(p.text("out"), r.u);
    Outcome o;
    o.result = {{"operator", to_string(op.kind)}, {"level", op.level}, {"report", cli::to_json(r.report)},
                {"field", cli::describe(r.u)}};
    o.pass = r.report.converged;
    o.report_path = p.text("json", "");
    return o;
}

Outcome rotate(Params& p) {
    const GridField u = load_field(p, "in");
    const RotationParams rp = RotationParams::from_beta(p.num("beta"), p.num("delta", 0.0));
    const RotationResult r = rotate_graph(u, rp);
    if (p.has("out")) write_field(p.text("out"), r.u_bar);

    const std::size_t n = static_cast<std::size_t>(u.n_dims());
    Vector lo(n, std::numeric_limits<double>::infinity()), hi(n, -std::numeric_limits<double>::infinity());
    for (const auto& s : r.samples) {
        if (!s.hessian) continue;
        const Vector ev = eigenvalues(*s.hessian);
        for (std::size_t i = 0; i < n; ++i) {
            lo[i] = std::min(lo[i], ev[i]);
            hi[i] = std::max(hi[i], ev[i]);
        }
    }
    Outcome o;
    o.result = {{"beta", rp.beta},
                {"alpha", rp.alpha},
                {"samples", r.samples.size()},
                {"curl_residual", r.curl_residual},
                {"inversion_residual", r.inversion_residual},
                {"rotated_eigenvalue_min", lo},
                {"rotated_eigenvalue_max", hi},
                {"field", cli::describe(r.u_bar)}};
    if (p.has("gamma")) {
        const double gamma = p.num("gamma");
        const double bound = distance_expansion_bound(rp, gamma);
        const auto samples = graph_samples(u);
        const double ratio = distance_expansion_check(samples, rp, gamma, 20'000'000,
                                                      static_cast<std::uint64_t>(p.integer("seed", 0)));
        o.result["distance_expansion"] = {{"gamma", gamma}, {"bound", bound}, {"min_ratio", ratio}};
        o.pass = ratio >= bound - 1e-9 * std::max(1.0, std::abs(bound));
    }
    o.report_path = p.text("json", "");
    return o;
}

Outcome legendre(Params& p) {
    const GridField u = load_field(p, "in");
    const GridField w = legendre_transform(u);
    if (p.has("out")) write_field(p.text("out"), w);
    Outcome o;
    o.result = {{"input", cli::describe(u)}, {"field", cli::describe(w)}};
    o.report_path = p.text("json", "");
    return o;
}

Outcome lewy(Params& p) {
    const GridField u = load_field(p, "in");
    const int n = static_cast<int>(p.integer("n", u.n_dims()));
    const double tol = p.num("tol", 1e-2);
    const LewyTransformResult r = legendre_lewy_transform(u, n);
    if (p.has("out")) write_field(p.text("out"), r.w_field);
    Outcome o;
    o.result = {{"m", r.m},
                {"mu_range", {r.mu_range.first, r.mu_range.second}},
                {"mu_contract_error", r.mu_contract_error},
                {"mu_samples", r.mu_samples},
                {"field", cli::describe(r.w_field)}};
    o.pass = r.mu_contract_error <= tol;
    o.report_path = p.text("json", "");
    return o;
}

Outcome analyze(Params& p) {
    const GridField u = load_field(p, "in");
    const int n = u.n_dims();
    const PhaseSpec spec = classify_phase(n, p.num("theta"));
    const std::string kind = p.text("report", "rank");
    const RankReport rank = rank_report(u, p.num("shift", 0.0), spec, p.num("tol_rank", 1e-6));

    Outcome o;
    std::string verdict;
    if (kind == "rank") {
        o.result = cli::to_json(rank);
        verdict = rank.min_rank == rank.max_rank ? "constant_rank" : "varying_rank";
    } else if (kind == "min") {
        const MinPrincipleReport m = min_principle_check(rank.lambda_min_field);
        o.result = cli::to_json(m, n);
        verdict = to_string(m.verdict);
    } else if (kind == "split") {
        SplitTolerances tols;
        tols.eigenvalue = p.num("eigenvalue_tol", tols.eigenvalue);
        tols.direction = p.num("direction_tol", tols.direction);
        const SplitReport s = splitting_detector(u, spec, tols);
        o.result = cli::to_json(s);
        verdict = to_string(s.verdict);
    } else {
        throw UsageError("--report must be rank, min or split");
    }
    o.result["verdict_summary"] = verdict;

    if (p.has("csv") || p.has("pgm")) {
        const cli::Slice s = cli::slice_of(rank.lambda_min_field, p.text("slice", ""));
        if (p.has("csv")) cli::write_csv(p.text("csv"), s);
        if (p.has("pgm")) cli::write_pgm(p.text("pgm"), s);
        o.result["slice"] = {{"field", "lambda_min"}, {"rows", s.rows}, {"cols", s.cols}};
    }
    if (p.has("expect")) o.pass = p.text("expect") == verdict;
    o.report_path = p.text("out", "");
    return o;
}

Outcome probe_levelset(Params& p) {
    const PhaseSpec spec = classify_phase(static_cast<int>(p.integer("n", 3)), p.num("theta"));
    const ProbeReport r = level_set_concavity_probe(spec, static_cast<int>(p.integer("trials", 1000)),
                                                    static_cast<std::uint64_t>(p.integer("seed", 0)),
                                                    p.num("tol", 1e-12));
    Outcome o;
    o.result = cli::to_json(r);
    o.pass = r.violations == 0;
    o.report_path = p.text("out", "");
    return o;
}

Outcome inverse_convexity_trials(Params& p) {
    const int n = static_cast<int>(p.integer("n", 3));
    const long trials = p.integer("trials", 200);
    const double t = p.num("t", 1e-3);
    const double tol = p.num("tol", 1e-6);
    const OperatorModel op = make_operator(p, n);
    Rng rng(static_cast<std::uint64_t>(p.integer("seed", 0)));
    const auto nn = static_cast<std::size_t>(n);
    const double lo = op.kind == OperatorKind::sigma2_positive_branch ? -lewy_shift(n) + 0.05 : 0.05;
    double worst = -std::numeric_limits<double>::infinity();
    for (long k = 0; k < trials; ++k) {
        Vector lambda(nn);
        for (auto& l : lambda) l = rng.uniform(lo, 3.0);
        const SymMatrix m = SymMatrix::from_spectrum(random_orthogonal(nn, rng), lambda);
        const Spectrum sp = eig_sym(m);
        SymMatrix xp(nn);
        for (std::size_t i = 1; i < nn; ++i)
            for (std::size_t j = i; j < nn; ++j) xp.set(i, j, rng.normal());
        const SymMatrix x = congruence(sp.eigenvectors.transposed(), xp);
        worst = std::max(worst, check_inverse_convexity(op, m, x, t));
    }
    Outcome o;
    o.result = {{"inequality", to_string(InequalityId::inverse_convexity)},
                {"trials", trials},
                {"t", t},
                {"worst_lhs_minus_rhs", worst}};
    o.pass = worst <= tol;
    return o;
}

Outcome check_viscosity(Params& p) {
    const std::string ineq = p.text("ineq", "4.3");
    if (ineq == "4.2") {
        Outcome o = inverse_convexity_trials(p);
        o.report_path = p.text("out", "");
        return o;
    }
    const GridField u = load_field(p, "field");
    const double h = u.spacing();
    const double slack = p.num("slack", 1.0);
    ViscosityOptions opts;
    opts.residual_tol = p.num("residual_tol", opts.residual_tol);
    opts.tol_rank = p.num("tol_rank", opts.tol_rank);
    if (p.has("sigma2_form")) {
        const std::string f = p.text("sigma2_form");
        if (f != "lewy" && f != "plain") throw UsageError("--sigma2-form must be lewy or plain");
        opts.sigma2_form = f == "lewy" ? Sigma2Form::lewy : Sigma2Form::plain;
    }

    ViscosityReport r;
    double allowed = slack * h;
    if (ineq == "4.1") {
        r = check_gradient_identity(u);
        allowed = slack * h * h;
    } else if (ineq == "4.3" || ineq == "4.5") {
        r = check_supersolution_lambda1(u, make_operator(p, u.n_dims()), opts);
    } else if (ineq == "final") {
        r = check_higher_rank_inequality(u, make_operator(p, u.n_dims()), static_cast<int>(p.integer("a", 1)), opts);
    } else {
        throw UsageError("--ineq must be 4.1, 4.2, 4.3, 4.5 or final");
    }
    Outcome o;
    o.result = cli::to_json(r);
    o.result["allowed"] = allowed;
    o.pass = r.worst_violation <= allowed;
    o.report_path = p.text("out", "");
    return o;
}

Vector parse_list(const std::string& s) {
    Vector out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("cannot parse number list '" + s + "'");
        }
    }
    return out;
}

Outcome hom2(Params& p) {
    Vector diag{1.0, 0.0, -1.0};
    double theta = 0.0;
    if (p.has("diag")) {
        diag = parse_list(p.text("diag"));
        theta = p.num("theta");
    } else {
        theta = p.num("theta", 0.0);
    }
    if (diag.size() < 2) throw UsageError("--diag needs at least two entries");
    const QuadraticSphereFunction g(SymMatrix::diagonal(diag));
    const PhaseSpec spec = classify_phase(static_cast<int>(diag.size()), theta);
    Hom2Options opts;
    opts.equation_tol = p.num("equation_tol", opts.equation_tol);
    opts.quadratic_tol = p.num("quadratic_tol", opts.quadratic_tol);
    opts.subdivisions = static_cast<int>(p.integer("subdivisions", opts.subdivisions));
    opts.samples = static_cast<int>(p.integer("samples", opts.samples));
    opts.seed = static_cast<std::uint64_t>(p.integer("seed", 0));
    const Hom2Audit a = hom2_audit(g, spec, opts);
    Outcome o;
    o.result = cli::to_json(a);
    o.result["diag"] = diag;
    o.result["lower_threshold"] = spec.lower_threshold;
    o.pass = a.verdict != Hom2Verdict::violation;
    o.report_path = p.text("out", "");
    return o;
}

Outcome catalog_sample(Params& p) {
    const CatalogEntry e = catalog_entry(p.text("entry"));
    const double box = p.num("box", e.box_half_width);
    const GridField u = sample_entry(e, box, p.integer("nodes", 17));
    const std::string out = p.text("out");
    write_field(out, u);
    std::vector<std::string> written{out};
    if (p.flag("with_derivatives")) {
        const std::size_t n = static_cast<std::size_t>(e.n);
        std::vector<Vector> grad(n, Vector(u.size())), hess(n * n, Vector(u.size()));
        for (std::size_t k = 0; k < u.size(); ++k) {
            const Jet j = e.evaluator(u.coords(k));
            for (std::size_t a = 0; a < n; ++a) {
                grad[a][k] = j.gradient[a];
                for (std::size_t b = 0; b < n; ++b) hess[a * n + b][k] = j.hessian(a, b);
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            const std::string path = out + ".d" + std::to_string(a);
            write_field(path, GridField(u.shape(), u.origin(), u.spacing(), grad[a]));
            written.push_back(path);
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a; b < n; ++b) {
                const std::string path = out + ".d" + std::to_string(a) + std::to_string(b);
                write_field(path, GridField(u.shape(), u.origin(), u.spacing(), hess[a * n + b]));
                written.push_back(path);
            }
    }
    Outcome o;
    o.result = {{"entry", e.name}, {"field", cli::describe(u)}, {"files", written}};
    o.report_path = p.text("json", "");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slaglab: special Lagrangian and σ₂ Hessian experiments"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (default: SLAGLAB_THREADS or hardware)");

    const Param out{"out", Kind::text, "report path (default stdout)"};
    const Param field_out{"out", Kind::text, "output grid file"};
    const Param json_out{"json", Kind::text, "report path (default stdout)"};
    const Param seed{"seed", Kind::integer, "RNG seed"};
    const Param op{"op", Kind::text, "slag | sigma2 | lambda"};
    const Param theta{"theta", Kind::number, "phase Θ in radians"};

    std::vector<std::unique_ptr<Command>> cmds;
    auto add = [&](CLI::App& parent, const std::string& name, const std::string& help, std::vector<Param> ps,
                   Runner run) {
        cmds.push_back(std::make_unique<Command>(parent, name, help, std::move(ps), std::move(run)));
    };

    add(app, "verify-catalog", "check a catalog entry's equation on a sampled box",
        {{"entry", Kind::text, "warren | li | quadratic | hom2"},
         {"box", Kind::number, "half width of the box"},
         {"nodes", Kind::integer, "nodes per axis"},
         {"tol", Kind::number, "pass threshold on the equation residual"},
         out, seed},
        verify_catalog);
    add(app, "solve", "Dirichlet solve from the boundary values of a grid file",
        {op, theta,
         {"n", Kind::integer, "dimension (default: from the boundary file)"},
         {"boundary", Kind::text, "grid file carrying the boundary values"},
         {"initial", Kind::text, "optional initial iterate"},
         field_out, json_out,
         {"tol", Kind::number, "residual tolerance"},
         {"max_iters", Kind::integer, "Newton iteration cap"},
         seed},
        solve_cmd);
    add(app, "rotate", "rotate the gradient graph of a field by β",
        {{"in", Kind::text, "input grid file"},
         {"beta", Kind::number, "rotation angle"},
         {"delta", Kind::number, "validity margin δ"},
         {"gamma", Kind::number, "lower angle bound for the distance-expansion check"},
         field_out, json_out, seed},
        rotate);
    add(app, "legendre", "discrete Legendre transform of a convex field",
        {{"in", Kind::text, "input grid file"}, field_out, json_out, seed}, legendre);
    add(app, "lewy", "Legendre transform of u + m|x|²/2",
        {{"in", Kind::text, "input grid file"},
         {"n", Kind::integer, "dimension used for m"},
         {"tol", Kind::number, "pass threshold on the μ contract error"},
         field_out, json_out, seed},
        lewy);
    add(app, "analyze", "rank, minimum-principle and splitting reports",
        {{"in", Kind::text, "input grid file"},
         theta,
         {"report", Kind::text, "rank | min | split"},
         {"shift", Kind::number, "shift a in D²u − aI"},
         {"tol_rank", Kind::number, "relative rank tolerance"},
         {"eigenvalue_tol", Kind::number, "split: eigenvalue spread tolerance"},
         {"direction_tol", Kind::number, "split: direction spread tolerance (rad)"},
         {"slice", Kind::text, "plane for the λ_min slice, e.g. z=0"},
         {"csv", Kind::text, "write the slice as CSV"},
         {"pgm", Kind::text, "write the slice as 8-bit PGM"},
         {"expect", Kind::text, "exit 1 unless the verdict matches"},
         out, seed},
        analyze);
    add(app, "probe-levelset", "midpoint probe of the level set {Σ arctan λ = Θ}",
        {{"n", Kind::integer, "dimension"}, theta,
         {"trials", Kind::integer, "number of pairs"},
         {"tol", Kind::number, "violation tolerance"},
         seed, out},
        probe_levelset);
    add(app, "check-viscosity", "verify the constant-rank inequalities on a field",
        {{"field", Kind::text, "input grid file"},
         op, theta,
         {"ineq", Kind::text, "4.1 | 4.2 | 4.3 | 4.5 | final"},
         {"a", Kind::integer, "null multiplicity for --ineq final"},
         {"sigma2_form", Kind::text, "lewy | plain"},
         {"residual_tol", Kind::number, "refuse fields with a larger residual"},
         {"tol_rank", Kind::number, "relative tolerance for λ ≡ 0"},
         {"slack", Kind::number, "pass iff worst violation ≤ slack·h (h² for 4.1)"},
         {"n", Kind::integer, "dimension for --ineq 4.2"},
         {"trials", Kind::integer, "random trials for --ineq 4.2"},
         {"t", Kind::number, "difference step for --ineq 4.2"},
         {"tol", Kind::number, "pass threshold for --ineq 4.2"},
         seed, out},
        check_viscosity);
    add(app, "hom2-audit", "audit a 2-homogeneous extension of a quadratic sphere function",
        {{"diag", Kind::text, "comma-separated diagonal of A in g = ½⟨ξ, Aξ⟩"},
         theta,
         {"equation_tol", Kind::number, "abstain above this residual"},
         {"quadratic_tol", Kind::number, "deviation allowed from the best-fit quadratic"},
         {"subdivisions", Kind::integer, "icosphere level (n = 3)"},
         {"samples", Kind::integer, "sphere samples (n ≠ 3)"},
         seed, out},
        hom2);
    CLI::App* catalog = app.add_subcommand("catalog", "catalog utilities");
    catalog->require_subcommand(1);
    add(*catalog, "sample", "write a catalog entry to a grid file",
        {{"entry", Kind::text, "warren | li | quadratic | hom2"},
         {"box", Kind::number, "half width of the box"},
         {"nodes", Kind::integer, "nodes per axis"},
         {"with_derivatives", Kind::flag, "also write gradient and Hessian components"},
         field_out, json_out, seed},
        catalog_sample);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (threads > 0) set_thread_count(threads);

    const Command* cmd = nullptr;
    for (const auto& c : cmds)
        if (c->app()->parsed()) cmd = c.get();
    if (!cmd) {
        std::cerr << app.help();
        return 2;
    }

    Params params;
    json report = {{"command", cmd->name()}};
    try {
        params = cmd->effective();
        if (!params.has("seed")) params.cfg["seed"] = 0;
        report["config"] = params.cfg;
        Outcome o = cmd->run(params);
        report["status"] = o.pass ? "pass" : "fail";
        report["result"] = std::move(o.result);
        write_report(report, o.report_path);
        if (!o.pass) {
            std::cerr << "slaglab " << cmd->name() << ": check failed, see "
                      << (o.report_path.empty() ? std::string("stdout") : o.report_path) << "\n";
            return 1;
        }
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << cmd->app()->help();
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << cmd->app()->help();
        return 2;
    } catch (const slaglab::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        // Domain, pole and convergence failures are check failures with a report.
        report["status"] = "error";
        report["error"] = e.what();
        try {
            write_report(report, params.text(cmd->report_key(), ""));
        } catch (const std::exception&) {
            std::cout << report.dump(2) << "\n";
        }
        std::cerr << "slaglab " << cmd->name() << ": " << e.what() << "\n";
        return 1;
    }
}
