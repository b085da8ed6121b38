#pragma once

// Experiment files: parse, validate, run, report.
//
// An experiment file is a config document (see config.hpp) with root keys
//   command, name, tol, n_max, trunc_dim, k_max, seed, split, strategies
// and the tables [operator], [factor], [measure], [space], [integrand], [dominated].
// Every command reads only the tables it needs; any other table or key is rejected.

#include <netcalc/bochner.hpp>
#include <netcalc/config.hpp>
#include <netcalc/error.hpp>
#include <netcalc/expression.hpp>
#include <netcalc/netcore.hpp>
#include <netcalc/opcalc.hpp>
#include <netcalc/sequence.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace netcalc {

inline const std::vector<std::string>& experiment_commands() {
    static const std::vector<std::string> cmds = {"trace-minors", "det-minors",   "fredholm",   "trace-class",
                                                  "det-class",    "block-check",  "product-check", "bochner",
                                                  "dominated-sum", "probe-open-question"};
    return cmds;
}

struct OperatorDescriptor {
    std::string form = "diagonal";  // diagonal | finite-rank | jordan | matrix
    std::string lambda;             // closed form in j (tail rule when values are given)
    std::vector<double> values;     // explicit leading eigenvalues
    std::optional<std::size_t> dim;
    double super = 0.0;             // jordan superdiagonal
    std::vector<std::vector<double>> u, w, rows;

    friend bool operator==(const OperatorDescriptor&, const OperatorDescriptor&) = default;
};

struct BochnerDescriptor {
    std::string measure = "discrete";  // discrete | interval01
    std::vector<double> weights;       // discrete weights as a list
    std::string weight_rule;           // or as a closed form in j
    std::string space = "euclidean";   // euclidean | frechet-sequences | continuous01 | weighted-l1
    std::size_t dim = 0;
    std::vector<double> space_weights;
    std::string integrand = "components";  // components | unit | polynomial
    std::vector<std::string> components;   // expressions in x
    std::optional<double> bound;
    std::vector<double> breakpoints;
    std::optional<std::size_t> depth;

    friend bool operator==(const BochnerDescriptor&, const BochnerDescriptor&) = default;
};

struct DominatedDescriptor {
    std::string family;     // expression in alpha and k
    std::string dominator;  // closed form in j

    friend bool operator==(const DominatedDescriptor&, const DominatedDescriptor&) = default;
};

struct ExperimentSpec {
    std::string command;
    std::string name;
    double tol = 1e-6;
    std::size_t n_max = 2048;
    std::optional<std::size_t> trunc_dim;
    std::optional<std::size_t> k_max;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> split;
    std::vector<std::string> strategies;
    std::optional<OperatorDescriptor> op;
    std::optional<OperatorDescriptor> factor;
    std::optional<BochnerDescriptor> bochner;
    std::optional<DominatedDescriptor> dominated;

    friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

namespace detail {

inline bool needs_operator(const std::string& c) {
    return c != "bochner" && c != "dominated-sum";
}

inline std::size_t positive_size(TableReader& t, const std::string& key, long long v) {
    if (v <= 0) throw SpecError(t.field(key), "must be positive");
    return static_cast<std::size_t>(v);
}

inline OperatorDescriptor read_operator(TableReader t) {
    if (!t.present()) throw SpecError(t.field("form"), "missing table");
    OperatorDescriptor d;
    d.form = t.string("form").value_or("diagonal");
    d.lambda = t.string("lambda").value_or("");
    d.values = t.numbers("values").value_or(std::vector<double>{});
    if (auto n = t.integer("dim")) d.dim = positive_size(t, "dim", *n);
    if (auto s = t.number("super")) d.super = *s;
    d.u = t.matrix("u").value_or(std::vector<std::vector<double>>{});
    d.w = t.matrix("w").value_or(std::vector<std::vector<double>>{});
    d.rows = t.matrix("rows").value_or(std::vector<std::vector<double>>{});
    t.finish();
    static const std::vector<std::string> forms = {"diagonal", "finite-rank", "jordan", "matrix"};
    if (std::find(forms.begin(), forms.end(), d.form) == forms.end())
        throw SpecError(t.field("form"), "unknown operator form '" + d.form + "'");
    if (d.form == "matrix") {
        if (d.rows.empty() || d.rows.size() != d.rows.front().size())
            throw SpecError(t.field("rows"), "matrix form needs a square, nonempty 'rows'");
    } else if (d.lambda.empty() && d.values.empty()) {
        throw SpecError(t.field("lambda"), "eigenvalue sequence missing (give 'lambda' and/or 'values')");
    }
    if (d.form == "jordan" && !d.dim && d.values.empty())
        throw SpecError(t.field("dim"), "jordan form needs a finite dimension");
    if (d.form == "finite-rank") {
        if (d.u.empty() || d.u.size() != d.w.size() || d.u.front().size() != d.w.front().size())
            throw SpecError(t.field("u"), "finite-rank form needs 'u' and 'w' of equal shape");
    }
    return d;
}

inline BochnerDescriptor read_bochner(TableReader measure, TableReader space, TableReader integrand) {
    BochnerDescriptor b;
    if (!measure.present()) throw SpecError("measure", "missing table");
    if (!space.present()) throw SpecError("space", "missing table");
    if (!integrand.present()) throw SpecError("integrand", "missing table");
    b.measure = measure.string("kind").value_or("discrete");
    if (const auto* w = measure.get("weights")) {
        if (w->type == ConfigValue::Type::string) b.weight_rule = w->text;
        else b.weights = measure.numbers("weights").value();
    }
    measure.finish();
    if (b.measure != "discrete" && b.measure != "interval01")
        throw SpecError(measure.field("kind"), "unknown measure '" + b.measure + "'");
    if (b.measure == "discrete" && b.weights.empty() && b.weight_rule.empty())
        throw SpecError(measure.field("weights"), "discrete measure needs weights");
    for (double w : b.weights)
        if (!(w >= 0.0)) throw SpecError(measure.field("weights"), "weights must be nonnegative");

    b.space = space.string("kind").value_or("euclidean");
    if (auto d = space.integer("dim")) b.dim = positive_size(space, "dim", *d);
    b.space_weights = space.numbers("weights").value_or(std::vector<double>{});
    space.finish();

    b.integrand = integrand.string("form").value_or("components");
    b.components = integrand.strings("components").value_or(std::vector<std::string>{});
    b.bound = integrand.number("bound");
    b.breakpoints = integrand.numbers("breakpoints").value_or(std::vector<double>{});
    if (auto d = integrand.integer("depth")) b.depth = positive_size(integrand, "depth", *d);
    integrand.finish();
    if (b.integrand != "components" && b.integrand != "unit" && b.integrand != "polynomial")
        throw SpecError(integrand.field("form"), "unknown integrand form '" + b.integrand + "'");
    if (b.integrand != "unit" && b.components.empty())
        throw SpecError(integrand.field("components"), "integrand needs at least one component");
    if (b.bound && !(*b.bound >= 0.0)) throw SpecError(integrand.field("bound"), "must be nonnegative");
    for (const auto& c : b.components) parse_expression(c);
    return b;
}

}  // namespace detail

/// Semantic checks shared by the file parser and command-line overrides.
inline void validate(const ExperimentSpec& s) {
    const auto& cmds = experiment_commands();
    if (std::find(cmds.begin(), cmds.end(), s.command) == cmds.end())
        throw SpecError("command", "unknown command '" + s.command + "'");
    if (!(s.tol > 0.0) || !std::isfinite(s.tol)) throw SpecError("tol", "must be a positive number");
    if (s.n_max == 0) throw SpecError("n_max", "must be positive");
    if (s.trunc_dim && *s.trunc_dim == 0) throw SpecError("trunc_dim", "must be positive");
    if (s.k_max && *s.k_max == 0) throw SpecError("k_max", "must be positive");
    if (s.seed && *s.seed == 0) throw SpecError("seed", "must be positive");
    if (s.split && *s.split == 0) throw SpecError("split", "must be positive");
    for (const auto& name : s.strategies) {
        try {
            (void)Strategy::parse(name);
        } catch (const DomainError& e) {
            throw SpecError("strategies", e.what());
        }
        if (name == "random" && !s.seed) throw SpecError("seed", "a random filtration requires a seed");
    }
    if (detail::needs_operator(s.command) && !s.op) throw SpecError("operator", "missing table");
    if (s.command == "product-check" && !s.factor) throw SpecError("factor", "missing table");
    if (s.command == "block-check" && !s.split) throw SpecError("split", "block-check needs a split point");
    if (s.command == "bochner" && !s.bochner) throw SpecError("integrand", "missing table");
    if (s.command == "dominated-sum" && !s.dominated) throw SpecError("dominated", "missing table");
}

/// `command`, when given, fills a missing command key and must match a present one.
inline ExperimentSpec parse_spec_text(const std::string& text, const std::optional<std::string>& command = {}) {
    const ConfigDocument doc = parse_config(text);
    static const std::vector<std::string> known = {"", "operator", "factor", "measure", "space", "integrand", "dominated"};
    for (const auto& name : doc.order)
        if (std::find(known.begin(), known.end(), name) == known.end())
            throw SpecError(name, "unknown table [" + name + "]");

    ExperimentSpec s;
    TableReader root(doc.table(""), "");
    s.command = root.string("command").value_or("");
    s.name = root.string("name").value_or("");
    if (auto v = root.number("tol")) s.tol = *v;
    if (auto v = root.integer("n_max")) s.n_max = detail::positive_size(root, "n_max", *v);
    if (auto v = root.integer("trunc_dim")) s.trunc_dim = detail::positive_size(root, "trunc_dim", *v);
    if (auto v = root.integer("k_max")) s.k_max = detail::positive_size(root, "k_max", *v);
    if (auto v = root.integer("seed")) s.seed = detail::positive_size(root, "seed", *v);
    if (auto v = root.integer("split")) s.split = detail::positive_size(root, "split", *v);
    s.strategies = root.strings("strategies").value_or(std::vector<std::string>{});
    root.finish();
    if (command) {
        if (s.command.empty()) s.command = *command;
        else if (s.command != *command)
            throw SpecError("command", "file declares '" + s.command + "' but '" + *command + "' was requested");
    }
    if (s.command.empty()) throw SpecError("command", "missing");

    const bool op_cmd = detail::needs_operator(s.command);
    auto reject = [&](const char* table) {
        if (doc.has_table(table)) throw SpecError(table, "table not used by command '" + s.command + "'");
    };
    if (op_cmd) {
        s.op = detail::read_operator(TableReader(doc.table("operator"), "operator"));
        if (s.command == "product-check") s.factor = detail::read_operator(TableReader(doc.table("factor"), "factor"));
        else reject("factor");
        for (const char* t : {"measure", "space", "integrand", "dominated"}) reject(t);
    } else if (s.command == "bochner") {
        s.bochner = detail::read_bochner(TableReader(doc.table("measure"), "measure"),
                                         TableReader(doc.table("space"), "space"),
                                         TableReader(doc.table("integrand"), "integrand"));
        for (const char* t : {"operator", "factor", "dominated"}) reject(t);
    } else if (s.command == "dominated-sum") {
        TableReader t(doc.table("dominated"), "dominated");
        if (!t.present()) throw SpecError("dominated", "missing table");
        DominatedDescriptor d;
        d.family = t.string("family").value_or("");
        d.dominator = t.string("dominator").value_or("");
        t.finish();
        if (d.family.empty()) throw SpecError("dominated.family", "missing");
        if (d.dominator.empty()) throw SpecError("dominated.dominator", "missing");
        parse_expression(d.family);
        DiagonalSequence::parse(d.dominator);
        s.dominated = d;
        for (const char* tb : {"operator", "factor", "measure", "space", "integrand"}) reject(tb);
    }
    validate(s);
    return s;
}

inline ExperimentSpec parse_spec(const std::string& path, const std::optional<std::string>& command = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open experiment file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec_text(ss.str(), command);
}

namespace detail {

inline ConfigValue num_array(const std::vector<double>& v) {
    std::vector<ConfigValue> items;
    for (double x : v) items.push_back(ConfigValue::of(x));
    return ConfigValue::array(std::move(items));
}
inline ConfigValue matrix_value(const std::vector<std::vector<double>>& m) {
    std::vector<ConfigValue> rows;
    for (const auto& r : m) rows.push_back(num_array(r));
    return ConfigValue::array(std::move(rows));
}
inline ConfigValue str_array(const std::vector<std::string>& v) {
    std::vector<ConfigValue> items;
    for (const auto& x : v) items.push_back(ConfigValue::of(x));
    return ConfigValue::array(std::move(items));
}
inline ConfigValue size_value(std::size_t v) { return ConfigValue::of_integer(static_cast<long long>(v)); }

inline void put_operator(ConfigDocument& doc, const std::string& table, const OperatorDescriptor& d) {
    doc.set(table, "form", ConfigValue::of(d.form));
    if (!d.lambda.empty()) doc.set(table, "lambda", ConfigValue::of(d.lambda));
    if (!d.values.empty()) doc.set(table, "values", num_array(d.values));
    if (d.dim) doc.set(table, "dim", size_value(*d.dim));
    if (d.super != 0.0) doc.set(table, "super", ConfigValue::of(d.super));
    if (!d.u.empty()) doc.set(table, "u", matrix_value(d.u));
    if (!d.w.empty()) doc.set(table, "w", matrix_value(d.w));
    if (!d.rows.empty()) doc.set(table, "rows", matrix_value(d.rows));
}

}  // namespace detail

/// Canonical experiment file; parse_spec_text(canonical_spec(s)) == s.
inline std::string canonical_spec(const ExperimentSpec& s) {
    using detail::size_value;
    ConfigDocument doc;
    doc.set("", "command", ConfigValue::of(s.command));
    if (!s.name.empty()) doc.set("", "name", ConfigValue::of(s.name));
    doc.set("", "tol", ConfigValue::of(s.tol));
    doc.set("", "n_max", size_value(s.n_max));
    if (s.trunc_dim) doc.set("", "trunc_dim", size_value(*s.trunc_dim));
    if (s.k_max) doc.set("", "k_max", size_value(*s.k_max));
    if (s.seed) doc.set("", "seed", size_value(static_cast<std::size_t>(*s.seed)));
    if (s.split) doc.set("", "split", size_value(*s.split));
    if (!s.strategies.empty()) doc.set("", "strategies", detail::str_array(s.strategies));
    if (s.op) detail::put_operator(doc, "operator", *s.op);
    if (s.factor) detail::put_operator(doc, "factor", *s.factor);
    if (s.bochner) {
        const auto& b = *s.bochner;
        doc.set("measure", "kind", ConfigValue::of(b.measure));
        if (!b.weight_rule.empty()) doc.set("measure", "weights", ConfigValue::of(b.weight_rule));
        else if (!b.weights.empty()) doc.set("measure", "weights", detail::num_array(b.weights));
        doc.set("space", "kind", ConfigValue::of(b.space));
        if (b.dim) doc.set("space", "dim", size_value(b.dim));
        if (!b.space_weights.empty()) doc.set("space", "weights", detail::num_array(b.space_weights));
        doc.set("integrand", "form", ConfigValue::of(b.integrand));
        if (!b.components.empty()) doc.set("integrand", "components", detail::str_array(b.components));
        if (b.bound) doc.set("integrand", "bound", ConfigValue::of(*b.bound));
        if (!b.breakpoints.empty()) doc.set("integrand", "breakpoints", detail::num_array(b.breakpoints));
        if (b.depth) doc.set("integrand", "depth", size_value(*b.depth));
    }
    if (s.dominated) {
        doc.set("dominated", "family", ConfigValue::of(s.dominated->family));
        doc.set("dominated", "dominator", ConfigValue::of(s.dominated->dominator));
    }
    return emit_config(doc);
}

// ---------------------------------------------------------------------------
// Building library objects from descriptors

inline OperatorSpec build_operator(const OperatorDescriptor& d) {
    auto sequence = [&]() {
        std::optional<DiagonalSequence> rule;
        if (!d.lambda.empty()) rule = DiagonalSequence::parse(d.lambda);
        DiagonalSequence s = d.values.empty() ? *rule : DiagonalSequence::from_list(d.values, rule);
        if (d.dim && d.form != "matrix") {
            if (auto have = s.dim(); have && *have < *d.dim) throw SpecError("operator.dim", "exceeds the listed values");
            s = s.take(*d.dim);
        }
        return s;
    };
    auto to_matrix = [](const std::vector<std::vector<double>>& m) {
        Matrix out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.front().size()));
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = 0; j < m[i].size(); ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = Scalar(m[i][j]);
        return out;
    };
    if (d.form == "diagonal") return OperatorSpec::diagonal(sequence());
    if (d.form == "finite-rank") return OperatorSpec::diagonal_plus_finite_rank(sequence(), to_matrix(d.u), to_matrix(d.w));
    if (d.form == "jordan") {
        const DiagonalSequence s = sequence();
        OperatorSpec::EntryOracle e;
        const double c = d.super;
        e.entry = [s, c](std::size_t i, std::size_t j) {
            if (i == j) return Scalar(s.value(i + 1));
            return j == i + 1 ? Scalar(c) : Scalar(0.0);
        };
        e.dim = s.dim();
        e.bandwidth = 1;
        e.norm_bound = s.sup_abs() + std::fabs(c);
        e.normal = c == 0.0;
        e.text = "jordan(" + (d.lambda.empty() ? std::string("list") : d.lambda) + ")";
        return OperatorSpec::entry_oracle(std::move(e));
    }
    // matrix
    const Matrix m = to_matrix(d.rows);
    OperatorSpec::EntryOracle e;
    e.entry = [m](std::size_t i, std::size_t j) {
        return m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    e.dim = static_cast<std::size_t>(m.rows());
    e.norm_bound = std::max(m.norm(), 1e-300);
    e.normal = (m * m.adjoint() - m.adjoint() * m).norm() <= 1e-14 * std::max(1.0, m.squaredNorm());
    e.text = "matrix";
    return OperatorSpec::entry_oracle(std::move(e));
}

struct BochnerProblem {
    MeasureSpace space;
    SeminormFamily family;
    MeasurableFn f;
    BochnerOptions options;
};

inline BochnerProblem build_bochner(const BochnerDescriptor& b) {
    MeasureSpace space = b.measure == "interval01"
                             ? MeasureSpace::interval01()
                             : (b.weight_rule.empty() ? MeasureSpace::discrete(b.weights)
                                                      : MeasureSpace::discrete(DiagonalSequence::parse(b.weight_rule)));
    SeminormFamily family = make_space({b.space, b.dim, b.space_weights});
    std::vector<ExprPtr> comps;
    for (const auto& c : b.components) comps.push_back(parse_expression(c));
    MeasurableFn f;
    if (b.integrand == "unit") {
        if (b.space == "continuous01" || b.space == "euclidean")
            throw SpecError("integrand.form", "unit vectors need a sequence space");
        f.eval = [](double x) { return LcsVector::unit(static_cast<std::size_t>(x)); };
    } else if (b.integrand == "components") {
        if (b.space == "continuous01") throw SpecError("integrand.form", "use 'polynomial' for continuous01");
        if (b.space == "euclidean" && comps.size() != b.dim)
            throw SpecError("integrand.components", "expected " + std::to_string(b.dim) + " components");
        f.eval = [comps](double x) {
            std::vector<double> v;
            for (const auto& e : comps) v.push_back(evaluate(*e, {{"x", x}}));
            return LcsVector::sequence(std::move(v));
        };
    } else {
        if (b.space != "continuous01") throw SpecError("integrand.form", "polynomial integrands live in continuous01");
        f.eval = [comps](double x) {
            std::vector<double> v;
            for (const auto& e : comps) v.push_back(evaluate(*e, {{"x", x}}));
            return LcsVector::polynomial(std::move(v));
        };
    }
    if (b.bound) f.bound = [B = *b.bound](std::size_t) { return B; };
    f.breakpoints = b.breakpoints;
    BochnerOptions opt;
    if (b.depth) opt.depth = *b.depth;
    return {std::move(space), std::move(family), std::move(f), opt};
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
    std::string strategy;
    std::size_t n = 0;
    Scalar value;
    Scalar estimate;
    double bound = 0.0;
};

struct ReportRecord {
    std::string command;
    std::string name;
    std::vector<ReportRow> rows;
    Verdict verdict = Verdict::inconclusive;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    double wall_seconds = 0.0;
};

namespace detail {

inline nlohmann::ordered_json complex_json(const Scalar& z) { return {z.real(), z.imag()}; }

inline void add_minor_rows(ReportRecord& r, const MinorNetReport& net, const std::string& prefix = {}) {
    for (const auto& row : net.rows) r.rows.push_back({prefix + row.strategy, row.n, row.value, row.estimate, row.bound});
}

inline nlohmann::ordered_json net_summary(const MinorNetReport& net) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(net.kind);
    j["verdict"] = to_string(net.report.verdict);
    j["limit"] = net.report.limit ? complex_json(*net.report.limit) : nlohmann::ordered_json(nullptr);
    j["oscillation"] = net.report.oscillation;
    j["truncation"] = net.truncation;
    j["strategies"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < net.strategies.size(); ++i) {
        const auto& p = net.per_strategy[i];
        nlohmann::ordered_json s;
        s["verdict"] = to_string(p.verdict);
        s["limit"] = p.limit ? complex_json(*p.limit) : nlohmann::ordered_json(nullptr);
        if (p.witness) {
            s["witness"] = {{"n1", p.samples[p.witness->first].first},
                            {"n2", p.samples[p.witness->second].first},
                            {"distance", p.witness->distance}};
        }
        j["strategies"][net.strategies[i]] = s;
    }
    if (net.kind == MinorKind::det) j["nonzero"] = net.nonzero;
    return j;
}

inline ProbeOptions probe_options(const ExperimentSpec& s) {
    ProbeOptions o;
    o.n_max = s.n_max;
    o.tol = s.tol;
    o.seed = s.seed.value_or(1);
    for (const auto& name : s.strategies) {
        Strategy st = Strategy::parse(name);
        if (st.kind == StrategyKind::random) st.seed = o.seed;
        o.strategies.push_back(st);
    }
    return o;
}

inline void run_minor_command(const ExperimentSpec& s, ReportRecord& r) {
    const OperatorSpec t = build_operator(*s.op);
    const ProbeOptions o = probe_options(s);
    const MinorKind kind = s.command == "trace-minors" ? MinorKind::trace : MinorKind::det;
    const MinorNetReport net =
        minor_net(t, probe_net_options(kind, o, {Strategy{StrategyKind::coordinate}}));
    add_minor_rows(r, net);
    r.verdict = net.report.verdict;
    r.summary["net"] = net_summary(net);
}

inline void run_fredholm(const ExperimentSpec& s, ReportRecord& r) {
    const OperatorSpec t = build_operator(*s.op);
    FredholmOptions fo;
    fo.tol = s.tol;
    fo.N = s.trunc_dim;
    fo.k_max = s.k_max;
    const FredholmResult res = fredholm_det(t, fo);

    // Series trajectory: partial sums of (-1)^k tr(wedge^k T_N), times the exact complement factor.
    const TailInfo tail = t.tail(res.N);
    Scalar correction(1.0);
    if (tail.exact) correction = std::exp(OperatorSpec::identity_minus(t).tail(res.N).log_det);
    const Matrix tn = Matrix(t.truncated(res.N));
    const std::vector<Scalar> e = elementary_symmetric(tn);
    const double norm = singular_value_sum(tn);
    Scalar partial(0.0);
    std::vector<double> terms(res.N + 2, 0.0);  // ||T_N||^k / k!
    terms[0] = 1.0;
    for (std::size_t k = 1; k <= res.N + 1; ++k) terms[k] = terms[k - 1] * norm / static_cast<double>(k);
    for (std::size_t k = 0; k <= res.k_max; ++k) {
        const Scalar term = ((k % 2) ? -1.0 : 1.0) * e[k] * correction;
        partial += term;
        double rest = 0.0;
        for (std::size_t i = k + 1; i <= res.N; ++i) rest += terms[i];
        r.rows.push_back({"series", k, term, partial, rest + res.truncation_bound});
    }
    if (res.eigen) {
        if (auto seq = t.diagonal_sequence(); seq && !seq->is_product()) {
            const DiagonalSequence one_minus = seq->one_minus();
            Scalar prod(1.0);
            for (std::size_t j = 1; j <= res.N; ++j) {
                const Scalar factor(1.0 - seq->value(j));
                prod *= factor;
                const Scalar rest = one_minus.dim() && j >= *one_minus.dim() ? Scalar(0.0) : one_minus.tail_log(j);
                r.rows.push_back({"eigen", j, factor, prod * std::exp(rest), 0.0});
            }
        }
    }
    r.verdict = Verdict::converged;
    r.summary["value"] = complex_json(res.value);
    r.summary["series"] = res.series ? complex_json(*res.series) : nlohmann::ordered_json(nullptr);
    r.summary["eigen"] = res.eigen ? complex_json(*res.eigen) : nlohmann::ordered_json(nullptr);
    r.summary["truncation"] = res.N;
    r.summary["k_max"] = res.k_max;
    r.summary["remainder_bound"] = res.remainder_bound;
    r.summary["truncation_bound"] = res.truncation_bound;
}

inline void run_bochner(const ExperimentSpec& s, ReportRecord& r) {
    BochnerProblem p = build_bochner(*s.bochner);
    if (s.k_max) p.options.depth = *s.k_max;
    const IntegralResult res = bochner_integrate(p.space, p.f, p.family, s.tol, p.options);
    const std::size_t K = p.family.top(p.options.depth);
    const double defect = res.per_seminorm_defect.empty() ? 0.0 : res.per_seminorm_defect.rbegin()->second;
    // One row per component and sample; components are sequence coordinates or polynomial coefficients.
    auto components = [&](const LcsVector& v) {
        std::vector<double> c;
        if (v.kind() == LcsVector::Kind::function) c = v.poly();
        else {
            const std::size_t len = p.family.dimension() ? *p.family.dimension() : std::max(K, v.coords().size());
            for (std::size_t i = 1; i <= len; ++i) c.push_back(v.coord(i));
        }
        return c;
    };
    const auto limit = components(res.value);
    std::size_t width = limit.size();
    for (const auto& [n, v] : res.report.samples) width = std::max(width, components(v).size());
    char label[32];
    for (std::size_t i = 0; i < width; ++i) {
        std::snprintf(label, sizeof label, "component%03zu", i + 1);
        const double est = i < limit.size() ? limit[i] : 0.0;
        for (const auto& [n, v] : res.report.samples) {
            const auto c = components(v);
            r.rows.push_back({label, n, Scalar(i < c.size() ? c[i] : 0.0), Scalar(est), defect});
        }
    }
    r.verdict = res.report.verdict;
    r.summary["value"] = limit;
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [k, v] : res.per_seminorm_defect) d[std::to_string(k)] = v;
    r.summary["per_seminorm_defect"] = d;
    nlohmann::ordered_json bounds = nlohmann::ordered_json::object();
    for (std::size_t k = 1; k <= K; ++k) {
        nlohmann::ordered_json b;
        b["norm_of_integral"] = p.family.eval(k, res.value);
        b["integral_of_norm"] = seminorm_integral(p.space, p.f, p.family, k, s.tol);
        bounds[std::to_string(k)] = b;
    }
    r.summary["seminorm_bounds"] = bounds;
    r.summary["verdict"] = to_string(res.report.verdict);
    r.summary["oscillation"] = res.report.oscillation;
}

inline void run_dominated(const ExperimentSpec& s, ReportRecord& r) {
    const ExprPtr family = parse_expression(s.dominated->family);
    const DiagonalSequence g = DiagonalSequence::parse(s.dominated->dominator);
    Dominator dom;
    dom.term = [g](std::size_t k) { return std::fabs(g.value(k)); };
    dom.tail = [g](std::size_t k) { return g.tail_abs_sum(k); };
    auto a = [family](double alpha, std::size_t k) {
        return Scalar(evaluate(*family, {{"alpha", alpha}, {"k", static_cast<double>(k)}}));
    };
    const DominatedSumResult res = dominated_net_sum(a, dom, s.tol);
    Scalar partial(0.0);
    for (std::size_t k = 1; k <= res.head.size(); ++k) {
        partial += res.head[k - 1];
        r.rows.push_back({"head", k, res.head[k - 1], partial, dom.tail(k)});
    }
    r.verdict = Verdict::converged;
    r.summary["value"] = complex_json(res.value);
    r.summary["k0"] = res.k0;
    r.summary["alpha_star"] = res.alpha_star;
}

}  // namespace detail

/// Run one experiment. Deterministic in (experiment, seed) apart from wall_seconds.
inline ReportRecord execute(const ExperimentSpec& s) {
    validate(s);
    const auto start = std::chrono::steady_clock::now();
    ReportRecord r;
    r.command = s.command;
    r.name = s.name;
    const std::string label = s.name.empty() ? s.command : s.name;
    try {
        if (s.command == "trace-minors" || s.command == "det-minors") {
            detail::run_minor_command(s, r);
        } else if (s.command == "fredholm") {
            detail::run_fredholm(s, r);
        } else if (s.command == "trace-class") {
            const auto rep = trace_class_probe(build_operator(*s.op), detail::probe_options(s));
            detail::add_minor_rows(r, rep.net);
            r.verdict = rep.net.report.verdict;
            r.summary["trace_class"] = rep.trace_class;
            r.summary["trace"] = rep.trace ? detail::complex_json(*rep.trace) : nlohmann::ordered_json(nullptr);
            r.summary["trace_norm_estimate"] = rep.trace_norm_estimate;
            r.summary["net"] = detail::net_summary(rep.net);
        } else if (s.command == "det-class") {
            const auto net = det_class_probe(build_operator(*s.op), detail::probe_options(s));
            detail::add_minor_rows(r, net);
            r.verdict = net.report.verdict;
            r.summary["determinant_class"] = net.positive();
            r.summary["net"] = detail::net_summary(net);
        } else if (s.command == "block-check") {
            const auto rep = block_factor_check(build_operator(*s.op), *s.split, detail::probe_options(s));
            detail::add_minor_rows(r, rep.whole, "whole:");
            detail::add_minor_rows(r, rep.head, "head:");
            detail::add_minor_rows(r, rep.rest, "rest:");
            r.verdict = rep.whole.report.verdict;
            r.summary["det_whole"] = detail::complex_json(rep.det_whole);
            r.summary["det_head"] = detail::complex_json(rep.det_head);
            r.summary["det_rest"] = detail::complex_json(rep.det_rest);
            r.summary["residual"] = rep.residual;
        } else if (s.command == "product-check") {
            const auto rep = product_rule_check(build_operator(*s.op), build_operator(*s.factor), detail::probe_options(s));
            detail::add_minor_rows(r, rep.a, "a:");
            detail::add_minor_rows(r, rep.b, "b:");
            detail::add_minor_rows(r, rep.ab, "ab:");
            r.verdict = rep.ab.report.verdict;
            r.summary["factors_determinant_class"] = rep.valid;
            r.summary["det_a"] = detail::complex_json(limit_or_last(rep.a));
            r.summary["det_b"] = detail::complex_json(limit_or_last(rep.b));
            r.summary["det_ab"] = detail::complex_json(limit_or_last(rep.ab));
            r.summary["residual"] = rep.residual;
        } else if (s.command == "bochner") {
            detail::run_bochner(s, r);
        } else if (s.command == "dominated-sum") {
            detail::run_dominated(s, r);
        } else if (s.command == "probe-open-question") {
            const auto net = probe_open_question(build_operator(*s.op), detail::probe_options(s));
            detail::add_minor_rows(r, net);
            r.verdict = net.report.verdict;
            r.summary["note"] = "exploratory trajectories of determinant minors; no claim is made about the open question";
            r.summary["net"] = detail::net_summary(net);
        }
    } catch (const SpecError&) {
        throw;
    } catch (const Error& e) {
        throw Error("experiment '" + label + "': " + e.what());
    }
    std::stable_sort(r.rows.begin(), r.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return a.strategy != b.strategy ? a.strategy < b.strategy : a.n < b.n;
    });
    r.summary["tol"] = s.tol;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const ReportRecord& r) {
    std::string out = "strategy,n,value_re,value_im,estimate_re,estimate_im,bound\n";
    for (const auto& row : r.rows) {
        out += row.strategy + "," + std::to_string(row.n) + "," + format_double(row.value.real()) + "," +
               format_double(row.value.imag()) + "," + format_double(row.estimate.real()) + "," +
               format_double(row.estimate.imag()) + "," + format_double(row.bound) + "\n";
    }
    return out;
}

inline std::string to_json(const ReportRecord& r, bool include_wall_time = true) {
    nlohmann::ordered_json j;
    j["command"] = r.command;
    if (!r.name.empty()) j["name"] = r.name;
    j["verdict"] = to_string(r.verdict);
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        j["rows"].push_back({{"strategy", row.strategy},
                             {"n", row.n},
                             {"value_re", row.value.real()},
                             {"value_im", row.value.imag()},
                             {"estimate_re", row.estimate.real()},
                             {"estimate_im", row.estimate.imag()},
                             {"bound", row.bound}});
    }
    j["summary"] = r.summary;
    if (include_wall_time) j["summary"]["wall_seconds"] = r.wall_seconds;
    return j.dump(2) + "\n";
}

/// Write the report; "" or "-" means standard output. Files are replaced atomically.
inline void emit(const ReportRecord& r, const std::string& format, const std::string& path) {
    std::string text;
    if (format == "csv") text = to_csv(r);
    else if (format == "json") text = to_json(r);
    else throw SpecError("format", "expected csv or json");
    if (path.empty() || path == "-") {
        std::cout << text << std::flush;
        return;
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp + "' for writing");
        out << text;
        out.flush();
        if (!out) throw Error("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

}  // namespace netcalc
