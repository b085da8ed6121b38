// netcalc: run one experiment file and write its convergence table.
//
// Exit codes: 0 success, 1 usage/parse/numerical error,
// 2 verdict other than converged while --expect converged was given.

#include <netcalc/netcalc.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace {

struct Overrides {
    std::string spec_path;
    std::string out;
    std::string format = "csv";
    std::optional<double> tol;
    std::optional<std::size_t> n_max, trunc_dim, k_max;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> strategies;
    std::string expect;
};

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"trace-minors", "Trace of the compression T_F along each filtration F_1 < F_2 < ...; the net converges to tr T "
                     "exactly when T is trace class."},
    {"det-minors", "Determinant of the compression A_F along each filtration; a nonzero limit means A is of "
                   "determinant class."},
    {"fredholm", "Fredholm determinant det(1 - T) = sum_k (-1)^k tr(wedge^k T), cross-checked against "
                 "prod_j (1 - lambda_j) for normal T."},
    {"trace-class", "Decide whether T is trace class from its trace-minor net and estimate the trace norm."},
    {"det-class", "Decide whether A is of determinant class from its determinant-minor net."},
    {"block-check", "For A respecting E_split (+) its complement, compare det A with det A_head * det A_rest."},
    {"product-check", "For determinant-class A and B, compare det(AB) with det A * det B."},
    {"bochner", "Integral of a vector-valued function into a locally convex space as the limit of simple-function "
                "integrals, with per-seminorm defects."},
    {"dominated-sum", "lim over alpha of sum_k a_k(alpha) for families dominated by a summable sequence."},
    {"probe-open-question", "Determinant-minor trajectories of small non-normal operators; exploratory, renders "
                            "no verdict."},
};

netcalc::ExperimentSpec load(const std::string& command, const Overrides& o) {
    netcalc::ExperimentSpec s = netcalc::parse_spec(o.spec_path, command);
    if (o.tol) s.tol = *o.tol;
    if (o.n_max) s.n_max = *o.n_max;
    if (o.trunc_dim) s.trunc_dim = *o.trunc_dim;
    if (o.k_max) s.k_max = *o.k_max;
    if (o.seed) s.seed = *o.seed;
    if (!o.strategies.empty()) s.strategies = o.strategies;
    netcalc::validate(s);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netcalc: nets of principal minors, Fredholm determinants and vector-valued integrals"};
    app.require_subcommand(1);
    Overrides o;
    for (const auto& [name, help] : kCommands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--spec", o.spec_path, "Experiment file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output file (default: standard output)");
        sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--tol", o.tol, "Tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--n-max", o.n_max, "Largest filtration index")->check(CLI::PositiveNumber);
        sub->add_option("--trunc-dim", o.trunc_dim, "Truncation dimension N")->check(CLI::PositiveNumber);
        sub->add_option("--k-max", o.k_max, "Highest exterior power, or seminorm depth for bochner")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "Seed for the random filtration")->check(CLI::PositiveNumber);
        sub->add_option("--strategies", o.strategies,
                        "Filtrations: coordinate, eigen-sorted, adversarial+, adversarial-, random")
            ->delimiter(',');
        sub->add_option("--expect", o.expect, "Exit with status 2 unless the verdict matches")
            ->check(CLI::IsMember({"converged"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const netcalc::ExperimentSpec spec = load(command, o);
        const netcalc::ReportRecord report = netcalc::execute(spec);
        netcalc::emit(report, o.format, o.out);
        if (o.expect == "converged" && report.verdict != netcalc::Verdict::converged) {
            std::cerr << "netcalc: verdict " << netcalc::to_string(report.verdict) << "\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "netcalc: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
