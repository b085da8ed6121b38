#include <netcalc/experiment.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace netcalc;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "netcalc-tests";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name);
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NETCALC_CLI) + " " + args + " >" + scratch("stdout.txt").string() + " 2>" +
                            scratch("stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return std::string(NETCALC_CONFIGS) + "/" + name; }

const char* diagonal_spec = R"(command = "det-class"
name = "telescoping"
tol = 1e-6
n_max = 4096

[operator]
form = "diagonal"
lambda = "1 - 1/(j+1)^2"
)";

}  // namespace

TEST(ParseSpec, SyntaxErrorCarriesPosition) {
    try {
        parse_spec_text("command = \"fredholm\"\ntol = = 3\n");
        FAIL() << "no error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_GE(e.column(), 5u);
    }
}

TEST(ParseSpec, NegativeToleranceNamesField) {
    try {
        parse_spec_text("command = \"fredholm\"\ntol = -1e-6\n[operator]\nlambda = \"2^-j\"\n");
        FAIL() << "no error";
    } catch (const SpecError& e) {
        EXPECT_EQ(e.field(), "tol");
    }
}

TEST(ParseSpec, RandomFiltrationNeedsSeed) {
    try {
        parse_spec_text("command = \"det-class\"\nstrategies = [\"random\"]\n[operator]\nlambda = \"1 - 2^-j\"\n");
        FAIL() << "no error";
    } catch (const SpecError& e) {
        EXPECT_EQ(e.field(), "seed");
    }
}

TEST(ParseSpec, UnknownKeysAndTablesRejected) {
    EXPECT_THROW(parse_spec_text("command = \"fredholm\"\ncolour = 1\n[operator]\nlambda = \"2^-j\"\n"), SpecError);
    EXPECT_THROW(parse_spec_text("command = \"fredholm\"\n[operator]\nlambda = \"2^-j\"\n[extra]\n"), SpecError);
    EXPECT_THROW(parse_spec_text("command = \"fredholm\"\n[operator]\nlambda = \"2^-j\"\nshade = 2\n"), SpecError);
}

TEST(ParseSpec, CommandFromCallerMustAgree) {
    const auto s = parse_spec_text("[operator]\nlambda = \"2^-j\"\n", std::string("fredholm"));
    EXPECT_EQ(s.command, "fredholm");
    try {
        parse_spec_text(diagonal_spec, std::string("fredholm"));
        FAIL() << "no error";
    } catch (const SpecError& e) {
        EXPECT_EQ(e.field(), "command");
    }
    EXPECT_THROW(parse_spec_text("[operator]\nlambda = \"2^-j\"\n"), SpecError);
}

TEST(ParseSpec, MissingTablesRejected) {
    EXPECT_THROW(parse_spec_text("command = \"fredholm\"\n"), SpecError);
    EXPECT_THROW(parse_spec_text("command = \"block-check\"\n[operator]\nlambda = \"2^-j\"\n"), SpecError);
    EXPECT_THROW(parse_spec_text("command = \"bochner\"\n"), SpecError);
    EXPECT_THROW(parse_spec_text("command = \"fredholm\"\n[operator]\nlambda = \"2^-j\"\n[measure]\n"), SpecError);
}

TEST(ParseSpec, RoundTripThroughCanonicalForm) {
    for (const auto& entry : fs::directory_iterator(NETCALC_CONFIGS)) {
        const ExperimentSpec s = parse_spec(entry.path().string());
        const std::string text = canonical_spec(s);
        EXPECT_EQ(parse_spec_text(text), s) << entry.path();
        EXPECT_EQ(canonical_spec(parse_spec_text(text)), text) << entry.path();
    }
}

TEST(ParseSpec, UnreadableFile) { EXPECT_THROW(parse_spec("/nonexistent/spec.toml"), Error); }

TEST(Report, EmptyCsvIsHeaderOnly) {
    EXPECT_EQ(to_csv(ReportRecord{}), "strategy,n,value_re,value_im,estimate_re,estimate_im,bound\n");
}

TEST(Report, OneRowCsv) {
    ReportRecord r;
    r.rows.push_back({"coordinate", 3, Scalar(0.5, 0.0), Scalar(0.25, -1.0), 1e-3});
    const std::string csv = to_csv(r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_NE(csv.find("coordinate,3,0.5,0,0.25,-1,0.001\n"), std::string::npos) << csv;
}

TEST(Report, JsonCarriesVerdictAndRows) {
    ReportRecord r;
    r.command = "fredholm";
    r.verdict = Verdict::converged;
    r.rows.push_back({"series", 1, Scalar(1.0), Scalar(1.0), 0.0});
    const auto j = nlohmann::json::parse(to_json(r, false));
    EXPECT_EQ(j["verdict"], "converged");
    EXPECT_EQ(j["rows"].size(), 1u);
    EXPECT_FALSE(j["summary"].contains("wall_seconds"));
}

TEST(Report, EmitWritesFileAtomically) {
    ReportRecord r;
    r.rows.push_back({"x", 1, Scalar(2.0), Scalar(2.0), 0.0});
    const fs::path out = scratch("emit.csv");
    emit(r, "csv", out.string());
    EXPECT_EQ(slurp(out), to_csv(r));
    EXPECT_FALSE(fs::exists(out.string() + ".tmp"));
    EXPECT_THROW(emit(r, "xml", out.string()), SpecError);
}

TEST(Execute, TelescopingDeterminantClass) {
    const auto r = execute(parse_spec_text(diagonal_spec));
    EXPECT_EQ(r.verdict, Verdict::converged);
    EXPECT_TRUE(r.summary["determinant_class"].get<bool>());
    const auto lim = r.summary["net"]["limit"];
    EXPECT_NEAR(lim[0].get<double>(), 0.5, 1e-6);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        if (r.rows[i].strategy == r.rows[i - 1].strategy) {
            EXPECT_LT(r.rows[i - 1].n, r.rows[i].n);
        }
    }
}

TEST(Execute, FredholmGeometric) {
    const auto r = execute(parse_spec(config("fredholm_geometric.toml")));
    EXPECT_EQ(r.verdict, Verdict::converged);
    bool series = false, eigen = false;
    for (const auto& row : r.rows) {
        series = series || row.strategy == "series";
        eigen = eigen || row.strategy == "eigen";
    }
    EXPECT_TRUE(series && eigen);
}

TEST(Execute, AlternatingTraceMinorsDiverge) {
    const auto r = execute(parse_spec(config("trace_minors_alternating.toml")));
    EXPECT_EQ(r.verdict, Verdict::diverged);
}

TEST(Execute, DominatedSum) {
    const auto r = execute(parse_spec(config("dominated_sum.toml")));
    EXPECT_EQ(r.verdict, Verdict::converged);
    ASSERT_FALSE(r.rows.empty());
    EXPECT_EQ(r.rows.front().strategy, "head");
}

TEST(Execute, ErrorsNameTheExperiment) {
    auto s = parse_spec_text(diagonal_spec);
    s.op->lambda = "1 - 1/j";
    s.n_max = 8;
    s.trunc_dim = 4;
    try {
        execute(s);
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("experiment 'telescoping'"), std::string::npos) << e.what();
    }
}

TEST(Execute, DeterministicRows) {
    const auto s = parse_spec(config("det_class_telescoping.toml"));
    EXPECT_EQ(to_csv(execute(s)), to_csv(execute(s)));
}

TEST(Cli, SuccessWritesReport) {
    const fs::path out = scratch("cli.csv");
    fs::remove(out);
    EXPECT_EQ(run_cli("fredholm --spec " + config("fredholm_geometric.toml") + " --out " + out.string()), 0);
    EXPECT_EQ(slurp(out).rfind("strategy,n,", 0), 0u);
}

TEST(Cli, JsonToStdout) {
    EXPECT_EQ(run_cli("fredholm --spec " + config("fredholm_geometric.toml") + " --format json"), 0);
    const auto j = nlohmann::json::parse(slurp(scratch("stdout.txt")));
    EXPECT_EQ(j["command"], "fredholm");
}

TEST(Cli, ParseErrorExitsOne) {
    const auto bad = write_file("bad.toml", "command = \"fredholm\"\ntol = = 1\n");
    EXPECT_EQ(run_cli("fredholm --spec " + bad.string()), 1);
    EXPECT_NE(slurp(scratch("stderr.txt")).find("line 2, column"), std::string::npos);
}

TEST(Cli, MissingFileAndBadFlagsExitOne) {
    EXPECT_EQ(run_cli("fredholm --spec /nonexistent.toml"), 1);
    EXPECT_EQ(run_cli("fredholm --spec " + config("fredholm_geometric.toml") + " --format xml"), 1);
    EXPECT_EQ(run_cli("no-such-command"), 1);
}

TEST(Cli, CommandMismatchExitsOne) {
    EXPECT_EQ(run_cli("det-class --spec " + config("fredholm_geometric.toml")), 1);
}

TEST(Cli, ExpectConvergedExitsTwoOnDivergence) {
    EXPECT_EQ(run_cli("trace-minors --spec " + config("trace_minors_alternating.toml") + " --expect converged"), 2);
    EXPECT_EQ(run_cli("trace-minors --spec " + config("trace_minors_alternating.toml")), 0);
}

TEST(Cli, OverridesApply) {
    const fs::path out = scratch("override.json");
    EXPECT_EQ(run_cli("det-class --spec " + config("det_class_telescoping.toml") +
                      " --strategies coordinate --n-max 512 --format json --out " + out.string()),
              0);
    const auto j = nlohmann::json::parse(slurp(out));
    for (const auto& row : j["rows"]) {
        EXPECT_EQ(row["strategy"], "coordinate");
        EXPECT_LE(row["n"].get<std::size_t>(), 512u);
    }
}

TEST(Cli, ByteIdenticalReruns) {
    const fs::path a = scratch("run_a.csv"), b = scratch("run_b.csv");
    const std::string base = "det-class --spec " + config("det_class_telescoping.toml") + " --seed 11 --out ";
    ASSERT_EQ(run_cli(base + a.string()), 0);
    ASSERT_EQ(run_cli(base + b.string()), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_FALSE(slurp(a).empty());
}
