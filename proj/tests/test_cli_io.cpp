#include <doctest.h>

#include <clocale>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "iud/cli.hpp"
#include "iud/inference.hpp"
#include "iud/io.hpp"
#include "oracles.hpp"

using namespace iud;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("iud_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "iud");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> cells;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, sep)) cells.push_back(cell);
    return cells;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream s(text);
    std::string line;
    while (std::getline(s, line)) out.push_back(line);
    return out;
}

std::string config_error(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigurationError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("minimal config takes defaults") {
    const SimulationPlan plan = parse_config(json::parse(R"({"scenarios":["S_B"],"trial":{"n":200}})"));
    CHECK(plan.trial.treatments == 2);
    CHECK(plan.trial.strata == 5);
    CHECK(plan.trial.horizon == 200);
    CHECK(plan.trial.varsigma == 1.0);
    CHECK(plan.trial.covariate_probs.isApprox(Vector::Constant(5, 0.2)));
    CHECK(plan.replicates == 10000);
    CHECK(plan.trial.mechanism.psi_max == 10.0);
    CHECK(plan.trial.mechanism.c_sequence.rule == CSequence::Rule::InverseLog);
    REQUIRE(plan.scenarios.size() == 1);
    CHECK(plan.scenarios[0].theta == find_scenario("S_B")->theta);
    CHECK(plan.mechanisms.size() == 4);
    CHECK(plan.mechanisms[0].label == "CR");
    CHECK(plan.mechanisms[0].allocation.kind == AllocationRule::Kind::Constant);
    CHECK(plan.mechanisms[1].allocation.kind == AllocationRule::Kind::InverseComplement);
    CHECK(plan.trial.checkpoints == std::vector<Count>{50, 100, 200});
}

TEST_CASE("config rejections name the key") {
    CHECK(config_error(json::parse(R"({"trial":{"p":[0.5,0.6,0.1,0.1,0.1]}})")).find("trial.p") == 0);
    CHECK(config_error(json::parse(R"({"scenarios":[{"name":"x","theta":[[1.2,0.5,0.5,0.5,0.5],[0.1,0.1,0.1,0.1,0.1]]}]})"))
              .find("scenarios[0].theta[0]") == 0);
    CHECK(config_error(json::parse(R"({"trial":{"n":200,"bogus":1}})")) == "unknown key trial.bogus");
    CHECK(config_error(json::parse(R"({"mechanism":{"mle":{"m_max":1e6,"x":1}}})")) == "unknown key mechanism.mle.x");
    CHECK(config_error(json::parse(R"({"trial":{"n":"many"}})")).find("trial.n") == 0);
    CHECK(config_error(json::parse(R"({"mechanism":{"variant":"IUD9"}})")).find("mechanism.variant") == 0);
    CHECK(config_error(json::parse(R"({"scenarios":["S_X"]})")).find("scenarios[0]") == 0);
    CHECK(config_error(json::parse(R"({"trial":{"H":3},"scenarios":["S_B"]})")).find("scenarios[0]") == 0);
    CHECK(config_error(json::parse(R"([1,2])")).find("config") == 0);
}

TEST_CASE("resolved config round-trips") {
    const json doc = json::parse(R"({
        "trial": {"n": 300, "seed": 7, "info_times": [0.5, 1.0], "p": [0.3,0.3,0.05,0.05,0.3]},
        "mechanism": {"variant": ["IUD2", "IUD3C"], "psi_kind": "exp", "c_rule": {"kind":"power","scale":0.5,"exponent":0.25}},
        "allocation": {"f": {"kind": "power", "gamma": 2}},
        "scenarios": ["S_4", {"name": "mine", "theta": [[0.2,0.3,0.4,0.5,0.6],[0.6,0.5,0.4,0.3,0.2]]}],
        "replicates": 12
    })");
    const SimulationPlan a = parse_config(doc);
    const SimulationPlan b = parse_config(plan_to_json(a));
    CHECK(plan_to_json(a) == plan_to_json(b));
    CHECK(a.trial.checkpoints == std::vector<Count>{50, 100, 150, 200, 300});
    CHECK(b.mechanisms[1].params.variant == Variant::ModelBasedClustered);
    CHECK(b.mechanisms[0].allocation.kind == AllocationRule::Kind::Power);
    CHECK(b.trial.mechanism.psi_kind == PsiKind::Exp);
    CHECK(b.scenarios[1].theta(1, 0) == 0.6);
    CHECK(b.replicates == 12);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(123456789012.0) == "1.23456789e+11");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(std::nan("")) == "nan");
    if (std::setlocale(LC_ALL, "de_DE.UTF-8") || std::setlocale(LC_ALL, "fr_FR.UTF-8")) {
        CHECK(format_number(0.5) == "0.5");
        std::setlocale(LC_ALL, "C");
    }
}

TEST_CASE("counts files") {
    std::istringstream with_header("n,s\n10,9\n10,1\n");
    const AggregatedSample a = read_counts_csv(with_header);
    CHECK(a.trials == std::vector<Count>{10, 10});
    CHECK(a.successes == std::vector<Count>{9, 1});
    std::istringstream bare("4, 2\r\n\n6,6\n");
    CHECK(read_counts_csv(bare).successes == std::vector<Count>{2, 6});
    std::istringstream bad("3,4\n");
    CHECK_THROWS_AS(read_counts_csv(bad), ConfigurationError);
    std::istringstream garbage("n,s\n1,x\n");
    CHECK_THROWS_AS(read_counts_csv(garbage), ConfigurationError);
}

TEST_CASE("mle subcommand") {
    TempDir dir;
    write_file(dir.path / "c.csv", "n,s\n10,9\n10,1\n");
    const Result r = run({"mle", "--counts", (dir.path / "c.csv").string()});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "alpha,beta,status,log_likelihood");
    const auto cells = split(rows[1], ',');
    CHECK(cells[2] == "Interior");
    const AggregatedSample s({10, 10}, {9, 1});
    const oracle::GridMax grid = oracle::grid_max(s);
    CHECK(std::stod(cells[3]) >= grid.value - 1e-6);
    CHECK(std::stod(cells[0]) == doctest::Approx(oracle::zoom_max(s, grid).alpha).epsilon(1e-4));

    write_file(dir.path / "p.csv", "10,5\n10,5\n");
    const Result pooled = run({"mle", "--counts", (dir.path / "p.csv").string()});
    CHECK(lines(pooled.out)[1].rfind("inf,inf,PooledBoundary,", 0) == 0);
    const Result prior = run({"mle", "--counts", (dir.path / "p.csv").string(), "--varsigma", "0"});
    CHECK(prior.code == 2);
    CHECK(run({"mle", "--counts", (dir.path / "missing.csv").string()}).code == 2);
    CHECK(run({"mle"}).code == 2);
}

TEST_CASE("scenarios subcommand") {
    const Result r = run({"scenarios"});
    CHECK(r.code == 0);
    const auto rows = lines(r.out);
    CHECK(rows[0] == "name,kind,treatment,theta,alpha,beta");
    CHECK(rows.size() == 15);
    CHECK(r.out.find("S_4,beta,2,,3.5,31.5") != std::string::npos);
}

TEST_CASE("simulate writes reproducible outputs") {
    TempDir dir;
    write_file(dir.path / "cfg.json",
               R"({"scenarios":["S_B","S_5"],"trial":{"n":100,"info_times":[0.5,1.0]},
                   "mechanism":{"variant":["CR","IUD2","IUD3"]},"replicates":40})");
    unsetenv("IUD_THREADS");
    const Result a = run({"simulate", "--config", (dir.path / "cfg.json").string(), "--out",
                          (dir.path / "a").string(), "--threads", "1", "--emit-traces", "--replicates", "3"});
    REQUIRE(a.code == 0);
    CHECK(fs::exists(dir.path / "a" / "metrics.csv"));
    CHECK(fs::exists(dir.path / "a" / "manifest.json"));
    CHECK(fs::exists(dir.path / "a" / "traces" / "S_B_IUD2_2.json"));
    const std::string csv = slurp(dir.path / "a" / "metrics.csv");
    CHECK(lines(csv)[0] == "scenario,mechanism,estimator,n,metric,stratum,mean,se,replicates");
    for (const auto& row : lines(csv)) CHECK(split(row, ',').size() == 9);

    const json manifest = json::parse(slurp(dir.path / "a" / "manifest.json"));
    CHECK(manifest["config"]["replicates"] == 3);
    CHECK(manifest["outputs"]["metrics"] == "metrics.csv");

    setenv("IUD_THREADS", "3", 1);
    const Result b = run({"simulate", "--config", (dir.path / "a" / "manifest.json").string(), "--out",
                          (dir.path / "b").string()});
    unsetenv("IUD_THREADS");
    REQUIRE(b.code == 0);
    CHECK(json::parse(slurp(dir.path / "b" / "manifest.json"))["threads"] == 3);
    CHECK(slurp(dir.path / "b" / "metrics.csv") == csv);

    const Result seeded = run({"simulate", "--config", (dir.path / "cfg.json").string(), "--out",
                               (dir.path / "c").string(), "--replicates", "3", "--seed", "99"});
    REQUIRE(seeded.code == 0);
    CHECK(slurp(dir.path / "c" / "metrics.csv") != csv);
}

TEST_CASE("simulate exit codes") {
    TempDir dir;
    CHECK(run({"simulate", "--config", (dir.path / "none.json").string(), "--out", (dir.path / "o").string()}).code == 2);
    write_file(dir.path / "bad.json", R"({"trial":{"p":[1]}})");
    const Result bad = run({"simulate", "--config", (dir.path / "bad.json").string(), "--out", (dir.path / "o").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("trial.p") != std::string::npos);
    write_file(dir.path / "broken.json", "{not json");
    CHECK(run({"simulate", "--config", (dir.path / "broken.json").string(), "--out", (dir.path / "o").string()}).code == 2);
    CHECK(run({"simulate", "--config", (dir.path / "bad.json").string()}).code == 2);
    CHECK(run({"simulate", "--bogus"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"--help"}).code == 0);

    write_file(dir.path / "ok.json", R"({"scenarios":["S_B"],"trial":{"n":20},"replicates":2})");
    write_file(dir.path / "file", "x");
    const Result blocked = run({"simulate", "--config", (dir.path / "ok.json").string(), "--out",
                                (dir.path / "file" / "sub").string()});
    CHECK(blocked.code == 1);
}

TEST_CASE("analyze reports fixed-sample and sequential statistics") {
    TempDir dir;
    write_file(dir.path / "cfg.json",
               R"({"scenarios":["S_B"],"trial":{"n":400,"info_times":[0.5,1.0]},"mechanism":{"variant":"IUD1"}})");
    REQUIRE(run({"simulate", "--config", (dir.path / "cfg.json").string(), "--out", (dir.path / "o").string(),
                 "--replicates", "1", "--emit-traces"})
                .code == 0);
    const fs::path trace_path = dir.path / "o" / "traces" / "S_B_IUD1_0.json";
    const TrialTrace trace = trace_from_json(read_json(trace_path));
    CHECK(trace.config.horizon == 400);
    CHECK(trace.config.mechanism.variant == Variant::VanishingBorrowing);
    CHECK(trace.find(200).has_value());

    const Result r = run({"analyze", "--trace", trace_path.string(), "--pair", "1,2", "--stratum", "2", "--times",
                          "0.5,1.0"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 6);
    const auto header = split(rows[0], ',');
    const auto fixed = split(rows[1], ',');
    const auto wald_col = std::find(header.begin(), header.end(), "wald") - header.begin();
    CHECK(rows[3] == "t,step,U");
    CHECK(split(rows[4], ',')[1] == "200");
    const auto end = split(rows[5], ',');
    CHECK(end[0] == "1");
    CHECK(end[2] == fixed[wald_col]);
    CHECK(std::stod(end[2]) == doctest::Approx(wald_statistic(trace.counts.back(), 0, 1, 1)).epsilon(1e-8));

    CHECK(run({"analyze", "--trace", trace_path.string(), "--pair", "1,3", "--stratum", "1"}).code == 2);
    CHECK(run({"analyze", "--trace", trace_path.string(), "--pair", "1-2", "--stratum", "1"}).code == 2);
    CHECK(run({"analyze", "--trace", trace_path.string(), "--pair", "1,2", "--stratum", "9"}).code == 2);
    CHECK(run({"analyze", "--trace", trace_path.string(), "--pair", "1,2", "--stratum", "1", "--times", "0.3"}).code == 2);
    write_file(dir.path / "foreign.json", R"({"format":"other"})");
    CHECK(run({"analyze", "--trace", (dir.path / "foreign.json").string(), "--pair", "1,2", "--stratum", "1"}).code == 2);
}
