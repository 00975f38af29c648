#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fgmopt/config.hpp"
#include "fgmopt/pipeline.hpp"

using namespace fgmopt::cli;
namespace fs = std::filesystem;

namespace {

const char* const kSmallQc = R"(kind = quadratic-cycle-regret
d = 5
n = 200
seeds = 3
methods = fgm, best-in-dataset, naive-full
)";

std::string run_to_string(const RunConfig& config, int workers)
{
    std::ostringstream out;
    run_pipeline(config, out, workers);
    return out.str();
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        out.push_back(line);
    return out;
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("fgmopt_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string command =
        std::string("\"") + FGMOPT_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(command.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("parser errors")
{
    CHECK_THROWS_WITH_AS(parse_config(""), "experiment kind required", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("# only a comment\n"), "experiment kind required", ConfigError);
    CHECK_THROWS_WITH(parse_config("kind = stein-check\nd = 3\nn = 10\nd = 4\n"),
                      doctest::Contains("lines 2 and 4"));
    CHECK_THROWS_WITH(parse_config("kind = stein-check\nd = 3\nn = 10\nfrobnicate = 1\n"),
                      doctest::Contains("frobnicate"));
    CHECK_THROWS_WITH(parse_config("kind = stein-check\nd = 3\nthis line has no equals\n"),
                      doctest::Contains("line 3"));
    CHECK_THROWS_WITH(parse_config("kind = stein-check\n[nowhere]\n"), doctest::Contains("line 2"));
    CHECK_THROWS_WITH(parse_config("kind = stein-check\nd = three\nn = 1\n"), doctest::Contains("line 2"));
    CHECK_THROWS_WITH(parse_config("kind = stein-check\nn = 10\n"), doctest::Contains("'d'"));
    CHECK_THROWS_AS(parse_config("kind = quadratic-cycle-regret\nd = 4\nn = 10\nmethods = vae-fgm\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("kind = rbf-discovery\nd = 0\nn = 10\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("kind = rbf-discovery\nd = 7\nn = 10\n[discovery]\nalpha = 1.5\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("kind = rbf-discovery\nd = 7\nn = 10\nseeds = 0\n"), ConfigError);
}

TEST_CASE("minimal config is filled with defaults")
{
    const auto c = parse_config("kind = rbf-optimize\nd = 7\nn = 500\nseeds = 1\n");
    CHECK(c.kind == ExperimentKind::RbfOptimize);
    CHECK(c.d == 7);
    CHECK(c.n == 500);
    CHECK(c.seeds == std::vector<std::uint64_t>{0});
    CHECK(c.methods == std::vector<std::string>{"fgm", "naive-full"});
    CHECK(c.pattern == "triangle-chain");
    CHECK(c.discovery.alpha == 0.05);
    CHECK(c.surrogate.epochs == 200);
    CHECK(c.optimize.steps == 50);
    CHECK(c.optimize.init_std == 0.5);
    CHECK(c.vae.noise_scale == 0.1);

    const auto four = parse_config("kind = rbf-discovery\nd = 4\nn = 100\n");
    CHECK(four.pattern == "overlapping-triangles");

    const auto full = parse_config(R"(# sweep
[experiment]
kind = quadratic-cycle-regret
d = 8
n = 1000
seed_list = 4, 9
methods = best-in-dataset
[surrogate]
lambda = 0.5
[output]
dir = somewhere
)");
    CHECK(full.seeds == std::vector<std::uint64_t>{4, 9});
    CHECK(full.methods == std::vector<std::string>{"best-in-dataset"});
    CHECK(full.surrogate.lambda == 0.5);
    CHECK(full.out_dir == fs::path("somewhere"));

    const std::string reference = config_reference();
    for (const char* key : {"kind", "alpha", "epochs", "noise_scale", "rwr_temperature", "dir"})
        CHECK(reference.find(key) != std::string::npos);
}

TEST_CASE("shipped configs parse")
{
    for (const auto& entry : fs::directory_iterator(FGMOPT_CONFIG_DIR)) {
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path()));
    }
    CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("results header and row format")
{
    CHECK(results_header() == "experiment,method,d,n,seed,metric,value,message");
    ResultRow row{"quadratic-cycle-regret", "fgm", 8, 1000, 3, "regret", 0.1, ""};
    CHECK(format_row(row) == "quadratic-cycle-regret,fgm,8,1000,3,regret,0.10000000000000001,");
    row.value = INFINITY;
    row.metric = "coverage_full";
    CHECK(format_row(row) == "quadratic-cycle-regret,fgm,8,1000,3,coverage_full,inf,");
    row.metric = "error";
    row.message = "bad, \"thing\"";
    CHECK(format_row(row) == "quadratic-cycle-regret,fgm,8,1000,3,error,,\"bad, \"\"thing\"\"\"");
}

TEST_CASE("plan order is seeds outer, methods inner")
{
    const auto config = parse_config(kSmallQc);
    const auto cells = plan_cells(config);
    REQUIRE(cells.size() == 9);
    CHECK(cells[0].seed == 0);
    CHECK(cells[0].method == "fgm");
    CHECK(cells[1].method == "best-in-dataset");
    CHECK(cells[3].seed == 1);
    CHECK(describe_plan(config).find("9 cell(s)") != std::string::npos);
}

TEST_CASE("pipeline output is independent of the worker count")
{
    const auto config = parse_config(kSmallQc);
    const std::string one = run_to_string(config, 1);
    CHECK(one == run_to_string(config, 3));
    CHECK(one == run_to_string(config, 16));
    const auto lines = lines_of(one);
    CHECK(lines.front() == results_header());
    CHECK(one.find(",error,") == std::string::npos);
}

TEST_CASE("seed isolation")
{
    const auto sweep = parse_config(kSmallQc);
    const auto alone = parse_config(std::string(kSmallQc) + "seed_list = 1\n");
    std::vector<std::string> from_sweep;
    for (const auto& line : lines_of(run_to_string(sweep, 2)))
        if (line.find(",5,200,1,") != std::string::npos)
            from_sweep.push_back(line);
    auto single = lines_of(run_to_string(alone, 1));
    single.erase(single.begin());
    CHECK(!single.empty());
    CHECK(single == from_sweep);
}

TEST_CASE("a failing cell is contained")
{
    const auto config = parse_config(std::string(kSmallQc) + "[surrogate]\nlambda = 0\n");
    std::ostringstream out;
    const auto summary = run_pipeline(config, out, 2);
    CHECK(summary.cells == 9);
    CHECK(summary.failed == 6);  // fgm and naive-full on every seed
    int errors = 0, regrets = 0;
    for (const auto& line : lines_of(out.str())) {
        if (line.find(",error,") != std::string::npos)
            ++errors;
        if (line.find("best-in-dataset") != std::string::npos && line.find(",regret,") != std::string::npos)
            ++regrets;
    }
    CHECK(errors == 6);
    CHECK(regrets == 3);

    const auto rows = run_cell(config, Cell{0, "fgm"});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].metric == "error");
    CHECK(!rows[0].message.empty());
}

TEST_CASE("cli exit codes and outputs")
{
    const fs::path dir = scratch_dir("exit");
    const fs::path log = dir / "log.txt";
    {
        std::ofstream(dir / "ok.cfg") << kSmallQc;
        std::ofstream(dir / "bad.cfg") << "kind = quadratic-cycle-regret\nd = 5\nn = 200\nbogus = 1\n";
        std::ofstream(dir / "fails.cfg") << kSmallQc << "[surrogate]\nlambda = 0\n";
    }

    CHECK(run_cli("run \"" + (dir / "ok.cfg").string() + "\" --dry-run --out \"" +
                      (dir / "dry").string() + "\"",
                  log) == 0);
    CHECK(!fs::exists(dir / "dry"));
    CHECK(slurp(log).find("9 cell(s)") != std::string::npos);

    CHECK(run_cli("run \"" + (dir / "ok.cfg").string() + "\" --workers 2 --out \"" +
                      (dir / "a").string() + "\"",
                  log) == 0);
    CHECK(run_cli("run \"" + (dir / "ok.cfg").string() + "\" --workers 1 --out \"" +
                      (dir / "b").string() + "\"",
                  log) == 0);
    const std::string a = slurp(dir / "a" / "results.csv");
    CHECK(a == slurp(dir / "b" / "results.csv"));
    CHECK(lines_of(a).front() == results_header());
    const std::string meta = slurp(dir / "a" / "meta.txt");
    CHECK(meta.find("--- config ---") != std::string::npos);
    CHECK(meta.find("started ") != std::string::npos);
    CHECK(lines_of(slurp(dir / "a" / "timings.csv")).front() == "experiment,method,seed,seconds");

    CHECK(run_cli("run \"" + (dir / "ok.cfg").string() + "\" --seed-offset 1 --out \"" +
                      (dir / "shift").string() + "\"",
                  log) == 0);
    CHECK(slurp(dir / "shift" / "results.csv").find(",5,200,3,") != std::string::npos);

    CHECK(run_cli("run \"" + (dir / "bad.cfg").string() + "\" --out \"" + (dir / "c").string() + "\"",
                  log) == 2);
    CHECK(slurp(log).find("bogus") != std::string::npos);

    CHECK(run_cli("run \"" + (dir / "fails.cfg").string() + "\" --out \"" + (dir / "d").string() + "\"",
                  log) == 1);
    CHECK(fs::exists(dir / "d" / "results.csv"));

    fs::remove_all(dir);
}
