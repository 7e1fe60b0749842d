#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "ssddr/model.hpp"

#ifndef SSDDR_CLI_BINARY
#error "SSDDR_CLI_BINARY must point at the built command line tool"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SSDDR_CLI_BINARY) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
        output.append(buf.data(), got);
    const int status = pclose(pipe);
    RunResult r;
    r.output = output;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

// Workspace with a small-but-plausible run configuration; shared across the
// test cases in this file (doctest runs them in declaration order).
const fs::path& workspace() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "ssddr_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);

        json cfg;
        cfg["schema"]["sensitive"] = json::array(
            {{{"name", "gender"}, {"categories", {"Male", "Female"}}},
             {{"name", "citizenship"}, {"categories", {"German", "NonGerman"}}}});
        json feats = json::array();
        feats.push_back("age");
        for (int i = 1; i <= 30; ++i) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "x%02d", i);
            feats.push_back(buf);
        }
        cfg["schema"]["features"] = feats;
        cfg["schema"]["outcome"] = {{"name", "duration"}, {"kind", "duration"}};
        cfg["family"] = "gamma";
        cfg["spline"] = {{"feature", "age"}, {"degree", 3},     {"knots", 20},
                         {"penalty_order", 2}, {"lambda_s", 1.0}};
        cfg["fit"] = {{"lambda", 1e-4}, {"max_epochs", 600}, {"tol", 1e-9}, {"seed", 7}};
        cfg["decision"] = {{"delta", 0.15}};
        cfg["datagen"] = {{"n", 2500}, {"seed", 11}};
        std::ofstream out(d / "run.json");
        out << cfg.dump(2) << "\n";
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("cli: generate produces data, truth sidecar and manifest") {
    const fs::path& dir = workspace();
    const std::string cfg = (dir / "run.json").string();

    const RunResult r = run_cli("generate --config " + cfg + " --out " +
                                (dir / "train.csv").string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "train.csv"));
    CHECK(fs::exists(dir / "train.csv.truth.json"));
    CHECK(fs::exists(dir / "train.csv.manifest.json"));
    CHECK(count_lines(dir / "train.csv") == 2501);

    // Same config, same bytes.
    const RunResult again = run_cli("generate --config " + cfg + " --out " +
                                    (dir / "train_again.csv").string());
    CHECK(again.exit_code == 0);
    std::ifstream a(dir / "train.csv"), b(dir / "train_again.csv");
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    // Different seed, different data.
    const RunResult seeded = run_cli("generate --config " + cfg + " --seed 99 --out " +
                                     (dir / "test.csv").string());
    CHECK(seeded.exit_code == 0);
    std::ifstream c(dir / "test.csv");
    const std::string sc((std::istreambuf_iterator<char>(c)), {});
    CHECK(sc != sa);
}

TEST_CASE("cli: fit trains and writes a loadable model") {
    const fs::path& dir = workspace();
    const std::string cfg = (dir / "run.json").string();

    const RunResult r = run_cli("fit --config " + cfg + " --data " +
                                (dir / "train.csv").string() + " --out " +
                                (dir / "model.json").string());
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "model.json"));
    const ssddr::FittedModel m = ssddr::load_model(dir / "model.json");
    CHECK(m.spec.family == ssddr::Family::Gamma);
    CHECK(m.params.size() == 2);
    CHECK(m.info.lambda == 1e-4);
    CHECK(m.info.seed == 7);

    std::ifstream min(dir / "model.json.manifest.json");
    const json manifest = json::parse(min);
    CHECK(manifest["command"] == "fit");
    CHECK(manifest["inputs"].size() == 2);

    // --lambda overrides the config value.
    const RunResult heavy = run_cli("fit --config " + cfg + " --lambda 0.5 --data " +
                                    (dir / "train.csv").string() + " --out " +
                                    (dir / "model_heavy.json").string());
    CHECK(heavy.exit_code == 0);
    const ssddr::FittedModel mh = ssddr::load_model(dir / "model_heavy.json");
    CHECK(mh.info.lambda == 0.5);
    CHECK(mh.params[0].linear.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cli: predict writes one row per input") {
    const fs::path& dir = workspace();
    const std::string cfg = (dir / "run.json").string();
    const RunResult r = run_cli("predict --config " + cfg + " --model " +
                                (dir / "model.json").string() + " --data " +
                                (dir / "test.csv").string() + " --out " +
                                (dir / "preds.csv").string());
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "preds.csv"));
    CHECK(count_lines(dir / "preds.csv") == 2501);
    std::ifstream in(dir / "preds.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "row,cell,mean,variance,prob");
}

TEST_CASE("cli: decide routes rows and exports the rejected queue") {
    const fs::path& dir = workspace();
    const std::string cfg = (dir / "run.json").string();
    const RunResult r = run_cli("decide --config " + cfg + " --model " +
                                (dir / "model.json").string() + " --data " +
                                (dir / "test.csv").string() + " --out " +
                                (dir / "decisions").string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "decisions" / "decisions.csv"));
    CHECK(fs::exists(dir / "decisions" / "routing.csv"));
    CHECK(fs::exists(dir / "decisions" / "rejected.csv"));
    CHECK(fs::exists(dir / "decisions" / "manifest.json"));
    CHECK(count_lines(dir / "decisions" / "decisions.csv") == 2501);
    CHECK(count_lines(dir / "decisions" / "routing.csv") == 6);  // 4 cells + overall

    // decisions split = negatives + positives + rejected row counts add up.
    std::ifstream in(dir / "decisions" / "decisions.csv");
    std::string line;
    std::getline(in, line);
    std::size_t rejected = 0;
    while (std::getline(in, line))
        if (line.size() >= 2 && line.substr(line.size() - 2) == ",2") ++rejected;
    CHECK(count_lines(dir / "decisions" / "rejected.csv") == rejected + 1);
}

TEST_CASE("cli: sweep emits the curve grid") {
    const fs::path& dir = workspace();
    const std::string cfg = (dir / "run.json").string();
    const RunResult r = run_cli("sweep --config " + cfg + " --model " +
                                (dir / "model.json").string() + " --data " +
                                (dir / "test.csv").string() + " --out " +
                                (dir / "curves.csv").string());
    CHECK(r.exit_code == 0);
    // Default grid: 101 deltas x (overall + 4 groups) + header.
    CHECK(count_lines(dir / "curves.csv") == 1 + 101 * 5);

    const RunResult coarse = run_cli("sweep --config " + cfg +
                                     " --delta-grid 0:0.5:0.1 --model " +
                                     (dir / "model.json").string() + " --data " +
                                     (dir / "test.csv").string() + " --out " +
                                     (dir / "curves_coarse.csv").string());
    CHECK(coarse.exit_code == 0);
    CHECK(count_lines(dir / "curves_coarse.csv") == 1 + 6 * 5);
}

TEST_CASE("cli: audit writes the report bundle") {
    const fs::path& dir = workspace();
    const std::string cfg = (dir / "run.json").string();
    const RunResult r = run_cli("audit --config " + cfg + " --model " +
                                (dir / "model.json").string() + " --data " +
                                (dir / "test.csv").string() + " --out " +
                                (dir / "report").string());
    CHECK(r.exit_code == 0);
    for (const char* name :
         {"group_table.csv", "importance_mean.csv", "importance_variance.csv",
          "curves_overall.csv", "curves_groups.csv", "reject_by_group.csv",
          "manifest.json"}) {
        CHECK(fs::exists(dir / "report" / name));
    }
    CHECK(count_lines(dir / "report" / "group_table.csv") == 5);
    CHECK(count_lines(dir / "report" / "curves_overall.csv") == 1 + 101);
    CHECK(count_lines(dir / "report" / "curves_groups.csv") == 1 + 101 * 5);

    std::ifstream min(dir / "report" / "manifest.json");
    const json manifest = json::parse(min);
    CHECK(manifest["inputs"].size() == 3);
    CHECK(manifest["tool"] == "ssddr");
}

TEST_CASE("cli: tune scans the grid and reports per-lambda scores") {
    const fs::path& dir = workspace();
    // A lighter config so three grid fits stay fast.
    json cfg = json::parse(std::ifstream(dir / "run.json"));
    cfg["fit"]["max_epochs"] = 150;
    cfg["tune"]["grid"] = {1e-4, 1e-3, 0.2};
    cfg["datagen"]["n"] = 800;
    {
        std::ofstream out(dir / "tune.json");
        out << cfg.dump(2) << "\n";
    }
    const std::string tcfg = (dir / "tune.json").string();
    REQUIRE(run_cli("generate --config " + tcfg + " --out " + (dir / "tr.csv").string())
                .exit_code == 0);
    REQUIRE(run_cli("generate --config " + tcfg + " --seed 12 --out " +
                    (dir / "va.csv").string())
                .exit_code == 0);
    const RunResult r = run_cli("tune --config " + tcfg + " --data " +
                                (dir / "tr.csv").string() + " --validation " +
                                (dir / "va.csv").string() + " --out " +
                                (dir / "tuned.json").string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "tuned.json"));
    REQUIRE(fs::exists(dir / "tuned.json.tune.csv"));
    std::ifstream in(dir / "tuned.json.tune.csv");
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "lambda,mean_validation_nll,status");
    std::size_t rows = 0, selected = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.find(",selected") != std::string::npos) ++selected;
    }
    CHECK(rows == 3);
    CHECK(selected == 1);
}

TEST_CASE("cli: errors are single-line first, detail after, exit code 1") {
    const fs::path& dir = workspace();
    const RunResult missing = run_cli("fit --config " + (dir / "nope.json").string() +
                                      " --data x.csv --out y.json");
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.rfind("error: fit: ", 0) == 0);
    const std::string first_line = missing.output.substr(0, missing.output.find('\n'));
    CHECK(first_line.find("nope.json") != std::string::npos);

    // Config problems are all reported at once.
    json bad = json::parse(std::ifstream(dir / "run.json"));
    bad["family"] = "weibull";
    bad["fit"]["tol"] = -1.0;
    bad["decision"]["delta"] = 2.0;
    {
        std::ofstream out(dir / "bad.json");
        out << bad.dump(2) << "\n";
    }
    const RunResult invalid = run_cli("fit --config " + (dir / "bad.json").string() +
                                      " --data x.csv --out y.json");
    CHECK(invalid.exit_code == 1);
    CHECK(invalid.output.rfind("error: fit: config validation failed (3 problems)", 0) == 0);
    CHECK(invalid.output.find("weibull") != std::string::npos);
    CHECK(invalid.output.find("fit.tol") != std::string::npos);
    CHECK(invalid.output.find("decision.delta") != std::string::npos);

    // Unknown flags and missing required flags fail loudly too.
    CHECK(run_cli("fit --config whatever").exit_code != 0);
    CHECK(run_cli("frobnicate").exit_code != 0);

    // A data file that contradicts the schema points at the offending cell.
    {
        std::ofstream out(dir / "bad.csv");
        out << "gender,citizenship,age,duration\nMale,Martian,0.5,3.0\n";
    }
    const RunResult badrow = run_cli("fit --config " + (dir / "run.json").string() +
                                     " --data " + (dir / "bad.csv").string() +
                                     " --out y.json");
    CHECK(badrow.exit_code == 1);
    CHECK(badrow.output.rfind("error: fit: ", 0) == 0);
}

TEST_CASE("cli: verbosity is controlled by SSDDR_LOG") {
    const fs::path& dir = workspace();
    const std::string cfg = (dir / "run.json").string();
    const std::string base = "generate --config " + cfg + " --out " +
                             (dir / "quiet.csv").string();
    const std::string quiet_cmd = "SSDDR_LOG=quiet " + std::string(SSDDR_CLI_BINARY) +
                                  " " + base + " 2>&1";
    const std::string info_cmd = "SSDDR_LOG=info " + std::string(SSDDR_CLI_BINARY) +
                                 " " + base + " 2>&1";
    auto capture = [](const std::string& cmd) {
        std::array<char, 4096> buf{};
        std::string output;
        FILE* pipe = popen(cmd.c_str(), "r");
        REQUIRE(pipe != nullptr);
        std::size_t got;
        while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
            output.append(buf.data(), got);
        pclose(pipe);
        return output;
    };
    CHECK(capture(quiet_cmd).empty());
    CHECK(capture(info_cmd).find("generate:") != std::string::npos);
}
