#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blab/errors.hpp"
#include "blab/experiment.hpp"

using namespace blab;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string out_dir(const std::string& leaf) {
    return (std::filesystem::temp_directory_path() / "blab_cli_tests" / leaf).string();
}

}  // namespace

TEST_CASE("config parsing") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "# comment\n"
        "experiment = verdict\n"
        "domain1 = annulus:r=0.5\n"
        "map = powerann:r=0.5,m=2\n"
        "resolution = 24\n"
        "expected = non-injective\n"
        "tol.suff = 2e-3\n"
        "seed = 99\n",
        "inline");
    CHECK(cfg.experiment == "verdict");
    CHECK(cfg.resolution == 24);
    CHECK(cfg.seed == 99);
    CHECK(cfg.tol("suff", 1e-3) == 2e-3);
    CHECK(cfg.tol("score", 1e-6) == 1e-6);  // untouched default
}

TEST_CASE("config diagnostics carry line numbers and field names") {
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::parse_text("experiment = verdict\nresolution = abc\n", "cfg"),
        doctest::Contains("cfg:2"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse_text("experiment = verdict\nwat = 1\n", "cfg"),
                         doctest::Contains("unknown field"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse_text("domain1 = disk\n", "cfg"),
                         doctest::Contains("experiment"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::parse_text("experiment = dance\n", "cfg"),
                         doctest::Contains("unknown experiment"), ConfigError);
    CHECK_THROWS_AS(
        ExperimentConfig::parse_text("experiment = verdict\ntol.suff = -1\n", "cfg"),
        ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse_text("experiment = verdict\nbroken line\n", "cfg"),
                    ConfigError);
}

TEST_CASE("invalid domain parameters become configuration errors") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "experiment = kernel-table\ndomain1 = annulus:r=1.5\n", "inline");
    CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("(0,1)"), ConfigError);
}

TEST_CASE("sample parsing") {
    Domain disk = make_domain("disk");
    std::vector<Point> grid = parse_sample("grid:rmin=0.2,rmax=0.6,nr=2,na=4", disk);
    CHECK(grid.size() == 8);
    for (const Point& p : grid) CHECK(disk.contains(p));

    std::vector<Point> list = parse_sample("0.3; -0.2+0.4i", disk);
    CHECK(list.size() == 2);
    CHECK(list[1][0] == Complex(-0.2, 0.4));

    CHECK_THROWS_AS(parse_sample("0.3; 1.5", disk), ConfigError);          // outside
    CHECK_THROWS_AS(parse_sample("grid:rmin=0.2,zzz=1", disk), ConfigError);
    CHECK_THROWS_AS(parse_sample("(0.1,0.2)", disk), ConfigError);         // dim mismatch
    Domain poly = make_domain("polydisk");
    CHECK(parse_sample("(0.1,0.2); (0.3+0.1i,0i)", poly).size() == 2);
    CHECK_FALSE(default_sample(poly).empty());
}

TEST_CASE("csv numbers carry 17 significant digits") {
    CHECK(format_csv_number(kPi) == "3.1415926535897931");
    CHECK(format_csv_number(1.0) == "1");
    CHECK(format_csv_number(0.1) == "0.10000000000000001");
}

TEST_CASE("verdict experiment writes csv and report") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "experiment = verdict\n"
        "domain1 = disk\n"
        "map = mobius:a=0.3+0i\n"
        "resolution = 48\n"
        "expected = injective\n"
        "output_dir = " + out_dir("verdict") + "\n",
        "inline");
    ExperimentResult res = run_experiment(cfg);
    CHECK(res.pass);
    CHECK(res.verdict == "injective");

    std::string csv = slurp(res.csv_path);
    CHECK(csv.find('\r') == std::string::npos);  // LF endings
    CHECK(csv.rfind("max_gap_norm,", 0) == 0);   // header row first
    CHECK(csv.find("injective") != std::string::npos);

    std::string report = slurp(res.report_path);
    CHECK(report.find("verdict: injective") != std::string::npos);
    CHECK(report.find("result: PASS") != std::string::npos);
}

TEST_CASE("verdict without expectation records instead of judging") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "experiment = verdict\n"
        "domain1 = disk\n"
        "map = powerdisk:m=2\n"
        "resolution = 24\n"
        "output_dir = " + out_dir("verdict_record") + "\n",
        "inline");
    ExperimentResult res = run_experiment(cfg);
    CHECK(res.record_only);
    CHECK(res.pass);
    CHECK(res.verdict == "non-injective");
    std::string report = slurp(res.report_path);
    CHECK(report.find("RECORDED") != std::string::npos);
}

TEST_CASE("mismatched expectation fails the run") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "experiment = verdict\n"
        "domain1 = disk\n"
        "map = powerdisk:m=2\n"
        "resolution = 24\n"
        "expected = injective\n"
        "output_dir = " + out_dir("verdict_mismatch") + "\n",
        "inline");
    ExperimentResult res = run_experiment(cfg);
    CHECK_FALSE(res.pass);
    CHECK(res.verdict == "non-injective");
}

TEST_CASE("experiments rerun byte-identically") {
    for (const char* text : {
             "experiment = transformation-check\ndomain1 = disk\nmap = mobius:a=0.3+0i\n"
             "resolution = 16\npairs = 25\nexpected = holds\n",
             "experiment = deficiency-sweep\ndomain1 = annulus:r=0.5\n"
             "map = powerann:r=0.5,m=2\nresolution = 48\n"
             "sample = grid:rmin=0.55,rmax=0.7,nr=2,na=2\nexpected = insufficient\n",
         }) {
        ExperimentConfig cfg1 = ExperimentConfig::parse_text(
            std::string(text) + "output_dir = " + out_dir("det_a") + "\n", "inline");
        ExperimentConfig cfg2 = ExperimentConfig::parse_text(
            std::string(text) + "output_dir = " + out_dir("det_b") + "\n", "inline");
        ExperimentResult r1 = run_experiment(cfg1);
        ExperimentResult r2 = run_experiment(cfg2);
        CHECK(r1.pass);
        CHECK(slurp(r1.csv_path) == slurp(r2.csv_path));
    }
}

TEST_CASE("pushforward experiment passes on the annulus covering") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "experiment = pushforward-check\n"
        "domain1 = annulus:r=0.5\n"
        "map = powerann:r=0.5,m=2\n"
        "resolution = 32\n"
        "sample = grid:rmin=0.6,rmax=0.8,nr=2,na=2\n"
        "output_dir = " + out_dir("pushforward") + "\n",
        "inline");
    ExperimentResult res = run_experiment(cfg);
    CHECK(res.pass);
    std::string report = slurp(res.report_path);
    CHECK(report.find("result: PASS") != std::string::npos);
}

TEST_CASE("explicit target samples and a separate target resolution") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "experiment = score-sweep\n"
        "domain1 = disk\n"
        "map = powerdisk:m=2\n"
        "resolution = 16\n"
        "resolution2 = 24\n"
        "sample = 0.5; 0.4+0.2i\n"
        "sample2 = 0.25; -0.3+0.1i\n"
        "expected = insufficient\n"
        "output_dir = " + out_dir("score2") + "\n",
        "inline");
    ExperimentResult res = run_experiment(cfg);
    CHECK(res.pass);
    std::string csv = slurp(res.csv_path);
    // 2 z's x 2 zetas plus the header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("every summary number also lives in the csv") {
    ExperimentConfig cfg = ExperimentConfig::parse_text(
        "experiment = score-sweep\n"
        "domain1 = annulus:r=0.5\n"
        "map = powerann:r=0.5,m=2\n"
        "resolution = 16\n"
        "sample = grid:rmin=0.6,rmax=0.8,nr=2,na=2\n"
        "expected = insufficient\n"
        "output_dir = " + out_dir("score") + "\n",
        "inline");
    ExperimentResult res = run_experiment(cfg);
    CHECK(res.pass);

    // the reported maximum must be re-derivable from the CSV rows
    std::string csv = slurp(res.csv_path);
    std::string report = slurp(res.report_path);
    auto pos = report.find("max_score_gap = ");
    REQUIRE(pos != std::string::npos);
    std::string value = report.substr(pos + 16);
    value = value.substr(0, value.find('\n'));
    CHECK(csv.find(value) != std::string::npos);
}
