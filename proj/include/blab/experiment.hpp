#pragma once

#include <map>
#include <string>
#include <vector>

#include "blab/infogeo.hpp"

namespace blab {

// Flat `key = value` configuration with `#` comments.
struct ExperimentConfig {
    std::string experiment;
    std::string domain1;
    std::string kernel1;
    std::string kernel2;
    std::string map_spec;
    std::string sample_spec;   // parameter-side sample (grid or point list)
    std::string sample2_spec;  // target-side sample for score sweeps
    std::string expected;      // optional expectation; absent = record only
    std::string output_dir = ".";
    int resolution = 64;
    int resolution2 = 0;  // target rule; 0 means same as resolution
    double lambda = 1.0;
    int pair_count = 0;  // random-pair experiments; 0 means per-experiment default
    unsigned long long seed = 20240817ull;
    std::map<std::string, double> tolerance_overrides;  // keys like `tol.suff`
    std::vector<std::pair<std::string, std::string>> echo;

    double tol(const std::string& name, double fallback) const;

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text, const std::string& origin);
};

struct ExperimentResult {
    bool pass = true;
    bool record_only = false;
    std::string csv_path;
    std::string report_path;
    std::string verdict;  // verdict experiment only
};

// Writes `<output_dir>/<experiment>.csv` (UTF-8, LF, header row, floats with
// 17 significant digits) and `<output_dir>/<experiment>.report.txt`. The CSV
// is byte-identical across runs with the same config.
ExperimentResult run_experiment(const ExperimentConfig& config);

const std::vector<std::string>& experiment_names();

// Grid/list sample parsing, exposed for tests:
//   `grid:rmin=0.2,rmax=0.7,nr=3,na=4` (polar, dimension 1)
//   `0.3; 0.5+0.1i` or `(0.3,0.1i); (0.2,0)` (explicit lists)
std::vector<Point> parse_sample(const std::string& text, const Domain& domain);
std::vector<Point> default_sample(const Domain& domain);

std::string format_csv_number(double v);

}  // namespace blab
