// blab - numerical laboratory for Bergman kernels, Bergman metrics and the
// information geometry of the induced density families on model domains.

#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "blab/experiment.hpp"
#include "blab/errors.hpp"
#include "blab/parallel.hpp"

namespace {

int cmd_run(const std::string& config_path) {
    try {
        blab::ExperimentConfig cfg = blab::ExperimentConfig::parse_file(config_path);
        blab::ExperimentResult result = blab::run_experiment(cfg);
        std::cout << "wrote " << result.csv_path << "\n";
        std::cout << "wrote " << result.report_path << "\n";
        if (!result.verdict.empty()) std::cout << "verdict: " << result.verdict << "\n";
        if (result.record_only) {
            std::cout << "result: RECORDED\n";
            return 0;
        }
        std::cout << "result: " << (result.pass ? "PASS" : "FAIL") << "\n";
        return result.pass ? 0 : 1;
    } catch (const blab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

void cmd_list_domains() {
    std::cout << "domain spec grammar:\n"
              << "  disk                unit disk in C, volume pi\n"
              << "  annulus:r=0.5       annulus r < |z| < 1, volume pi (1 - r^2)\n"
              << "  polydisk            bidisk in C^2, volume pi^2\n"
              << "  ball2               unit ball in C^2, volume pi^2/2\n"
              << "  ellipse:a=1,b=0.5   ellipse x^2/a^2 + y^2/b^2 < 1, volume pi a b\n"
              << "kernel spec grammar:\n"
              << "  closed              closed form (disk, polydisk, ball2)\n"
              << "  series:J=40         bilateral Laurent series (annulus)\n"
              << "  ortho:deg=12,res=64 orthonormalized monomials (any domain with a rule)\n";
}

void cmd_list_maps() {
    std::cout << "map spec grammar (source domain must match):\n"
              << "  identity                      any domain, 1 sheet\n"
              << "  mobius:a=0.3+0i               disk automorphism, 1 sheet\n"
              << "  powerdisk:m=2                 z -> z^m on the disk, m sheets, V = {0}\n"
              << "  powerann:r=0.5,m=2            z -> z^m, annulus(r) -> annulus(r^m), m sheets\n"
              << "  prodmobius:a1=0.3+0i,a2=0i    componentwise disk automorphisms on the polydisk\n";
}

int cmd_calibrate() {
    using namespace blab;
    try {
        std::printf("Gaussian location-scale family, numeric Fisher matrices:\n");
        for (double sigma : {0.5, 1.0, 2.0}) {
            auto rule = gaussian_line_rule(0.0, sigma);
            Eigen::Matrix2d f = gaussian_fisher(0.0, sigma, rule);
            std::printf("  sigma=%.2g  F = [%.10f, %.2e; %.2e, %.10f]  expected diag(%g, %g)\n",
                        sigma, f(0, 0), f(0, 1), f(1, 0), f(1, 1), 1.0 / (sigma * sigma),
                        2.0 / (sigma * sigma));
        }

        Domain disk = make_domain("disk");
        KernelModel k = make_kernel(disk, "closed");
        StatModel model = make_stat_model(k, 64);
        Point origin{Complex(0.0, 0.0)};
        FisherMatrix f = fisher_matrix(model, origin, model.rule);
        HermitianMetric g = bergman_metric(*k, origin);
        double constant = f.matrix(0, 0) / g.matrix(0, 0).real();
        std::printf("\nDisk family at z=0: Fisher = diag(%.10f, %.10f), Bergman g = %.10f\n",
                    f.matrix(0, 0), f.matrix(1, 1), g.matrix(0, 0).real());
        std::printf("realification convention constant (Fisher / Bergman) = %.10f\n", constant);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bergman-lab: kernels, metrics and sufficiency tests on model domains"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "flat key = value config file")->required();

    auto* domains = app.add_subcommand("list-domains", "print the domain/kernel spec grammar");
    auto* maps = app.add_subcommand("list-maps", "print the proper-map spec grammar");
    auto* calibrate =
        app.add_subcommand("calibrate", "run the Gaussian and disk calibrations and print the "
                                        "realification convention constant");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path);
    if (domains->parsed()) cmd_list_domains();
    if (maps->parsed()) cmd_list_maps();
    if (calibrate->parsed()) return cmd_calibrate();
    return 0;
}
