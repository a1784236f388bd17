#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blab/geometry.hpp"
#include "blab/kernels.hpp"
#include "blab/maps.hpp"
#include "blab/numerics.hpp"

namespace blab {

// The kernel density family P(z, xi) = |K(z,xi)|^2 / K(z,z), a probability
// density in xi for each parameter z; parameters are the 2n real
// coordinates of z.
struct StatModel {
    KernelModel kernel;
    Domain domain;        // sample space (same as kernel->domain())
    QuadratureRule rule;  // default sample-space rule
    int parameter_dim = 2;
};

StatModel make_stat_model(KernelModel kernel, int resolution);

double bergman_density(const StatModel& model, const Point& z, const Point& xi);

struct FisherMatrix {
    Point point;
    Eigen::MatrixXd matrix;  // 2n x 2n real symmetric PSD
    std::string rule_id;
    double min_eigenvalue() const;
};

enum class ScoreMode { stencil, analytic };

// Fisher information matrix of the family at z, integrated over the sample
// space. Scores are taken in the real parameter coordinates (x_a, y_a); the
// stencil mode differentiates log P directly, the analytic mode uses the
// kernel's slot-1 derivatives.
FisherMatrix fisher_matrix(const StatModel& model, const Point& z,
                           const QuadratureRule& rule,
                           const DerivativeStencil& stencil = {},
                           ScoreMode mode = ScoreMode::stencil);

// Hermitian n x n -> real 2n x 2n in (x_1..x_n, y_1..y_n) coordinates:
// [[Re H, Im H], [Im H^T, Re H]].
Eigen::MatrixXd realified(const Eigen::MatrixXcd& hermitian);

// Numeric Fisher matrix of the N(mu, sigma) location-scale family over a
// truncated line (coverage of at least 8 sigma each side is required).
Eigen::Matrix2d gaussian_fisher(double mu, double sigma,
                                const QuadratureRule& line_rule,
                                const DerivativeStencil& stencil = {});
QuadratureRule gaussian_line_rule(double mu, double sigma, int node_count = 200);

struct Tolerances {
    double tau_suff = 1e-3;          // deficiency gap norm
    double tau_score = 1e-6;         // score equality gap, analytic derivatives
    double tau_score_stencil = 1e-4;  // score equality gap, stencil derivatives
    double tau_ratio = 1e-4;         // ratio-invariance spread
    double verdict_margin = 10.0;    // non-injective calls need margin x tau
    double monotonicity_slack = 1e-4;
};

struct DeficiencyReport {
    Point point;
    FisherMatrix fisher_before;  // pulled-back Fisher of the source family
    FisherMatrix fisher_after;   // Fisher of the pushed-forward family
    Eigen::MatrixXd gap;         // before - after
    double min_gap_eigenvalue = 0.0;
    double gap_norm = 0.0;  // spectral norm of the gap
    bool sufficient = false;
    double masked_mass_fraction = 0.0;  // pushforward mass lost to the tube
};

// Fisher loss under the pushforward along the map. fisher_after integrates
// scores of the pushed-forward density over the target rule masked by the
// critical-image exclusion tube; the masked family is renormalized via the
// covariance form of the Fisher integral.
DeficiencyReport deficiency(const ProperMap& map, const StatModel& model1,
                            const Point& z, const QuadratureRule& rule2,
                            const DerivativeStencil& stencil = {},
                            const Tolerances& tol = {});

// max over parameter index and sheet pairs (k,l) of
// |d_alpha log K1(z, w_k) - d_alpha log K1(z, w_l)|, w_k the local inverses
// of zeta. Zero for single-sheeted maps.
double score_equality_gap(const ProperMap& map, const StatModel& model1,
                          const Point& z, const Point& zeta,
                          const DerivativeStencil& stencil = {},
                          ScoreMode mode = ScoreMode::analytic);

// Relative residual of P1(z, xi) = exp(-lambda D2(f(z), f(xi))) K1(xi, xi),
// computed in log space; exactly zero on the diagonal z = xi.
double factorization_residual(const ProperMap& map, const StatModel& model1,
                              const Kernel& k2, double lambda, const Point& z,
                              const Point& xi);

// Relative spread over z_list of r(z, xi) = P1(z, xi) / Q(z, f(xi)).
// Vanishes iff the conditional density ratio is parameter-free on the
// sample (the operational form of sufficiency).
double ratio_invariance(const ProperMap& map, const StatModel& model1,
                        std::span<const Point> z_list, const Point& xi);

enum class Verdict { injective, non_injective, inconclusive };
std::string to_string(Verdict v);

struct VerdictRecord {
    Verdict verdict = Verdict::inconclusive;
    double max_gap_norm = 0.0;
    double min_gap_eigenvalue = 0.0;
    double max_score_gap = 0.0;
    double max_ratio_spread = 0.0;
    bool deficiency_pass = false;
    bool score_pass = false;
    bool ratio_pass = false;
    Tolerances tolerances;
    ScoreMode score_mode = ScoreMode::analytic;
    int z_used = 0;
    int zeta_used = 0;
    int zeta_skipped = 0;
};

// Runs all three sufficiency tests over the samples. `injective` requires
// unanimity; any value beyond margin x tolerance yields `non_injective`;
// anything else is `inconclusive` (disagreement signals numerical failure,
// not a theorem violation).
VerdictRecord injectivity_verdict(const ProperMap& map, const StatModel& model1,
                                  std::span<const Point> sample_z,
                                  std::span<const Point> sample_zeta,
                                  const QuadratureRule& rule2,
                                  const Tolerances& tol = {},
                                  const DerivativeStencil& stencil = {},
                                  ScoreMode mode = ScoreMode::analytic);

}  // namespace blab
