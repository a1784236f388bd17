#include "blab/infogeo.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "blab/errors.hpp"

namespace blab {

namespace {

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw NumericalError("symmetric eigenvalue computation failed");
    return solver.eigenvalues();
}

// Parameter points for central differences in the real coordinates of z:
// index 0 is the center, then (plus, minus) per parameter.
struct ParamStencil {
    std::vector<Point> points;
    std::vector<double> steps;  // per parameter
    int dim = 0;                // 2n
};

ParamStencil make_param_stencil(const Point& z, const DerivativeStencil& st) {
    if (!(st.step >= 1e-8 && st.step <= 1e-2))
        throw ValidationError("stencil step must lie in [1e-8, 1e-2]");
    const int n = z.dim();
    ParamStencil ps;
    ps.dim = 2 * n;
    ps.points.push_back(z);
    for (int k = 0; k < 2 * n; ++k) {
        double h = st.step * (1.0 + std::abs(z[k % n]));
        ps.steps.push_back(h);
        ps.points.push_back(shifted_real(z, k, h));
        ps.points.push_back(shifted_real(z, k, -h));
    }
    return ps;
}

// Covariance-form Fisher integral: F = E[(s - E s)(s - E s)^T] under the
// normalized density. The mean subtraction absorbs both quadrature mass
// defects and the renormalization of masked families. Accumulation is
// Kahan-compensated in node order.
FisherMatrix fisher_from_field(
    const QuadratureRule& rule, const Point& z, const ParamStencil& ps,
    const std::function<void(const Point& node, std::span<const Point> zps,
                             std::span<double> logdens)>& field) {
    const int d = ps.dim;
    const std::size_t nn = rule.size();
    if (nn == 0) throw ValidationError("fisher integration over an empty rule");

    std::vector<double> dens(nn);
    std::vector<double> scores(nn * static_cast<std::size_t>(d));
    std::vector<double> ld(ps.points.size());
    for (std::size_t i = 0; i < nn; ++i) {
        field(rule.nodes[i], ps.points, ld);
        dens[i] = std::exp(ld[0]);
        for (int k = 0; k < d; ++k)
            scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] =
                (ld[static_cast<std::size_t>(2 * k + 1)] - ld[static_cast<std::size_t>(2 * k + 2)]) /
                (2.0 * ps.steps[static_cast<std::size_t>(k)]);
    }

    KahanSum mass_acc;
    for (std::size_t i = 0; i < nn; ++i) mass_acc.add(rule.weights[i] * dens[i]);
    double mass = mass_acc.value();
    if (!(mass > 0.0)) throw NumericalError("fisher integration: nonpositive total mass");

    Eigen::VectorXd mean(d);
    for (int k = 0; k < d; ++k) {
        KahanSum s;
        for (std::size_t i = 0; i < nn; ++i)
            s.add(rule.weights[i] * dens[i] *
                  scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)]);
        mean[k] = s.value() / mass;
    }

    Eigen::MatrixXd f(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            KahanSum s;
            for (std::size_t i = 0; i < nn; ++i) {
                double sa = scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] -
                            mean[a];
                double sb = scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(b)] -
                            mean[b];
                s.add(rule.weights[i] * dens[i] * sa * sb);
            }
            f(a, b) = s.value() / mass;
            f(b, a) = f(a, b);
        }

    FisherMatrix out{z, f, rule.domain_id + "@" + std::to_string(rule.resolution)};
    if (out.min_eigenvalue() < -1e-6)
        throw NumericalError("fisher integration produced a negative eigenvalue at " +
                             format_point(z));
    return out;
}

}  // namespace

double FisherMatrix::min_eigenvalue() const {
    return symmetric_eigenvalues(matrix).minCoeff();
}

StatModel make_stat_model(KernelModel kernel, int resolution) {
    if (!kernel) throw ValidationError("stat model requires a kernel");
    Domain domain = kernel->domain();
    QuadratureRule rule = build_quadrature(domain, resolution);
    int dim = 2 * domain.dim();
    return StatModel{std::move(kernel), std::move(domain), std::move(rule), dim};
}

double bergman_density(const StatModel& model, const Point& z, const Point& xi) {
    double diag = model.kernel->eval_diag(z);
    if (!(diag > 0.0))
        throw NumericalError("kernel diagonal is not positive at " + format_point(z));
    return std::norm(model.kernel->eval(z, xi)) / diag;
}

Eigen::MatrixXd realified(const Eigen::MatrixXcd& hermitian) {
    const Eigen::Index n = hermitian.rows();
    Eigen::MatrixXd out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = hermitian.real();
    out.topRightCorner(n, n) = hermitian.imag();
    out.bottomLeftCorner(n, n) = hermitian.imag().transpose();
    out.bottomRightCorner(n, n) = hermitian.real();
    return out;
}

FisherMatrix fisher_matrix(const StatModel& model, const Point& z,
                           const QuadratureRule& rule, const DerivativeStencil& stencil,
                           ScoreMode mode) {
    const Kernel& k = *model.kernel;
    ParamStencil ps = make_param_stencil(z, stencil);
    const int n = z.dim();

    if (mode == ScoreMode::stencil) {
        std::vector<double> log_diag(ps.points.size());
        for (std::size_t i = 0; i < ps.points.size(); ++i)
            log_diag[i] = std::log(k.eval_diag(ps.points[i]));
        auto field = [&](const Point& node, std::span<const Point> zps,
                         std::span<double> out) {
            for (std::size_t i = 0; i < zps.size(); ++i)
                out[i] = 2.0 * std::log(std::abs(k.eval(zps[i], node))) - log_diag[i];
        };
        FisherMatrix f = fisher_from_field(rule, z, ps, field);
        if (f.min_eigenvalue() < -1e-6)
            throw NumericalError("fisher matrix has a negative eigenvalue beyond tolerance at " +
                                 format_point(z));
        return f;
    }

    // analytic scores: d/dx_a log P = 2 Re[L_a(z,xi) - L_a(z,z)],
    // d/dy_a log P = -2 Im[...], with L_a = (d_a K) / K.
    std::vector<Complex> center(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) center[static_cast<std::size_t>(a)] = k.grad1(z, z, a) / k.eval_diag(z);

    const std::size_t nn = rule.size();
    const int d = 2 * n;
    std::vector<double> dens(nn), scores(nn * static_cast<std::size_t>(d));
    double log_diag = std::log(k.eval_diag(z));
    for (std::size_t i = 0; i < nn; ++i) {
        const Point& xi = rule.nodes[i];
        Complex kv = k.eval(z, xi);
        dens[i] = std::exp(2.0 * std::log(std::abs(kv)) - log_diag);
        for (int a = 0; a < n; ++a) {
            Complex l = k.grad1(z, xi, a) / kv - center[static_cast<std::size_t>(a)];
            scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = 2.0 * l.real();
            scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a + n)] =
                -2.0 * l.imag();
        }
    }
    KahanSum mass_acc;
    for (std::size_t i = 0; i < nn; ++i) mass_acc.add(rule.weights[i] * dens[i]);
    double mass = mass_acc.value();
    Eigen::VectorXd mean(d);
    for (int a = 0; a < d; ++a) {
        KahanSum s;
        for (std::size_t i = 0; i < nn; ++i)
            s.add(rule.weights[i] * dens[i] *
                  scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)]);
        mean[a] = s.value() / mass;
    }
    Eigen::MatrixXd f(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            KahanSum s;
            for (std::size_t i = 0; i < nn; ++i)
                s.add(rule.weights[i] * dens[i] *
                      (scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] -
                       mean[a]) *
                      (scores[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(b)] -
                       mean[b]));
            f(a, b) = s.value() / mass;
            f(b, a) = f(a, b);
        }
    FisherMatrix out{z, f, rule.domain_id + "@" + std::to_string(rule.resolution)};
    if (out.min_eigenvalue() < -1e-6)
        throw NumericalError("fisher matrix has a negative eigenvalue beyond tolerance at " +
                             format_point(z));
    return out;
}

QuadratureRule gaussian_line_rule(double mu, double sigma, int node_count) {
    if (!(sigma > 0.0)) throw ValidationError("gaussian family requires sigma > 0");
    return line_segment_rule(mu - 8.5 * sigma, mu + 8.5 * sigma, node_count);
}

Eigen::Matrix2d gaussian_fisher(double mu, double sigma, const QuadratureRule& line_rule,
                                const DerivativeStencil& stencil) {
    if (!(sigma > 0.0)) throw ValidationError("gaussian family requires sigma > 0");

    auto logp = [](double x, double m, double s) {
        double t = (x - m) / s;
        return -0.5 * t * t - std::log(s) - 0.5 * std::log(2.0 * kPi);
    };

    // normalization check detects insufficient truncation of the line
    double mass = integrate_real(line_rule, [&](const Point& p) {
        return std::exp(logp(p[0].real(), mu, sigma));
    });
    if (std::abs(mass - 1.0) > 1e-8)
        throw ValidationError("gaussian_fisher: truncated line misses mass " +
                              std::to_string(std::abs(mass - 1.0)) +
                              "; widen the rule to cover at least 8 sigma");

    const double hm = stencil.step * (1.0 + std::abs(mu));
    const double hs = stencil.step * (1.0 + sigma);
    const std::size_t nn = line_rule.size();
    std::vector<double> dens(nn), smu(nn), ssig(nn);
    for (std::size_t i = 0; i < nn; ++i) {
        double x = line_rule.nodes[i][0].real();
        dens[i] = std::exp(logp(x, mu, sigma));
        smu[i] = (logp(x, mu + hm, sigma) - logp(x, mu - hm, sigma)) / (2.0 * hm);
        ssig[i] = (logp(x, mu, sigma + hs) - logp(x, mu, sigma - hs)) / (2.0 * hs);
    }
    KahanSum m0, m1, m2;
    for (std::size_t i = 0; i < nn; ++i) {
        m0.add(line_rule.weights[i] * dens[i]);
        m1.add(line_rule.weights[i] * dens[i] * smu[i]);
        m2.add(line_rule.weights[i] * dens[i] * ssig[i]);
    }
    double total = m0.value(), mean_mu = m1.value() / total, mean_sig = m2.value() / total;
    KahanSum f00, f01, f11;
    for (std::size_t i = 0; i < nn; ++i) {
        double a = smu[i] - mean_mu, b = ssig[i] - mean_sig;
        f00.add(line_rule.weights[i] * dens[i] * a * a);
        f01.add(line_rule.weights[i] * dens[i] * a * b);
        f11.add(line_rule.weights[i] * dens[i] * b * b);
    }
    Eigen::Matrix2d f;
    f << f00.value() / total, f01.value() / total, f01.value() / total, f11.value() / total;
    return f;
}

DeficiencyReport deficiency(const ProperMap& map, const StatModel& model1, const Point& z,
                            const QuadratureRule& rule2, const DerivativeStencil& stencil,
                            const Tolerances& tol) {
    const Kernel& k = *model1.kernel;
    ParamStencil ps = make_param_stencil(z, stencil);

    std::vector<double> log_diag(ps.points.size());
    for (std::size_t i = 0; i < ps.points.size(); ++i)
        log_diag[i] = std::log(k.eval_diag(ps.points[i]));

    // source-family Fisher over the model's own rule
    auto before_field = [&](const Point& node, std::span<const Point> zps,
                            std::span<double> out) {
        for (std::size_t i = 0; i < zps.size(); ++i)
            out[i] = 2.0 * std::log(std::abs(k.eval(zps[i], node))) - log_diag[i];
    };
    FisherMatrix before = fisher_from_field(model1.rule, z, ps, before_field);

    // pushed-forward family over the target rule, critical tube masked out
    QuadratureRule rule_after =
        masked(rule2, [&](const Point& p) { return !map.in_exclusion_tube(p); });
    if (rule_after.size() == 0)
        throw ValidationError("deficiency: the exclusion tube swallowed the whole target rule");

    auto after_field = [&](const Point& node, std::span<const Point> zps,
                           std::span<double> out) {
        auto inverses = map.local_inverses(node);
        for (std::size_t i = 0; i < zps.size(); ++i) {
            KahanSum sum;
            for (const LocalInverse& inv : inverses)
                sum.add(std::norm(k.eval(zps[i], inv.point)) * std::norm(inv.jacobian));
            out[i] = std::log(sum.value()) - log_diag[i];
        }
    };
    FisherMatrix after = fisher_from_field(rule_after, z, ps, after_field);

    DeficiencyReport report;
    report.point = z;
    report.fisher_before = before;
    report.fisher_after = after;
    report.gap = before.matrix - after.matrix;
    Eigen::VectorXd ev = symmetric_eigenvalues(report.gap);
    report.min_gap_eigenvalue = ev.minCoeff();
    report.gap_norm = ev.cwiseAbs().maxCoeff();
    report.sufficient = report.gap_norm <= tol.tau_suff;

    KahanSum pushed_mass;
    for (std::size_t i = 0; i < rule_after.size(); ++i) {
        auto inverses = map.local_inverses(rule_after.nodes[i]);
        KahanSum sum;
        for (const LocalInverse& inv : inverses)
            sum.add(std::norm(k.eval(z, inv.point)) * std::norm(inv.jacobian));
        pushed_mass.add(rule_after.weights[i] * sum.value() / k.eval_diag(z));
    }
    report.masked_mass_fraction = std::max(0.0, 1.0 - pushed_mass.value());
    return report;
}

double score_equality_gap(const ProperMap& map, const StatModel& model1, const Point& z,
                          const Point& zeta, const DerivativeStencil& stencil, ScoreMode mode) {
    const Kernel& k = *model1.kernel;
    auto inverses = map.local_inverses(zeta);
    if (inverses.size() <= 1) return 0.0;  // empty max over sheet pairs

    const int n = z.dim();
    double gap = 0.0;
    std::vector<Complex> l(inverses.size());
    for (int a = 0; a < n; ++a) {
        for (std::size_t s = 0; s < inverses.size(); ++s) {
            const Point& w = inverses[s].point;
            if (mode == ScoreMode::analytic) {
                l[s] = k.grad1(z, w, a) / k.eval(z, w);
            } else {
                auto f = [&](const Point& p) { return k.eval(p, w); };
                l[s] = complex_derivative(f, z, a, Slot::holomorphic, stencil) / k.eval(z, w);
            }
        }
        for (std::size_t s = 0; s < inverses.size(); ++s)
            for (std::size_t t = s + 1; t < inverses.size(); ++t)
                gap = std::max(gap, std::abs(l[s] - l[t]));
    }
    return gap;
}

double factorization_residual(const ProperMap& map, const StatModel& model1, const Kernel& k2,
                              double lambda, const Point& z, const Point& xi) {
    if (!(lambda > 0.0)) throw ValidationError("factorization residual requires lambda > 0");
    const Kernel& k1 = *model1.kernel;

    Point fz = map.apply(z);
    Point fxi = map.apply(xi);
    double log_model = -lambda * diastasis(k2, fz, fxi) + std::log(k1.eval_diag(xi));

    double cross = std::abs(k1.eval(z, xi));
    if (cross == 0.0) {
        // density vanishes; absolute residual of the factorized model
        return std::exp(log_model);
    }
    double log_p = 2.0 * std::log(cross) - std::log(k1.eval_diag(z));
    return std::abs(std::expm1(log_model - log_p));
}

double ratio_invariance(const ProperMap& map, const StatModel& model1,
                        std::span<const Point> z_list, const Point& xi) {
    if (z_list.size() < 2)
        throw ValidationError("ratio_invariance needs at least two parameter points");
    Point fxi = map.apply(xi);
    if (map.in_exclusion_tube(fxi))
        throw EvaluationError("ratio_invariance: f(xi) lies in the exclusion tube");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    KahanSum mean;
    for (const Point& z : z_list) {
        double p = bergman_density(model1, z, xi);
        PushforwardDensity q = pushforward_density(map, *model1.kernel, z, fxi);
        double r = p / (q.q_numerator / q.base_density);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        mean.add(r);
    }
    double avg = mean.value() / static_cast<double>(z_list.size());
    return (hi - lo) / avg;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::injective:
            return "injective";
        case Verdict::non_injective:
            return "non-injective";
        case Verdict::inconclusive:
            return "inconclusive";
    }
    return "?";
}

VerdictRecord injectivity_verdict(const ProperMap& map, const StatModel& model1,
                                  std::span<const Point> sample_z,
                                  std::span<const Point> sample_zeta,
                                  const QuadratureRule& rule2, const Tolerances& tol,
                                  const DerivativeStencil& stencil, ScoreMode mode) {
    if (sample_z.empty()) throw ValidationError("injectivity_verdict needs parameter samples");

    VerdictRecord rec;
    rec.tolerances = tol;
    rec.score_mode = mode;
    rec.min_gap_eigenvalue = std::numeric_limits<double>::infinity();

    std::vector<Point> zeta_kept;
    for (const Point& zeta : sample_zeta) {
        if (map.in_exclusion_tube(zeta)) {
            ++rec.zeta_skipped;
            continue;
        }
        zeta_kept.push_back(zeta);
    }
    if (zeta_kept.empty())
        throw ValidationError("injectivity_verdict: every target sample point was masked");
    rec.zeta_used = static_cast<int>(zeta_kept.size());
    rec.z_used = static_cast<int>(sample_z.size());

    for (const Point& z : sample_z) {
        DeficiencyReport d = deficiency(map, model1, z, rule2, stencil, tol);
        rec.max_gap_norm = std::max(rec.max_gap_norm, d.gap_norm);
        rec.min_gap_eigenvalue = std::min(rec.min_gap_eigenvalue, d.min_gap_eigenvalue);
    }

    for (const Point& z : sample_z)
        for (const Point& zeta : zeta_kept)
            rec.max_score_gap =
                std::max(rec.max_score_gap, score_equality_gap(map, model1, z, zeta, stencil, mode));

    for (const Point& zeta : zeta_kept) {
        Point xi = map.local_inverses(zeta)[0].point;
        rec.max_ratio_spread =
            std::max(rec.max_ratio_spread, ratio_invariance(map, model1, sample_z, xi));
    }

    double tau_score = mode == ScoreMode::analytic ? tol.tau_score : tol.tau_score_stencil;
    rec.deficiency_pass = rec.max_gap_norm <= tol.tau_suff;
    rec.score_pass = rec.max_score_gap <= tau_score;
    rec.ratio_pass = rec.max_ratio_spread <= tol.tau_ratio;

    if (rec.deficiency_pass && rec.score_pass && rec.ratio_pass) {
        rec.verdict = Verdict::injective;
    } else if (rec.max_gap_norm > tol.verdict_margin * tol.tau_suff ||
               rec.max_score_gap > tol.verdict_margin * tau_score ||
               rec.max_ratio_spread > tol.verdict_margin * tol.tau_ratio) {
        rec.verdict = Verdict::non_injective;
    } else {
        rec.verdict = Verdict::inconclusive;
    }
    return rec;
}

}  // namespace blab
