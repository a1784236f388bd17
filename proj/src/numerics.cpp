#include "blab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "blab/errors.hpp"

namespace blab {

double QuadratureRule::weight_sum() const {
    KahanSum s;
    for (double w : weights) s.add(w);
    return s.value();
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw ValidationError("gauss_legendre needs at least one node");
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (t * p0 - p1) / (t * t - 1.0);
            double dt = p0 / pp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -t;
        x[static_cast<std::size_t>(n - 1 - i)] = t;
        double wi = 2.0 / ((1.0 - t * t) * pp * pp);
        w[static_cast<std::size_t>(i)] = wi;
        w[static_cast<std::size_t>(n - 1 - i)] = wi;
    }
}

namespace {

// Polar rule r in (r0, r1), theta uniform: radial Gauss-Legendre integrates
// the r dr factor; the periodic trapezoid in theta is spectrally accurate.
QuadratureRule polar_rule(double r0, double r1, int resolution, const std::string& id) {
    const int nr = resolution;
    const int na = 2 * resolution;
    std::vector<double> gx, gw;
    gauss_legendre(nr, gx, gw);

    QuadratureRule rule;
    rule.domain_id = id;
    rule.resolution = resolution;
    rule.nodes.reserve(static_cast<std::size_t>(nr) * na);
    rule.weights.reserve(static_cast<std::size_t>(nr) * na);
    const double wa = 2.0 * kPi / na;
    for (int i = 0; i < nr; ++i) {
        double t = 0.5 * (r1 - r0) * gx[static_cast<std::size_t>(i)] + 0.5 * (r1 + r0);
        double wt = 0.5 * (r1 - r0) * gw[static_cast<std::size_t>(i)] * t * wa;
        for (int k = 0; k < na; ++k) {
            double th = wa * k;
            rule.nodes.emplace_back(Complex(t * std::cos(th), t * std::sin(th)));
            rule.weights.push_back(wt);
        }
    }
    return rule;
}

// Midpoint bounding-box rule masked by the indicator; the midpoint grid
// keeps the indicator error O(h^2) with monotone-ish decay.
QuadratureRule ellipse_rule(double a, double b, int resolution, const std::string& id) {
    const int m = 4 * resolution;
    const double hx = 2.0 * a / m;
    const double hy = 2.0 * b / m;
    QuadratureRule rule;
    rule.domain_id = id;
    rule.resolution = resolution;
    for (int i = 0; i < m; ++i) {
        double x = -a + (i + 0.5) * hx;
        for (int j = 0; j < m; ++j) {
            double y = -b + (j + 0.5) * hy;
            double u = x / a, v = y / b;
            if (u * u + v * v < 1.0) {
                rule.nodes.emplace_back(Complex(x, y));
                rule.weights.push_back(hx * hy);
            }
        }
    }
    return rule;
}

}  // namespace

QuadratureRule build_quadrature(const Domain& domain, int resolution) {
    if (resolution < kMinQuadratureResolution)
        throw ValidationError("quadrature resolution must be at least " +
                              std::to_string(kMinQuadratureResolution) + ", got " +
                              std::to_string(resolution));
    switch (domain.kind()) {
        case DomainKind::unit_disk:
            return polar_rule(0.0, 1.0, resolution, domain.id());
        case DomainKind::annulus:
            return polar_rule(domain.spec().r, 1.0, resolution, domain.id());
        case DomainKind::polydisk: {
            QuadratureRule d = polar_rule(0.0, 1.0, resolution, "disk");
            const std::size_t n = d.size();
            if (n * n > std::size_t(16) * 1024 * 1024)
                throw ValidationError(
                    "polydisk tensor rule too large at resolution " + std::to_string(resolution) +
                    "; use a smaller resolution");
            QuadratureRule rule;
            rule.domain_id = domain.id();
            rule.resolution = resolution;
            rule.nodes.reserve(n * n);
            rule.weights.reserve(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    rule.nodes.emplace_back(d.nodes[i][0], d.nodes[j][0]);
                    rule.weights.push_back(d.weights[i] * d.weights[j]);
                }
            return rule;
        }
        case DomainKind::ellipse:
            return ellipse_rule(domain.spec().a, domain.spec().b, resolution, domain.id());
        case DomainKind::unit_ball2:
            throw UnsupportedError(
                "no quadrature rule for ball2; its kernel and metric are closed-form only");
    }
    throw UnsupportedError("unsupported domain spec for quadrature");
}

QuadratureRule line_segment_rule(double lo, double hi, int node_count) {
    if (!(hi > lo)) throw ValidationError("line segment must have positive length");
    if (node_count < kMinQuadratureResolution)
        throw ValidationError("line rule needs at least " +
                              std::to_string(kMinQuadratureResolution) + " nodes");
    std::vector<double> gx, gw;
    gauss_legendre(node_count, gx, gw);
    QuadratureRule rule;
    std::ostringstream id;
    id << "segment[" << lo << "," << hi << "]";
    rule.domain_id = id.str();
    rule.resolution = node_count;
    for (int i = 0; i < node_count; ++i) {
        rule.nodes.emplace_back(Complex(0.5 * (hi - lo) * gx[static_cast<std::size_t>(i)] +
                                        0.5 * (hi + lo), 0.0));
        rule.weights.push_back(0.5 * (hi - lo) * gw[static_cast<std::size_t>(i)]);
    }
    return rule;
}

QuadratureRule masked(const QuadratureRule& rule,
                      const std::function<bool(const Point&)>& keep) {
    QuadratureRule out;
    out.domain_id = rule.domain_id + "|masked";
    out.resolution = rule.resolution;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        if (keep(rule.nodes[i])) {
            out.nodes.push_back(rule.nodes[i]);
            out.weights.push_back(rule.weights[i]);
        }
    }
    return out;
}

Complex integrate(const QuadratureRule& rule,
                  const std::function<Complex(const Point&)>& f) {
    KahanSum re, im;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        Complex v = f(rule.nodes[i]);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw EvaluationError("non-finite integrand at node " + std::to_string(i) + " = " +
                                  format_point(rule.nodes[i]));
        re.add(rule.weights[i] * v.real());
        im.add(rule.weights[i] * v.imag());
    }
    return Complex(re.value(), im.value());
}

double integrate_real(const QuadratureRule& rule,
                      const std::function<double(const Point&)>& f) {
    KahanSum s;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        double v = f(rule.nodes[i]);
        if (!std::isfinite(v))
            throw EvaluationError("non-finite integrand at node " + std::to_string(i) + " = " +
                                  format_point(rule.nodes[i]));
        s.add(rule.weights[i] * v);
    }
    return s.value();
}

namespace {

void check_stencil(const DerivativeStencil& st) {
    if (!(st.step >= 1e-8 && st.step <= 1e-2))
        throw ValidationError("stencil step must lie in [1e-8, 1e-2]");
    if (st.order != 1 && st.order != 2)
        throw ValidationError("stencil order must be 1 or 2");
}

}  // namespace

Complex complex_derivative(const std::function<Complex(const Point&)>& f,
                           const Point& z, int var, Slot slot,
                           const DerivativeStencil& stencil) {
    check_stencil(stencil);
    const double h = stencil.step * (1.0 + std::abs(z[var]));
    if (stencil.order == 1) {
        Complex fx = (f(shifted(z, var, Complex(h, 0))) - f(shifted(z, var, Complex(-h, 0)))) /
                     (2.0 * h);
        Complex fy = (f(shifted(z, var, Complex(0, h))) - f(shifted(z, var, Complex(0, -h)))) /
                     (2.0 * h);
        return slot == Slot::holomorphic ? 0.5 * (fx - Complex(0, 1) * fy)
                                         : 0.5 * (fx + Complex(0, 1) * fy);
    }
    // order 2: d^2/dz^2 = (f_xx - f_yy -/+ 2i f_xy) / 4
    Complex f0 = f(z);
    Complex fxx = (f(shifted(z, var, Complex(h, 0))) - 2.0 * f0 +
                   f(shifted(z, var, Complex(-h, 0)))) / (h * h);
    Complex fyy = (f(shifted(z, var, Complex(0, h))) - 2.0 * f0 +
                   f(shifted(z, var, Complex(0, -h)))) / (h * h);
    Complex fxy = (f(shifted(z, var, Complex(h, h))) - f(shifted(z, var, Complex(h, -h))) -
                   f(shifted(z, var, Complex(-h, h))) + f(shifted(z, var, Complex(-h, -h)))) /
                  (4.0 * h * h);
    Complex cross = Complex(0, 2) * fxy;
    return slot == Slot::holomorphic ? 0.25 * (fxx - fyy - cross)
                                     : 0.25 * (fxx - fyy + cross);
}

Complex mixed_derivative(const std::function<Complex(const Point&)>& f,
                         const Point& z, int alpha, int beta,
                         const DerivativeStencil& stencil) {
    auto inner = [&](const Point& p) {
        return complex_derivative(f, p, alpha, Slot::holomorphic, stencil);
    };
    return complex_derivative(inner, z, beta, Slot::antiholomorphic, stencil);
}

PivotedCholesky pivoted_cholesky(const Eigen::MatrixXcd& gram, double drop_tol) {
    const int n = static_cast<int>(gram.rows());
    if (gram.cols() != n) throw ValidationError("pivoted_cholesky expects a square matrix");

    Eigen::MatrixXcd a = gram;
    PivotedCholesky out;
    out.permutation.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.permutation[static_cast<std::size_t>(i)] = i;

    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i).real());
    if (max_diag <= 0.0) throw NumericalError("pivoted_cholesky: matrix has no positive diagonal");

    int rank = 0;
    for (int k = 0; k < n; ++k) {
        // largest remaining diagonal entry; first occurrence wins (deterministic)
        int p = k;
        double best = a(k, k).real();
        for (int i = k + 1; i < n; ++i)
            if (a(i, i).real() > best) {
                best = a(i, i).real();
                p = i;
            }
        if (best < -drop_tol * max_diag)
            throw NumericalError(
                "pivoted_cholesky: matrix is numerically indefinite (pivot " +
                std::to_string(best) + "); lower the degree or raise the resolution");
        if (best < drop_tol * max_diag) break;  // rank cap

        if (p != k) {
            a.row(k).swap(a.row(p));
            a.col(k).swap(a.col(p));
            std::swap(out.permutation[static_cast<std::size_t>(k)],
                      out.permutation[static_cast<std::size_t>(p)]);
        }
        double piv = std::sqrt(a(k, k).real());
        a(k, k) = piv;
        for (int i = k + 1; i < n; ++i) a(i, k) /= piv;
        // update the full trailing block so later pivot swaps stay consistent
        for (int j = k + 1; j < n; ++j)
            for (int i = k + 1; i < n; ++i) a(i, j) -= a(i, k) * std::conj(a(j, k));
        ++rank;
    }

    out.rank = rank;
    out.lower = Eigen::MatrixXcd::Zero(n, rank);
    for (int j = 0; j < rank; ++j)
        for (int i = j; i < n; ++i) out.lower(i, j) = a(i, j);
    return out;
}

}  // namespace blab
