#include "blab/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "blab/errors.hpp"

namespace blab {

std::string KernelSpecRequest::id() const {
    char buf[64];
    switch (strategy) {
        case KernelStrategy::closed_form:
            return "closed";
        case KernelStrategy::annulus_series:
            std::snprintf(buf, sizeof(buf), "series:J=%d", series_truncation);
            return buf;
        case KernelStrategy::orthonormalized:
            std::snprintf(buf, sizeof(buf), "ortho:deg=%d,res=%d", ortho_degree, ortho_resolution);
            return buf;
    }
    throw ValidationError("unknown kernel strategy");
}

KernelSpecRequest KernelSpecRequest::parse(std::string_view text) {
    std::string s(text);
    std::string head = s, tail;
    if (auto colon = s.find(':'); colon != std::string::npos) {
        head = s.substr(0, colon);
        tail = s.substr(colon + 1);
    }
    auto named = [&](const std::string& key, int fallback, bool required) {
        std::stringstream ss(tail);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq != std::string::npos && item.substr(0, eq) == key) {
                try {
                    return std::stoi(item.substr(eq + 1));
                } catch (const std::exception&) {
                    throw ValidationError("bad integer for '" + key + "' in kernel spec '" + s + "'");
                }
            }
        }
        if (required) throw ValidationError("missing parameter '" + key + "' in kernel spec '" + s + "'");
        return fallback;
    };

    KernelSpecRequest req;
    if (head == "closed") {
        req.strategy = KernelStrategy::closed_form;
    } else if (head == "series") {
        req.strategy = KernelStrategy::annulus_series;
        req.series_truncation = named("J", 40, false);
        if (req.series_truncation < 1)
            throw ValidationError("series truncation J must be positive");
    } else if (head == "ortho") {
        req.strategy = KernelStrategy::orthonormalized;
        req.ortho_degree = named("deg", 12, false);
        req.ortho_resolution = named("res", 64, false);
        if (req.ortho_degree < 0) throw ValidationError("ortho degree must be nonnegative");
    } else {
        throw ValidationError("unknown kernel spec '" + s +
                              "' (expected closed, series:J=..., ortho:deg=...,res=...)");
    }
    return req;
}

void Kernel::check_membership(const Point& p, const char* which) const {
    if (!domain_.contains(p))
        throw EvaluationError(std::string("kernel argument ") + which + " = " + format_point(p) +
                              " lies outside " + domain_.id());
}

Complex Kernel::eval(const Point& z, const Point& xi) const {
    check_membership(z, "z");
    check_membership(xi, "xi");
    return eval_impl(z, xi);
}

double Kernel::eval_diag(const Point& z) const {
    check_membership(z, "z");
    return eval_impl(z, z).real();
}

Complex Kernel::grad1(const Point& z, const Point& xi, int alpha) const {
    check_membership(z, "z");
    check_membership(xi, "xi");
    return grad1_impl(z, xi, alpha);
}

Complex Kernel::mixed12(const Point& z, const Point& xi, int alpha, int beta) const {
    check_membership(z, "z");
    check_membership(xi, "xi");
    return mixed12_impl(z, xi, alpha, beta);
}

Complex Kernel::gradbar2(const Point& z, const Point& xi, int beta) const {
    // K(z,xi) = conj(K(xi,z)) transfers slot-1 derivatives to slot 2.
    return std::conj(grad1(xi, z, beta));
}

namespace {

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

// Unit disk: K = 1 / (pi (1 - z conj(xi))^2).
class DiskKernel final : public Kernel {
public:
    explicit DiskKernel(Domain d) : Kernel(std::move(d), KernelStrategy::closed_form) {}
    std::string id() const override { return "disk/closed"; }

protected:
    Complex eval_impl(const Point& z, const Point& xi) const override {
        Complex u = 1.0 - z[0] * std::conj(xi[0]);
        return 1.0 / (kPi * u * u);
    }
    Complex grad1_impl(const Point& z, const Point& xi, int) const override {
        Complex u = 1.0 - z[0] * std::conj(xi[0]);
        return 2.0 * std::conj(xi[0]) / (kPi * u * u * u);
    }
    Complex mixed12_impl(const Point& z, const Point& xi, int, int) const override {
        Complex x = z[0] * std::conj(xi[0]);
        Complex u = 1.0 - x;
        return (2.0 + 4.0 * x) / (kPi * u * u * u * u);
    }
};

// Polydisk: product of per-coordinate disk kernels.
class PolydiskKernel final : public Kernel {
public:
    explicit PolydiskKernel(Domain d) : Kernel(std::move(d), KernelStrategy::closed_form) {}
    std::string id() const override { return "polydisk/closed"; }

protected:
    static Complex f(Complex z, Complex xi) {
        Complex u = 1.0 - z * std::conj(xi);
        return 1.0 / (kPi * u * u);
    }
    static Complex fd1(Complex z, Complex xi) {
        Complex u = 1.0 - z * std::conj(xi);
        return 2.0 * std::conj(xi) / (kPi * u * u * u);
    }
    static Complex fdbar2(Complex z, Complex xi) { return std::conj(fd1(xi, z)); }
    static Complex fmix(Complex z, Complex xi) {
        Complex x = z * std::conj(xi);
        Complex u = 1.0 - x;
        return (2.0 + 4.0 * x) / (kPi * u * u * u * u);
    }

    Complex eval_impl(const Point& z, const Point& xi) const override {
        return f(z[0], xi[0]) * f(z[1], xi[1]);
    }
    Complex grad1_impl(const Point& z, const Point& xi, int alpha) const override {
        int o = 1 - alpha;
        return fd1(z[alpha], xi[alpha]) * f(z[o], xi[o]);
    }
    Complex mixed12_impl(const Point& z, const Point& xi, int alpha, int beta) const override {
        if (alpha == beta) {
            int o = 1 - alpha;
            return fmix(z[alpha], xi[alpha]) * f(z[o], xi[o]);
        }
        return fd1(z[alpha], xi[alpha]) * fdbar2(z[beta], xi[beta]);
    }
};

// Unit ball in C^2: K = 2 / (pi^2 (1 - <z,xi>)^3).
class Ball2Kernel final : public Kernel {
public:
    explicit Ball2Kernel(Domain d) : Kernel(std::move(d), KernelStrategy::closed_form) {}
    std::string id() const override { return "ball2/closed"; }

protected:
    static Complex inner(const Point& z, const Point& xi) {
        return z[0] * std::conj(xi[0]) + z[1] * std::conj(xi[1]);
    }
    Complex eval_impl(const Point& z, const Point& xi) const override {
        Complex u = 1.0 - inner(z, xi);
        return 2.0 / (kPi * kPi * u * u * u);
    }
    Complex grad1_impl(const Point& z, const Point& xi, int alpha) const override {
        Complex u = 1.0 - inner(z, xi);
        return 6.0 * std::conj(xi[alpha]) / (kPi * kPi * u * u * u * u);
    }
    Complex mixed12_impl(const Point& z, const Point& xi, int alpha, int beta) const override {
        Complex u = 1.0 - inner(z, xi);
        Complex num = (alpha == beta) ? 6.0 * u : Complex(0.0);
        num += 24.0 * z[beta] * std::conj(xi[alpha]);
        return num / (kPi * kPi * u * u * u * u * u);
    }
};

// ---------------------------------------------------------------------------
// Annulus r < |z| < 1: bilateral Laurent series sum_j c_j (z conj(xi))^j with
// c_j = 1 / ||xi^j||^2, ||xi^j||^2 = 2 pi (1 - r^(2j+2)) / (2j+2) for j != -1
// and 2 pi log(1/r) for j = -1.
// ---------------------------------------------------------------------------
class AnnulusSeriesKernel final : public Kernel {
public:
    AnnulusSeriesKernel(Domain d, int truncation)
        : Kernel(std::move(d), KernelStrategy::annulus_series), trunc_(truncation) {
        const double r = domain().spec().r;
        coeff_.resize(static_cast<std::size_t>(2 * trunc_ + 1));
        for (int j = -trunc_; j <= trunc_; ++j) coeff_[idx(j)] = coefficient(r, j);
    }

    std::string id() const override {
        return domain().id() + "/series:J=" + std::to_string(trunc_);
    }

    static double coefficient(double r, int j) {
        if (j == -1) return 1.0 / (2.0 * kPi * std::log(1.0 / r));
        double p = 2.0 * j + 2.0;
        return p / (2.0 * kPi * (1.0 - std::pow(r, p)));
    }

    double coefficient(int j) const {
        if (std::abs(j) > trunc_) throw ValidationError("coefficient index beyond truncation");
        return coeff_[idx(j)];
    }
    int truncation() const { return trunc_; }

protected:
    std::size_t idx(int j) const { return static_cast<std::size_t>(j + trunc_); }

    // weight(j) = j for grad1, j^2 for mixed12, 1 for eval
    Complex weighted_sum(Complex x, int power_of_j) const {
        Complex xp = 1.0;      // x^j for j >= 0
        Complex xn = 1.0 / x;  // x^j for j < 0
        Complex pos = 0.0, neg = 0.0;
        for (int j = 0; j <= trunc_; ++j) {
            double f = power_of_j == 0 ? 1.0 : (power_of_j == 1 ? j : double(j) * j);
            pos += coeff_[idx(j)] * f * xp;
            xp *= x;
        }
        for (int j = -1; j >= -trunc_; --j) {
            double f = power_of_j == 0 ? 1.0 : (power_of_j == 1 ? j : double(j) * j);
            neg += coeff_[idx(j)] * f * xn;
            xn /= x;
        }
        return pos + neg;
    }

    Complex eval_impl(const Point& z, const Point& xi) const override {
        return weighted_sum(z[0] * std::conj(xi[0]), 0);
    }
    Complex grad1_impl(const Point& z, const Point& xi, int) const override {
        return weighted_sum(z[0] * std::conj(xi[0]), 1) / z[0];
    }
    Complex mixed12_impl(const Point& z, const Point& xi, int, int) const override {
        return weighted_sum(z[0] * std::conj(xi[0]), 2) / (z[0] * std::conj(xi[0]));
    }

private:
    int trunc_;
    std::vector<double> coeff_;
};

// ---------------------------------------------------------------------------
// Orthonormalized monomial kernel: monomials up to total degree are
// orthonormalized against the rule's inner product by pivoted Cholesky with
// one refinement pass, so Gram(s) = I to roundoff under the build rule.
// ---------------------------------------------------------------------------
class OrthoKernel final : public Kernel {
public:
    OrthoKernel(Domain d, int degree, QuadratureRule rule)
        : Kernel(std::move(d), KernelStrategy::orthonormalized),
          degree_(degree),
          rule_(std::move(rule)) {
        build();
    }

    std::string id() const override {
        return domain().id() + "/ortho:deg=" + std::to_string(degree_) +
               ",res=" + std::to_string(rule_.resolution);
    }

    int rank() const { return static_cast<int>(coeff_.rows()); }
    int requested_basis_size() const { return requested_; }
    const QuadratureRule& rule() const { return rule_; }

    // Orthonormal functions evaluated at p (length = rank).
    Eigen::VectorXcd basis_at(const Point& p) const { return coeff_ * monomials(p, 0); }

protected:
    Complex eval_impl(const Point& z, const Point& xi) const override {
        Eigen::VectorXcd sz = coeff_ * monomials(z, 0);
        Eigen::VectorXcd sx = coeff_ * monomials(xi, 0);
        // sum_k s_k(z) conj(s_k(xi)) with plain accumulation in basis order
        Complex acc = 0.0;
        for (Eigen::Index k = 0; k < sz.size(); ++k) acc += sz[k] * std::conj(sx[k]);
        return acc;
    }
    Complex grad1_impl(const Point& z, const Point& xi, int alpha) const override {
        Eigen::VectorXcd dz = coeff_ * monomials(z, alpha + 1);
        Eigen::VectorXcd sx = coeff_ * monomials(xi, 0);
        Complex acc = 0.0;
        for (Eigen::Index k = 0; k < dz.size(); ++k) acc += dz[k] * std::conj(sx[k]);
        return acc;
    }
    Complex mixed12_impl(const Point& z, const Point& xi, int alpha, int beta) const override {
        Eigen::VectorXcd dz = coeff_ * monomials(z, alpha + 1);
        Eigen::VectorXcd dx = coeff_ * monomials(xi, beta + 1);
        Complex acc = 0.0;
        for (Eigen::Index k = 0; k < dz.size(); ++k) acc += dz[k] * std::conj(dx[k]);
        return acc;
    }

private:
    // Monomial vector for the selected exponents; derivative = 1 + coordinate
    // index, 0 for plain evaluation.
    Eigen::VectorXcd monomials(const Point& p, int derivative) const {
        const int n = domain().dim();
        Eigen::VectorXcd v(static_cast<Eigen::Index>(selected_.size()));
        for (std::size_t s = 0; s < selected_.size(); ++s) {
            const auto& e = exponents_[static_cast<std::size_t>(selected_[s])];
            Complex val = 1.0;
            if (derivative == 0) {
                for (int c = 0; c < n; ++c) val *= ipow(p[c], e[static_cast<std::size_t>(c)]);
            } else {
                int dc = derivative - 1;
                int k = e[static_cast<std::size_t>(dc)];
                if (k == 0) {
                    val = 0.0;
                } else {
                    val = double(k) * ipow(p[dc], k - 1);
                    for (int c = 0; c < n; ++c)
                        if (c != dc) val *= ipow(p[c], e[static_cast<std::size_t>(c)]);
                }
            }
            v[static_cast<Eigen::Index>(s)] = val;
        }
        return v;
    }

    static Complex ipow(Complex base, int k) {
        Complex r = 1.0;
        for (int i = 0; i < k; ++i) r *= base;
        return r;
    }

    Eigen::MatrixXcd gram_of(const Eigen::MatrixXcd& values) const {
        // values: nodes x functions; Gram via weighted inner products
        const Eigen::Index nf = values.cols();
        Eigen::MatrixXcd g(nf, nf);
        for (Eigen::Index i = 0; i < nf; ++i)
            for (Eigen::Index j = i; j < nf; ++j) {
                KahanSum re, im;
                for (Eigen::Index p = 0; p < values.rows(); ++p) {
                    Complex t = values(p, i) * std::conj(values(p, j)) *
                                rule_.weights[static_cast<std::size_t>(p)];
                    re.add(t.real());
                    im.add(t.imag());
                }
                g(i, j) = Complex(re.value(), im.value());
                if (i != j) g(j, i) = std::conj(g(i, j));
            }
        return g;
    }

    void build() {
        const int n = domain().dim();
        exponents_.clear();
        if (n == 1) {
            for (int k = 0; k <= degree_; ++k) exponents_.push_back({k, 0});
        } else {
            for (int total = 0; total <= degree_; ++total)
                for (int i = total; i >= 0; --i) exponents_.push_back({i, total - i});
        }
        requested_ = static_cast<int>(exponents_.size());

        const Eigen::Index nn = static_cast<Eigen::Index>(rule_.size());
        const Eigen::Index nb = static_cast<Eigen::Index>(exponents_.size());
        Eigen::MatrixXcd values(nn, nb);
        for (Eigen::Index p = 0; p < nn; ++p) {
            const Point& node = rule_.nodes[static_cast<std::size_t>(p)];
            for (Eigen::Index j = 0; j < nb; ++j) {
                const auto& e = exponents_[static_cast<std::size_t>(j)];
                Complex v = ipow(node[0], e[0]);
                if (n == 2) v *= ipow(node[1], e[1]);
                values(p, j) = v;
            }
        }

        Eigen::MatrixXcd g = gram_of(values);

        // unit-diagonal prescaling tames the monomial conditioning
        Eigen::VectorXd scale(nb);
        for (Eigen::Index i = 0; i < nb; ++i) {
            double d = g(i, i).real();
            if (!(d > 0.0))
                throw NumericalError("monomial has nonpositive norm under the rule");
            scale[i] = 1.0 / std::sqrt(d);
        }
        Eigen::MatrixXcd gs = scale.asDiagonal() * g * scale.asDiagonal();

        PivotedCholesky pc = pivoted_cholesky(gs, 1e-10);
        if (pc.rank == 0)
            throw NumericalError("orthonormalization produced an empty basis; raise the resolution");

        selected_.assign(pc.permutation.begin(), pc.permutation.begin() + pc.rank);
        Eigen::MatrixXcd l1 = pc.lower.topRows(pc.rank);  // rank x rank lower triangular

        // s = L1^{-1} D m_selected
        Eigen::MatrixXcd c0 =
            l1.triangularView<Eigen::Lower>().solve(Eigen::MatrixXcd::Identity(pc.rank, pc.rank));
        for (Eigen::Index j = 0; j < pc.rank; ++j)
            c0.col(j) *= scale[static_cast<Eigen::Index>(selected_[static_cast<std::size_t>(j)])];

        // refinement pass: re-orthonormalize against the recomputed Gram
        Eigen::MatrixXcd sel_values(nn, pc.rank);
        for (Eigen::Index j = 0; j < pc.rank; ++j)
            sel_values.col(j) = values.col(static_cast<Eigen::Index>(selected_[static_cast<std::size_t>(j)]));
        Eigen::MatrixXcd s_values = sel_values * c0.transpose();
        Eigen::MatrixXcd g1 = gram_of(s_values);
        Eigen::LLT<Eigen::MatrixXcd> llt(g1);
        if (llt.info() != Eigen::Success)
            throw NumericalError("orthonormalization refinement failed; Gram not positive definite");
        Eigen::MatrixXcd l2inv = llt.matrixL()
                                     .solve(Eigen::MatrixXcd::Identity(pc.rank, pc.rank));
        coeff_ = l2inv * c0;
    }

    int degree_;
    QuadratureRule rule_;
    int requested_ = 0;
    std::vector<std::array<int, 2>> exponents_;
    std::vector<int> selected_;       // exponent indices of retained pivots
    Eigen::MatrixXcd coeff_;          // rank x rank, maps selected monomials to s_k
};

}  // namespace

KernelModel make_kernel(const Domain& domain, const KernelSpecRequest& request) {
    switch (request.strategy) {
        case KernelStrategy::closed_form:
            switch (domain.kind()) {
                case DomainKind::unit_disk:
                    return std::make_shared<DiskKernel>(domain);
                case DomainKind::polydisk:
                    return std::make_shared<PolydiskKernel>(domain);
                case DomainKind::unit_ball2:
                    return std::make_shared<Ball2Kernel>(domain);
                default:
                    throw UnsupportedError("no closed-form kernel for " + domain.id() +
                                           " (closed forms: disk, polydisk, ball2)");
            }
        case KernelStrategy::annulus_series:
            if (domain.kind() != DomainKind::annulus)
                throw UnsupportedError("series kernel is only defined on the annulus, not " +
                                       domain.id());
            return std::make_shared<AnnulusSeriesKernel>(domain, request.series_truncation);
        case KernelStrategy::orthonormalized: {
            QuadratureRule rule = build_quadrature(domain, request.ortho_resolution);
            return std::make_shared<OrthoKernel>(domain, request.ortho_degree, std::move(rule));
        }
    }
    throw ValidationError("unknown kernel strategy");
}

KernelModel make_kernel(const Domain& domain, std::string_view spec_text) {
    return make_kernel(domain, KernelSpecRequest::parse(spec_text));
}

double annulus_series_coefficient(double r, int j) {
    if (!(r > 0.0 && r < 1.0)) throw ValidationError("annulus coefficient needs r in (0,1)");
    return AnnulusSeriesKernel::coefficient(r, j);
}

double reproducing_residual(const Kernel& kernel, const Point& z,
                            const QuadratureRule& rule) {
    double diag = kernel.eval_diag(z);
    double mass = integrate_real(rule, [&](const Point& xi) {
        return std::norm(kernel.eval(z, xi));
    });
    return std::abs(mass - diag) / diag;
}

OrthoBasisInfo ortho_basis_info(const Kernel& kernel) {
    auto* ortho = dynamic_cast<const OrthoKernel*>(&kernel);
    if (!ortho)
        throw ValidationError("ortho_basis_info requires an orthonormalized kernel");
    OrthoBasisInfo info;
    info.rank = ortho->rank();
    info.requested_basis_size = ortho->requested_basis_size();

    const QuadratureRule& rule = ortho->rule();
    const int r = info.rank;
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(r, r);
    std::vector<Eigen::VectorXcd> vals;
    vals.reserve(rule.size());
    for (const Point& p : rule.nodes) vals.push_back(ortho->basis_at(p));
    for (int i = 0; i < r; ++i)
        for (int j = i; j < r; ++j) {
            KahanSum re, im;
            for (std::size_t p = 0; p < rule.size(); ++p) {
                Complex t = vals[p][i] * std::conj(vals[p][j]) * rule.weights[p];
                re.add(t.real());
                im.add(t.imag());
            }
            g(i, j) = Complex(re.value(), im.value());
            if (i != j) g(j, i) = std::conj(g(i, j));
        }
    info.gram_residual = g - Eigen::MatrixXcd::Identity(r, r);
    return info;
}

}  // namespace blab
