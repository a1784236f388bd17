#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "blab/domains.hpp"
#include "blab/numerics.hpp"

namespace blab {

enum class KernelStrategy { closed_form, annulus_series, orthonormalized };

// Kernel spec strings: `closed`, `series:J=40`, `ortho:deg=12,res=64`.
struct KernelSpecRequest {
    KernelStrategy strategy = KernelStrategy::closed_form;
    int series_truncation = 40;   // bilateral Laurent order J
    int ortho_degree = 12;        // max total monomial degree
    int ortho_resolution = 64;    // quadrature resolution backing the Gram

    std::string id() const;
    static KernelSpecRequest parse(std::string_view text);
};

// Evaluable reproducing kernel K(z, xi): holomorphic in z, antiholomorphic
// in xi, Hermitian (K(z,xi) = conj(K(xi,z))), positive on the diagonal.
class Kernel {
public:
    virtual ~Kernel() = default;

    const Domain& domain() const { return domain_; }
    KernelStrategy strategy() const { return strategy_; }
    virtual std::string id() const = 0;

    // K(z, xi); both points checked for membership.
    Complex eval(const Point& z, const Point& xi) const;
    // K(z, z), real and positive on the domain.
    double eval_diag(const Point& z) const;

    // dK/dz_alpha (slot-1 holomorphic derivative).
    Complex grad1(const Point& z, const Point& xi, int alpha) const;
    // d^2 K / dz_alpha dconj(xi_beta).
    Complex mixed12(const Point& z, const Point& xi, int alpha, int beta) const;
    // dK/dconj(xi_beta) via Hermitian symmetry.
    Complex gradbar2(const Point& z, const Point& xi, int beta) const;

protected:
    Kernel(Domain domain, KernelStrategy strategy)
        : domain_(std::move(domain)), strategy_(strategy) {}

    virtual Complex eval_impl(const Point& z, const Point& xi) const = 0;
    virtual Complex grad1_impl(const Point& z, const Point& xi, int alpha) const = 0;
    virtual Complex mixed12_impl(const Point& z, const Point& xi, int alpha,
                                 int beta) const = 0;

private:
    void check_membership(const Point& p, const char* which) const;

    Domain domain_;
    KernelStrategy strategy_;
};

using KernelModel = std::shared_ptr<const Kernel>;

// Closed forms exist for disk, polydisk and ball2; the annulus kernel is a
// bilateral Laurent series with analytic coefficients; any domain with a
// quadrature rule supports numerical orthonormalization of monomials.
KernelModel make_kernel(const Domain& domain, const KernelSpecRequest& request);
KernelModel make_kernel(const Domain& domain, std::string_view spec_text);

// |integral of |K(z,.)|^2 dV - K(z,z)| / K(z,z); the statement that the
// kernel density row at z has unit mass.
double reproducing_residual(const Kernel& kernel, const Point& z,
                            const QuadratureRule& rule);

// Laurent coefficient 1/||xi^j||^2 of the annulus kernel, analytic:
// ||xi^j||^2 = 2 pi (1 - r^(2j+2)) / (2j+2) for j != -1, 2 pi log(1/r) else.
double annulus_series_coefficient(double r, int j);

// Orthonormal-basis access for the orthonormalized strategy (tests use it to
// verify Gram(s) = I under the kernel's own rule).
class OrthonormalBasisKernel;
struct OrthoBasisInfo {
    int rank = 0;
    int requested_basis_size = 0;
    Eigen::MatrixXcd gram_residual;  // Gram(s) - I under the build rule
};
OrthoBasisInfo ortho_basis_info(const Kernel& kernel);

}  // namespace blab
