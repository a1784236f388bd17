#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blab/domains.hpp"
#include "blab/types.hpp"

namespace blab {

// Deterministic quadrature rule with Lebesgue-measure weights.
// Node/weight ordering is fixed for a given (domain_id, resolution).
struct QuadratureRule {
    std::vector<Point> nodes;
    std::vector<double> weights;
    std::string domain_id;
    int resolution = 0;

    std::size_t size() const { return nodes.size(); }
    double weight_sum() const;
};

inline constexpr int kMinQuadratureResolution = 4;

// disk/annulus: Gauss-Legendre radius x uniform periodic angle (spectrally
// accurate for smooth integrands); polydisk: tensor product of disk rules;
// ellipse: midpoint bounding-box rule with indicator masking (slow but
// general). ball2 has no rule; closed-form kernels cover it.
QuadratureRule build_quadrature(const Domain& domain, int resolution);

// Gauss-Legendre rule on a real segment; nodes on the real axis of C.
QuadratureRule line_segment_rule(double lo, double hi, int node_count);

// Subset of a rule's nodes, order preserved.
QuadratureRule masked(const QuadratureRule& rule,
                      const std::function<bool(const Point&)>& keep);

// Compensated accumulator (Kahan-Babuska/Neumaier variant, which also
// covers addends larger than the running sum); summation order is
// caller-defined and must stay fixed for reproducibility.
class KahanSum {
public:
    void add(double x) {
        double t = s_ + x;
        if (std::abs(s_) >= std::abs(x))
            c_ += (s_ - t) + x;
        else
            c_ += (x - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0.0, c_ = 0.0;
};

// Compensated integration in node-index order; bit-reproducible.
Complex integrate(const QuadratureRule& rule,
                  const std::function<Complex(const Point&)>& f);
double integrate_real(const QuadratureRule& rule,
                      const std::function<double(const Point&)>& f);

// Central-difference stencil; step is relative and scaled by (1 + |z_var|).
struct DerivativeStencil {
    double step = 1e-5;
    int order = 1;  // 1 or 2 (derivative order)
};

enum class Slot { holomorphic, antiholomorphic };

// Wirtinger derivative d/dz_var or d/dconj(z_var) of f at z via central
// differences in the underlying real coordinates: (d/dx -/+ i d/dy)/2.
Complex complex_derivative(const std::function<Complex(const Point&)>& f,
                           const Point& z, int var, Slot slot,
                           const DerivativeStencil& stencil = {});

// Nested stencil for d^2/dz_alpha dconj(z_beta); used for cross-checks of
// analytic kernel derivatives.
Complex mixed_derivative(const std::function<Complex(const Point&)>& f,
                         const Point& z, int alpha, int beta,
                         const DerivativeStencil& stencil = {});

// Gauss-Legendre nodes/weights on [-1, 1], Newton-refined.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Hermitian PSD factorization with diagonal pivoting and a drop tolerance.
// G[perm,perm] ~= L L^H with L lower-trapezoidal of the returned rank.
// Throws NumericalError if a pivot is negative beyond tolerance.
struct PivotedCholesky {
    Eigen::MatrixXcd lower;
    std::vector<int> permutation;
    int rank = 0;
};
PivotedCholesky pivoted_cholesky(const Eigen::MatrixXcd& gram, double drop_tol);

}  // namespace blab
