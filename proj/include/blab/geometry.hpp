#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "blab/kernels.hpp"
#include "blab/maps.hpp"

namespace blab {

// Metric tensor value g_{alpha conj(beta)} = d^2 log K(z,z) / dz dconj(z).
struct HermitianMetric {
    Point point;
    Eigen::MatrixXcd matrix;  // n x n, Hermitian positive-definite
    double min_eigenvalue() const;
};

HermitianMetric bergman_metric(const Kernel& kernel, const Point& z);

// log[K(w,w) K(zeta,zeta) / |K(w,zeta)|^2], computed in log space so that
// the diagonal is exactly zero. Symmetric, nonnegative.
double diastasis(const Kernel& kernel, const Point& w, const Point& zeta);

// Relative residual of K1(z,xi) = Jf(z) K2(f(z),f(xi)) conj(Jf(xi)).
// Exact (to roundoff) for biholomorphisms, violated for proper maps with
// sheet count > 1. Falls back to the absolute residual when K1(z,xi) = 0
// and absolute_fallback is set.
double transformation_residual(const Kernel& k1, const Kernel& k2,
                               const ProperMap& map, const Point& z,
                               const Point& xi, bool absolute_fallback = false);

struct IsometryReport {
    double lambda_hat = 0.0;  // median trace ratio tr(f*g2)/tr(g1)
    double defect = 0.0;      // max relative deviation |f*g2 - lambda g1|
    std::vector<Point> sample;
    int skipped = 0;          // points at/near critical set, skipped
};

// Tests the constant-conformal-factor hypothesis f*g_B2 = lambda g_B1 on a
// sample; the pullback at z is J^H g2(f(z)) J with J the complex Jacobian.
IsometryReport isometry_defect(const Kernel& k1, const Kernel& k2,
                               const ProperMap& map,
                               std::span<const Point> sample);

}  // namespace blab
