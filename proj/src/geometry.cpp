#include "blab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "blab/errors.hpp"

namespace blab {

namespace {

Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
    if (solver.info() != Eigen::Success)
        throw NumericalError("Hermitian eigenvalue computation failed");
    return solver.eigenvalues();
}

std::string matrix_to_string(const Eigen::MatrixXcd& m) {
    std::ostringstream os;
    os << m;
    return os.str();
}

}  // namespace

double HermitianMetric::min_eigenvalue() const {
    return hermitian_eigenvalues(matrix).minCoeff();
}

HermitianMetric bergman_metric(const Kernel& kernel, const Point& z) {
    const int n = kernel.domain().dim();
    double diag = kernel.eval_diag(z);
    if (!(diag > 0.0))
        throw NumericalError("kernel diagonal is not positive at " + format_point(z));

    // g_{a conj(b)} = (K d1 dbar2 K - d1 K dbar2 K) / K^2 evaluated at xi = z;
    // dbar2 K(z,z) = conj(d1 K(z,z)) by Hermitian symmetry.
    Eigen::MatrixXcd g(n, n);
    Eigen::VectorXcd d1(n);
    for (int a = 0; a < n; ++a) d1[a] = kernel.grad1(z, z, a);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Complex mixed = kernel.mixed12(z, z, a, b);
            g(a, b) = (mixed * diag - d1[a] * std::conj(d1[b])) / (diag * diag);
        }
    g = 0.5 * (g + g.adjoint().eval());

    HermitianMetric metric{z, g};
    if (metric.min_eigenvalue() <= 0.0)
        throw NumericalError("Bergman metric is not positive definite at " + format_point(z) +
                             "; matrix:\n" + matrix_to_string(g));
    return metric;
}

double diastasis(const Kernel& kernel, const Point& w, const Point& zeta) {
    Complex cross = kernel.eval(w, zeta);
    if (std::norm(cross) == 0.0)
        throw EvaluationError("diastasis is infinite: K(w,zeta) = 0 at w = " + format_point(w) +
                              ", zeta = " + format_point(zeta));
    // log space keeps the diagonal exactly zero
    return std::log(kernel.eval_diag(w)) + std::log(kernel.eval_diag(zeta)) -
           2.0 * std::log(std::abs(cross));
}

double transformation_residual(const Kernel& k1, const Kernel& k2, const ProperMap& map,
                               const Point& z, const Point& xi, bool absolute_fallback) {
    Complex lhs = k1.eval(z, xi);
    Complex rhs = map.jacobian_det(z) * k2.eval(map.apply(z), map.apply(xi)) *
                  std::conj(map.jacobian_det(xi));
    double num = std::abs(lhs - rhs);
    double den = std::abs(lhs);
    if (den == 0.0) {
        if (absolute_fallback) return num;
        throw EvaluationError("transformation residual undefined: K1(z,xi) = 0");
    }
    return num / den;
}

IsometryReport isometry_defect(const Kernel& k1, const Kernel& k2, const ProperMap& map,
                               std::span<const Point> sample) {
    IsometryReport report;
    std::vector<Eigen::MatrixXcd> pullbacks;
    std::vector<Eigen::MatrixXcd> metrics;
    std::vector<double> ratios;

    for (const Point& z : sample) {
        if (std::abs(map.jacobian_det(z)) < 1e-12) {
            ++report.skipped;  // critical point of the map
            continue;
        }
        Eigen::MatrixXcd j = map.jacobian_matrix(z);
        Eigen::MatrixXcd g2 = bergman_metric(k2, map.apply(z)).matrix;
        Eigen::MatrixXcd pulled = j.adjoint() * g2 * j;
        Eigen::MatrixXcd g1 = bergman_metric(k1, z).matrix;
        report.sample.push_back(z);
        pullbacks.push_back(pulled);
        metrics.push_back(g1);
        ratios.push_back(pulled.trace().real() / g1.trace().real());
    }
    if (report.sample.empty())
        throw ValidationError("isometry_defect: no usable sample points away from the critical set");

    // median trace ratio is robust against boundary-adjacent outliers
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    std::size_t mid = sorted.size() / 2;
    report.lambda_hat = (sorted.size() % 2 == 1)
                            ? sorted[mid]
                            : 0.5 * (sorted[mid - 1] + sorted[mid]);

    double defect = 0.0;
    for (std::size_t i = 0; i < pullbacks.size(); ++i) {
        Eigen::MatrixXcd diff = pullbacks[i] - report.lambda_hat * metrics[i];
        double scale = std::max(pullbacks[i].norm(), (report.lambda_hat * metrics[i]).norm());
        defect = std::max(defect, diff.norm() / scale);
    }
    report.defect = defect;
    return report;
}

}  // namespace blab
