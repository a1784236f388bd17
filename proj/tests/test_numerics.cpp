#include <doctest.h>

#include <cmath>
#include <random>

#include "blab/errors.hpp"
#include "blab/numerics.hpp"

using namespace blab;

TEST_CASE("weight sums reproduce analytic areas") {
    Domain disk = make_domain("disk");
    QuadratureRule dr = build_quadrature(disk, 64);
    CHECK(std::abs(dr.weight_sum() - kPi) / kPi <= 1e-10);

    Domain ann = make_domain("annulus:r=0.5");
    QuadratureRule ar = build_quadrature(ann, 64);
    CHECK(std::abs(ar.weight_sum() - 0.75 * kPi) / (0.75 * kPi) <= 1e-10);

    Domain poly = make_domain("polydisk");
    QuadratureRule pr = build_quadrature(poly, 12);
    CHECK(std::abs(pr.weight_sum() - kPi * kPi) / (kPi * kPi) <= 1e-10);

    // indicator-masked bounding box converges slower; oracle is pi*a*b
    Domain ell = make_domain("ellipse:a=1,b=0.5");
    QuadratureRule er = build_quadrature(ell, 64);
    CHECK(std::abs(er.weight_sum() - kPi * 0.5) / (kPi * 0.5) <= 1e-3);
}

TEST_CASE("every node lies inside its domain and every weight is positive") {
    for (const char* spec : {"disk", "annulus:r=0.5", "ellipse:a=1,b=0.5"}) {
        Domain d = make_domain(spec);
        QuadratureRule rule = build_quadrature(d, 16);
        for (const Point& p : rule.nodes) CHECK(d.contains(p));
        for (double w : rule.weights) CHECK(w > 0.0);
    }
    Domain poly = make_domain("polydisk");
    QuadratureRule prule = build_quadrature(poly, 6);
    for (const Point& p : prule.nodes) CHECK(poly.contains(p));
    for (double w : prule.weights) CHECK(w > 0.0);
}

TEST_CASE("area error decreases monotonically with resolution") {
    auto check_domain = [](const char* spec, double volume, std::initializer_list<int> res) {
        Domain d = make_domain(spec);
        double prev = -1.0;
        for (int r : res) {
            double err = std::abs(build_quadrature(d, r).weight_sum() - volume);
            if (prev >= 0.0) CHECK(err <= prev + 1e-14);
            prev = err;
        }
    };
    check_domain("disk", kPi, {8, 16, 32});
    check_domain("annulus:r=0.5", 0.75 * kPi, {8, 16, 32});
    check_domain("ellipse:a=1,b=0.5", 0.5 * kPi, {8, 16, 32, 64});
}

TEST_CASE("build_quadrature rejects bad requests") {
    Domain disk = make_domain("disk");
    CHECK_THROWS_AS(build_quadrature(disk, 3), ValidationError);
    Domain ball = make_domain("ball2");
    CHECK_THROWS_AS(build_quadrature(ball, 16), UnsupportedError);
}

TEST_CASE("integration examples on the disk and annulus") {
    Domain disk = make_domain("disk");
    QuadratureRule dr = build_quadrature(disk, 64);
    Complex one = integrate(dr, [](const Point&) { return Complex(1.0); });
    CHECK(std::abs(one - Complex(kPi)) <= 1e-12);

    // oracle: 2 pi * int_0^1 t^3 dt computed by a 1-d rule
    QuadratureRule seg = line_segment_rule(0.0, 1.0, 32);
    double oracle = 2.0 * kPi *
                    integrate_real(seg, [](const Point& p) {
                        double t = p[0].real();
                        return t * t * t;
                    });
    Complex modsq = integrate(dr, [](const Point& p) { return Complex(std::norm(p[0])); });
    CHECK(std::abs(modsq.real() - oracle) <= 1e-12);
    CHECK(oracle == doctest::Approx(kPi / 2).epsilon(1e-13));

    Domain ann = make_domain("annulus:r=0.5");
    QuadratureRule ar = build_quadrature(ann, 64);
    QuadratureRule seg2 = line_segment_rule(0.5, 1.0, 48);
    double oracle2 = 2.0 * kPi *
                     integrate_real(seg2, [](const Point& p) { return 1.0 / p[0].real(); });
    Complex inv = integrate(ar, [](const Point& p) { return Complex(1.0 / std::norm(p[0])); });
    CHECK(std::abs(inv.real() - oracle2) <= 1e-10);
    CHECK(oracle2 == doctest::Approx(2.0 * kPi * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("integration is linear") {
    Domain disk = make_domain("disk");
    QuadratureRule rule = build_quadrature(disk, 24);
    auto f = [](const Point& p) { return p[0] * p[0] + 0.3; };
    auto g = [](const Point& p) { return std::conj(p[0]) + Complex(0, 1) * p[0]; };
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        Complex lam(u(rng), u(rng));
        Complex lhs = integrate(rule, [&](const Point& p) { return f(p) + lam * g(p); });
        Complex rhs = integrate(rule, f) + lam * integrate(rule, g);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("non-finite integrand reports the node") {
    Domain disk = make_domain("disk");
    QuadratureRule rule = build_quadrature(disk, 8);
    CHECK_THROWS_WITH_AS(
        integrate(rule, [](const Point&) { return Complex(std::nan("")); }),
        doctest::Contains("node 0"), EvaluationError);
}

TEST_CASE("compensated summation survives cancellation") {
    KahanSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1.0);
}

TEST_CASE("wirtinger derivatives") {
    auto square = [](const Point& p) { return p[0] * p[0]; };
    Point one(Complex(1.0, 0.0));
    CHECK(std::abs(complex_derivative(square, one, 0, Slot::holomorphic) - Complex(2.0)) <= 1e-8);
    CHECK(std::abs(complex_derivative(square, one, 0, Slot::antiholomorphic)) <= 1e-9);

    // d/dz of -2 log(1 - z conj(xi)) at z=0 equals 2 conj(xi); oracle from the
    // closed form 2 conj(xi) / (1 - z conj(xi))
    Complex xi(0.3, 0.0);
    auto logk = [&](const Point& p) {
        return -2.0 * std::log(1.0 - p[0] * std::conj(xi)) - std::log(Complex(kPi));
    };
    Complex oracle = 2.0 * std::conj(xi);
    Complex got = complex_derivative(logk, Point(Complex(0, 0)), 0, Slot::holomorphic);
    CHECK(std::abs(got - oracle) <= 1e-9);
    CHECK(std::abs(oracle - Complex(0.6)) == 0.0);
}

TEST_CASE("antiholomorphic slot annihilates holomorphic polynomials") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (int trial = 0; trial < 20; ++trial) {
        Complex c0(u(rng), u(rng)), c1(u(rng), u(rng)), c2(u(rng), u(rng));
        auto poly = [&](const Point& p) { return c0 + c1 * p[0] + c2 * p[0] * p[0] * p[0]; };
        Point z(Complex(u(rng), u(rng)));
        CHECK(std::abs(complex_derivative(poly, z, 0, Slot::antiholomorphic)) <= 1e-8);
    }
}

TEST_CASE("second-order stencil") {
    auto cube = [](const Point& p) { return p[0] * p[0] * p[0]; };
    Point z(Complex(0.5, 0.1));
    DerivativeStencil st;
    st.order = 2;
    st.step = 1e-4;
    Complex expected = 6.0 * z[0];
    CHECK(std::abs(complex_derivative(cube, z, 0, Slot::holomorphic, st) - expected) <= 1e-5);
}

TEST_CASE("stencil validation") {
    auto f = [](const Point& p) { return p[0]; };
    Point z(Complex(0, 0));
    DerivativeStencil bad;
    bad.step = 1e-9;
    CHECK_THROWS_AS(complex_derivative(f, z, 0, Slot::holomorphic, bad), ValidationError);
    bad.step = 1e-5;
    bad.order = 3;
    CHECK_THROWS_AS(complex_derivative(f, z, 0, Slot::holomorphic, bad), ValidationError);
}

TEST_CASE("mixed stencil derivative matches the analytic value") {
    // f(z) = |z|^4 = (z conj z)^2 has d^2/dz dconj(z) f = 4 |z|^2
    auto f = [](const Point& p) { return Complex(std::norm(p[0]) * std::norm(p[0])); };
    Point z(Complex(0.4, -0.3));
    DerivativeStencil st;
    st.step = 1e-4;
    Complex got = mixed_derivative(f, z, 0, 0, st);
    CHECK(std::abs(got - Complex(4.0 * std::norm(z[0]))) <= 1e-5);
}

TEST_CASE("pivoted cholesky factorizes and detects rank") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = 8;
    Eigen::MatrixXcd b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = Complex(u(rng), u(rng));
    Eigen::MatrixXcd g = b * b.adjoint();

    PivotedCholesky pc = pivoted_cholesky(g, 1e-12);
    CHECK(pc.rank == n);
    Eigen::MatrixXcd perm(n, n);
    perm.setZero();
    for (int i = 0; i < n; ++i) perm(i, pc.permutation[static_cast<std::size_t>(i)]) = 1.0;
    Eigen::MatrixXcd reconstructed = pc.lower * pc.lower.adjoint();
    CHECK((perm * g * perm.transpose() - reconstructed).norm() <= 1e-10 * g.norm());

    // rank-3 PSD matrix
    Eigen::MatrixXcd c = b.leftCols(3);
    Eigen::MatrixXcd g3 = c * c.adjoint();
    PivotedCholesky pc3 = pivoted_cholesky(g3, 1e-10);
    CHECK(pc3.rank == 3);

    Eigen::MatrixXcd indef = Eigen::MatrixXcd::Identity(2, 2);
    indef(1, 1) = -1.0;
    CHECK_THROWS_WITH_AS(pivoted_cholesky(indef, 1e-10),
                         doctest::Contains("lower the degree"), NumericalError);
}

TEST_CASE("line segment rule integrates polynomials") {
    QuadratureRule seg = line_segment_rule(-1.0, 2.0, 16);
    CHECK(seg.weight_sum() == doctest::Approx(3.0).epsilon(1e-14));
    double cubic = integrate_real(seg, [](const Point& p) {
        double x = p[0].real();
        return x * x * x;
    });
    CHECK(cubic == doctest::Approx(15.0 / 4.0).epsilon(1e-13));
    CHECK_THROWS_AS(line_segment_rule(1.0, 1.0, 8), ValidationError);
}

TEST_CASE("rules are deterministic") {
    Domain disk = make_domain("disk");
    QuadratureRule a = build_quadrature(disk, 16);
    QuadratureRule b = build_quadrature(disk, 16);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.nodes[i] == b.nodes[i]);
        CHECK(a.weights[i] == b.weights[i]);
    }
}
