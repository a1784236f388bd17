#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "blab/errors.hpp"
#include "blab/maps.hpp"
#include "blab/numerics.hpp"

using namespace blab;

namespace {

std::vector<ProperMapModel> registry(const Domain& disk, const Domain& ann,
                                     const Domain& poly) {
    return {make_map("identity", disk), make_map("mobius:a=0.3+0i", disk),
            make_map("mobius:a=-0.2+0.1i", disk), make_map("powerdisk:m=2", disk),
            make_map("powerann:r=0.5,m=2", ann),
            make_map("prodmobius:a1=0.3+0i,a2=-0.2+0.1i", poly)};
}

Point random_point(const Domain& d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        if (d.dim() == 1) {
            Complex z(u(rng), u(rng));
            double m = std::abs(z);
            if (d.kind() == DomainKind::annulus) {
                if (m > d.spec().r + 0.03 && m < 0.97) return Point(z);
            } else if (m < 0.85) {
                return Point(z);
            }
        } else {
            Complex z1(0.8 * u(rng), 0.8 * u(rng)), z2(0.8 * u(rng), 0.8 * u(rng));
            Point p(z1, z2);
            if (d.contains(p)) return p;
        }
    }
}

}  // namespace

TEST_CASE("map registry basics") {
    Domain disk = make_domain("disk");
    Domain ann = make_domain("annulus:r=0.5");

    ProperMapModel mob = make_map("mobius:a=0.3+0i", disk);
    CHECK(mob->sheet_count() == 1);
    CHECK(mob->critical_image_description() == "empty");
    // J f(z) = (1 - |a|^2) / (1 - conj(a) z)^2 by direct differentiation
    Point z(Complex(0.4, -0.1));
    Complex expect = (1.0 - 0.09) / std::pow(1.0 - 0.3 * z[0], 2);
    CHECK(std::abs(mob->jacobian_det(z) - expect) <= 1e-14);

    ProperMapModel sq = make_map("powerdisk:m=2", disk);
    CHECK(sq->sheet_count() == 2);
    CHECK(sq->critical_image_description() == "{0}");
    CHECK(sq->critical_distance(Point(Complex(0.3, 0.4))) == doctest::Approx(0.5));

    ProperMapModel pa = make_map("powerann:r=0.5,m=2", ann);
    CHECK(pa->sheet_count() == 2);
    CHECK(pa->critical_image_description() == "empty");
    CHECK(pa->target().id() == "annulus:r=0.25");
}

TEST_CASE("map spec validation") {
    Domain disk = make_domain("disk");
    Domain ann = make_domain("annulus:r=0.5");
    CHECK_THROWS_AS(make_map("mobius:a=1.2+0i", disk), ValidationError);
    CHECK_THROWS_AS(make_map("mobius:a=0.3+0i", ann), ValidationError);
    CHECK_THROWS_AS(make_map("powerdisk:m=1", disk), ValidationError);
    CHECK_THROWS_AS(make_map("powerann:r=0.4,m=2", ann), ValidationError);  // r mismatch
    CHECK_THROWS_AS(make_map("powerann:r=0.5,m=2", disk), ValidationError);
    CHECK_THROWS_AS(make_map("squeeze:c=2", disk), ValidationError);
    CHECK_THROWS_AS(make_map("prodmobius:a1=0.3+0i,a2=0i", disk), ValidationError);
}

TEST_CASE("jacobian matches a stencil derivative of the forward map") {
    Domain disk = make_domain("disk");
    Domain ann = make_domain("annulus:r=0.5");
    Domain poly = make_domain("polydisk");
    std::mt19937_64 rng(31);
    for (const auto& map : registry(disk, ann, poly)) {
        for (int i = 0; i < 4; ++i) {
            Point z = random_point(map->source(), rng);
            Eigen::MatrixXcd j = map->jacobian_matrix(z);
            Complex det = j.determinant();
            CHECK(std::abs(det - map->jacobian_det(z)) <= 1e-12 * (1.0 + std::abs(det)));
            for (int a = 0; a < map->source().dim(); ++a)
                for (int b = 0; b < map->source().dim(); ++b) {
                    auto fa = [&](const Point& p) { return map->apply(p)[a]; };
                    Complex num = complex_derivative(fa, z, b, Slot::holomorphic);
                    CHECK(std::abs(num - j(a, b)) <= 1e-6 * (1.0 + std::abs(j(a, b))));
                }
        }
    }
}

TEST_CASE("local inverses invert the map and count the sheets") {
    Domain disk = make_domain("disk");
    Domain ann = make_domain("annulus:r=0.5");
    Domain poly = make_domain("polydisk");
    std::mt19937_64 rng(37);
    for (const auto& map : registry(disk, ann, poly)) {
        for (int i = 0; i < 6; ++i) {
            Point zeta = random_point(map->target(), rng);
            if (map->in_exclusion_tube(zeta)) continue;
            auto inverses = map->local_inverses(zeta);
            CHECK(static_cast<int>(inverses.size()) == map->sheet_count());
            for (std::size_t s = 0; s < inverses.size(); ++s) {
                const LocalInverse& inv = inverses[s];
                CHECK(map->source().contains(inv.point));
                Point back = map->apply(inv.point);
                for (int c = 0; c < back.dim(); ++c)
                    CHECK(std::abs(back[c] - zeta[c]) <= 1e-10);
                // inverse jacobian is the reciprocal of the forward one
                Complex fwd = map->jacobian_det(inv.point);
                CHECK(std::abs(inv.jacobian * fwd - 1.0) <= 1e-12);
                // branches are pairwise distinct
                for (std::size_t t = s + 1; t < inverses.size(); ++t)
                    CHECK(std::abs(inv.point[0] - inverses[t].point[0]) > 1e-8);
            }
        }
    }
}

TEST_CASE("power-map branch ordering is principal root first") {
    Domain disk = make_domain("disk");
    ProperMapModel sq = make_map("powerdisk:m=2", disk);
    auto inv = sq->local_inverses(Point(Complex(0.25, 0)));
    REQUIRE(inv.size() == 2);
    CHECK(std::abs(inv[0].point[0] - Complex(0.5, 0)) <= 1e-14);
    CHECK(std::abs(inv[1].point[0] - Complex(-0.5, 0)) <= 1e-14);
    CHECK(std::abs(inv[0].jacobian - Complex(1.0)) <= 1e-14);
    CHECK(std::abs(inv[1].jacobian - Complex(-1.0)) <= 1e-14);

    Domain ann = make_domain("annulus:r=0.5");
    ProperMapModel pa = make_map("powerann:r=0.5,m=2", ann);
    auto inv2 = pa->local_inverses(Point(Complex(0.49, 0)));
    REQUIRE(inv2.size() == 2);
    CHECK(std::abs(inv2[0].point[0] - Complex(0.7, 0)) <= 1e-14);
    CHECK(std::abs(inv2[1].point[0] - Complex(-0.7, 0)) <= 1e-14);
    CHECK(ann.contains(inv2[0].point));
    CHECK(ann.contains(inv2[1].point));

    ProperMapModel mob = make_map("mobius:a=0.3+0i", disk);
    auto minv = mob->local_inverses(Point(Complex(0.5, 0)));
    REQUIRE(minv.size() == 1);
    CHECK(std::abs(minv[0].point[0] - Complex(0.8 / 1.15, 0)) <= 1e-14);
}

TEST_CASE("exclusion tube raises distinct errors") {
    Domain disk = make_domain("disk");
    ProperMapModel sq = make_map("powerdisk:m=2", disk);
    CHECK_THROWS_WITH_AS(sq->local_inverses(Point(Complex(0.01, 0))),
                         doctest::Contains("exclusion tube"), EvaluationError);
    CHECK_THROWS_AS(sq->local_inverses(Point(Complex(1.2, 0))), EvaluationError);
    CHECK(sq->in_exclusion_tube(Point(Complex(0.015, 0))));
    CHECK_FALSE(sq->in_exclusion_tube(Point(Complex(0.05, 0))));
}

TEST_CASE("pushforward density: identity and annulus power") {
    Domain disk = make_domain("disk");
    KernelModel kd = make_kernel(disk, "closed");
    ProperMapModel ident = make_map("identity", disk);
    Point z(Complex(0.4, 0.1)), zeta(Complex(-0.3, 0.2));
    PushforwardDensity pd = pushforward_density(*ident, *kd, z, zeta);
    CHECK(pd.base_density == 1.0);
    CHECK(pd.q_numerator == std::norm(kd->eval(z, zeta)) / kd->eval_diag(z));

    Domain ann = make_domain("annulus:r=0.5");
    KernelModel ka = make_kernel(ann, "series:J=40");
    ProperMapModel pa = make_map("powerann:r=0.5,m=2", ann);
    Point z7(Complex(0.7, 0)), zeta49(Complex(0.49, 0));
    PushforwardDensity pa2 = pushforward_density(*pa, *ka, z7, zeta49);
    // hand-expanded two-sheet formula at +/- 0.7 with |jac|^2 = 1/(4 * 0.49)
    double jac2 = 1.0 / (4.0 * 0.49);
    double expect_base = 2.0 * jac2;
    double expect_q = (std::norm(ka->eval(z7, Point(Complex(0.7, 0)))) +
                       std::norm(ka->eval(z7, Point(Complex(-0.7, 0))))) *
                      jac2 / ka->eval_diag(z7);
    CHECK(pa2.base_density == doctest::Approx(expect_base).epsilon(1e-14));
    CHECK(pa2.q_numerator == doctest::Approx(expect_q).epsilon(1e-12));
}

TEST_CASE("pushforward conserves probability mass") {
    Domain disk = make_domain("disk");
    KernelModel kd = make_kernel(disk, "closed");
    Domain ann = make_domain("annulus:r=0.5");
    KernelModel ka = make_kernel(ann, "series:J=40");
    Domain ann2 = make_domain("annulus:r=0.25");

    QuadratureRule disk_rule = build_quadrature(disk, 48);
    QuadratureRule ann2_rule = build_quadrature(ann2, 48);

    auto mass_of = [](const ProperMap& map, const Kernel& k, const Point& z,
                      const QuadratureRule& rule) {
        return integrate_real(rule, [&](const Point& zeta) {
            return pushforward_density(map, k, z, zeta).q_numerator;
        });
    };

    ProperMapModel ident = make_map("identity", disk);
    CHECK(std::abs(mass_of(*ident, *kd, Point(Complex(0.5, 0.2)), disk_rule) - 1.0) <= 1e-5);

    ProperMapModel mob = make_map("mobius:a=0.3+0i", disk);
    CHECK(std::abs(mass_of(*mob, *kd, Point(Complex(0.5, 0.2)), disk_rule) - 1.0) <= 1e-5);

    ProperMapModel pa = make_map("powerann:r=0.5,m=2", ann);
    CHECK(std::abs(mass_of(*pa, *ka, Point(Complex(0.7, 0.1)), ann2_rule) - 1.0) <= 1e-5);

    // with a critical point the tube is excluded on both sides: compare the
    // masked pushforward mass against the same mass computed upstream
    ProperMapModel sq = make_map("powerdisk:m=2", disk);
    QuadratureRule masked_target =
        masked(disk_rule, [&](const Point& p) { return !sq->in_exclusion_tube(p); });
    QuadratureRule masked_source = masked(disk_rule, [&](const Point& p) {
        return !sq->in_exclusion_tube(sq->apply(p));
    });
    Point z(Complex(0.45, 0.3));
    double pushed = mass_of(*sq, *kd, z, masked_target);
    double upstream = integrate_real(masked_source, [&](const Point& xi) {
        return std::norm(kd->eval(z, xi)) / kd->eval_diag(z);
    });
    // the sharp tube cut falls between nodes on each side, so agreement is
    // limited by the radial node spacing at the cut
    CHECK(std::abs(pushed - upstream) <= 5e-3);

    // a test function that vanishes on a neighborhood of the tube removes
    // the cut sensitivity entirely
    auto h = [](const Point& p) {
        double t = std::abs(p[0]) - 0.1;
        return t > 0.0 ? t * t * t : 0.0;
    };
    double lhs = integrate_real(masked_source, [&](const Point& xi) {
        return h(sq->apply(xi)) * std::norm(kd->eval(z, xi)) / kd->eval_diag(z);
    });
    double rhs = integrate_real(masked_target, [&](const Point& zeta) {
        return h(zeta) * pushforward_density(*sq, *kd, z, zeta).q_numerator;
    });
    CHECK(std::abs(lhs - rhs) <= 1e-5);
}

TEST_CASE("base density integrates to the source volume") {
    Domain ann = make_domain("annulus:r=0.5");
    Domain ann2 = make_domain("annulus:r=0.25");
    ProperMapModel pa = make_map("powerann:r=0.5,m=2", ann);
    QuadratureRule rule = build_quadrature(ann2, 48);
    double total = integrate_real(rule, [&](const Point& zeta) {
        double b = 0.0;
        for (const LocalInverse& inv : pa->local_inverses(zeta)) b += std::norm(inv.jacobian);
        return b;
    });
    CHECK(std::abs(total - ann.volume()) <= 1e-5);

    // squaring map on the disk, tube removed: the base mass equals the
    // volume of the source minus the tube preimage, up to the sharp-cut
    // resolution of the rule at |zeta| = 0.02
    Domain disk = make_domain("disk");
    ProperMapModel sq = make_map("powerdisk:m=2", disk);
    QuadratureRule masked_target = masked(build_quadrature(disk, 64), [&](const Point& p) {
        return !sq->in_exclusion_tube(p);
    });
    double base = integrate_real(masked_target, [&](const Point& zeta) {
        double b = 0.0;
        for (const LocalInverse& inv : sq->local_inverses(zeta)) b += std::norm(inv.jacobian);
        return b;
    });
    double expected = disk.volume() - kPi * 0.02;  // preimage of |zeta|<0.02 has area pi 0.02
    CHECK(std::abs(base - expected) <= 2e-2);      // measured cut error 9.3e-3 at res 64
}

TEST_CASE("change of variables against the pushforward density") {
    Domain ann = make_domain("annulus:r=0.5");
    KernelModel ka = make_kernel(ann, "series:J=40");
    ProperMapModel pa = make_map("powerann:r=0.5,m=2", ann);
    Domain ann2 = make_domain("annulus:r=0.25");
    QuadratureRule rule1 = build_quadrature(ann, 48);
    QuadratureRule rule2 = build_quadrature(ann2, 48);
    Point z(Complex(0.65, 0.2));

    std::vector<std::function<double(const Point&)>> hs = {
        [](const Point&) { return 1.0; },
        [](const Point& p) { return p[0].real(); },
        [](const Point& p) { return p[0].imag(); },
        [](const Point& p) { return std::norm(p[0]); },
        [](const Point& p) { return (p[0] * p[0]).real(); }};

    for (const auto& h : hs) {
        double lhs = integrate_real(rule1, [&](const Point& xi) {
            return h(pa->apply(xi)) * std::norm(ka->eval(z, xi)) / ka->eval_diag(z);
        });
        double rhs = integrate_real(rule2, [&](const Point& zeta) {
            return h(zeta) * pushforward_density(*pa, *ka, z, zeta).q_numerator;
        });
        CHECK(std::abs(lhs - rhs) <= 1e-5 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("product map combines factors componentwise") {
    Domain poly = make_domain("polydisk");
    ProperMapModel pm = make_map("prodmobius:a1=0.3+0i,a2=-0.2+0.1i", poly);
    CHECK(pm->sheet_count() == 1);
    Point z(Complex(0.2, 0.3), Complex(-0.4, 0.1));
    Point fz = pm->apply(z);
    Complex expect1 = (z[0] - 0.3) / (1.0 - 0.3 * z[0]);
    Complex a2(-0.2, 0.1);
    Complex expect2 = (z[1] - a2) / (1.0 - std::conj(a2) * z[1]);
    CHECK(std::abs(fz[0] - expect1) <= 1e-14);
    CHECK(std::abs(fz[1] - expect2) <= 1e-14);

    auto inv = pm->local_inverses(fz);
    REQUIRE(inv.size() == 1);
    CHECK(std::abs(inv[0].point[0] - z[0]) <= 1e-14);
    CHECK(std::abs(inv[0].point[1] - z[1]) <= 1e-14);
}

TEST_CASE("map spec ids round-trip") {
    Domain disk = make_domain("disk");
    Domain ann = make_domain("annulus:r=0.5");
    Domain poly = make_domain("polydisk");
    for (const auto& map : registry(disk, ann, poly)) {
        MapSpecRequest again = MapSpecRequest::parse(map->id());
        CHECK(again.id() == map->id());
    }
}
