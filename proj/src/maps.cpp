#include "blab/maps.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "blab/errors.hpp"

namespace blab {

std::string MapSpecRequest::id() const {
    char buf[96];
    switch (kind) {
        case MapKind::identity:
            return "identity";
        case MapKind::mobius:
            std::snprintf(buf, sizeof(buf), "mobius:a=%g%+gi", mobius_a.real(), mobius_a.imag());
            return buf;
        case MapKind::power_disk:
            std::snprintf(buf, sizeof(buf), "powerdisk:m=%d", power);
            return buf;
        case MapKind::power_annulus:
            std::snprintf(buf, sizeof(buf), "powerann:r=%g,m=%d", annulus_r, power);
            return buf;
        case MapKind::product:
            std::snprintf(buf, sizeof(buf), "prodmobius:a1=%g%+gi,a2=%g%+gi", prod_a1.real(),
                          prod_a1.imag(), prod_a2.real(), prod_a2.imag());
            return buf;
    }
    throw ValidationError("unknown map kind");
}

MapSpecRequest MapSpecRequest::parse(std::string_view text) {
    std::string s(text);
    std::string head = s, tail;
    if (auto colon = s.find(':'); colon != std::string::npos) {
        head = s.substr(0, colon);
        tail = s.substr(colon + 1);
    }
    auto named = [&](const std::string& key) -> std::string {
        std::stringstream ss(tail);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq != std::string::npos && item.substr(0, eq) == key) return item.substr(eq + 1);
        }
        throw ValidationError("missing parameter '" + key + "' in map spec '" + s + "'");
    };

    MapSpecRequest req;
    if (head == "identity") {
        req.kind = MapKind::identity;
    } else if (head == "mobius") {
        req.kind = MapKind::mobius;
        req.mobius_a = parse_complex(named("a"));
        if (!(std::abs(req.mobius_a) < 1.0))
            throw ValidationError("mobius parameter requires |a| < 1");
    } else if (head == "powerdisk") {
        req.kind = MapKind::power_disk;
        req.power = std::stoi(named("m"));
        if (req.power < 2) throw ValidationError("power map requires m >= 2");
    } else if (head == "powerann") {
        req.kind = MapKind::power_annulus;
        req.annulus_r = std::stod(named("r"));
        req.power = std::stoi(named("m"));
        if (req.power < 2) throw ValidationError("power map requires m >= 2");
        if (!(req.annulus_r > 0.0 && req.annulus_r < 1.0))
            throw ValidationError("annulus power map requires r in (0,1)");
    } else if (head == "prodmobius") {
        req.kind = MapKind::product;
        req.prod_a1 = parse_complex(named("a1"));
        req.prod_a2 = parse_complex(named("a2"));
        if (!(std::abs(req.prod_a1) < 1.0 && std::abs(req.prod_a2) < 1.0))
            throw ValidationError("product mobius parameters require |a| < 1");
    } else {
        throw ValidationError("unknown map spec '" + s +
                              "' (expected identity, mobius:a=..., powerdisk:m=..., "
                              "powerann:r=...,m=..., prodmobius:a1=...,a2=...)");
    }
    return req;
}

Point ProperMap::apply(const Point& z) const {
    if (!source_.contains(z))
        throw EvaluationError("map argument " + format_point(z) + " lies outside " + source_.id());
    return apply_impl(z);
}

Complex ProperMap::jacobian_det(const Point& z) const {
    if (!source_.contains(z))
        throw EvaluationError("map argument " + format_point(z) + " lies outside " + source_.id());
    return jacobian_det_impl(z);
}

Eigen::MatrixXcd ProperMap::jacobian_matrix(const Point& z) const {
    if (!source_.contains(z))
        throw EvaluationError("map argument " + format_point(z) + " lies outside " + source_.id());
    return jacobian_matrix_impl(z);
}

bool ProperMap::in_exclusion_tube(const Point& zeta) const {
    return critical_distance(zeta) < kExclusionTubeRadius * target_.scale();
}

std::vector<LocalInverse> ProperMap::local_inverses(const Point& zeta) const {
    if (!target_.contains(zeta))
        throw EvaluationError("target point " + format_point(zeta) + " lies outside " +
                              target_.id());
    if (in_exclusion_tube(zeta))
        throw EvaluationError("target point " + format_point(zeta) +
                              " lies inside the exclusion tube around the critical image");
    return local_inverses_impl(zeta);
}

namespace {

class IdentityMap final : public ProperMap {
public:
    explicit IdentityMap(const Domain& d) : ProperMap(d, d, 1) {}
    std::string id() const override { return "identity"; }
    std::string critical_image_description() const override { return "empty"; }
    double critical_distance(const Point&) const override {
        return std::numeric_limits<double>::infinity();
    }

protected:
    Point apply_impl(const Point& z) const override { return z; }
    Complex jacobian_det_impl(const Point&) const override { return 1.0; }
    Eigen::MatrixXcd jacobian_matrix_impl(const Point& z) const override {
        return Eigen::MatrixXcd::Identity(z.dim(), z.dim());
    }
    std::vector<LocalInverse> local_inverses_impl(const Point& zeta) const override {
        return {{zeta, Complex(1.0)}};
    }
};

// Disk automorphism z -> (z - a) / (1 - conj(a) z).
class MobiusMap final : public ProperMap {
public:
    MobiusMap(const Domain& disk, Complex a) : ProperMap(disk, disk, 1), a_(a) {}
    std::string id() const override {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "mobius:a=%g%+gi", a_.real(), a_.imag());
        return buf;
    }
    std::string critical_image_description() const override { return "empty"; }
    double critical_distance(const Point&) const override {
        return std::numeric_limits<double>::infinity();
    }

protected:
    Point apply_impl(const Point& z) const override {
        return Point((z[0] - a_) / (1.0 - std::conj(a_) * z[0]));
    }
    Complex jacobian_det_impl(const Point& z) const override {
        Complex u = 1.0 - std::conj(a_) * z[0];
        return (1.0 - std::norm(a_)) / (u * u);
    }
    Eigen::MatrixXcd jacobian_matrix_impl(const Point& z) const override {
        Eigen::MatrixXcd j(1, 1);
        j(0, 0) = jacobian_det_impl(z);
        return j;
    }
    std::vector<LocalInverse> local_inverses_impl(const Point& zeta) const override {
        Complex w = (zeta[0] + a_) / (1.0 + std::conj(a_) * zeta[0]);
        Complex u = 1.0 + std::conj(a_) * zeta[0];
        return {{Point(w), (1.0 - std::norm(a_)) / (u * u)}};
    }

private:
    Complex a_;
};

std::vector<Complex> roots_of(Complex zeta, int m) {
    // principal branch first, then times exp(2 pi i k / m) in increasing k
    Complex principal = std::pow(zeta, 1.0 / m);
    std::vector<Complex> roots;
    roots.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        roots.push_back(principal * std::polar(1.0, 2.0 * kPi * k / m));
    return roots;
}

// z -> z^m on the unit disk; V = {0}.
class PowerDiskMap final : public ProperMap {
public:
    PowerDiskMap(const Domain& disk, int m) : ProperMap(disk, disk, m), m_(m) {}
    std::string id() const override { return "powerdisk:m=" + std::to_string(m_); }
    std::string critical_image_description() const override { return "{0}"; }
    double critical_distance(const Point& zeta) const override { return std::abs(zeta[0]); }

protected:
    Point apply_impl(const Point& z) const override {
        Complex w = 1.0;
        for (int i = 0; i < m_; ++i) w *= z[0];
        return Point(w);
    }
    Complex jacobian_det_impl(const Point& z) const override {
        Complex w = 1.0;
        for (int i = 0; i < m_ - 1; ++i) w *= z[0];
        return double(m_) * w;
    }
    Eigen::MatrixXcd jacobian_matrix_impl(const Point& z) const override {
        Eigen::MatrixXcd j(1, 1);
        j(0, 0) = jacobian_det_impl(z);
        return j;
    }
    std::vector<LocalInverse> local_inverses_impl(const Point& zeta) const override {
        std::vector<LocalInverse> out;
        for (Complex w : roots_of(zeta[0], m_))
            out.push_back({Point(w), w / (double(m_) * zeta[0])});
        return out;
    }

private:
    int m_;
};

// z -> z^m from annulus(r) onto annulus(r^m); no critical points.
class PowerAnnulusMap final : public ProperMap {
public:
    PowerAnnulusMap(const Domain& source, int m)
        : ProperMap(source,
                    make_domain(DomainSpec{DomainKind::annulus,
                                           std::pow(source.spec().r, m), 0.0, 0.0}),
                    m),
          m_(m) {}
    std::string id() const override {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "powerann:r=%g,m=%d", source().spec().r, m_);
        return buf;
    }
    std::string critical_image_description() const override { return "empty"; }
    double critical_distance(const Point&) const override {
        return std::numeric_limits<double>::infinity();
    }

protected:
    Point apply_impl(const Point& z) const override {
        Complex w = 1.0;
        for (int i = 0; i < m_; ++i) w *= z[0];
        return Point(w);
    }
    Complex jacobian_det_impl(const Point& z) const override {
        Complex w = 1.0;
        for (int i = 0; i < m_ - 1; ++i) w *= z[0];
        return double(m_) * w;
    }
    Eigen::MatrixXcd jacobian_matrix_impl(const Point& z) const override {
        Eigen::MatrixXcd j(1, 1);
        j(0, 0) = jacobian_det_impl(z);
        return j;
    }
    std::vector<LocalInverse> local_inverses_impl(const Point& zeta) const override {
        std::vector<LocalInverse> out;
        for (Complex w : roots_of(zeta[0], m_))
            out.push_back({Point(w), w / (double(m_) * zeta[0])});
        return out;
    }

private:
    int m_;
};

// Componentwise pair of disk automorphisms on the polydisk.
class ProductMobiusMap final : public ProperMap {
public:
    ProductMobiusMap(const Domain& polydisk, Complex a1, Complex a2)
        : ProperMap(polydisk, polydisk, 1), a1_(a1), a2_(a2) {}
    std::string id() const override {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "prodmobius:a1=%g%+gi,a2=%g%+gi", a1_.real(), a1_.imag(),
                      a2_.real(), a2_.imag());
        return buf;
    }
    std::string critical_image_description() const override { return "empty"; }
    double critical_distance(const Point&) const override {
        return std::numeric_limits<double>::infinity();
    }

protected:
    static Complex fwd(Complex z, Complex a) { return (z - a) / (1.0 - std::conj(a) * z); }
    static Complex der(Complex z, Complex a) {
        Complex u = 1.0 - std::conj(a) * z;
        return (1.0 - std::norm(a)) / (u * u);
    }
    Point apply_impl(const Point& z) const override {
        return Point(fwd(z[0], a1_), fwd(z[1], a2_));
    }
    Complex jacobian_det_impl(const Point& z) const override {
        return der(z[0], a1_) * der(z[1], a2_);
    }
    Eigen::MatrixXcd jacobian_matrix_impl(const Point& z) const override {
        Eigen::MatrixXcd j = Eigen::MatrixXcd::Zero(2, 2);
        j(0, 0) = der(z[0], a1_);
        j(1, 1) = der(z[1], a2_);
        return j;
    }
    std::vector<LocalInverse> local_inverses_impl(const Point& zeta) const override {
        Complex w1 = (zeta[0] + a1_) / (1.0 + std::conj(a1_) * zeta[0]);
        Complex w2 = (zeta[1] + a2_) / (1.0 + std::conj(a2_) * zeta[1]);
        Complex u1 = 1.0 + std::conj(a1_) * zeta[0];
        Complex u2 = 1.0 + std::conj(a2_) * zeta[1];
        Complex jac = (1.0 - std::norm(a1_)) / (u1 * u1) * ((1.0 - std::norm(a2_)) / (u2 * u2));
        return {{Point(w1, w2), jac}};
    }

private:
    Complex a1_, a2_;
};

}  // namespace

ProperMapModel make_map(const MapSpecRequest& request, const Domain& source) {
    switch (request.kind) {
        case MapKind::identity:
            return std::make_shared<IdentityMap>(source);
        case MapKind::mobius:
            if (source.kind() != DomainKind::unit_disk)
                throw ValidationError("mobius maps are registered on the unit disk, not " +
                                      source.id());
            return std::make_shared<MobiusMap>(source, request.mobius_a);
        case MapKind::power_disk:
            if (source.kind() != DomainKind::unit_disk)
                throw ValidationError("powerdisk maps need the unit disk as source, not " +
                                      source.id());
            return std::make_shared<PowerDiskMap>(source, request.power);
        case MapKind::power_annulus: {
            if (source.kind() != DomainKind::annulus)
                throw ValidationError("powerann maps need an annulus source, not " + source.id());
            if (std::abs(source.spec().r - request.annulus_r) > 1e-12)
                throw ValidationError("powerann inner radius does not match the source annulus");
            return std::make_shared<PowerAnnulusMap>(source, request.power);
        }
        case MapKind::product:
            if (source.kind() != DomainKind::polydisk)
                throw ValidationError("prodmobius maps need the polydisk as source, not " +
                                      source.id());
            return std::make_shared<ProductMobiusMap>(source, request.prod_a1, request.prod_a2);
    }
    throw ValidationError("unknown map kind");
}

ProperMapModel make_map(std::string_view spec_text, const Domain& source) {
    return make_map(MapSpecRequest::parse(spec_text), source);
}

PushforwardDensity pushforward_density(const ProperMap& map, const Kernel& kernel,
                                       const Point& z, const Point& zeta) {
    PushforwardDensity out;
    double diag = kernel.eval_diag(z);
    for (const LocalInverse& inv : map.local_inverses(zeta)) {
        double jac2 = std::norm(inv.jacobian);
        out.q_numerator += std::norm(kernel.eval(z, inv.point)) * jac2 / diag;
        out.base_density += jac2;
    }
    return out;
}

}  // namespace blab
