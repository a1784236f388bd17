#include "blab/domains.hpp"

#include <cmath>
#include <sstream>

#include "blab/errors.hpp"

namespace blab {

namespace {

// Parses `key=value` fragments from a spec tail like `r=0.5` or `a=1,b=0.5`.
double named_value(const std::string& tail, const std::string& key) {
    std::stringstream ss(tail);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ValidationError("expected key=value in domain spec fragment '" + item + "'");
        if (item.substr(0, eq) == key) {
            try {
                return std::stod(item.substr(eq + 1));
            } catch (const std::exception&) {
                throw ValidationError("bad numeric value for '" + key + "' in '" + item + "'");
            }
        }
    }
    throw ValidationError("missing parameter '" + key + "' in domain spec");
}

}  // namespace

int DomainSpec::dimension() const {
    switch (kind) {
        case DomainKind::polydisk:
        case DomainKind::unit_ball2:
            return 2;
        default:
            return 1;
    }
}

std::string DomainSpec::id() const {
    char buf[64];
    switch (kind) {
        case DomainKind::unit_disk:
            return "disk";
        case DomainKind::annulus:
            std::snprintf(buf, sizeof(buf), "annulus:r=%g", r);
            return buf;
        case DomainKind::polydisk:
            return "polydisk";
        case DomainKind::unit_ball2:
            return "ball2";
        case DomainKind::ellipse:
            std::snprintf(buf, sizeof(buf), "ellipse:a=%g,b=%g", a, b);
            return buf;
    }
    throw ValidationError("unknown domain kind");
}

DomainSpec DomainSpec::parse(std::string_view text) {
    std::string s(text);
    std::string head = s, tail;
    if (auto colon = s.find(':'); colon != std::string::npos) {
        head = s.substr(0, colon);
        tail = s.substr(colon + 1);
    }
    DomainSpec spec;
    if (head == "disk") {
        spec.kind = DomainKind::unit_disk;
    } else if (head == "annulus") {
        spec.kind = DomainKind::annulus;
        spec.r = named_value(tail, "r");
    } else if (head == "polydisk") {
        spec.kind = DomainKind::polydisk;
    } else if (head == "ball2") {
        spec.kind = DomainKind::unit_ball2;
    } else if (head == "ellipse") {
        spec.kind = DomainKind::ellipse;
        spec.a = named_value(tail, "a");
        spec.b = named_value(tail, "b");
    } else {
        throw ValidationError("unknown domain spec '" + s +
                              "' (expected disk, annulus:r=..., polydisk, ball2, ellipse:a=...,b=...)");
    }
    return spec;
}

Domain::Domain(DomainSpec spec) : spec_(spec) {
    switch (spec_.kind) {
        case DomainKind::unit_disk:
            volume_ = kPi;
            scale_ = 1.0;
            break;
        case DomainKind::annulus:
            if (!(spec_.r > 0.0 && spec_.r < 1.0))
                throw ValidationError("annulus requires inner radius r in (0,1), got r=" +
                                      std::to_string(spec_.r));
            volume_ = kPi * (1.0 - spec_.r * spec_.r);
            scale_ = 1.0;
            break;
        case DomainKind::polydisk:
            volume_ = kPi * kPi;
            scale_ = 1.0;
            break;
        case DomainKind::unit_ball2:
            volume_ = kPi * kPi / 2.0;
            scale_ = 1.0;
            break;
        case DomainKind::ellipse:
            if (!(spec_.a > 0.0) || !(spec_.b > 0.0))
                throw ValidationError("ellipse requires positive semi-axes");
            if (!(std::isfinite(spec_.a) && std::isfinite(spec_.b)))
                throw ValidationError("ellipse semi-axes must be finite");
            volume_ = kPi * spec_.a * spec_.b;
            scale_ = std::max(spec_.a, spec_.b);
            break;
    }
}

bool Domain::contains(const Point& p) const {
    if (p.dim() != dim())
        throw ValidationError("point dimension " + std::to_string(p.dim()) +
                              " does not match domain dimension " + std::to_string(dim()));
    switch (spec_.kind) {
        case DomainKind::unit_disk:
            return std::abs(p[0]) < 1.0;
        case DomainKind::annulus: {
            double m = std::abs(p[0]);
            return m > spec_.r && m < 1.0;
        }
        case DomainKind::polydisk:
            return std::abs(p[0]) < 1.0 && std::abs(p[1]) < 1.0;
        case DomainKind::unit_ball2:
            return std::norm(p[0]) + std::norm(p[1]) < 1.0;
        case DomainKind::ellipse: {
            double x = p[0].real() / spec_.a;
            double y = p[0].imag() / spec_.b;
            return x * x + y * y < 1.0;
        }
    }
    return false;
}

Domain make_domain(const DomainSpec& spec) { return Domain(spec); }

Domain make_domain(std::string_view spec_text) {
    return Domain(DomainSpec::parse(spec_text));
}

}  // namespace blab
