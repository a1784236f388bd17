#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "blab/types.hpp"

namespace blab {

enum class DomainKind { unit_disk, annulus, polydisk, unit_ball2, ellipse };

// Bounded model domain descriptor. Spec strings: `disk`, `annulus:r=0.5`,
// `polydisk`, `ball2`, `ellipse:a=1,b=0.5`.
struct DomainSpec {
    DomainKind kind = DomainKind::unit_disk;
    double r = 0.0;             // annulus inner radius, 0 < r < 1
    double a = 0.0, b = 0.0;    // ellipse semi-axes

    int dimension() const;
    std::string id() const;
    static DomainSpec parse(std::string_view text);
};

class Domain {
public:
    explicit Domain(DomainSpec spec);

    const DomainSpec& spec() const { return spec_; }
    DomainKind kind() const { return spec_.kind; }
    int dim() const { return spec_.dimension(); }
    std::string id() const { return spec_.id(); }

    // Analytic volume (2n-dimensional Lebesgue measure).
    double volume() const { return volume_; }

    // Strict interior membership; boundary points are excluded.
    bool contains(const Point& p) const;

    // Linear scale of the domain, used for exclusion tubes and test compacts.
    double scale() const { return scale_; }

private:
    DomainSpec spec_;
    double volume_ = 0.0;
    double scale_ = 1.0;
};

Domain make_domain(const DomainSpec& spec);
Domain make_domain(std::string_view spec_text);

}  // namespace blab
