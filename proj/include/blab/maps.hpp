#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "blab/domains.hpp"
#include "blab/kernels.hpp"

namespace blab {

// Branch data of one local inverse at a target point.
struct LocalInverse {
    Point point;       // w_k with f(w_k) = zeta
    Complex jacobian;  // det of the complex Jacobian of f_k^{-1} at zeta
};

// Points closer to the critical image than this (times the target scale)
// are excluded from samples and integration; local inverses blow up there.
inline constexpr double kExclusionTubeRadius = 0.02;

// Proper holomorphic map between model domains with explicit sheet
// structure: forward map, complex Jacobian, all local inverses, and the
// critical image V = f({J_C f = 0}).
class ProperMap {
public:
    virtual ~ProperMap() = default;

    const Domain& source() const { return source_; }
    const Domain& target() const { return target_; }
    int sheet_count() const { return sheets_; }
    virtual std::string id() const = 0;
    virtual std::string critical_image_description() const = 0;

    Point apply(const Point& z) const;
    Complex jacobian_det(const Point& z) const;
    Eigen::MatrixXcd jacobian_matrix(const Point& z) const;

    // Exactly sheet_count() branches; for power maps the k-th branch is the
    // principal root times exp(2 pi i k / m), k increasing.
    std::vector<LocalInverse> local_inverses(const Point& zeta) const;

    // Distance from zeta to the critical image V (infinity when V is empty).
    virtual double critical_distance(const Point& zeta) const = 0;
    bool in_exclusion_tube(const Point& zeta) const;

protected:
    ProperMap(Domain source, Domain target, int sheets)
        : source_(std::move(source)), target_(std::move(target)), sheets_(sheets) {}

    virtual Point apply_impl(const Point& z) const = 0;
    virtual Complex jacobian_det_impl(const Point& z) const = 0;
    virtual Eigen::MatrixXcd jacobian_matrix_impl(const Point& z) const = 0;
    virtual std::vector<LocalInverse> local_inverses_impl(const Point& zeta) const = 0;

private:
    Domain source_;
    Domain target_;
    int sheets_;
};

using ProperMapModel = std::shared_ptr<const ProperMap>;

enum class MapKind { identity, mobius, power_disk, power_annulus, product };

// Map spec strings: `identity`, `mobius:a=0.3+0i`, `powerdisk:m=2`,
// `powerann:r=0.5,m=2`, `prodmobius:a1=0.3+0i,a2=-0.2+0i`.
struct MapSpecRequest {
    MapKind kind = MapKind::identity;
    Complex mobius_a{};
    int power = 2;
    double annulus_r = 0.5;
    Complex prod_a1{}, prod_a2{};

    std::string id() const;
    static MapSpecRequest parse(std::string_view text);
};

// Source domain must be consistent with the requested kind.
ProperMapModel make_map(const MapSpecRequest& request, const Domain& source);
ProperMapModel make_map(std::string_view spec_text, const Domain& source);

// Numerator and base of the pushforward of the kernel density family:
//   q_numerator(z,zeta) = sum_k |K1(z, w_k)|^2 |Jf_k^{-1}(zeta)|^2 / K1(z,z)
//   base_density(zeta)  = sum_k |Jf_k^{-1}(zeta)|^2
// The conditional density of the pushed-forward family is the ratio.
struct PushforwardDensity {
    double q_numerator = 0.0;
    double base_density = 0.0;
};
PushforwardDensity pushforward_density(const ProperMap& map, const Kernel& kernel,
                                       const Point& z, const Point& zeta);

}  // namespace blab
