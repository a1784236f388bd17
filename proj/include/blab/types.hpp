#pragma once

#include <array>
#include <complex>
#include <string>

namespace blab {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Point in C^n with n = 1 or 2. Plain value type, no heap.
class Point {
public:
    Point() = default;
    explicit Point(Complex z) : c_{{z, Complex{}}}, n_(1) {}
    Point(Complex z1, Complex z2) : c_{{z1, z2}}, n_(2) {}

    int dim() const { return n_; }
    Complex operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    Complex& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

    // Maximum coordinate modulus; used to scale stencil steps.
    double max_abs() const {
        double m = std::abs(c_[0]);
        if (n_ == 2) m = std::max(m, std::abs(c_[1]));
        return m;
    }

    bool operator==(const Point& o) const {
        return n_ == o.n_ && c_[0] == o.c_[0] && (n_ == 1 || c_[1] == o.c_[1]);
    }

private:
    std::array<Complex, 2> c_{};
    int n_ = 1;
};

// Shift one complex coordinate.
inline Point shifted(Point z, int var, Complex delta) {
    z[var] += delta;
    return z;
}

// Real parameter coordinates of z in C^n are ordered (x_1..x_n, y_1..y_n).
inline Point shifted_real(Point z, int param, double delta) {
    const int n = z.dim();
    if (param < n)
        z[param] += Complex(delta, 0.0);
    else
        z[param - n] += Complex(0.0, delta);
    return z;
}

std::string format_point(const Point& p);
Complex parse_complex(const std::string& text);
Point parse_point(const std::string& text);

}  // namespace blab
