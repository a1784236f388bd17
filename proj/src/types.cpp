#include "blab/types.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include "blab/errors.hpp"

namespace blab {

std::string format_point(const Point& p) {
    char buf[96];
    auto one = [&](Complex z) {
        std::snprintf(buf, sizeof(buf), "%.6g%+.6gi", z.real(), z.imag());
        return std::string(buf);
    };
    if (p.dim() == 1) return one(p[0]);
    return "(" + one(p[0]) + "," + one(p[1]) + ")";
}

// Accepts forms like `0.3`, `-0.2+0.1i`, `0.5i`, `0.3+0i`, `1e-2-3e-4i`.
Complex parse_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ValidationError("empty complex literal");

    // Split at the last '+'/'-' that is not part of an exponent and not the
    // leading sign.
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;) {
        char c = s[i];
        if ((c == '+' || c == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }

    auto to_double = [&](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            throw ValidationError("bad numeric literal '" + t + "' in complex value '" + text + "'");
        }
        if (pos != t.size())
            throw ValidationError("trailing characters in numeric literal '" + t + "'");
        return v;
    };

    bool has_i = !s.empty() && s.back() == 'i';
    if (!has_i) {
        if (split != std::string::npos && s.find('i') != std::string::npos)
            throw ValidationError("malformed complex literal '" + text + "'");
        return Complex(to_double(s), 0.0);
    }
    s.pop_back();  // strip 'i'
    if (split == std::string::npos || split >= s.size() + 1) {
        // pure imaginary
        return Complex(0.0, to_double(s));
    }
    std::string re = s.substr(0, split);
    std::string im = s.substr(split);
    return Complex(to_double(re), to_double(im));
}

// `0.3+0.1i` for C^1, `(0.3+0.1i,0.2)` for C^2.
Point parse_point(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (!s.empty() && s.front() == '(') {
        if (s.back() != ')')
            throw ValidationError("unbalanced parentheses in point '" + text + "'");
        s = s.substr(1, s.size() - 2);
        auto comma = s.find(',');
        if (comma == std::string::npos)
            throw ValidationError("expected two coordinates in point '" + text + "'");
        return Point(parse_complex(s.substr(0, comma)), parse_complex(s.substr(comma + 1)));
    }
    return Point(parse_complex(s));
}

}  // namespace blab
