#pragma once

// Named constants as enclosure generators, and the textual entry format
// used by matrix files: "p/q", a decimal, or "const:<name>[:bits]".

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "badapprox/certified.hpp"

namespace badapprox {

/// The real number (a + b*sqrt(d)) / c with d > 0 not a perfect square.
struct QuadraticSurd {
    Integer a;
    Integer b;
    Integer d;
    Integer c;
};

struct NamedConstant {
    std::string name;
    unsigned bits = 128;
};

namespace detail {

inline Integer parse_integer(std::string_view s)
{
    Integer z;
    std::string t(s);
    if (!t.empty() && t[0] == '+') t.erase(0, 1);
    if (t.empty() || mpz_set_str(z.get_mpz_t(), t.c_str(), 10) != 0)
        throw ParseError("bad integer: " + std::string(s));
    return z;
}

inline std::optional<QuadraticSurd> parse_quad(std::string_view name)
{
    // quad(a,b,d,c)
    if (name.substr(0, 5) != "quad(" || name.back() != ')') return std::nullopt;
    std::string_view body = name.substr(5, name.size() - 6);
    std::vector<Integer> parts;
    while (true) {
        auto comma = body.find(',');
        parts.push_back(parse_integer(body.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    if (parts.size() != 4) throw ParseError("quad(a,b,d,c) needs four integers: " + std::string(name));
    QuadraticSurd q{parts[0], parts[1], parts[2], parts[3]};
    if (q.c == 0) throw ParseError("quad with zero denominator");
    if (q.d <= 0 || mpz_perfect_square_p(q.d.get_mpz_t()))
        throw ParseError("quad needs a positive non-square radicand");
    return q;
}

} // namespace detail

/// Quadratic form of a named constant, if it is one (golden, phi, sqrt2m1, sqrtN, quad(...)).
inline std::optional<QuadraticSurd> as_quadratic(std::string_view name)
{
    if (name == "golden") return QuadraticSurd{-1, 1, 5, 2};
    if (name == "phi") return QuadraticSurd{1, 1, 5, 2};
    if (name == "sqrt2m1") return QuadraticSurd{-1, 1, 2, 1};
    if (name.substr(0, 4) == "sqrt" && name.size() > 4) {
        Integer d = detail::parse_integer(name.substr(4));
        if (d <= 0 || mpz_perfect_square_p(d.get_mpz_t()))
            throw ParseError("sqrtN needs a positive non-square N");
        return QuadraticSurd{0, 1, d, 1};
    }
    return detail::parse_quad(name);
}

inline CertifiedReal enclose(const QuadraticSurd& q, unsigned bits)
{
    CertifiedReal root = sqrt(CertifiedReal(Rational(q.d)), bits);
    CertifiedReal num = CertifiedReal(Rational(q.a)) + CertifiedReal(Rational(q.b)) * root;
    return CertifiedReal::scale(num, ratio(Integer(1), q.c));
}

inline CertifiedReal enclose(const NamedConstant& c, unsigned bits)
{
    if (c.name == "e") return const_e(bits);
    if (c.name == "pi") return const_pi(bits);
    if (auto q = as_quadratic(c.name)) return enclose(*q, bits);
    throw ParseError("unknown constant: " + c.name);
}

/// One matrix entry: an exact rational or a named constant with a precision budget.
class EntrySpec {
public:
    EntrySpec() : source_(Rational(0)) {}
    EntrySpec(Rational value) : source_(std::move(value)) {}      // NOLINT
    EntrySpec(NamedConstant value) : source_(std::move(value)) {} // NOLINT

    static EntrySpec parse(std::string_view text)
    {
        if (text.substr(0, 6) != "const:") return EntrySpec(parse_rational(text));
        std::string_view rest = text.substr(6);
        NamedConstant c;
        auto colon = rest.rfind(':');
        if (colon != std::string_view::npos && rest.find(')', colon) == std::string_view::npos) {
            std::string_view b = rest.substr(colon + 1);
            unsigned bits = 0;
            auto [p, ec] = std::from_chars(b.data(), b.data() + b.size(), bits);
            if (ec != std::errc() || p != b.data() + b.size() || bits < 16)
                throw ParseError("bad precision budget in: " + std::string(text));
            c.bits = bits;
            rest = rest.substr(0, colon);
        }
        c.name = std::string(rest);
        (void)enclose(c, 64); // validates the name
        return EntrySpec(std::move(c));
    }

    bool is_rational() const { return std::holds_alternative<Rational>(source_); }
    const Rational& rational() const { return std::get<Rational>(source_); }
    const NamedConstant& constant() const { return std::get<NamedConstant>(source_); }
    unsigned budget() const { return is_rational() ? 0 : constant().bits; }

    CertifiedReal value(unsigned bits) const
    {
        if (is_rational()) return CertifiedReal(rational());
        return enclose(constant(), std::max(bits, constant().bits));
    }

    std::string to_string() const
    {
        if (is_rational()) return badapprox::to_string(rational());
        return "const:" + constant().name + ":" + std::to_string(constant().bits);
    }

    friend bool operator==(const EntrySpec& a, const EntrySpec& b)
    {
        if (a.is_rational() != b.is_rational()) return false;
        if (a.is_rational()) return a.rational() == b.rational();
        return a.constant().name == b.constant().name && a.constant().bits == b.constant().bits;
    }

private:
    std::variant<Rational, NamedConstant> source_;
};

} // namespace badapprox
