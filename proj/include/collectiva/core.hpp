#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace collectiva {

/// Arbitrary-precision, always-reduced rational. Denominator is kept positive.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Error hierarchy. The CLI maps input_error to exit code 2 and
// capacity_error to exit code 3; everything else is an analysis failure.

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct input_error : error {
    using error::error;
};

struct capacity_error : error {
    using error::error;
};

/// Event outside the event algebra. Never silently treated as probability 0.
struct not_measurable : error {
    using error::error;
};

struct conditioning_error : error {
    using error::error;
};

struct normalization_error : input_error {
    using input_error::input_error;
};

struct integrity_error : error {
    using error::error;
};

/// A place selection tried to read x_n or a later element.
struct causality_violation : std::logic_error {
    using std::logic_error::logic_error;
};

struct construction_failure : error {
    using error::error;
};

/// Comparison policy for the two arithmetic modes: exact rationals and
/// doubles with a fixed absolute tolerance.
template <class T>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static bool equal(const Rational& a, const Rational& b) { return a == b; }
    static bool is_zero(const Rational& a) { return a == 0; }
    static double to_double(const Rational& a) { return a.convert_to<double>(); }
};

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static constexpr double tolerance = 1e-12;
    static bool equal(double a, double b) { return std::abs(a - b) <= tolerance; }
    static bool is_zero(double a) { return std::abs(a) <= tolerance; }
    static double to_double(double a) { return a; }
};

template <class T>
concept Scalar = requires { scalar_traits<T>::exact; };

/// Parses "n/d", "n", or a plain decimal literal ("0.75", "-1e-3") into an
/// exact rational. Decimal literals are converted exactly, not via double.
inline Rational parse_rational(std::string_view text) {
    auto fail = [&] { throw input_error("malformed rational literal '" + std::string(text) + "'"); };
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty()) fail();

    auto parse_int = [&](std::string_view s) -> BigInt {
        if (s.empty()) fail();
        std::size_t i = 0;
        if (s[0] == '+' || s[0] == '-') i = 1;
        if (i == s.size()) fail();
        for (std::size_t j = i; j < s.size(); ++j)
            if (s[j] < '0' || s[j] > '9') fail();
        // Leading zeros would make the constructor read octal.
        auto body = s.substr(i);
        while (body.size() > 1 && body[0] == '0') body.remove_prefix(1);
        BigInt v{std::string(body)};
        return s[0] == '-' ? BigInt(-v) : v;
    };

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        BigInt num = parse_int(text.substr(0, slash));
        BigInt den = parse_int(text.substr(slash + 1));
        if (den == 0) throw input_error("zero denominator in '" + std::string(text) + "'");
        return Rational(num, den);
    }

    // Decimal with optional fraction and exponent.
    std::string_view mantissa = text;
    long exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        mantissa = text.substr(0, e);
        auto exp_text = text.substr(e + 1);
        BigInt ev = parse_int(exp_text);
        if (ev > 4096 || ev < -4096) fail();
        exponent = ev.convert_to<long>();
    }
    bool negative = false;
    if (!mantissa.empty() && (mantissa[0] == '+' || mantissa[0] == '-')) {
        negative = mantissa[0] == '-';
        mantissa.remove_prefix(1);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_point = false;
    for (char c : mantissa) {
        if (c == '.') {
            if (seen_point) fail();
            seen_point = true;
        } else if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (seen_point) ++frac_digits;
        } else {
            fail();
        }
    }
    if (digits.empty()) fail();
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    BigInt num(digits);
    if (negative) num = -num;
    long shift = exponent - frac_digits;
    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(shift < 0 ? -shift : shift));
    return shift < 0 ? Rational(num, scale) : Rational(num * scale);
}

/// Canonical "n/d" text; integers print as "n/1" so the format is uniform.
inline std::string to_string(const Rational& q) {
    return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str();
}

template <class T>
T scalar_from_rational(const Rational& q) {
    if constexpr (std::is_same_v<T, Rational>)
        return q;
    else
        return q.convert_to<T>();
}

}  // namespace collectiva
