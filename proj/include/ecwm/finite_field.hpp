#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "ecwm/errors.hpp"

namespace ecwm {

/// Largest supported field prime. Trial division stays below 2^16 steps and
/// products are widened to 128 bits before reduction.
inline constexpr std::uint64_t kMaxModulus = std::uint64_t{1} << 32;

/// Below this modulus square roots are found by exhaustion.
inline constexpr std::uint64_t kExhaustiveSqrtBound = 1000;

constexpr bool is_prime(std::uint64_t n) noexcept {
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (std::uint64_t d = 3; d * d <= n; d += 2) {
        if (n % d == 0) return false;
    }
    return true;
}

/// A prime modulus s, validated once so elements can carry it cheaply.
class PrimeModulus {
public:
    explicit PrimeModulus(std::uint64_t s) : value_(s) {
        if (s > kMaxModulus) {
            throw UsageError("modulus " + std::to_string(s) + " exceeds supported bound");
        }
        if (!is_prime(s)) {
            throw UsageError("modulus " + std::to_string(s) + " is not prime");
        }
    }

    std::uint64_t value() const noexcept { return value_; }

    friend bool operator==(const PrimeModulus&, const PrimeModulus&) = default;

private:
    std::uint64_t value_;
};

/// Element of F_s = Z/sZ.
class FieldElement {
public:
    /// Reduces `v` into [0, s). Negative inputs map to their residue.
    FieldElement(std::int64_t v, PrimeModulus s) : modulus_(s) {
        const auto m = static_cast<std::int64_t>(s.value());
        std::int64_t r = v % m;
        if (r < 0) r += m;
        value_ = static_cast<std::uint64_t>(r);
    }

    static FieldElement from_unsigned(std::uint64_t v, PrimeModulus s) {
        return FieldElement(static_cast<std::int64_t>(v % s.value()), s);
    }

    std::uint64_t value() const noexcept { return value_; }
    PrimeModulus modulus() const noexcept { return modulus_; }
    bool is_zero() const noexcept { return value_ == 0; }

    friend bool operator==(const FieldElement&, const FieldElement&) = default;

    /// Orders by value; only meaningful within one field.
    friend std::strong_ordering operator<=>(const FieldElement& a, const FieldElement& b) noexcept {
        return a.value_ <=> b.value_;
    }

private:
    std::uint64_t value_ = 0;
    PrimeModulus modulus_;
};

namespace detail {

inline void require_same_field(const FieldElement& a, const FieldElement& b) {
    if (a.modulus() != b.modulus()) {
        throw UsageError("field elements belong to different moduli (" +
                         std::to_string(a.modulus().value()) + " vs " +
                         std::to_string(b.modulus().value()) + ")");
    }
}

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t e, std::uint64_t m) noexcept {
    std::uint64_t result = 1 % m;
    base %= m;
    while (e > 0) {
        if (e & 1U) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        e >>= 1U;
    }
    return result;
}

}  // namespace detail

inline FieldElement operator+(const FieldElement& a, const FieldElement& b) {
    detail::require_same_field(a, b);
    const std::uint64_t m = a.modulus().value();
    std::uint64_t r = a.value() + b.value();  // both < 2^32, no overflow
    if (r >= m) r -= m;
    return FieldElement::from_unsigned(r, a.modulus());
}

inline FieldElement operator-(const FieldElement& a) {
    const std::uint64_t m = a.modulus().value();
    return FieldElement::from_unsigned(a.is_zero() ? 0 : m - a.value(), a.modulus());
}

inline FieldElement operator-(const FieldElement& a, const FieldElement& b) {
    detail::require_same_field(a, b);
    return a + (-b);
}

inline FieldElement operator*(const FieldElement& a, const FieldElement& b) {
    detail::require_same_field(a, b);
    return FieldElement::from_unsigned(detail::mul_mod(a.value(), b.value(), a.modulus().value()),
                                       a.modulus());
}

inline FieldElement pow(const FieldElement& a, std::uint64_t exponent) {
    return FieldElement::from_unsigned(
        detail::pow_mod(a.value(), exponent, a.modulus().value()), a.modulus());
}

/// Multiplicative inverse via Fermat's little theorem.
inline FieldElement inverse(const FieldElement& a) {
    if (a.is_zero()) throw NonInvertible("zero has no multiplicative inverse");
    return pow(a, a.modulus().value() - 2);
}

inline FieldElement operator/(const FieldElement& a, const FieldElement& b) {
    detail::require_same_field(a, b);
    return a * inverse(b);
}

enum class ArithOp { add, sub, mul, pow };

/// Dispatching form of the field operations. For `pow`, `b.value()` is the exponent.
inline FieldElement fe_arith(const FieldElement& a, const FieldElement& b, ArithOp op) {
    detail::require_same_field(a, b);
    switch (op) {
        case ArithOp::add: return a + b;
        case ArithOp::sub: return a - b;
        case ArithOp::mul: return a * b;
        case ArithOp::pow: return pow(a, b.value());
    }
    throw UsageError("unknown arithmetic operation");
}

namespace detail {

inline std::vector<FieldElement> sqrt_exhaustive(const FieldElement& v) {
    std::vector<FieldElement> roots;
    const PrimeModulus s = v.modulus();
    for (std::uint64_t y = 0; y < s.value(); ++y) {
        const auto e = FieldElement::from_unsigned(y, s);
        if (e * e == v) roots.push_back(e);
    }
    return roots;
}

// Tonelli-Shanks for odd primes.
inline std::vector<FieldElement> sqrt_tonelli_shanks(const FieldElement& v) {
    const PrimeModulus s = v.modulus();
    const std::uint64_t p = s.value();
    if (v.is_zero()) return {v};
    if (pow_mod(v.value(), (p - 1) / 2, p) != 1) return {};

    std::uint64_t q = p - 1;
    unsigned e = 0;
    while ((q & 1U) == 0) {
        q >>= 1U;
        ++e;
    }
    std::uint64_t z = 2;
    while (pow_mod(z, (p - 1) / 2, p) != p - 1) ++z;

    std::uint64_t m = e;
    std::uint64_t c = pow_mod(z, q, p);
    std::uint64_t t = pow_mod(v.value(), q, p);
    std::uint64_t r = pow_mod(v.value(), (q + 1) / 2, p);
    while (t != 1) {
        std::uint64_t i = 0;
        std::uint64_t t2 = t;
        while (t2 != 1) {
            t2 = mul_mod(t2, t2, p);
            ++i;
        }
        std::uint64_t b = c;
        for (std::uint64_t j = 0; j + 1 < m - i; ++j) b = mul_mod(b, b, p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    const std::uint64_t other = p - r;
    if (other == r) return {FieldElement::from_unsigned(r, s)};
    return {FieldElement::from_unsigned(std::min(r, other), s),
            FieldElement::from_unsigned(std::max(r, other), s)};
}

}  // namespace detail

/// All y with y^2 = v, ascending by value. Empty for quadratic non-residues.
inline std::vector<FieldElement> sqrt_candidates(const FieldElement& v) {
    if (v.modulus().value() < kExhaustiveSqrtBound || v.modulus().value() == 2) {
        return detail::sqrt_exhaustive(v);
    }
    return detail::sqrt_tonelli_shanks(v);
}

}  // namespace ecwm
