#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ecwm/errors.hpp"
#include "ecwm/finite_field.hpp"

namespace ecwm {

/// Default upper bound on the field size for point enumeration.
inline constexpr std::uint64_t kDefaultEnumerationBound = 10'000;

/// Short Weierstrass curve y^2 = x^3 + a x + b over F_s.
class CurveSpec {
public:
    CurveSpec(std::int64_t a, std::int64_t b, std::uint64_t s)
        : s_(checked_modulus(s)), a_(a, s_), b_(b, s_) {
        const FieldElement four(4, s_);
        const FieldElement twenty_seven(27, s_);
        if ((four * pow(a_, 3) + twenty_seven * b_ * b_).is_zero()) {
            throw ConfigError("singular curve: 4a^3 + 27b^2 = 0 mod " + std::to_string(s));
        }
    }

    const FieldElement& a() const noexcept { return a_; }
    const FieldElement& b() const noexcept { return b_; }
    PrimeModulus field() const noexcept { return s_; }
    std::uint64_t modulus() const noexcept { return s_.value(); }

    FieldElement element(std::int64_t v) const { return FieldElement(v, s_); }

    /// Right-hand side x^3 + a x + b.
    FieldElement rhs(const FieldElement& x) const { return x * x * x + a_ * x + b_; }

    friend bool operator==(const CurveSpec&, const CurveSpec&) = default;

private:
    static PrimeModulus checked_modulus(std::uint64_t s) {
        try {
            PrimeModulus m(s);
            if (s <= 3) {
                throw ConfigError("short Weierstrass form requires a field prime > 3, got " +
                                  std::to_string(s));
            }
            return m;
        } catch (const UsageError& e) {
            throw ConfigError(e.what());
        }
    }

    PrimeModulus s_;
    FieldElement a_;
    FieldElement b_;
};

/// Either the point at infinity O or an affine point (x, y).
class CurvePoint {
public:
    static CurvePoint infinity() { return CurvePoint(); }
    static CurvePoint affine(FieldElement x, FieldElement y) { return CurvePoint(x, y); }

    bool is_infinity() const noexcept { return !coords_.has_value(); }
    const FieldElement& x() const { return require_affine().first; }
    const FieldElement& y() const { return require_affine().second; }

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;

    /// Lexicographic on (x, y); O sorts after every affine point.
    friend bool operator<(const CurvePoint& p, const CurvePoint& q) {
        if (p.is_infinity() || q.is_infinity()) return !p.is_infinity() && q.is_infinity();
        if (p.x() != q.x()) return p.x() < q.x();
        return p.y() < q.y();
    }

    friend std::ostream& operator<<(std::ostream& os, const CurvePoint& p) {
        if (p.is_infinity()) return os << "O";
        return os << '(' << p.x().value() << ',' << p.y().value() << ')';
    }

private:
    CurvePoint() = default;
    CurvePoint(FieldElement x, FieldElement y) : coords_(std::make_pair(x, y)) {}

    const std::pair<FieldElement, FieldElement>& require_affine() const {
        if (!coords_) throw UsageError("point at infinity has no affine coordinates");
        return *coords_;
    }

    std::optional<std::pair<FieldElement, FieldElement>> coords_;
};

inline CurvePoint make_point(const CurveSpec& c, std::int64_t x, std::int64_t y) {
    return CurvePoint::affine(c.element(x), c.element(y));
}

inline bool is_on_curve(const CurvePoint& p, const CurveSpec& c) {
    if (p.is_infinity()) return true;
    if (p.x().modulus() != c.field() || p.y().modulus() != c.field()) return false;
    return p.y() * p.y() == c.rhs(p.x());
}

inline CurvePoint negate(const CurvePoint& p) {
    if (p.is_infinity()) return p;
    return CurvePoint::affine(p.x(), -p.y());
}

/// Group law. Equal inputs take the tangent (doubling) branch.
inline CurvePoint point_add(const CurvePoint& p, const CurvePoint& q, const CurveSpec& c) {
    if (!is_on_curve(p, c) || !is_on_curve(q, c)) {
        throw UsageError("point_add: operand is not on the curve");
    }
    if (p.is_infinity()) return q;
    if (q.is_infinity()) return p;

    FieldElement lambda = c.element(0);
    if (p.x() == q.x()) {
        // q == -p, including the vertical tangent at y = 0
        if (p.y() != q.y() || p.y().is_zero()) return CurvePoint::infinity();
        lambda = (c.element(3) * p.x() * p.x() + c.a()) / (c.element(2) * p.y());
    } else {
        lambda = (q.y() - p.y()) / (q.x() - p.x());
    }
    const FieldElement x = lambda * lambda - p.x() - q.x();
    const FieldElement y = lambda * (p.x() - x) - p.y();
    return CurvePoint::affine(x, y);
}

/// k * p by double-and-add, O(log k) group operations.
inline CurvePoint scalar_mul(std::uint64_t k, const CurvePoint& p, const CurveSpec& c) {
    if (!is_on_curve(p, c)) throw UsageError("scalar_mul: point is not on the curve");
    CurvePoint result = CurvePoint::infinity();
    CurvePoint addend = p;
    while (k > 0) {
        if (k & 1U) result = point_add(result, addend, c);
        k >>= 1U;
        if (k > 0) addend = point_add(addend, addend, c);
    }
    return result;
}

/// Affine points sorted by (x, y), without O.
inline std::vector<CurvePoint> affine_points(const CurveSpec& c,
                                             std::uint64_t bound = kDefaultEnumerationBound) {
    if (c.modulus() > bound) {
        throw CapacityError("curve modulus " + std::to_string(c.modulus()) +
                            " exceeds enumeration bound " + std::to_string(bound));
    }
    std::vector<CurvePoint> points;
    for (std::uint64_t xv = 0; xv < c.modulus(); ++xv) {
        const auto x = FieldElement::from_unsigned(xv, c.field());
        for (const auto& y : sqrt_candidates(c.rhs(x))) points.push_back(CurvePoint::affine(x, y));
    }
    return points;  // x ascending, roots ascending: already sorted
}

/// Every group element: the sorted affine points followed by O.
inline std::vector<CurvePoint> enumerate_points(const CurveSpec& c,
                                                std::uint64_t bound = kDefaultEnumerationBound) {
    auto points = affine_points(c, bound);
    points.push_back(CurvePoint::infinity());
    return points;
}

/// |E(F_s)|, counting O.
inline std::uint64_t curve_order(const CurveSpec& c, std::uint64_t bound = kDefaultEnumerationBound) {
    if (c.modulus() > bound) {
        throw CapacityError("curve modulus " + std::to_string(c.modulus()) +
                            " exceeds enumeration bound " + std::to_string(bound));
    }
    std::uint64_t n = 1;
    for (std::uint64_t xv = 0; xv < c.modulus(); ++xv) {
        n += sqrt_candidates(c.rhs(FieldElement::from_unsigned(xv, c.field()))).size();
    }
    return n;
}

/// Smallest n >= 1 with n * p = O.
inline std::uint64_t point_order(const CurvePoint& p, const CurveSpec& c) {
    if (!is_on_curve(p, c)) throw UsageError("point_order: point is not on the curve");
    std::uint64_t n = 1;
    CurvePoint acc = p;
    while (!acc.is_infinity()) {
        acc = point_add(acc, p, c);
        ++n;
    }
    return n;
}

/// |E(F_s)| / order(p); Lagrange makes this exact.
inline std::uint64_t cofactor(const CurvePoint& p, const CurveSpec& c) {
    return curve_order(c) / point_order(p, c);
}

}  // namespace ecwm
