#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecwm/elliptic_curve.hpp"
#include "ecwm/errors.hpp"

namespace ecwm {

/// FIR watermark taps b_0 .. b_{n_h}; shared by generator and remover.
struct FirParams {
    std::vector<double> b;

    std::size_t order() const noexcept { return b.empty() ? 0 : b.size() - 1; }

    friend bool operator==(const FirParams&, const FirParams&) = default;
};

enum class ThetaViolation { none, too_short, non_finite, b0_zero, b1_magnitude, radius };

struct ThetaReport {
    bool valid = false;
    ThetaViolation violation = ThetaViolation::none;
    std::string message;

    explicit operator bool() const noexcept { return valid; }
};

/// Membership in the admissible FIR set:
///   b0 != 0,  |b1| < 1,  sum_{i>=2} |b_i / b0| < 1 - |b1|.
/// The report names the first violated condition.
inline ThetaReport validate_theta(std::span<const double> b) {
    if (b.size() < 2) return {false, ThetaViolation::too_short, "need at least b0 and b1"};
    for (double v : b) {
        if (!std::isfinite(v)) return {false, ThetaViolation::non_finite, "non-finite tap"};
    }
    if (b[0] == 0.0) return {false, ThetaViolation::b0_zero, "b0 must be nonzero"};
    if (!(std::abs(b[1]) < 1.0)) return {false, ThetaViolation::b1_magnitude, "|b1| must be < 1"};
    double radius = 0.0;
    for (std::size_t i = 2; i < b.size(); ++i) radius += std::abs(b[i] / b[0]);
    if (!(radius < 1.0 - std::abs(b[1]))) {
        return {false, ThetaViolation::radius, "sum |b_i/b0| (i>=2) must be < 1 - |b1|"};
    }
    return {true, ThetaViolation::none, {}};
}

inline ThetaReport validate_theta(const FirParams& theta) { return validate_theta(theta.b); }

/// Coefficients of one coordinate map:
///   a[0] * atan(a[1] * y) + sum_{j>=2} a[j] * |y|^j.
using AlphaCoefficients = std::vector<double>;

/// Secret material provisioned to both watermark endpoints.
struct SwitchingConfig {
    CurveSpec curve{2, 2, 17};
    std::uint64_t l = 1;
    AlphaCoefficients alpha_x{0.0, 0.0};
    AlphaCoefficients alpha_y{0.0, 0.0};
    /// One row of polynomial coefficients (in ||S||_2) per output tap; n_h + 1 rows.
    std::vector<std::vector<double>> eta1_coeffs{{1.0}, {0.0}};
    double eta_floor = 1.0;   // lower bound on |b0|
    double eta_margin = 0.1;  // epsilon in the radius condition
    double eta_slope = 1.0;   // offset in b1 = b1^- / (|b1^-| + slope)
    std::size_t n_h = 1;

    /// Throws ConfigError naming the offending field; returns non-fatal warnings.
    std::vector<std::string> validate() const;
};

namespace detail {

// Real residue in [0, s).
inline double wrap_mod(double v, double s) {
    double r = std::fmod(v, s);
    if (r < 0.0) r += s;
    if (r >= s) r = 0.0;
    return r;
}

// c[0] + c[1] t + c[2] t^2 + ... by Horner, highest degree first.
inline double horner(std::span<const double> c, double t) {
    double acc = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) acc = acc * t + c[j];
    return acc;
}

inline double alpha_coordinate(const AlphaCoefficients& a, double y) {
    if (a.empty()) return 0.0;
    const double a1 = a.size() > 1 ? a[1] : 0.0;
    double v = a[0] * std::atan(a1 * y);
    if (a.size() > 2) {
        const double t = std::abs(y);
        v += t * t * horner(std::span<const double>(a).subspan(2), t);
    }
    return v;
}

}  // namespace detail

/// Point of R_s x R_s produced by the scaling stage.
struct ScaledPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Scales a measurement into [0, s) x [0, s) using distinct maps per coordinate.
inline ScaledPoint alpha1(double y, const SwitchingConfig& cfg) {
    if (!std::isfinite(y)) throw InputError("alpha1: measurement is not finite");
    const double s = static_cast<double>(cfg.curve.modulus());
    const double vx = detail::alpha_coordinate(cfg.alpha_x, y);
    const double vy = detail::alpha_coordinate(cfg.alpha_y, y);
    if (!std::isfinite(vx) || !std::isfinite(vy)) {
        throw InputError("alpha1: scaled measurement overflowed");
    }
    return {detail::wrap_mod(vx, s), detail::wrap_mod(vy, s)};
}

/// Nearest affine curve point under squared Euclidean distance, ties to the
/// lexicographically smaller point. Shared by the switching function and the
/// Voronoi export so the two can never disagree.
class NearestPointMap {
public:
    explicit NearestPointMap(const CurveSpec& curve) : points_(affine_points(curve)) {
        if (points_.empty()) throw ConfigError("curve has no affine points", "curve");
        coords_.reserve(points_.size());
        for (const auto& p : points_) {
            coords_.push_back({static_cast<double>(p.x().value()), static_cast<double>(p.y().value())});
        }
    }

    std::size_t nearest_index(ScaledPoint q) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            const double dx = coords_[i][0] - q.x;
            const double dy = coords_[i][1] - q.y;
            const double d = dx * dx + dy * dy;
            if (d < best_d) {  // strict: earlier (smaller) point keeps ties
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    const CurvePoint& nearest(ScaledPoint q) const { return points_[nearest_index(q)]; }
    const std::vector<CurvePoint>& points() const noexcept { return points_; }

private:
    std::vector<CurvePoint> points_;
    std::vector<std::array<double, 2>> coords_;
};

inline CurvePoint alpha2(ScaledPoint pt, const CurveSpec& c) { return NearestPointMap(c).nearest(pt); }

/// Euclidean norm of a point with coordinates lifted to [0, s-1].
inline double point_norm(const CurvePoint& p) {
    const auto x = static_cast<double>(p.x().value());
    const auto y = static_cast<double>(p.y().value());
    return std::sqrt(x * x + y * y);
}

/// Raw tap vector b^-: row i of the coefficient matrix evaluated at ||S||_2.
inline std::vector<double> eta1(const CurvePoint& s, const SwitchingConfig& cfg) {
    if (s.is_infinity()) throw UsageError("eta1: point at infinity has no parameter image");
    const double norm = point_norm(s);
    std::vector<double> raw;
    raw.reserve(cfg.eta1_coeffs.size());
    for (const auto& row : cfg.eta1_coeffs) raw.push_back(detail::horner(row, norm));
    return raw;
}

/// Maps any finite raw vector into the admissible FIR set.
inline FirParams eta2(std::span<const double> raw, const SwitchingConfig& cfg) {
    if (raw.size() != cfg.n_h + 1) {
        throw UsageError("eta2: expected " + std::to_string(cfg.n_h + 1) + " raw taps, got " +
                         std::to_string(raw.size()));
    }
    for (double v : raw) {
        if (!std::isfinite(v)) throw InputError("eta2: raw tap is not finite");
    }
    FirParams theta{std::vector<double>(raw.size(), 0.0)};
    auto& b = theta.b;

    b[0] = std::abs(raw[0]) >= cfg.eta_floor ? raw[0] : std::copysign(cfg.eta_floor, raw[0] < 0.0 ? -1.0 : 1.0);

    b[1] = raw[1] / (std::abs(raw[1]) + cfg.eta_slope);
    if (!(std::abs(b[1]) < 1.0)) b[1] = std::copysign(std::nextafter(1.0, 0.0), raw[1]);

    double raw_radius = 0.0;
    for (std::size_t i = 2; i < raw.size(); ++i) raw_radius += std::abs(raw[i] / b[0]);
    if (raw_radius == 0.0) return theta;

    const double slack = 1.0 - std::abs(b[1]);
    const double margin = cfg.eta_margin < slack ? cfg.eta_margin : 0.5 * slack;
    double xi = (slack - margin) / raw_radius;
    for (;;) {
        for (std::size_t i = 2; i < raw.size(); ++i) b[i] = xi * raw[i];
        if (validate_theta(theta)) break;
        xi = std::nextafter(xi, 0.0);  // rounding pushed the sum onto the boundary
    }
    return theta;
}

/// Intermediate values of one switching-function evaluation.
struct SwitchTrace {
    ScaledPoint scaled;
    CurvePoint generator = CurvePoint::infinity();
    CurvePoint multiple = CurvePoint::infinity();
    bool fallback = false;  // l * P was O and P was used instead
    std::vector<double> raw;
    FirParams theta;
};

/// The switching function with its curve data precomputed.
class SwitchingFunction {
public:
    explicit SwitchingFunction(SwitchingConfig cfg) : cfg_(std::move(cfg)), nearest_(cfg_.curve) {
        cfg_.validate();
    }

    const SwitchingConfig& config() const noexcept { return cfg_; }
    const NearestPointMap& nearest_map() const noexcept { return nearest_; }

    SwitchTrace trace(double y_prev) const {
        SwitchTrace t;
        t.scaled = alpha1(y_prev, cfg_);
        t.generator = nearest_.nearest(t.scaled);
        t.multiple = scalar_mul(cfg_.l, t.generator, cfg_.curve);
        if (t.multiple.is_infinity()) {
            t.multiple = t.generator;
            t.fallback = true;
        }
        t.raw = eta1(t.multiple, cfg_);
        t.theta = eta2(t.raw, cfg_);
        return t;
    }

    FirParams operator()(double y_prev) const { return trace(y_prev).theta; }

private:
    SwitchingConfig cfg_;
    NearestPointMap nearest_;
};

inline FirParams sigma(double y_prev, const SwitchingConfig& cfg) {
    return SwitchingFunction(cfg)(y_prev);
}

inline std::vector<std::string> SwitchingConfig::validate() const {
    std::vector<std::string> warnings;
    auto all_finite = [](const std::vector<double>& v) {
        for (double x : v) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    };
    if (l == 0) throw ConfigError("secret scalar must be positive", "l");
    if (n_h < 1) throw ConfigError("FIR order must be at least 1", "n_h");
    if (alpha_x.size() < 2 || !all_finite(alpha_x)) {
        throw ConfigError("need at least two finite coefficients", "alpha.x");
    }
    if (alpha_y.size() < 2 || !all_finite(alpha_y)) {
        throw ConfigError("need at least two finite coefficients", "alpha.y");
    }
    if (eta1_coeffs.size() != n_h + 1) {
        throw ConfigError("expected n_h + 1 = " + std::to_string(n_h + 1) + " rows", "eta1");
    }
    for (std::size_t i = 0; i < eta1_coeffs.size(); ++i) {
        if (eta1_coeffs[i].empty() || !all_finite(eta1_coeffs[i])) {
            throw ConfigError("row must hold at least one finite coefficient",
                              "eta1[" + std::to_string(i) + "]");
        }
    }
    // |b0| >= 1 keeps |b1 / b0| <= |b1|, which the remover's stability relies on.
    if (!(eta_floor >= 1.0) || !std::isfinite(eta_floor)) {
        throw ConfigError("must be >= 1", "eta_floor");
    }
    if (!(eta_slope > 0.0) || !std::isfinite(eta_slope)) throw ConfigError("must be > 0", "eta_slope");
    if (!(eta_margin > 0.0 && eta_margin < 1.0)) throw ConfigError("must lie in (0, 1)", "eta_margin");

    if (curve.modulus() <= kDefaultEnumerationBound) {
        const std::uint64_t order = curve_order(curve);
        if (l % order == 0) {
            warnings.push_back("l is a multiple of |E| = " + std::to_string(order) +
                               "; every switch falls back to S = P");
        }
    }
    return warnings;
}

// JSON schema:
// {
//   "curve": {"s": 17, "a": 2, "b": 2},
//   "l": 7,
//   "alpha": {"x": [a0, a1, a2, ...], "y": [...]},
//   "eta1": [[c_00, c_01, ...], ...],          // n_h + 1 rows
//   "eta_floor": 1.0, "eta_margin": 0.1, "eta_slope": 1.0,
//   "n_h": 2
// }

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError("missing field", path + key);
    return j.at(key);
}

template <typename T>
T read_number(const nlohmann::json& j, const std::string& path) {
    if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw ConfigError("expected an integer", path);
        if constexpr (std::is_unsigned_v<T>) {
            if (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0) {
                throw ConfigError("expected a non-negative integer", path);
            }
        }
    } else {
        if (!j.is_number()) throw ConfigError("expected a number", path);
    }
    return j.get<T>();
}

inline std::vector<double> read_vector(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError("expected an array of numbers", path);
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(read_number<double>(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

}  // namespace detail

inline nlohmann::json to_json(const SwitchingConfig& cfg) {
    nlohmann::json j;
    j["curve"] = {{"s", cfg.curve.modulus()},
                  {"a", cfg.curve.a().value()},
                  {"b", cfg.curve.b().value()}};
    j["l"] = cfg.l;
    j["alpha"] = {{"x", cfg.alpha_x}, {"y", cfg.alpha_y}};
    j["eta1"] = cfg.eta1_coeffs;
    j["eta_floor"] = cfg.eta_floor;
    j["eta_margin"] = cfg.eta_margin;
    j["eta_slope"] = cfg.eta_slope;
    j["n_h"] = cfg.n_h;
    return j;
}

/// Parses and validates. Errors carry the JSON path of the bad field.
inline SwitchingConfig switching_config_from_json(const nlohmann::json& j) {
    using detail::read_number;
    using detail::require;
    if (!j.is_object()) throw ConfigError("switching config must be a JSON object");

    const auto& cj = require(j, "curve", "");
    const auto a = read_number<std::int64_t>(require(cj, "a", "curve."), "curve.a");
    const auto b = read_number<std::int64_t>(require(cj, "b", "curve."), "curve.b");
    const auto s = read_number<std::uint64_t>(require(cj, "s", "curve."), "curve.s");
    SwitchingConfig cfg;
    try {
        cfg.curve = CurveSpec(a, b, s);
    } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "curve");
    }
    cfg.l = read_number<std::uint64_t>(require(j, "l", ""), "l");
    const auto& aj = require(j, "alpha", "");
    cfg.alpha_x = detail::read_vector(require(aj, "x", "alpha."), "alpha.x");
    cfg.alpha_y = detail::read_vector(require(aj, "y", "alpha."), "alpha.y");
    const auto& ej = require(j, "eta1", "");
    if (!ej.is_array()) throw ConfigError("expected an array of rows", "eta1");
    cfg.eta1_coeffs.clear();
    for (std::size_t i = 0; i < ej.size(); ++i) {
        cfg.eta1_coeffs.push_back(detail::read_vector(ej[i], "eta1[" + std::to_string(i) + "]"));
    }
    cfg.n_h = read_number<std::size_t>(require(j, "n_h", ""), "n_h");
    if (j.contains("eta_floor")) cfg.eta_floor = read_number<double>(j["eta_floor"], "eta_floor");
    if (j.contains("eta_margin")) cfg.eta_margin = read_number<double>(j["eta_margin"], "eta_margin");
    if (j.contains("eta_slope")) cfg.eta_slope = read_number<double>(j["eta_slope"], "eta_slope");
    cfg.validate();
    return cfg;
}

}  // namespace ecwm
