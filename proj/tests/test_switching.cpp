#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "config_gen.hpp"
#include "ecwm/switching.hpp"
#include "oracles.hpp"

using namespace ecwm;

namespace {

const CurveSpec kDesk(2, 2, 17);

SwitchingConfig desk_config() {
    SwitchingConfig cfg;
    cfg.curve = kDesk;
    cfg.l = 1;
    cfg.n_h = 2;
    cfg.eta1_coeffs = {{1.0, 0.2}, {0.0, 0.3, -0.02}, {0.5, -0.1, 0.01}};
    cfg.alpha_x = {3.0, 7.0, 1.1};
    cfg.alpha_y = {5.0, 3.0, 0.7};
    return cfg;
}

// alpha1(1) = (5.2, 1.3), which projects to (5, 1).
SwitchingConfig projecting_to_5_1() {
    auto cfg = desk_config();
    cfg.alpha_x = {0.0, 0.0, 5.2};
    cfg.alpha_y = {0.0, 0.0, 1.3};
    return cfg;
}

bool bit_identical(const FirParams& a, const FirParams& b) {
    return a.b.size() == b.b.size() && std::memcmp(a.b.data(), b.b.data(), a.b.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(ValidateTheta, Examples) {
    EXPECT_TRUE(validate_theta(std::vector{1.0, 0.5, 0.2}).valid);
    const auto zero_b0 = validate_theta(std::vector{0.0, 0.5, 0.2});
    EXPECT_FALSE(zero_b0.valid);
    EXPECT_EQ(zero_b0.violation, ThetaViolation::b0_zero);
    const auto radius = validate_theta(std::vector{1.0, 0.5, 0.6});
    EXPECT_FALSE(radius.valid);
    EXPECT_EQ(radius.violation, ThetaViolation::radius);
    EXPECT_EQ(validate_theta(std::vector{1.0, 1.0}).violation, ThetaViolation::b1_magnitude);
    EXPECT_EQ(validate_theta(std::vector{1.0}).violation, ThetaViolation::too_short);
    EXPECT_EQ(validate_theta(std::vector{1.0, std::nan("")}).violation, ThetaViolation::non_finite);
}

TEST(Alpha1, ZeroMap) {
    auto cfg = desk_config();
    cfg.alpha_x = {0.0, 0.0, 0.0};
    cfg.alpha_y = {0.0, 0.0};
    const auto p = alpha1(3.7, cfg);
    EXPECT_EQ(p.x, 0.0);
    EXPECT_EQ(p.y, 0.0);
}

TEST(Alpha1, IdenticalParametersGiveDiagonalPoint) {
    auto cfg = desk_config();
    cfg.alpha_y = cfg.alpha_x;
    for (double y : {-3.0, 0.1, 2.5, 40.0}) {
        const auto p = alpha1(y, cfg);
        EXPECT_EQ(p.x, p.y);
    }
}

TEST(Alpha1, ClosedForm) {
    auto cfg = desk_config();
    cfg.alpha_x = {4.0, 1.0};
    EXPECT_NEAR(alpha1(1.0, cfg).x, std::numbers::pi, 1e-15);
}

TEST(Alpha1, MatchesDirectEvaluationAndStaysInRange) {
    auto cfg = desk_config();
    cfg.alpha_x = {3.0, 7.0, 1.1, -0.3};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-50.0, 50.0);
    for (int i = 0; i < 2000; ++i) {
        const double y = dist(rng);
        const double t = std::abs(y);
        const double direct = 3.0 * std::atan(7.0 * y) + 1.1 * t * t - 0.3 * t * t * t;
        const auto p = alpha1(y, cfg);
        EXPECT_NEAR(p.x, oracle::real_mod(direct, 17.0), 1e-9 * std::max(1.0, std::abs(direct)));
        EXPECT_GE(p.x, 0.0);
        EXPECT_LT(p.x, 17.0);
        EXPECT_GE(p.y, 0.0);
        EXPECT_LT(p.y, 17.0);
    }
}

TEST(Alpha1, NonFiniteInputIsInputError) {
    const auto cfg = desk_config();
    EXPECT_THROW(alpha1(std::numeric_limits<double>::infinity(), cfg), InputError);
    EXPECT_THROW(alpha1(std::nan(""), cfg), InputError);
}

TEST(Alpha2, Examples) {
    EXPECT_EQ(alpha2({5.2, 1.3}, kDesk), make_point(kDesk, 5, 1));
    EXPECT_EQ(alpha2({6.0, 3.0}, kDesk), make_point(kDesk, 6, 3));
    // (0, 8.5) is equidistant from (0, 6) and (0, 11)
    EXPECT_EQ(alpha2({0.0, 8.5}, kDesk), make_point(kDesk, 0, 6));
}

TEST(Alpha2, AgreesWithExhaustiveScan) {
    const auto pts = oracle::points_by_scan(2, 2, 17);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(0.0, 17.0);
    const NearestPointMap map(kDesk);
    for (int i = 0; i < 5000; ++i) {
        const ScaledPoint q{dist(rng), dist(rng)};
        double best = std::numeric_limits<double>::infinity();
        std::pair<std::int64_t, std::int64_t> arg{};
        for (const auto& [x, y] : pts) {  // scan order is lexicographic
            const double d = (x - q.x) * (x - q.x) + (y - q.y) * (y - q.y);
            if (d < best) {
                best = d;
                arg = {x, y};
            }
        }
        const auto got = map.nearest(q);
        ASSERT_EQ(static_cast<std::int64_t>(got.x().value()), arg.first);
        ASSERT_EQ(static_cast<std::int64_t>(got.y().value()), arg.second);
    }
}

TEST(Eta1, Examples) {
    auto cfg = desk_config();
    cfg.eta1_coeffs = {{0.0}, {0.0, 0.0}, {0.0}};
    for (double v : eta1(make_point(kDesk, 6, 3), cfg)) EXPECT_EQ(v, 0.0);

    cfg.eta1_coeffs = {{0.0, 1.0}, {0.0}, {0.0}};
    EXPECT_NEAR(eta1(make_point(kDesk, 6, 3), cfg)[0], 6.708203932499369, 1e-12);

    EXPECT_THROW(eta1(CurvePoint::infinity(), cfg), UsageError);
}

TEST(Eta1, DistinctRowsGiveDistinctComponents) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> coeff(-3.0, 3.0);
    auto cfg = desk_config();
    for (int trial = 0; trial < 200; ++trial) {
        for (auto& row : cfg.eta1_coeffs) row = {coeff(rng), coeff(rng), coeff(rng)};
        for (const auto& p : affine_points(kDesk)) {
            const auto raw = eta1(p, cfg);
            EXPECT_NE(raw[0], raw[1]);
            EXPECT_NE(raw[1], raw[2]);
            const double n = std::hypot(static_cast<double>(p.x().value()), static_cast<double>(p.y().value()));
            const auto& r0 = cfg.eta1_coeffs[0];
            EXPECT_NEAR(raw[0], r0[0] + r0[1] * n + r0[2] * n * n, 1e-9);
        }
    }
}

TEST(Eta2, WorkedExample) {
    auto cfg = desk_config();
    cfg.eta_floor = 0.1;
    cfg.eta_slope = 1.0;
    cfg.eta_margin = 0.1;
    const auto theta = eta2(std::vector{2.0, 3.0, 4.0}, cfg);
    ASSERT_EQ(theta.b.size(), 3u);
    EXPECT_DOUBLE_EQ(theta.b[0], 2.0);
    EXPECT_DOUBLE_EQ(theta.b[1], 0.75);
    EXPECT_NEAR(theta.b[2], 0.3, 1e-15);
    EXPECT_TRUE(validate_theta(theta).valid);
}

TEST(Eta2, IdentityAndFloor) {
    auto cfg = desk_config();
    EXPECT_EQ(eta2(std::vector{1.0, 0.0, 0.0}, cfg).b, (std::vector{1.0, 0.0, 0.0}));
    cfg.eta_floor = 1.5;
    EXPECT_EQ(eta2(std::vector{0.0, 0.3, 0.1}, cfg).b[0], 1.5);
    EXPECT_EQ(eta2(std::vector{-0.2, 0.3, 0.1}, cfg).b[0], -1.5);
    EXPECT_EQ(eta2(std::vector{-4.0, 0.3, 0.1}, cfg).b[0], -4.0);
}

TEST(Eta2, ClampsMarginWhenB1NearsOne) {
    auto cfg = desk_config();
    cfg.eta_margin = 0.5;
    const auto theta = eta2(std::vector{1.0, 1000.0, 3.0}, cfg);
    EXPECT_TRUE(validate_theta(theta).valid);
    EXPECT_GT(theta.b[2], 0.0);  // sign preserved
    const auto huge = eta2(std::vector{1.0, -1e300, 1e300}, cfg);
    EXPECT_TRUE(validate_theta(huge).valid);
    EXPECT_LT(huge.b[1], 0.0);
}

TEST(Eta2, RejectsWrongLengthAndNonFinite) {
    const auto cfg = desk_config();
    EXPECT_THROW(eta2(std::vector{1.0, 0.0}, cfg), UsageError);
    EXPECT_THROW(eta2(std::vector{1.0, std::nan(""), 0.0}, cfg), InputError);
}

TEST(Eta2, TotalOnRandomRawVectors) {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> dist(-1e3, 1e3);
    for (int i = 0; i < 20000; ++i) {
        const auto cfg = testgen::random_config(rng);
        std::vector<double> raw(cfg.n_h + 1);
        for (auto& v : raw) v = dist(rng) * std::pow(10.0, static_cast<double>(rng() % 7) - 3.0);
        if (rng() % 5 == 0) raw[0] = 0.0;
        ASSERT_TRUE(validate_theta(eta2(raw, cfg)).valid);
    }
}

TEST(Sigma, ScalarOneIsPlainComposition) {
    const auto cfg = desk_config();
    for (double y : {-2.0, 0.0, 0.37, 10.0, 123.4}) {
        const auto p = alpha2(alpha1(y, cfg), cfg.curve);
        EXPECT_EQ(sigma(y, cfg), eta2(eta1(p, cfg), cfg));
    }
}

TEST(Sigma, ScalarMultipleOfOrderFallsBackToGenerator) {
    auto cfg = desk_config();
    cfg.l = 19;
    EXPECT_FALSE(cfg.validate().empty());  // warns about the degenerate scalar
    const SwitchingFunction fn(cfg);
    for (double y : {-2.0, 0.0, 0.37, 10.0, 123.4}) {
        const auto t = fn.trace(y);
        EXPECT_TRUE(t.fallback);
        EXPECT_EQ(t.multiple, t.generator);
        EXPECT_EQ(t.theta, eta2(eta1(t.generator, cfg), cfg));
    }
}

TEST(Sigma, DoublingExample) {
    auto cfg = projecting_to_5_1();
    cfg.l = 2;
    const auto t = SwitchingFunction(cfg).trace(1.0);
    EXPECT_EQ(t.generator, make_point(kDesk, 5, 1));
    EXPECT_EQ(t.multiple, make_point(kDesk, 6, 3));
    EXPECT_FALSE(t.fallback);
    EXPECT_EQ(t.theta, eta2(eta1(make_point(kDesk, 6, 3), cfg), cfg));
}

TEST(Sigma, PeriodicInTheScalar) {
    auto cfg = desk_config();
    for (std::uint64_t l = 1; l < 19; ++l) {
        cfg.l = l;
        const SwitchingFunction a(cfg);
        cfg.l = l + 19;
        const SwitchingFunction b(cfg);
        for (double y : {0.5, 3.0, 17.0}) EXPECT_TRUE(bit_identical(a(y), b(y)));
    }
}

TEST(Sigma, DeterministicAcrossSerializedCopies) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ys(-100.0, 100.0);
    for (int i = 0; i < 200; ++i) {
        const auto cfg = testgen::random_config(rng);
        const auto text = to_json(cfg).dump();
        const SwitchingFunction a(switching_config_from_json(nlohmann::json::parse(text)));
        const SwitchingFunction b(switching_config_from_json(nlohmann::json::parse(text)));
        for (int k = 0; k < 50; ++k) {
            const double y = ys(rng);
            const auto ta = a(y);
            ASSERT_TRUE(bit_identical(ta, b(y)));
            ASSERT_TRUE(bit_identical(ta, a(y)));
        }
    }
}

TEST(Sigma, TotalIntoAdmissibleSet) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> ys(-200.0, 200.0);
    for (int c = 0; c < 100; ++c) {
        const SwitchingFunction fn(testgen::random_config(rng));
        for (int k = 0; k < 1000; ++k) ASSERT_TRUE(validate_theta(fn(ys(rng))).valid);
    }
}

TEST(Sigma, RangeBoundedByAffinePointCount) {
    auto cfg = desk_config();
    cfg.l = 5;
    const SwitchingFunction fn(cfg);
    std::set<std::vector<double>> seen;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ys(-30.0, 30.0);
    for (int k = 0; k < 20000; ++k) seen.insert(fn(ys(rng)).b);
    EXPECT_LE(seen.size(), 18u);
    EXPECT_GT(seen.size(), 1u);
}

TEST(SwitchingConfigJson, RoundTripPreservesEveryField) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 50; ++i) {
        const auto cfg = testgen::random_config(rng);
        const auto back = switching_config_from_json(nlohmann::json::parse(to_json(cfg).dump()));
        EXPECT_EQ(back.curve, cfg.curve);
        EXPECT_EQ(back.l, cfg.l);
        EXPECT_EQ(back.alpha_x, cfg.alpha_x);
        EXPECT_EQ(back.alpha_y, cfg.alpha_y);
        EXPECT_EQ(back.eta1_coeffs, cfg.eta1_coeffs);
        EXPECT_EQ(back.eta_floor, cfg.eta_floor);
        EXPECT_EQ(back.eta_margin, cfg.eta_margin);
        EXPECT_EQ(back.eta_slope, cfg.eta_slope);
        EXPECT_EQ(back.n_h, cfg.n_h);
    }
}

TEST(SwitchingConfigJson, ErrorsNameTheField) {
    auto j = to_json(desk_config());
    auto expect_path = [](const nlohmann::json& bad, const std::string& path) {
        try {
            switching_config_from_json(bad);
            ADD_FAILURE() << "expected ConfigError for " << path;
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.path(), path);
        }
    };
    auto bad = j;
    bad.erase("l");
    expect_path(bad, "l");
    bad = j;
    bad["curve"]["s"] = 16;
    expect_path(bad, "curve");
    bad = j;
    bad["curve"]["a"] = 0;
    bad["curve"]["b"] = 0;
    expect_path(bad, "curve");
    bad = j;
    bad["eta_floor"] = 0.5;
    expect_path(bad, "eta_floor");
    bad = j;
    bad["eta_margin"] = 1.0;
    expect_path(bad, "eta_margin");
    bad = j;
    bad["eta1"][1][0] = "x";
    expect_path(bad, "eta1[1][0]");
    bad = j;
    bad["eta1"].erase(2);
    expect_path(bad, "eta1");
    bad = j;
    bad["alpha"]["y"] = {1.0};
    expect_path(bad, "alpha.y");
    bad = j;
    bad["l"] = 0;
    expect_path(bad, "l");
}
