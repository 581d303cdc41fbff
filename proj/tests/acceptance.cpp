// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "config_gen.hpp"
#include "ecwm/ecwm.hpp"

using namespace ecwm;

namespace {

const std::filesystem::path kConfigs = ECWM_CONFIG_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome curve_facts() {
    const CurveSpec c(2, 2, 17);
    const auto pts = enumerate_points(c);
    bool ok = pts.size() == 19 && curve_order(c) == 19;
    for (const auto& p : pts) {
        if (p.is_infinity()) continue;
        ok = ok && point_order(p, c) == 19 && cofactor(p, c) == 1;
    }
    return {ok, std::to_string(pts.size()) + " points, all affine points of order 19"};
}

Outcome group_law() {
    const CurveSpec c(2, 2, 17);
    const auto pts = enumerate_points(c);
    const auto O = CurvePoint::infinity();
    std::size_t failures = 0;
    for (const auto& p : pts) {
        if (point_add(p, O, c) != p || !point_add(p, negate(p), c).is_infinity()) ++failures;
        for (const auto& q : pts) {
            const auto pq = point_add(p, q, c);
            if (pq != point_add(q, p, c)) ++failures;
            for (const auto& r : pts) {
                if (point_add(pq, r, c) != point_add(p, point_add(q, r, c), c)) ++failures;
            }
        }
        CurvePoint acc = O;
        for (std::uint64_t k = 0; k <= 38; ++k) {
            if (scalar_mul(k, p, c) != acc) ++failures;
            acc = point_add(acc, p, c);
        }
    }
    return {failures == 0, std::to_string(failures) + " violations over pairs, triples and k in [0, 38]"};
}

Outcome eta_stability() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    std::size_t invalid = 0, unstable = 0;
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto cfg = testgen::random_config(rng);
        std::vector<double> raw(cfg.n_h + 1);
        for (auto& v : raw) v = dist(rng) * std::pow(10.0, static_cast<double>(rng() % 5) - 2.0);
        const auto theta = eta2(raw, cfg);
        if (!validate_theta(theta)) ++invalid;
        const double rho = power_radius_estimate(remover_state_matrix(theta));
        worst = std::max(worst, rho);
        if (!(rho < 1.0 - 1e-8)) ++unstable;
    }
    std::ostringstream d;
    d << invalid << " invalid, " << unstable << " with radius >= 1 - 1e-8 of 10000; max radius " << worst;
    return {invalid == 0 && unstable == 0, d.str()};
}

Outcome transparency() {
    const auto loaded = load_scenario(kConfigs / "nominal.json");
    const auto& sc = loaded.scenario;
    const auto trace = run_scenario(sc);
    const double err = trace.max_reconstruction_error();
    const auto alarms = trace.alarm_steps().size();
    const auto switches = trace.generator_switches.size();
    std::ostringstream d;
    d << sc.horizon << " steps, " << switches << " switches, max |y_q - y_p| = " << err << ", " << alarms
      << " alarms at threshold " << sc.detector.threshold;
    return {sc.horizon == 2000 && switches >= 5 && err < 1e-9 && alarms == 0, d.str()};
}

std::size_t alarmed_seeds(const Scenario& sc, std::uint64_t window) {
    std::size_t n = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto trace = run_scenario(sc, sc.horizon, seed);
        for (const auto k : trace.alarm_steps()) {
            if (k >= sc.attack.start && k < sc.attack.start + window) {
                ++n;
                break;
            }
        }
    }
    return n;
}

Outcome detection() {
    const auto with = load_scenario(kConfigs / "replay.json").scenario;
    const auto without = load_scenario(kConfigs / "replay_no_switching.json").scenario;
    const auto period = std::get<PeriodicTrigger>(with.watermark.trigger).period;
    const std::uint64_t window = 2 * period;
    const auto first_switch = with.attack.start >= period;
    const auto hit_with = alarmed_seeds(with, window);
    const auto hit_without = alarmed_seeds(without, window);
    std::ostringstream d;
    d << "N_a = " << with.attack.window << ", alarm within " << window << " steps: " << hit_with
      << "/20 seeds with switching, " << hit_without << "/20 without";
    return {with.attack.window == 100 && first_switch && hit_with == 20 && hit_without < hit_with, d.str()};
}

Outcome sweep_shape() {
    const SwitchingFunction fn(load_switching_config(kConfigs / "demo_switching.json"));
    SweepSpec spec;
    spec.references = {0.0, 1.0, 10.0, 100.0};
    spec.n_realizations = 500;
    spec.noise_halfwidth = 0.05;
    const auto results = sensitivity_sweep(fn, spec);
    std::vector<bool> reached(fn.nearest_map().points().size(), false);
    for (const auto& r : results) {
        for (std::size_t i = 0; i < r.counts.size(); ++i) reached[i] = reached[i] || r.counts[i] > 0;
    }
    const auto n_reached = static_cast<std::size_t>(std::count(reached.begin(), reached.end(), true));
    const double h0 = results[0].entropy_bits();
    const double h10 = results[2].entropy_bits();
    std::ostringstream d;
    d << n_reached << "/" << reached.size() << " points reached; entropy r=0: " << h0 << " bits, r=10: " << h10
      << " bits";
    return {n_reached == reached.size() && h10 > h0, d.str()};
}

Outcome endpoint_agreement() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ys(-500.0, 500.0);
    std::size_t mismatches = 0, evaluated = 0;
    for (int c = 0; c < 1000; ++c) {
        const auto text = to_json(testgen::random_config(rng)).dump();
        const SwitchingFunction gen(switching_config_from_json(nlohmann::json::parse(text)));
        const SwitchingFunction rem(switching_config_from_json(nlohmann::json::parse(text)));
        for (int k = 0; k < 100; ++k) {
            const double y = ys(rng);
            const auto a = gen(y).b;
            const auto b = rem(y).b;
            ++evaluated;
            if (a.size() != b.size() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(evaluated) + " pairs"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Outcome()> check;
    };
    const Criterion criteria[] = {
        {"AC1 curve facts", 1.0, curve_facts},
        {"AC2 group law", 10.0, group_law},
        {"AC3 admissible taps give stable remover", 30.0, eta_stability},
        {"AC4 exact inversion and transparency", 5.0, transparency},
        {"AC5 replay detection", 60.0, detection},
        {"AC6 sensitivity sweep shape", 10.0, sweep_shape},
        {"AC7 endpoint agreement", 60.0, endpoint_agreement},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && secs < c.budget_s;
        std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " (" << secs << " s, budget "
                  << c.budget_s << " s)" << std::endl;
        failed += pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
