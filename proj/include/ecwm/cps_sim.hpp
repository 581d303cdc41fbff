#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ecwm/errors.hpp"
#include "ecwm/switching.hpp"
#include "ecwm/watermark.hpp"

namespace ecwm {

/// States or outputs beyond this magnitude abort the run.
inline constexpr double kDivergenceLimit = 1e12;

struct NoiseSpec {
    enum class Kind { none, uniform, gaussian };
    Kind kind = Kind::none;
    double scale = 0.0;  // half-width for uniform, standard deviation for gaussian

    static NoiseSpec uniform(double halfwidth) { return {Kind::uniform, halfwidth}; }
    static NoiseSpec gaussian(double sigma) { return {Kind::gaussian, sigma}; }

    template <typename Rng>
    double sample(Rng& rng) const {
        switch (kind) {
            case Kind::none: return 0.0;
            case Kind::uniform: return std::uniform_real_distribution<double>(-scale, scale)(rng);
            case Kind::gaussian: return std::normal_distribution<double>(0.0, scale)(rng);
        }
        return 0.0;
    }
};

/// x_p(k+1) = A x_p + B u + w,  y_p = C x_p + v  (single output).
struct PlantModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::VectorXd x0;
    NoiseSpec process;
    NoiseSpec measurement;

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }

    void validate() const {
        if (A.rows() == 0 || A.rows() != A.cols()) throw ConfigError("must be square and non-empty", "plant.A");
        if (B.rows() != A.rows()) throw ConfigError("row count must match A", "plant.B");
        if (C.rows() != 1 || C.cols() != A.rows()) throw ConfigError("must be 1 x n_x", "plant.C");
        if (x0.size() != A.rows()) throw ConfigError("length must match A", "plant.x0");
    }
};

/// x_c(k+1) = A x_c + B e,  u = C x_c + D e  with e = y_q - reference.
/// A zero reference gives the plain output-feedback form.
struct ControllerModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    Eigen::VectorXd x0;
    double reference = 0.0;

    void validate(const PlantModel& plant) const {
        const auto nu = plant.inputs();
        if (A.rows() != A.cols()) throw ConfigError("must be square", "controller.A");
        if (B.rows() != A.rows() || B.cols() != 1) throw ConfigError("must be n_c x 1", "controller.B");
        if (C.rows() != nu || C.cols() != A.rows()) throw ConfigError("must be n_u x n_c", "controller.C");
        if (D.rows() != nu || D.cols() != 1) throw ConfigError("must be n_u x 1", "controller.D");
        if (x0.size() != A.rows()) throw ConfigError("length must match A", "controller.x0");
        if (!std::isfinite(reference)) throw ConfigError("must be finite", "controller.reference");
    }
};

/// x_r(k+1) = A_r x_r + B_r u + K_r y_q,  y_r = C_r x_r + L_r y_q.
struct DetectorModel {
    Eigen::MatrixXd A_r;
    Eigen::MatrixXd B_r;
    Eigen::MatrixXd K_r;
    Eigen::MatrixXd C_r;
    Eigen::MatrixXd L_r;
    Eigen::VectorXd x0;
    double threshold = std::numeric_limits<double>::infinity();

    /// Luenberger observer of the plant; residual y_q - C x_hat.
    static DetectorModel luenberger(const PlantModel& plant, const Eigen::MatrixXd& gain) {
        if (gain.rows() != plant.states() || gain.cols() != 1) {
            throw ConfigError("observer gain must be n_x x 1", "detector.gain");
        }
        DetectorModel d;
        d.A_r = plant.A - gain * plant.C;
        d.B_r = plant.B;
        d.K_r = gain;
        d.C_r = -plant.C;
        d.L_r = Eigen::MatrixXd::Identity(1, 1);
        d.x0 = plant.x0;
        return d;
    }

    void validate(const PlantModel& plant) const {
        const auto n = A_r.rows();
        if (n == 0 || A_r.cols() != n) throw ConfigError("must be square and non-empty", "detector.A_r");
        if (B_r.rows() != n || B_r.cols() != plant.inputs()) throw ConfigError("must be n_r x n_u", "detector.B_r");
        if (K_r.rows() != n || K_r.cols() != 1) throw ConfigError("must be n_r x 1", "detector.K_r");
        if (C_r.rows() != 1 || C_r.cols() != n) throw ConfigError("must be 1 x n_r", "detector.C_r");
        if (L_r.rows() != 1 || L_r.cols() != 1) throw ConfigError("must be 1 x 1", "detector.L_r");
        if (x0.size() != n) throw ConfigError("length must match A_r", "detector.x0");
        if (!(spectral_radius(A_r) < 1.0)) throw ConfigError("A_r must be Schur stable", "detector.A_r");
        if (!(threshold >= 0.0)) throw ConfigError("must be non-negative", "detector.threshold");
    }
};

struct AttackSpec {
    enum class Kind { none, replay, bias, injection };
    Kind kind = Kind::none;
    std::uint64_t start = 0;   // k_a
    std::uint64_t window = 0;  // N_a
    double magnitude = 0.0;    // bias offset, or injection gain on the window mean
};

/// Channel output for one step. `history` holds y_w(0 .. k-1).
struct AttackOutcome {
    double received = 0.0;
    bool deferred = false;  // active but not enough recorded history yet
};

/// y~_w(k) = y_w(k) + beta(k - k_a) phi_y(Y_w[k-N_a:k], k).
/// Replay substitutes y_w(k - N_a), written as the additive difference.
inline AttackOutcome apply_attack(double y_w, std::span<const double> history, const AttackSpec& spec,
                                  std::uint64_t k) {
    using Kind = AttackSpec::Kind;
    if (spec.kind == Kind::none || k < spec.start) return {y_w, false};
    switch (spec.kind) {
        case Kind::bias: return {y_w + spec.magnitude, false};
        case Kind::replay: {
            if (spec.window == 0 || history.size() < spec.window) return {y_w, true};
            // phi = y_w(k - N_a) - y_w(k); returned directly so the replay is bit-exact
            return {history[history.size() - spec.window], false};
        }
        case Kind::injection: {
            if (history.size() < spec.window) return {y_w, true};
            double sum = y_w;
            for (std::size_t i = history.size() - spec.window; i < history.size(); ++i) sum += history[i];
            const double mean = sum / static_cast<double>(spec.window + 1);
            return {y_w + spec.magnitude * mean, false};
        }
        case Kind::none: break;
    }
    return {y_w, false};
}

struct PlantStep {
    Eigen::VectorXd next;
    double y = 0.0;
};

inline double plant_output(const PlantModel& p, const Eigen::VectorXd& x, double v) {
    return (p.C * x)(0) + v;
}

inline PlantStep plant_step(const PlantModel& p, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& w, double v) {
    if (x.size() != p.states() || u.size() != p.inputs() || w.size() != p.states()) {
        throw ConfigError("plant_step: dimension mismatch");
    }
    return {p.A * x + p.B * u + w, plant_output(p, x, v)};
}

struct ControllerStep {
    Eigen::VectorXd next;
    Eigen::VectorXd u;
};

inline ControllerStep controller_step(const ControllerModel& c, const Eigen::VectorXd& x, double y_q) {
    if (x.size() != c.A.rows()) throw ConfigError("controller_step: dimension mismatch");
    const double e = y_q - c.reference;
    return {c.A * x + c.B.col(0) * e, c.C * x + c.D.col(0) * e};
}

struct DetectorStep {
    Eigen::VectorXd next;
    double residual = 0.0;
};

inline DetectorStep detector_step(const DetectorModel& d, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  double y_q) {
    if (x.size() != d.A_r.rows() || u.size() != d.B_r.cols()) {
        throw ConfigError("detector_step: dimension mismatch");
    }
    return {d.A_r * x + d.B_r * u + d.K_r.col(0) * y_q, (d.C_r * x)(0) + d.L_r(0, 0) * y_q};
}

struct WatermarkSetup {
    FirParams initial{{1.0, 0.0}};
    bool switching = false;
    std::optional<SwitchingConfig> config;
    TriggerRule trigger = PeriodicTrigger{50};
};

struct Scenario {
    PlantModel plant;
    ControllerModel controller;
    DetectorModel detector;
    WatermarkSetup watermark;
    AttackSpec attack;
    std::uint64_t horizon = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Closed loop with identity watermark: [x_p; x_c] transition matrix.
inline Eigen::MatrixXd closed_loop_matrix(const PlantModel& p, const ControllerModel& c) {
    const auto nx = p.states();
    const auto nc = c.A.rows();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nx + nc, nx + nc);
    m.topLeftCorner(nx, nx) = p.A + p.B * c.D * p.C;
    m.topRightCorner(nx, nc) = p.B * c.C;
    m.bottomLeftCorner(nc, nx) = c.B * p.C;
    m.bottomRightCorner(nc, nc) = c.A;
    return m;
}

inline void Scenario::validate() const {
    plant.validate();
    controller.validate(plant);
    detector.validate(plant);
    if (!(spectral_radius(closed_loop_matrix(plant, controller)) < 1.0)) {
        throw ConfigError("closed loop is not Schur stable", "controller");
    }
    if (const auto r = validate_theta(watermark.initial); !r) {
        throw ConfigError(r.message, "watermark.initial_theta");
    }
    if (watermark.switching) {
        if (!watermark.config) throw ConfigError("switching enabled without a config", "watermark.config");
        watermark.config->validate();
        if (watermark.config->n_h != watermark.initial.order()) {
            throw ConfigError("order differs from the switching config's n_h", "watermark.initial_theta");
        }
    }
    if (attack.kind == AttackSpec::Kind::replay && attack.window == 0) {
        throw ConfigError("replay window must be positive", "attack.window");
    }
    if (horizon == 0) throw ConfigError("must be positive", "horizon");
}

enum SwitchFlag : unsigned { kNoSwitch = 0, kGeneratorSwitch = 1, kRemoverSwitch = 2 };

struct TraceRow {
    std::uint64_t k = 0;
    double y_p = 0.0;
    double y_w = 0.0;
    double y_w_tilde = 0.0;
    double y_q = 0.0;
    double u = 0.0;  // first control input
    double y_r = 0.0;
    double y_r_bar = 0.0;
    bool alarm = false;
    unsigned switched = kNoSwitch;  // bitmask of SwitchFlag
    std::size_t theta_index = 0;    // into SimTrace::generator_thetas
};

struct SimTrace {
    std::vector<TraceRow> rows;
    std::vector<FirParams> generator_thetas;  // [0] is the initial parameter vector
    std::vector<FirParams> remover_thetas;
    std::vector<std::uint64_t> generator_switches;
    std::vector<std::uint64_t> remover_switches;
    std::vector<std::string> warnings;

    std::vector<std::uint64_t> alarm_steps() const {
        std::vector<std::uint64_t> out;
        for (const auto& r : rows) {
            if (r.alarm) out.push_back(r.k);
        }
        return out;
    }

    double max_reconstruction_error() const {
        double e = 0.0;
        for (const auto& r : rows) e = std::max(e, std::abs(r.y_q - r.y_p));
        return e;
    }
};

namespace detail {

inline void check_finite_bounded(const Eigen::VectorXd& v, const char* block, std::uint64_t k) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i)) || std::abs(v(i)) > kDivergenceLimit) {
            throw DivergenceError(block, static_cast<long>(k));
        }
    }
}

inline void check_finite_bounded(double v, const char* block, std::uint64_t k) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) throw DivergenceError(block, static_cast<long>(k));
}

}  // namespace detail

/// Runs the loop for `horizon` steps. Per-sample order:
/// plant output -> generator -> channel/attack -> remover -> detector output
/// -> controller -> state updates. Deterministic given the seed.
inline SimTrace run_scenario(const Scenario& sc, std::uint64_t horizon, std::uint64_t seed) {
    sc.validate();
    std::mt19937_64 rng(seed);

    std::optional<SwitchingFunction> sigma_fn;
    if (sc.watermark.switching) sigma_fn.emplace(*sc.watermark.config);

    auto pair = make_pair(sc.watermark.initial);
    SwitchProtocol gen_protocol(sc.watermark.trigger);
    SwitchProtocol rem_protocol(sc.watermark.trigger);

    Eigen::VectorXd xp = sc.plant.x0;
    Eigen::VectorXd xc = sc.controller.x0;
    Eigen::VectorXd xr = sc.detector.x0;
    Eigen::VectorXd w(sc.plant.states());

    SimTrace trace;
    trace.rows.reserve(horizon);
    trace.generator_thetas.push_back(sc.watermark.initial);
    trace.remover_thetas.push_back(sc.watermark.initial);
    std::vector<double> channel_history;
    channel_history.reserve(horizon);
    bool warned_deferred = false;

    double y_p_prev = 0.0;
    double y_q_prev = 0.0;
    for (std::uint64_t k = 0; k < horizon; ++k) {
        TraceRow row;
        row.k = k;

        const double v = sc.plant.measurement.sample(rng);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = sc.plant.process.sample(rng);

        row.y_p = plant_output(sc.plant, xp, v);
        detail::check_finite_bounded(row.y_p, "plant", k);

        if (sigma_fn && gen_protocol.check(k, y_p_prev)) {
            pair.generator.set_params((*sigma_fn)(y_p_prev));
            trace.generator_thetas.push_back(pair.generator.params());
            trace.generator_switches.push_back(k);
            row.switched |= kGeneratorSwitch;
        }
        row.theta_index = trace.generator_thetas.size() - 1;
        row.y_w = pair.generator.step(row.y_p);
        detail::check_finite_bounded(row.y_w, "generator", k);

        const auto attacked = apply_attack(row.y_w, channel_history, sc.attack, k);
        if (attacked.deferred && !warned_deferred) {
            trace.warnings.push_back("attack activation deferred at step " + std::to_string(k) +
                                     ": fewer than N_a recorded samples");
            warned_deferred = true;
        }
        row.y_w_tilde = attacked.received;
        channel_history.push_back(row.y_w);

        if (sigma_fn && rem_protocol.check(k, y_q_prev)) {
            pair.remover.set_params((*sigma_fn)(y_q_prev));
            trace.remover_thetas.push_back(pair.remover.params());
            trace.remover_switches.push_back(k);
            row.switched |= kRemoverSwitch;
        }
        row.y_q = pair.remover.step(row.y_w_tilde);
        detail::check_finite_bounded(row.y_q, "remover", k);

        const auto det = detector_step(sc.detector, xr, Eigen::VectorXd::Zero(sc.plant.inputs()), row.y_q);
        row.y_r = det.residual;
        row.y_r_bar = sc.detector.threshold;
        row.alarm = std::abs(row.y_r) > row.y_r_bar;

        const auto ctrl = controller_step(sc.controller, xc, row.y_q);
        row.u = ctrl.u.size() > 0 ? ctrl.u(0) : 0.0;

        xr = detector_step(sc.detector, xr, ctrl.u, row.y_q).next;
        xc = ctrl.next;
        xp = plant_step(sc.plant, xp, ctrl.u, w, v).next;
        detail::check_finite_bounded(xr, "detector", k);
        detail::check_finite_bounded(xc, "controller", k);
        detail::check_finite_bounded(xp, "plant", k);

        y_p_prev = row.y_p;
        y_q_prev = row.y_q;
        trace.rows.push_back(row);
    }
    return trace;
}

inline SimTrace run_scenario(const Scenario& sc) { return run_scenario(sc, sc.horizon, sc.seed); }

struct CalibrationSpec {
    std::size_t runs = 100;
    double quantile = 1.0;
    double safety_factor = 1.2;
    double floor = 1e-6;  // used when the noise-free residual is identically zero
    std::uint64_t first_seed = 1'000'000;
};

/// Constant threshold from attack-free runs: quantile of |y_r| times a safety factor.
inline double calibrate_threshold(const Scenario& sc, const CalibrationSpec& spec = {}) {
    if (sc.attack.kind != AttackSpec::Kind::none) {
        throw UsageError("threshold calibration needs an attack-free scenario");
    }
    if (spec.runs == 0 || !(spec.quantile > 0.0 && spec.quantile <= 1.0) || !(spec.safety_factor > 0.0)) {
        throw ConfigError("calibration needs runs >= 1, quantile in (0, 1], safety factor > 0", "calibration");
    }
    Scenario probe = sc;
    probe.detector.threshold = std::numeric_limits<double>::infinity();
    std::vector<double> magnitudes;
    magnitudes.reserve(spec.runs * sc.horizon);
    for (std::size_t i = 0; i < spec.runs; ++i) {
        const auto trace = run_scenario(probe, sc.horizon, spec.first_seed + i);
        for (const auto& r : trace.rows) magnitudes.push_back(std::abs(r.y_r));
    }
    std::sort(magnitudes.begin(), magnitudes.end());
    const auto n = magnitudes.size();
    auto rank = static_cast<std::size_t>(std::ceil(spec.quantile * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    const double level = magnitudes[rank - 1] * spec.safety_factor;
    return std::max(level, spec.floor);
}

// ---------------------------------------------------------------------------
// Scenario files

namespace detail {

inline Eigen::MatrixXd read_matrix(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty array of rows", path);
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array()) throw ConfigError("expected nested arrays", path);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError("ragged matrix row", rp);
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = read_number<double>(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

inline Eigen::VectorXd read_eigen_vector(const nlohmann::json& j, const std::string& path) {
    const auto v = read_vector(j, path);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline NoiseSpec read_noise(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("expected an object", path);
    const auto kind = j.value("kind", std::string("none"));
    NoiseSpec n;
    if (kind == "none") return n;
    if (kind == "uniform") {
        n = NoiseSpec::uniform(read_number<double>(require(j, "halfwidth", path + "."), path + ".halfwidth"));
    } else if (kind == "gaussian") {
        n = NoiseSpec::gaussian(read_number<double>(require(j, "stddev", path + "."), path + ".stddev"));
    } else {
        throw ConfigError("unknown noise kind '" + kind + "'", path + ".kind");
    }
    if (!(n.scale >= 0.0)) throw ConfigError("must be non-negative", path);
    return n;
}

inline nlohmann::json load_json_file(const std::filesystem::path& p, const std::string& what) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + what + " file '" + p.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON in '") + p.string() + "': " + e.what());
    }
}

}  // namespace detail

inline SwitchingConfig load_switching_config(const std::filesystem::path& p) {
    return switching_config_from_json(detail::load_json_file(p, "switching config"));
}

/// Parses a scenario. A string-valued "watermark.config" is a path resolved
/// against `base_dir`; an object is an inline switching config.
inline Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    using detail::read_eigen_vector;
    using detail::read_matrix;
    using detail::read_number;
    using detail::require;
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");

    Scenario sc;
    sc.horizon = read_number<std::uint64_t>(require(j, "horizon", ""), "horizon");
    sc.seed = j.contains("seed") ? read_number<std::uint64_t>(j["seed"], "seed") : 0;

    const auto& pj = require(j, "plant", "");
    sc.plant.A = read_matrix(require(pj, "A", "plant."), "plant.A");
    sc.plant.B = read_matrix(require(pj, "B", "plant."), "plant.B");
    sc.plant.C = read_matrix(require(pj, "C", "plant."), "plant.C");
    sc.plant.x0 = pj.contains("x0") ? read_eigen_vector(pj["x0"], "plant.x0")
                                    : Eigen::VectorXd::Zero(sc.plant.A.rows());
    if (pj.contains("process_noise")) sc.plant.process = detail::read_noise(pj["process_noise"], "plant.process_noise");
    if (pj.contains("measurement_noise")) {
        sc.plant.measurement = detail::read_noise(pj["measurement_noise"], "plant.measurement_noise");
    }
    sc.plant.validate();

    const auto& cj = require(j, "controller", "");
    sc.controller.A = read_matrix(require(cj, "A", "controller."), "controller.A");
    sc.controller.B = read_matrix(require(cj, "B", "controller."), "controller.B");
    sc.controller.C = read_matrix(require(cj, "C", "controller."), "controller.C");
    sc.controller.D = read_matrix(require(cj, "D", "controller."), "controller.D");
    sc.controller.x0 = cj.contains("x0") ? read_eigen_vector(cj["x0"], "controller.x0")
                                         : Eigen::VectorXd::Zero(sc.controller.A.rows());
    if (cj.contains("reference")) sc.controller.reference = read_number<double>(cj["reference"], "controller.reference");

    const auto& dj = require(j, "detector", "");
    const auto dkind = dj.value("kind", std::string("luenberger"));
    if (dkind == "luenberger") {
        sc.detector = DetectorModel::luenberger(sc.plant, read_matrix(require(dj, "gain", "detector."), "detector.gain"));
    } else if (dkind == "explicit") {
        sc.detector.A_r = read_matrix(require(dj, "A_r", "detector."), "detector.A_r");
        sc.detector.B_r = read_matrix(require(dj, "B_r", "detector."), "detector.B_r");
        sc.detector.K_r = read_matrix(require(dj, "K_r", "detector."), "detector.K_r");
        sc.detector.C_r = read_matrix(require(dj, "C_r", "detector."), "detector.C_r");
        sc.detector.L_r = read_matrix(require(dj, "L_r", "detector."), "detector.L_r");
        sc.detector.x0 = dj.contains("x0") ? read_eigen_vector(dj["x0"], "detector.x0")
                                           : Eigen::VectorXd::Zero(sc.detector.A_r.rows());
    } else {
        throw ConfigError("unknown detector kind '" + dkind + "'", "detector.kind");
    }
    if (dj.contains("x0") && dkind == "luenberger") sc.detector.x0 = read_eigen_vector(dj["x0"], "detector.x0");
    if (dj.contains("threshold")) sc.detector.threshold = read_number<double>(dj["threshold"], "detector.threshold");

    if (j.contains("watermark")) {
        const auto& wj = j["watermark"];
        if (!wj.is_object()) throw ConfigError("expected an object", "watermark");
        if (wj.contains("initial_theta")) {
            sc.watermark.initial.b = detail::read_vector(wj["initial_theta"], "watermark.initial_theta");
        }
        sc.watermark.switching = wj.value("switching", false);
        if (wj.contains("config")) {
            const auto& cfgj = wj["config"];
            try {
                if (cfgj.is_string()) {
                    sc.watermark.config = load_switching_config(base_dir / cfgj.get<std::string>());
                } else {
                    sc.watermark.config = switching_config_from_json(cfgj);
                }
            } catch (const ConfigError& e) {
                throw ConfigError(e.what(), "watermark.config");
            }
        }
        if (wj.contains("trigger")) {
            const auto& tj = wj["trigger"];
            const auto kind = tj.value("kind", std::string("periodic"));
            if (kind == "periodic") {
                const auto period =
                    read_number<std::uint64_t>(require(tj, "period", "watermark.trigger."), "watermark.trigger.period");
                if (period == 0) throw ConfigError("must be positive", "watermark.trigger.period");
                sc.watermark.trigger = PeriodicTrigger{period};
            } else if (kind == "threshold") {
                sc.watermark.trigger = ThresholdTrigger{
                    read_number<double>(require(tj, "level", "watermark.trigger."), "watermark.trigger.level")};
            } else {
                throw ConfigError("unknown trigger kind '" + kind + "'", "watermark.trigger.kind");
            }
        }
    }

    if (j.contains("attack")) {
        const auto& aj = j["attack"];
        const auto kind = aj.value("kind", std::string("none"));
        if (kind == "none") {
            sc.attack.kind = AttackSpec::Kind::none;
        } else if (kind == "replay") {
            sc.attack.kind = AttackSpec::Kind::replay;
        } else if (kind == "bias") {
            sc.attack.kind = AttackSpec::Kind::bias;
        } else if (kind == "injection") {
            sc.attack.kind = AttackSpec::Kind::injection;
        } else {
            throw ConfigError("unknown attack kind '" + kind + "'", "attack.kind");
        }
        if (aj.contains("start")) sc.attack.start = read_number<std::uint64_t>(aj["start"], "attack.start");
        if (aj.contains("window")) sc.attack.window = read_number<std::uint64_t>(aj["window"], "attack.window");
        if (aj.contains("magnitude")) sc.attack.magnitude = read_number<double>(aj["magnitude"], "attack.magnitude");
    }
    sc.validate();
    return sc;
}

/// Calibration block of a scenario file, if present:
/// "detector": {"calibrate": {"runs": 100, "quantile": 1.0, "safety_factor": 1.2, "floor": 1e-6}}
inline std::optional<CalibrationSpec> calibration_from_json(const nlohmann::json& j) {
    using detail::read_number;
    if (!j.contains("detector") || !j["detector"].contains("calibrate")) return std::nullopt;
    const auto& c = j["detector"]["calibrate"];
    if (!c.is_object()) throw ConfigError("expected an object", "detector.calibrate");
    CalibrationSpec spec;
    if (c.contains("runs")) spec.runs = read_number<std::size_t>(c["runs"], "detector.calibrate.runs");
    if (c.contains("quantile")) spec.quantile = read_number<double>(c["quantile"], "detector.calibrate.quantile");
    if (c.contains("safety_factor")) {
        spec.safety_factor = read_number<double>(c["safety_factor"], "detector.calibrate.safety_factor");
    }
    if (c.contains("floor")) spec.floor = read_number<double>(c["floor"], "detector.calibrate.floor");
    if (c.contains("first_seed")) spec.first_seed = read_number<std::uint64_t>(c["first_seed"], "detector.calibrate.first_seed");
    return spec;
}

struct LoadedScenario {
    Scenario scenario;
    std::optional<CalibrationSpec> calibration;
    nlohmann::json source;
};

/// Reads a scenario file; when it asks for calibration the threshold is
/// computed on the attack-free variant of the scenario.
inline LoadedScenario load_scenario(const std::filesystem::path& p) {
    auto j = detail::load_json_file(p, "scenario");
    LoadedScenario out{scenario_from_json(j, p.parent_path()), calibration_from_json(j), j};
    if (out.calibration) {
        Scenario nominal = out.scenario;
        nominal.attack = AttackSpec{};
        out.scenario.detector.threshold = calibrate_threshold(nominal, *out.calibration);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace output

inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    os << "k,y_p,y_w,y_w_tilde,y_q,u,y_r,y_r_bar,alarm,switch\n";
    std::ostringstream line;
    line << std::setprecision(17);
    for (const auto& r : trace.rows) {
        line.str({});
        line << r.k << ',' << r.y_p << ',' << r.y_w << ',' << r.y_w_tilde << ',' << r.y_q << ',' << r.u << ','
             << r.y_r << ',' << r.y_r_bar << ',' << (r.alarm ? 1 : 0) << ',' << r.switched << '\n';
        os << line.str();
    }
}

inline nlohmann::json trace_summary(const SimTrace& trace) {
    nlohmann::json s;
    s["steps"] = trace.rows.size();
    s["alarm_steps"] = trace.alarm_steps();
    s["generator_switches"] = trace.generator_switches;
    s["remover_switches"] = trace.remover_switches;
    s["max_reconstruction_error"] = trace.max_reconstruction_error();
    s["threshold"] = trace.rows.empty() ? 0.0 : trace.rows.front().y_r_bar;
    nlohmann::json thetas = nlohmann::json::array();
    for (const auto& t : trace.generator_thetas) thetas.push_back(t.b);
    s["generator_thetas"] = thetas;
    s["warnings"] = trace.warnings;
    return s;
}

}  // namespace ecwm
