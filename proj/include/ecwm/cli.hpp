#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ecwm/analysis.hpp"
#include "ecwm/cps_sim.hpp"
#include "ecwm/elliptic_curve.hpp"
#include "ecwm/svg.hpp"
#include "ecwm/switching.hpp"

namespace ecwm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDivergence = 3, kIoError = 4 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Files produced by a command, written only once the command has succeeded.
using OutputFiles = std::vector<std::pair<std::string, std::string>>;

inline void write_outputs(const std::filesystem::path& dir, const OutputFiles& files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, content] : files) {
        const auto target = dir / name;
        const auto tmp = dir / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw IoError("cannot write '" + tmp.string() + "'");
            out << content;
            if (!out) throw IoError("write failed for '" + tmp.string() + "'");
        }
        std::filesystem::rename(tmp, target, ec);
        if (ec) throw IoError("cannot move output into place: " + target.string());
    }
}

/// Maps library exceptions to exit codes and prints the message to `err`.
inline int guarded(std::ostream& err, const std::function<void()>& body) {
    try {
        body();
        return kOk;
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kDivergence;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
}

inline nlohmann::json point_json(const CurvePoint& p) {
    if (p.is_infinity()) return "O";
    return nlohmann::json::array({p.x().value(), p.y().value()});
}

/// Point list with per-point order and cofactor.
inline nlohmann::json curve_report(const CurveSpec& c) {
    const auto points = enumerate_points(c);
    const std::uint64_t order = points.size();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : points) {
        const auto n = point_order(p, c);
        rows.push_back({{"point", point_json(p)}, {"order", n}, {"cofactor", order / n}});
    }
    return {{"curve", {{"s", c.modulus()}, {"a", c.a().value()}, {"b", c.b().value()}}},
            {"order", order},
            {"affine_points", order - 1},
            {"points", rows}};
}

inline int cmd_curve(std::int64_t a, std::int64_t b, std::uint64_t s, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { out << curve_report(CurveSpec(a, b, s)).dump(2) << '\n'; });
}

inline nlohmann::json switch_eval_report(double y, const SwitchingConfig& cfg) {
    const SwitchingFunction fn(cfg);
    const auto t = fn.trace(y);
    const auto verdict = validate_theta(t.theta);
    return {{"y", y},
            {"scaled", {t.scaled.x, t.scaled.y}},
            {"P", point_json(t.generator)},
            {"S", point_json(t.multiple)},
            {"fallback", t.fallback},
            {"b_raw", t.raw},
            {"theta", t.theta.b},
            {"theta_valid", verdict.valid},
            {"warnings", cfg.validate()}};
}

inline int cmd_switch_eval(double y, const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] { out << switch_eval_report(y, load_switching_config(config)).dump(2) << '\n'; });
}

inline std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// One CSV per reference (`sweep_r<index>.csv`) plus `sweep_summary.json`.
inline OutputFiles sweep_outputs(const SwitchingFunction& fn, const SweepSpec& spec, bool with_svg) {
    const auto results = sensitivity_sweep(fn, spec);
    const auto& points = fn.nearest_map().points();
    OutputFiles files;
    nlohmann::json summary;
    summary["uniform_rel_freq"] = 1.0 / static_cast<double>(points.size());
    summary["affine_points"] = points.size();
    summary["n_realizations"] = spec.n_realizations;
    summary["noise_halfwidth"] = spec.noise_halfwidth;
    summary["seed"] = spec.seed;
    std::vector<bool> union_reached(points.size(), false);
    nlohmann::json per_ref = nlohmann::json::array();
    for (std::size_t r = 0; r < results.size(); ++r) {
        const auto& res = results[r];
        std::ostringstream csv;
        csv << "point_x,point_y,count,rel_freq\n";
        for (std::size_t i = 0; i < points.size(); ++i) {
            csv << points[i].x().value() << ',' << points[i].y().value() << ',' << res.counts[i] << ','
                << format_number(res.rel_freq(i)) << '\n';
            if (res.counts[i] > 0) union_reached[i] = true;
        }
        const std::string name = "sweep_r" + std::to_string(r) + ".csv";
        files.emplace_back(name, csv.str());
        per_ref.push_back({{"reference", res.reference},
                           {"file", name},
                           {"reached", res.reached()},
                           {"entropy_bits", res.entropy_bits()}});
    }
    summary["references"] = per_ref;
    summary["reached_union"] = std::count(union_reached.begin(), union_reached.end(), true);
    files.emplace_back("sweep_summary.json", summary.dump(2) + "\n");
    if (with_svg) files.emplace_back("sweep.svg", svg::render_sweep(fn.nearest_map(), results));
    return files;
}

inline int cmd_sensitivity_sweep(const SweepSpec& spec, const std::filesystem::path& config,
                                 const std::filesystem::path& out_dir, bool with_svg, std::ostream& out,
                                 std::ostream& err) {
    return guarded(err, [&] {
        const SwitchingFunction fn(load_switching_config(config));
        const auto files = sweep_outputs(fn, spec, with_svg);
        write_outputs(out_dir, files);
        for (const auto& f : files) out << (out_dir / f.first).string() << '\n';
    });
}

/// `voronoi.csv` with columns gx,gy,seed_x,seed_y.
inline OutputFiles voronoi_outputs(const CurveSpec& c, std::size_t grid, bool with_svg) {
    const NearestPointMap map(c);
    const auto cells = voronoi_assignment(map, c.modulus(), grid);
    std::ostringstream csv;
    csv << "gx,gy,seed_x,seed_y\n";
    for (const auto& cell : cells) {
        const auto& p = map.points()[cell.seed];
        csv << format_number(cell.gx) << ',' << format_number(cell.gy) << ',' << p.x().value() << ','
            << p.y().value() << '\n';
    }
    OutputFiles files{{"voronoi.csv", csv.str()}};
    if (with_svg) files.emplace_back("voronoi.svg", svg::render_voronoi(map, c.modulus(), cells, grid));
    return files;
}

inline int cmd_voronoi(std::int64_t a, std::int64_t b, std::uint64_t s, std::size_t grid,
                       const std::filesystem::path& out_dir, bool with_svg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto files = voronoi_outputs(CurveSpec(a, b, s), grid, with_svg);
        write_outputs(out_dir, files);
        for (const auto& f : files) out << (out_dir / f.first).string() << '\n';
    });
}

/// `trace.csv`, `trace.meta.json` (scenario metadata) and `summary.json`.
inline OutputFiles sim_outputs(const LoadedScenario& loaded) {
    const auto trace = run_scenario(loaded.scenario);
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    nlohmann::json meta;
    meta["scenario"] = loaded.source;
    meta["horizon"] = loaded.scenario.horizon;
    meta["seed"] = loaded.scenario.seed;
    meta["threshold"] = loaded.scenario.detector.threshold;
    meta["threshold_calibrated"] = loaded.calibration.has_value();
    meta["columns"] = {"k", "y_p", "y_w", "y_w_tilde", "y_q", "u", "y_r", "y_r_bar", "alarm", "switch"};
    meta["switch_bits"] = {{"generator", static_cast<unsigned>(kGeneratorSwitch)},
                           {"remover", static_cast<unsigned>(kRemoverSwitch)}};
    return {{"trace.csv", csv.str()},
            {"trace.meta.json", meta.dump(2) + "\n"},
            {"summary.json", trace_summary(trace).dump(2) + "\n"}};
}

inline int cmd_sim(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                   std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto loaded = load_scenario(scenario);
        if (seed) loaded.scenario.seed = *seed;
        const auto files = sim_outputs(loaded);
        write_outputs(out_dir, files);
        out << files.back().second;
    });
}

}  // namespace ecwm::cli
