#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "ecwm/switching.hpp"

namespace ecwm {

/// Sensitivity sweep of the curve projection around fixed operating points.
struct SweepSpec {
    std::vector<double> references{0.0, 1.0, 10.0, 100.0};
    std::size_t n_realizations = 500;
    double noise_halfwidth = 0.05;
    std::uint64_t seed = 1;

    void validate() const {
        if (references.empty()) throw ConfigError("need at least one reference", "refs");
        if (n_realizations < 1) throw ConfigError("must be >= 1", "n");
        if (!(noise_halfwidth > 0.0) || !std::isfinite(noise_halfwidth)) throw ConfigError("must be > 0", "halfwidth");
    }
};

struct SweepResult {
    double reference = 0.0;
    std::vector<std::size_t> counts;  // aligned with NearestPointMap::points()
    std::size_t total = 0;

    double rel_freq(std::size_t i) const {
        return total == 0 ? 0.0 : static_cast<double>(counts[i]) / static_cast<double>(total);
    }

    std::size_t reached() const {
        std::size_t n = 0;
        for (auto c : counts) n += c > 0 ? 1 : 0;
        return n;
    }

    /// Shannon entropy in bits of the empirical hit distribution.
    double entropy_bits() const {
        double h = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double p = rel_freq(i);
            if (p > 0.0) h -= p * std::log2(p);
        }
        return h;
    }
};

/// y = r + v with v ~ U[-h, h]; each realization is mapped to P = alpha(y).
/// Each reference draws from its own stream seeded by (seed, reference index).
inline std::vector<SweepResult> sensitivity_sweep(const SwitchingFunction& fn, const SweepSpec& spec) {
    spec.validate();
    const auto& map = fn.nearest_map();
    std::vector<SweepResult> results;
    for (std::size_t ri = 0; ri < spec.references.size(); ++ri) {
        SweepResult res;
        res.reference = spec.references[ri];
        res.counts.assign(map.points().size(), 0);
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32U),
                          static_cast<std::uint32_t>(ri)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> noise(-spec.noise_halfwidth, spec.noise_halfwidth);
        for (std::size_t n = 0; n < spec.n_realizations; ++n) {
            const double y = res.reference + noise(rng);
            ++res.counts[map.nearest_index(alpha1(y, fn.config()))];
        }
        res.total = spec.n_realizations;
        results.push_back(std::move(res));
    }
    return results;
}

struct VoronoiCell {
    double gx = 0.0;
    double gy = 0.0;
    std::size_t seed = 0;  // index into NearestPointMap::points()
};

/// Samples the grid {i * s / resolution} over [0, s)^2 and assigns each sample
/// to its nearest affine curve point.
inline std::vector<VoronoiCell> voronoi_assignment(const NearestPointMap& map, std::uint64_t modulus,
                                                   std::size_t resolution) {
    if (resolution == 0) throw ConfigError("grid resolution must be positive", "grid");
    const double s = static_cast<double>(modulus);
    const double step = s / static_cast<double>(resolution);
    std::vector<VoronoiCell> cells;
    cells.reserve(resolution * resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            const ScaledPoint q{static_cast<double>(i) * step, static_cast<double>(j) * step};
            cells.push_back({q.x, q.y, map.nearest_index(q)});
        }
    }
    return cells;
}

/// Number of grid samples owned by each seed.
inline std::vector<std::size_t> voronoi_cell_sizes(const std::vector<VoronoiCell>& cells, std::size_t seeds) {
    std::vector<std::size_t> sizes(seeds, 0);
    for (const auto& c : cells) ++sizes.at(c.seed);
    return sizes;
}

}  // namespace ecwm
