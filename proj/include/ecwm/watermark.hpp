#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ecwm/errors.hpp"
#include "ecwm/switching.hpp"

namespace ecwm {

enum class WatermarkRole { generator, remover };

/// Single-input single-output realization of one side of the watermark pair.
///
/// The generator realizes y_w(k) = sum_h b_h y_p(k - h) in companion form:
/// A_w is the down-shift, B_w = e_1, C_w = (b_1 .. b_{n_h}), D_w = b_0.
/// The remover is its inverse, (A_w - B_w C_w / b_0, B_w / b_0, -C_w / b_0, 1 / b_0).
/// With that choice both states are shift registers of past outputs of the
/// protected signal (y_p at the generator, y_q at the remover), so a parameter
/// switch keeps the registers untouched and they stay equal in nominal runs.
///
/// Note: the inverse is sometimes written with B and C sign-swapped
/// (B_q = -B_w / b_0, C_q = C_w / b_0). That realization is similar under
/// x -> -x and has the same transfer function; this one keeps x_q = x_w.
class WatermarkUnit {
public:
    WatermarkUnit(WatermarkRole role, FirParams params) : role_(role) {
        set_params(std::move(params));
        state_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params_.order()));
    }

    WatermarkRole role() const noexcept { return role_; }
    const FirParams& params() const noexcept { return params_; }
    const Eigen::VectorXd& state() const noexcept { return state_; }
    void set_state(const Eigen::VectorXd& x) {
        if (x.size() != state_.size()) throw UsageError("watermark state has the wrong dimension");
        state_ = x;
    }

    const Eigen::MatrixXd& A() const noexcept { return A_; }
    const Eigen::VectorXd& B() const noexcept { return B_; }
    const Eigen::RowVectorXd& C() const noexcept { return C_; }
    double D() const noexcept { return D_; }

    /// Swaps in new taps; the shift register is kept as-is.
    void set_params(FirParams params) {
        if (const auto report = validate_theta(params); !report) {
            throw ParameterError("invalid watermark parameters: " + report.message);
        }
        if (!params_.b.empty() && params.order() != params_.order()) {
            throw ParameterError("parameter switch cannot change the FIR order");
        }
        params_ = std::move(params);
        build_matrices();
    }

    /// One sample: returns the output and advances the state.
    double step(double input) {
        if (!std::isfinite(input)) throw InputError("watermark input is not finite");
        const double out = C_.dot(state_) + D_ * input;
        state_ = A_ * state_ + B_ * input;
        return out;
    }

private:
    void build_matrices() {
        const auto n = static_cast<Eigen::Index>(params_.order());
        const auto& b = params_.b;
        Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 1; i < n; ++i) shift(i, i - 1) = 1.0;
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
        e1(0) = 1.0;
        Eigen::RowVectorXd taps(n);
        for (Eigen::Index i = 0; i < n; ++i) taps(i) = b[static_cast<std::size_t>(i) + 1];

        if (role_ == WatermarkRole::generator) {
            A_ = shift;
            B_ = e1;
            C_ = taps;
            D_ = b[0];
        } else {
            const double inv_b0 = 1.0 / b[0];
            A_ = shift - e1 * taps * inv_b0;
            B_ = e1 * inv_b0;
            C_ = -taps * inv_b0;
            D_ = inv_b0;
        }
    }

    WatermarkRole role_;
    FirParams params_;
    Eigen::MatrixXd A_;
    Eigen::VectorXd B_;
    Eigen::RowVectorXd C_;
    double D_ = 0.0;
    Eigen::VectorXd state_;
};

struct WatermarkPair {
    WatermarkUnit generator;
    WatermarkUnit remover;
};

/// Generator and its exact inverse, both with zero state.
inline WatermarkPair make_pair(const FirParams& theta) {
    return {WatermarkUnit(WatermarkRole::generator, theta), WatermarkUnit(WatermarkRole::remover, theta)};
}

/// Synchronized parameter switch of both ends; registers are retained.
inline void apply_switch(WatermarkUnit& gen, WatermarkUnit& rem, const FirParams& theta_new) {
    if (const auto report = validate_theta(theta_new); !report) {
        throw ParameterError("invalid watermark parameters: " + report.message);
    }
    gen.set_params(theta_new);
    rem.set_params(theta_new);
}

/// Largest eigenvalue magnitude, from Eigen's Hessenberg-QR eigensolver.
inline double spectral_radius(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue iteration did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Gelfand estimate ||A^k||^(1/k) with k = 2^squarings, using normalized
/// repeated squaring. Always an upper bound on the spectral radius, and
/// converges to it as k grows; values below 1 certify Schur stability.
inline double power_radius_estimate(const Eigen::MatrixXd& a, int squarings = 12) {
    if (a.size() == 0) return 0.0;
    Eigen::MatrixXd m = a;
    double log_scale = 0.0;  // log of the factor divided out of m
    double k = 1.0;
    for (int i = 0; i < squarings; ++i) {
        const double norm = m.lpNorm<Eigen::Infinity>();
        if (norm == 0.0) return 0.0;
        m /= norm;
        log_scale += std::log(norm);
        m = m * m;
        log_scale *= 2.0;
        k *= 2.0;
    }
    // m now equals A^k / exp(log_scale) in the operator-inf norm sense
    const double rowsum = m.cwiseAbs().rowwise().sum().maxCoeff();
    if (rowsum == 0.0) return 0.0;
    return std::exp((log_scale + std::log(rowsum)) / k);
}

struct StabilityReport {
    /// Gershgorin discs of a diagonally rescaled remover matrix lie in the
    /// open unit disc: sum_{i>=1} |b_i / b0| < 1.
    bool gershgorin_pass = false;
    double disc_sum = 0.0;
    /// The admissible-set conditions themselves (see validate_theta).
    bool theta_valid = false;
    double spectral_radius = 0.0;
};

/// Remover state matrix A_q for the given taps.
inline Eigen::MatrixXd remover_state_matrix(const FirParams& theta) {
    if (theta.b.size() < 2 || theta.b[0] == 0.0) throw ParameterError("need b0 != 0 and n_h >= 1");
    const auto n = static_cast<Eigen::Index>(theta.order());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) a(i, i - 1) = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) a(0, j) = -theta.b[static_cast<std::size_t>(j) + 1] / theta.b[0];
    return a;
}

inline StabilityReport check_stability(const FirParams& theta) {
    StabilityReport r;
    r.theta_valid = static_cast<bool>(validate_theta(theta));
    const auto a = remover_state_matrix(theta);
    // Row discs of diag(t^0, t^-1, ..) A_q diag(..)^-1: row 1 has centre -b1/b0 and
    // radius sum_{j>=2} |b_j/b0| t^(j-1), the others radius 1/t. Letting t -> 1+
    // gives the condition below.
    for (std::size_t i = 1; i < theta.b.size(); ++i) r.disc_sum += std::abs(theta.b[i] / theta.b[0]);
    r.gershgorin_pass = r.disc_sum < 1.0;
    r.spectral_radius = spectral_radius(a);
    return r;
}

/// When a watermark unit switches parameters.
struct PeriodicTrigger {
    std::uint64_t period = 50;
};

/// Fires while the previous sample lies in the open set {y : y > level}.
struct ThresholdTrigger {
    double level = 0.0;
};

using TriggerRule = std::variant<PeriodicTrigger, ThresholdTrigger>;

/// Trigger evaluation plus the recorded switching-time sequence of one unit.
class SwitchProtocol {
public:
    explicit SwitchProtocol(TriggerRule rule = PeriodicTrigger{}) : rule_(rule) {
        if (const auto* p = std::get_if<PeriodicTrigger>(&rule_); p && p->period == 0) {
            throw ConfigError("switching period must be positive", "trigger.period");
        }
    }

    /// Decides whether to switch at step k given the previous protected sample.
    /// Step 0 never switches: no previous sample exists yet.
    bool fires(std::uint64_t k, double previous_sample) const {
        if (k == 0) return false;
        if (const auto* p = std::get_if<PeriodicTrigger>(&rule_)) return k % p->period == 0;
        return previous_sample > std::get<ThresholdTrigger>(rule_).level;
    }

    bool check(std::uint64_t k, double previous_sample) {
        const bool f = fires(k, previous_sample);
        if (f) times_.push_back(k);
        return f;
    }

    const TriggerRule& rule() const noexcept { return rule_; }
    const std::vector<std::uint64_t>& switch_times() const noexcept { return times_; }

private:
    TriggerRule rule_;
    std::vector<std::uint64_t> times_;
};

}  // namespace ecwm
