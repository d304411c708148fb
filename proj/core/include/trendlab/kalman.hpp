#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <vector>

namespace trendlab::kalman {

// Coefficients of the two-state linear-Gaussian model searched by the
// optimizer. Any real values are accepted; variance-like entries are
// projected to be nonnegative when the matrices are built, so the
// optimizer can roam an unconstrained space.
//
// Flat order (used by the optimizer vector and the p1..p15 keys of the
// params file):
//   phi11, phi12, phi22, h1, h2, l11, l21, l22, obs_var,
//   init_var1, init_var2, ctrl_gain1, ctrl_level1, ctrl_gain2, ctrl_level2
struct KalmanParams {
    // Transition Phi = [[phi11, phi12], [0, phi22]] (lower-left pinned to 0).
    double phi11 = 0, phi12 = 0, phi22 = 0;
    // Observation row H = [h1, h2].
    double h1 = 0, h2 = 0;
    // Process-noise Cholesky factor L = [[l11, 0], [l21, l22]], Q = L*Lt.
    double l11 = 0, l21 = 0, l22 = 0;
    // Observation-noise variance R (projected to >= 0).
    double obs_var = 0;
    // Initial state covariance diag(init_var1, init_var2), projected to >= 0.
    double init_var1 = 0, init_var2 = 0;
    // Control term c = [ctrl_gain1*(ctrl_level1 - k), ctrl_gain2*(ctrl_level2 - k)].
    double ctrl_gain1 = 0, ctrl_level1 = 0, ctrl_gain2 = 0, ctrl_level2 = 0;

    static constexpr int kDim = 15;

    static KalmanParams from_array(std::span<const double, kDim> flat);
    std::array<double, kDim> to_array() const;
};

// Model matrices assembled from KalmanParams. transition is upper
// triangular, process_noise is symmetric PSD by construction, initial_cov
// is diagonal nonnegative.
struct ModelMatrices {
    Eigen::Matrix2d transition;       // Phi
    Eigen::RowVector2d observation;   // H
    Eigen::Matrix2d process_noise;    // Q = L*Lt
    double observation_noise = 0;     // R >= 0
    Eigen::Matrix2d initial_cov;      // P0
    double ctrl_gain1 = 0, ctrl_level1 = 0, ctrl_gain2 = 0, ctrl_level2 = 0;
};

struct KalmanState {
    Eigen::Vector2d x = Eigen::Vector2d::Zero();   // state mean
    Eigen::Matrix2d p = Eigen::Matrix2d::Zero();   // state covariance
    int step = 0;
};

// One-step-ahead observation prediction and its innovation variance.
struct Forecast {
    double value = 0;     // H * x
    double variance = 0;  // H*P*Ht + R, floored
};

ModelMatrices build_matrices(const KalmanParams& params);

// c = (gain1*(level1 - reference), gain2*(level2 - reference)).
Eigen::Vector2d control_term(const KalmanParams& params, double reference);
Eigen::Vector2d control_term(const ModelMatrices& m, double reference);

// Innovation-variance floor: 1e-12 * max(1, forecast^2). Keeps the update
// well defined when the observation-noise parameter collapses to zero.
double variance_floor(double forecast_value);

KalmanState initial_state(const ModelMatrices& m, double first_close);

// x' = Phi*x + c, P' = Phi*P*Phit + Q (re-symmetrized).
KalmanState predict(const KalmanState& state, const ModelMatrices& m,
                    const Eigen::Vector2d& control);

Forecast forecast_observation(const KalmanState& state, const ModelMatrices& m);

// Standard correction: K = P*Ht/s, x' = x + K*(z - H*x), P' = (I - K*H)*P,
// re-symmetrized.
KalmanState update(const KalmanState& state, const ModelMatrices& m, double observed);

// Runs the full recursion over a close series. Output[t] is the forecast of
// closes[t+1] made strictly from closes[0..t]; length is closes.size() - 1.
// The control reference defaults to the most recent observed close and can
// be overridden with a constant.
std::vector<Forecast> filter_and_forecast(const KalmanParams& params,
                                          std::span<const double> closes,
                                          std::optional<double> reference_override = {});

}  // namespace trendlab::kalman
