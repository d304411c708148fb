#include "trendlab/kalman.hpp"

#include <cmath>

#include "trendlab/errors.hpp"

namespace trendlab::kalman {

KalmanParams KalmanParams::from_array(std::span<const double, kDim> flat) {
    KalmanParams p;
    p.phi11 = flat[0];
    p.phi12 = flat[1];
    p.phi22 = flat[2];
    p.h1 = flat[3];
    p.h2 = flat[4];
    p.l11 = flat[5];
    p.l21 = flat[6];
    p.l22 = flat[7];
    p.obs_var = flat[8];
    p.init_var1 = flat[9];
    p.init_var2 = flat[10];
    p.ctrl_gain1 = flat[11];
    p.ctrl_level1 = flat[12];
    p.ctrl_gain2 = flat[13];
    p.ctrl_level2 = flat[14];
    return p;
}

std::array<double, KalmanParams::kDim> KalmanParams::to_array() const {
    return {phi11, phi12, phi22,     h1,        h2,         l11,        l21,       l22,
            obs_var, init_var1, init_var2, ctrl_gain1, ctrl_level1, ctrl_gain2, ctrl_level2};
}

ModelMatrices build_matrices(const KalmanParams& params) {
    ModelMatrices m;
    m.transition << params.phi11, params.phi12, 0.0, params.phi22;
    m.observation << params.h1, params.h2;

    // Q = L*Lt keeps the process noise PSD for any real (l11, l21, l22).
    Eigen::Matrix2d chol;
    chol << params.l11, 0.0, params.l21, params.l22;
    m.process_noise = chol * chol.transpose();

    m.observation_noise = std::max(params.obs_var, 0.0);
    m.initial_cov = Eigen::Vector2d(std::max(params.init_var1, 0.0),
                                    std::max(params.init_var2, 0.0))
                        .asDiagonal();
    m.ctrl_gain1 = params.ctrl_gain1;
    m.ctrl_level1 = params.ctrl_level1;
    m.ctrl_gain2 = params.ctrl_gain2;
    m.ctrl_level2 = params.ctrl_level2;
    return m;
}

Eigen::Vector2d control_term(const KalmanParams& params, double reference) {
    return {params.ctrl_gain1 * (params.ctrl_level1 - reference),
            params.ctrl_gain2 * (params.ctrl_level2 - reference)};
}

Eigen::Vector2d control_term(const ModelMatrices& m, double reference) {
    return {m.ctrl_gain1 * (m.ctrl_level1 - reference),
            m.ctrl_gain2 * (m.ctrl_level2 - reference)};
}

double variance_floor(double forecast_value) {
    return 1e-12 * std::max(1.0, forecast_value * forecast_value);
}

namespace {

Eigen::Matrix2d symmetrize(const Eigen::Matrix2d& m) {
    return 0.5 * (m + m.transpose());
}

}  // namespace

KalmanState initial_state(const ModelMatrices& m, double first_close) {
    KalmanState s;
    s.x << first_close, 0.0;
    s.p = m.initial_cov;
    s.step = 0;
    return s;
}

KalmanState predict(const KalmanState& state, const ModelMatrices& m,
                    const Eigen::Vector2d& control) {
    KalmanState next;
    next.x = m.transition * state.x + control;
    next.p = symmetrize(m.transition * state.p * m.transition.transpose() + m.process_noise);
    next.step = state.step + 1;
    return next;
}

Forecast forecast_observation(const KalmanState& state, const ModelMatrices& m) {
    Forecast f;
    f.value = m.observation * state.x;
    double s = (m.observation * state.p * m.observation.transpose())(0) + m.observation_noise;
    f.variance = std::max(s, variance_floor(f.value));
    return f;
}

KalmanState update(const KalmanState& state, const ModelMatrices& m, double observed) {
    Forecast f = forecast_observation(state, m);
    Eigen::Vector2d gain = state.p * m.observation.transpose() / f.variance;
    KalmanState next;
    next.x = state.x + gain * (observed - f.value);
    next.p = symmetrize((Eigen::Matrix2d::Identity() - gain * m.observation) * state.p);
    next.step = state.step;
    return next;
}

std::vector<Forecast> filter_and_forecast(const KalmanParams& params,
                                          std::span<const double> closes,
                                          std::optional<double> reference_override) {
    if (closes.size() < 2) {
        throw EmptySeriesError("filter needs at least 2 closes");
    }
    for (double c : closes) {
        if (!std::isfinite(c)) {
            throw NonFiniteInputError("non-finite close in input series");
        }
    }

    ModelMatrices m = build_matrices(params);
    KalmanState state = initial_state(m, closes[0]);

    std::vector<Forecast> out;
    out.reserve(closes.size() - 1);
    for (std::size_t t = 0; t + 1 < closes.size(); ++t) {
        double reference = reference_override.value_or(closes[t]);
        state = predict(state, m, control_term(m, reference));
        out.push_back(forecast_observation(state, m));
        state = update(state, m, closes[t + 1]);
    }
    return out;
}

}  // namespace trendlab::kalman
