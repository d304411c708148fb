#include "trendlab/strategy.hpp"

#include <algorithm>
#include <cmath>

#include "trendlab/errors.hpp"

namespace trendlab::strategy {

bool Bar::valid() const {
    if (!std::isfinite(open) || !std::isfinite(high) || !std::isfinite(low) ||
        !std::isfinite(close)) {
        return false;
    }
    return low <= std::min(open, close) && high >= std::max(open, close);
}

void InstrumentSpec::validate() const {
    if (!(tick_size > 0)) throw ConfigError("tick_size must be positive");
    if (!(tick_value > 0)) throw ConfigError("tick_value must be positive");
    if (commission < 0) throw ConfigError("commission must be nonnegative");
}

std::vector<std::optional<double>> sma(std::span<const double> closes, int period) {
    if (period < 1) throw InvalidPeriodError("moving-average period must be >= 1");
    std::vector<std::optional<double>> out(closes.size());
    double running = 0;
    for (std::size_t t = 0; t < closes.size(); ++t) {
        running += closes[t];
        if (t >= static_cast<std::size_t>(period)) {
            running -= closes[t - period];
        }
        if (t + 1 >= static_cast<std::size_t>(period)) {
            out[t] = running / period;
        }
    }
    return out;
}

Signal kf_signal(double forecast, double prev_close, double offset_ticks, double tick_size) {
    double band = offset_ticks * tick_size;
    if (forecast >= prev_close + band) return Signal::Long;
    if (forecast <= prev_close - band) return Signal::Short;
    return Signal::Flat;
}

Signal ma_signal(double short_avg, double long_avg, double offset_price) {
    if (short_avg > long_avg + offset_price) return Signal::Long;
    if (short_avg < long_avg - offset_price) return Signal::Short;
    return Signal::Flat;
}

std::vector<double> closes_of(std::span<const Bar> bars) {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const Bar& b : bars) out.push_back(b.close);
    return out;
}

std::vector<Signal> kf_signals(std::span<const Bar> bars, const InstrumentSpec& spec,
                               const KfStrategyParams& params,
                               std::optional<double> reference_override) {
    std::vector<double> closes = closes_of(bars);
    std::vector<kalman::Forecast> forecasts =
        kalman::filter_and_forecast(params.model, closes, reference_override);

    std::vector<Signal> out(bars.size(), Signal::Flat);
    for (std::size_t t = 0; t < forecasts.size(); ++t) {
        out[t] = kf_signal(forecasts[t].value, closes[t], params.offset_ticks, spec.tick_size);
    }
    out.back() = Signal::Flat;
    return out;
}

std::vector<Signal> ma_signals(std::span<const Bar> bars, const InstrumentSpec& spec,
                               const MaStrategyParams& params) {
    std::vector<double> closes = closes_of(bars);
    auto short_avg = sma(closes, params.short_period);
    auto long_avg = sma(closes, params.long_period);
    double offset_price = params.offset_ticks * spec.tick_size;

    std::vector<Signal> out(bars.size(), Signal::Flat);
    for (std::size_t t = 0; t < bars.size(); ++t) {
        if (short_avg[t] && long_avg[t]) {
            out[t] = ma_signal(*short_avg[t], *long_avg[t], offset_price);
        }
    }
    if (!out.empty()) out.back() = Signal::Flat;
    return out;
}

std::vector<Trade> simulate(std::span<const Bar> bars, const InstrumentSpec& spec,
                            const ExitBracket& bracket, std::span<const Signal> signals) {
    spec.validate();
    if (bars.size() < 2) throw EmptySeriesError("backtest needs at least 2 bars");
    if (signals.size() != bars.size()) {
        throw ConfigError("signal series must align with the bar series");
    }
    // An exit bracket below one tick cannot form a valid order pair; no
    // entries are taken.
    if (bracket.stop_ticks < 1 || bracket.target_ticks < 1) return {};

    const double tick = spec.tick_size;
    const std::size_t n = bars.size();
    std::vector<Trade> trades;

    std::size_t t = 0;
    while (t + 1 < n) {
        Signal sig = signals[t];
        if (sig == Signal::Flat) {
            ++t;
            continue;
        }
        const Side side = (sig == Signal::Long) ? Side::Long : Side::Short;
        const double sign = (side == Side::Long) ? 1.0 : -1.0;
        const std::size_t entry_index = t + 1;
        const double entry = bars[entry_index].open;
        const double target_level = entry + sign * bracket.target_ticks * tick;
        const double stop_level = entry - sign * bracket.stop_ticks * tick;

        Trade trade;
        trade.side = side;
        trade.entry_date = bars[entry_index].date;
        trade.entry_index = entry_index;
        trade.entry_price = entry;

        bool closed = false;
        for (std::size_t u = entry_index; u < n && !closed; ++u) {
            const Bar& bar = bars[u];
            if (u > entry_index) {
                // Gap through a level: fill at the open price, not the level.
                bool gap_stop = sign * (bar.open - stop_level) <= 0;
                bool gap_target = sign * (bar.open - target_level) >= 0;
                if (gap_stop || gap_target) {
                    trade.exit_index = u;
                    trade.exit_date = bar.date;
                    trade.exit_price = bar.open;
                    trade.reason = gap_stop ? ExitReason::Stop : ExitReason::Target;
                    trade.pnl = sign * (bar.open - entry) / tick * spec.tick_value -
                                2.0 * spec.commission;
                    closed = true;
                    break;
                }
            }
            bool hit_stop = (side == Side::Long) ? bar.low <= stop_level : bar.high >= stop_level;
            bool hit_target =
                (side == Side::Long) ? bar.high >= target_level : bar.low <= target_level;
            if (hit_stop) {
                // Stop first when one bar straddles both levels.
                trade.exit_index = u;
                trade.exit_date = bar.date;
                trade.exit_price = stop_level;
                trade.reason = ExitReason::Stop;
                trade.pnl = -bracket.stop_ticks * spec.tick_value - 2.0 * spec.commission;
                closed = true;
            } else if (hit_target) {
                trade.exit_index = u;
                trade.exit_date = bar.date;
                trade.exit_price = target_level;
                trade.reason = ExitReason::Target;
                trade.pnl = bracket.target_ticks * spec.tick_value - 2.0 * spec.commission;
                closed = true;
            }
        }
        if (!closed) {
            const Bar& last = bars[n - 1];
            trade.exit_index = n - 1;
            trade.exit_date = last.date;
            trade.exit_price = last.close;
            trade.reason = ExitReason::EndOfData;
            trade.pnl =
                sign * (last.close - entry) / tick * spec.tick_value - 2.0 * spec.commission;
        }
        trades.push_back(trade);
        // Flat again as of the exit bar's close; its signal may re-enter on
        // the following open.
        t = trade.exit_index;
    }
    return trades;
}

std::vector<Trade> run_kf(std::span<const Bar> bars, const InstrumentSpec& spec,
                          const KfStrategyParams& params,
                          std::optional<double> reference_override) {
    std::vector<Signal> signals = kf_signals(bars, spec, params, reference_override);
    return simulate(bars, spec, ExitBracket{params.stop_ticks, params.target_ticks}, signals);
}

std::vector<Trade> run_ma(std::span<const Bar> bars, const InstrumentSpec& spec,
                          const MaStrategyParams& params) {
    std::vector<Signal> signals = ma_signals(bars, spec, params);
    return simulate(bars, spec, ExitBracket{params.stop_ticks, params.target_ticks}, signals);
}

}  // namespace trendlab::strategy
