#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trendlab/calendar.hpp"
#include "trendlab/kalman.hpp"

namespace trendlab::strategy {

struct Bar {
    Date date;
    double open = 0, high = 0, low = 0, close = 0;

    bool valid() const;  // low <= min(open, close), high >= max(open, close), finite
};

struct InstrumentSpec {
    double tick_size = 0.25;   // price units per tick
    double tick_value = 12.5;  // currency per tick per contract
    double commission = 0.0;   // currency per trade side
    std::string currency = "EUR";

    void validate() const;  // throws ConfigError
};

enum class Signal { Flat, Long, Short };
enum class Side { Long, Short };
enum class ExitReason { Target, Stop, EndOfData };

struct KfStrategyParams {
    kalman::KalmanParams model;
    double offset_ticks = 0;  // signal dead band, in ticks
    int stop_ticks = 1;
    int target_ticks = 1;
};

struct MaStrategyParams {
    int short_period = 1;
    int long_period = 2;
    double offset_ticks = 0;
    int stop_ticks = 1;
    int target_ticks = 1;
};

struct Trade {
    Side side = Side::Long;
    Date entry_date, exit_date;
    std::size_t entry_index = 0, exit_index = 0;
    double entry_price = 0, exit_price = 0;
    ExitReason reason = ExitReason::EndOfData;
    double pnl = 0;  // currency, commission on both sides included
};

// Simple moving average; entries before the window fills are absent.
std::vector<std::optional<double>> sma(std::span<const double> closes, int period);

// Long when the forecast clears the previous close by the tick band,
// short when it undercuts it; the band is inclusive.
Signal kf_signal(double forecast, double prev_close, double offset_ticks, double tick_size);

// Crossover with a price-unit dead band; strict inequalities.
Signal ma_signal(double short_avg, double long_avg, double offset_price);

// Per-bar signals; signals[t] is decided on bar t's close. The last entry
// is always Flat (nothing can be entered after the final close).
std::vector<Signal> kf_signals(std::span<const Bar> bars, const InstrumentSpec& spec,
                               const KfStrategyParams& params,
                               std::optional<double> reference_override = {});
std::vector<Signal> ma_signals(std::span<const Bar> bars, const InstrumentSpec& spec,
                               const MaStrategyParams& params);

struct ExitBracket {
    int stop_ticks = 1;
    int target_ticks = 1;
};

// Single-position engine. Signal on bar t's close, fill at bar t+1's open,
// one contract. Exits at the bracket levels on intrabar touches (stop
// checked first when a bar straddles both), at the open on gaps through a
// level, and at the final close when data runs out. A bracket with
// stop_ticks or target_ticks < 1 cannot form an exit, so no trades are
// entered. Throws EmptySeriesError for fewer than 2 bars.
std::vector<Trade> simulate(std::span<const Bar> bars, const InstrumentSpec& spec,
                            const ExitBracket& bracket, std::span<const Signal> signals);

std::vector<Trade> run_kf(std::span<const Bar> bars, const InstrumentSpec& spec,
                          const KfStrategyParams& params,
                          std::optional<double> reference_override = {});
std::vector<Trade> run_ma(std::span<const Bar> bars, const InstrumentSpec& spec,
                          const MaStrategyParams& params);

std::vector<double> closes_of(std::span<const Bar> bars);

}  // namespace trendlab::strategy
