#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trendlab/calendar.hpp"
#include "trendlab/strategy.hpp"

namespace trendlab::data {

struct BarSeries {
    std::string instrument;
    std::vector<strategy::Bar> bars;

    void validate() const;  // strictly increasing dates + per-bar invariants
};

// Chronological split: train = [train_start, train_end), test = [train_end, test_end).
struct SplitSpec {
    Date train_start, train_end, test_end;

    void validate() const;
};

// CSV schema: header naming date,open,high,low,close (any column order,
// case-insensitive; volume and extra columns ignored), RFC-4180 quoting,
// dot decimal separator. Rows are normalized to ascending date.
BarSeries load_csv(const std::filesystem::path& path);
void save_csv(const BarSeries& series, const std::filesystem::path& path);

std::pair<BarSeries, BarSeries> split(const BarSeries& series, const SplitSpec& spec);

enum class SynthKind { Gbm, TrendPlusNoise, SinePlusDrift };

// Generator settings. Closes follow the chosen process; opens carry the
// previous close; highs/lows pad the open/close hull with |N(0, intrabar)|
// noise so bar invariants always hold. The optional *2 fields switch the
// drift/period at the midpoint bar (regime change).
struct SynthParams {
    SynthKind kind = SynthKind::Gbm;
    int bars = 252;
    double initial_price = 2500.0;
    Date start_date = Date(2020, 1, 1);
    double drift = 0.0;      // gbm: annual drift; sine: per-bar drift
    double vol = 0.0;        // gbm: annual volatility
    double slope = 0.0;      // trend_plus_noise: per-bar slope
    double noise = 0.0;      // close noise stddev
    double amplitude = 0.0;  // sine amplitude
    double period = 20.0;    // sine period in bars
    double intrabar = 0.0;   // high/low padding stddev
    std::optional<double> drift2;
    std::optional<double> period2;
};

BarSeries synth_series(const SynthParams& params, std::uint64_t seed);

// Parses "kind:key=value,key=value" specs, e.g.
//   "sine:n=252,s0=2500,amp=30,period=40,drift=0.4,noise=1,intrabar=2,start=2020-01-01"
// keys: n, s0, start, drift, drift2, vol, slope, noise, amp, period,
// period2, intrabar.
SynthParams parse_synth_spec(std::string_view spec);

}  // namespace trendlab::data
