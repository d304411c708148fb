#include "trendlab/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "trendlab/errors.hpp"
#include "trendlab/text.hpp"

namespace trendlab::data {

void BarSeries::validate() const {
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (!bars[i].valid()) {
            throw ValidationError("bar " + std::to_string(i) + " (" + bars[i].date.to_string() +
                                  ") violates OHLC constraints");
        }
        if (i > 0 && !(bars[i - 1].date < bars[i].date)) {
            throw ValidationError("duplicate or unordered date " + bars[i].date.to_string());
        }
    }
}

void SplitSpec::validate() const {
    if (!(train_start < train_end && train_end < test_end)) {
        throw ConfigError("split requires train_start < train_end < test_end");
    }
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

BarSeries load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row");

    std::vector<std::string> header = csv_split(line);
    int col_date = -1, col_open = -1, col_high = -1, col_low = -1, col_close = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = lower(header[i]);
        if (name == "date") col_date = static_cast<int>(i);
        else if (name == "open") col_open = static_cast<int>(i);
        else if (name == "high") col_high = static_cast<int>(i);
        else if (name == "low") col_low = static_cast<int>(i);
        else if (name == "close") col_close = static_cast<int>(i);
    }
    if (col_date < 0 || col_open < 0 || col_high < 0 || col_low < 0 || col_close < 0) {
        throw ParseError(path.string() + ": header must name date,open,high,low,close");
    }

    BarSeries series;
    series.instrument = path.stem().string();
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = csv_split(line);
        auto field = [&](int col) -> const std::string& {
            if (col >= static_cast<int>(fields.size())) {
                throw ParseError(path.string() + " row " + std::to_string(row) +
                                 ": missing column " + std::to_string(col + 1));
            }
            return fields[col];
        };
        std::string where = path.string() + " row " + std::to_string(row);
        strategy::Bar bar;
        auto date = Date::try_parse(field(col_date));
        if (!date) throw ParseError(where + ": bad date '" + field(col_date) + "'");
        bar.date = *date;
        bar.open = parse_number(field(col_open), where + " open");
        bar.high = parse_number(field(col_high), where + " high");
        bar.low = parse_number(field(col_low), where + " low");
        bar.close = parse_number(field(col_close), where + " close");
        if (!bar.valid()) {
            throw ValidationError(where + ": OHLC inconsistency or non-finite price");
        }
        series.bars.push_back(bar);
    }

    std::stable_sort(series.bars.begin(), series.bars.end(),
                     [](const strategy::Bar& a, const strategy::Bar& b) { return a.date < b.date; });
    series.validate();  // catches duplicate dates after the sort
    return series;
}

void save_csv(const BarSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "date,open,high,low,close\n";
    for (const auto& b : series.bars) {
        out << b.date.to_string() << ',' << format_fixed(b.open) << ',' << format_fixed(b.high)
            << ',' << format_fixed(b.low) << ',' << format_fixed(b.close) << '\n';
    }
    if (!out) throw DataError("write failed for " + path.string());
}

std::pair<BarSeries, BarSeries> split(const BarSeries& series, const SplitSpec& spec) {
    spec.validate();
    BarSeries train, test;
    train.instrument = series.instrument;
    test.instrument = series.instrument;
    for (const auto& b : series.bars) {
        if (spec.train_start <= b.date && b.date < spec.train_end) {
            train.bars.push_back(b);
        } else if (spec.train_end <= b.date && b.date < spec.test_end) {
            test.bars.push_back(b);
        }
    }
    if (train.bars.empty()) throw EmptySegmentError("train segment contains no bars");
    if (test.bars.empty()) throw EmptySegmentError("test segment contains no bars");
    return {std::move(train), std::move(test)};
}

BarSeries synth_series(const SynthParams& params, std::uint64_t seed) {
    if (params.bars < 1) throw ConfigError("synthetic series needs at least 1 bar");
    if (!(params.initial_price > 0)) throw ConfigError("initial price must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int n = params.bars;
    std::vector<double> closes(n);
    const double dt = 1.0 / 252.0;
    switch (params.kind) {
        case SynthKind::Gbm: {
            double s = params.initial_price;
            for (int t = 0; t < n; ++t) {
                if (t > 0) {
                    double z = normal(rng);
                    s *= std::exp((params.drift - 0.5 * params.vol * params.vol) * dt +
                                  params.vol * std::sqrt(dt) * z);
                }
                closes[t] = s;
            }
            break;
        }
        case SynthKind::TrendPlusNoise: {
            for (int t = 0; t < n; ++t) {
                double eps = params.noise > 0 ? params.noise * normal(rng) : 0.0;
                closes[t] = params.initial_price + params.slope * t + eps;
            }
            break;
        }
        case SynthKind::SinePlusDrift: {
            const int switch_at = n / 2;
            double level = params.initial_price;
            double phase = 0.0;
            for (int t = 0; t < n; ++t) {
                double drift = (params.drift2 && t >= switch_at) ? *params.drift2 : params.drift;
                double period = (params.period2 && t >= switch_at) ? *params.period2 : params.period;
                if (t > 0) {
                    level += drift;
                    phase += 2.0 * M_PI / std::max(period, 1e-9);
                }
                double eps = params.noise > 0 ? params.noise * normal(rng) : 0.0;
                closes[t] = level + params.amplitude * std::sin(phase) + eps;
            }
            break;
        }
    }

    BarSeries series;
    series.instrument = "synth";
    series.bars.resize(n);
    Date day = params.start_date.is_weekend() ? params.start_date.next_weekday()
                                              : params.start_date;
    for (int t = 0; t < n; ++t) {
        strategy::Bar& bar = series.bars[t];
        bar.date = day;
        day = day.next_weekday();
        bar.close = closes[t];
        bar.open = t == 0 ? closes[0] : closes[t - 1];
        double pad_high = params.intrabar > 0 ? std::abs(params.intrabar * normal(rng)) : 0.0;
        double pad_low = params.intrabar > 0 ? std::abs(params.intrabar * normal(rng)) : 0.0;
        bar.high = std::max(bar.open, bar.close) + pad_high;
        bar.low = std::min(bar.open, bar.close) - pad_low;
    }
    series.validate();
    return series;
}

namespace {

// Synth specs arrive on the command line; number/date mishaps there are
// configuration mistakes, not data errors.
double parse_config_number(const std::string& value, const std::string& key) {
    try {
        return parse_number(value, key);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

SynthParams parse_synth_spec(std::string_view spec) {
    auto colon = spec.find(':');
    std::string kind = lower(std::string(spec.substr(0, colon)));
    SynthParams params;
    if (kind == "gbm") params.kind = SynthKind::Gbm;
    else if (kind == "trend" || kind == "trend_plus_noise") params.kind = SynthKind::TrendPlusNoise;
    else if (kind == "sine" || kind == "sine_plus_drift") params.kind = SynthKind::SinePlusDrift;
    else throw ConfigError("unknown synthetic kind '" + kind + "' (gbm|trend|sine)");

    if (colon == std::string_view::npos) return params;
    std::string rest(spec.substr(colon + 1));
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("synth spec entries must be key=value, got '" + item + "'");
        }
        std::string key = lower(item.substr(0, eq));
        std::string value = item.substr(eq + 1);
        if (key == "n") params.bars = static_cast<int>(parse_config_number(value, "synth n"));
        else if (key == "s0") params.initial_price = parse_config_number(value, "synth s0");
        else if (key == "start") {
            auto d = Date::try_parse(value);
            if (!d) throw ConfigError("bad synth start date '" + value + "'");
            params.start_date = *d;
        }
        else if (key == "drift") params.drift = parse_config_number(value, "synth drift");
        else if (key == "drift2") params.drift2 = parse_config_number(value, "synth drift2");
        else if (key == "vol") params.vol = parse_config_number(value, "synth vol");
        else if (key == "slope") params.slope = parse_config_number(value, "synth slope");
        else if (key == "noise") params.noise = parse_config_number(value, "synth noise");
        else if (key == "amp") params.amplitude = parse_config_number(value, "synth amp");
        else if (key == "period") params.period = parse_config_number(value, "synth period");
        else if (key == "period2") params.period2 = parse_config_number(value, "synth period2");
        else if (key == "intrabar") params.intrabar = parse_config_number(value, "synth intrabar");
        else throw ConfigError("unknown synth key '" + key + "'");
    }
    return params;
}

}  // namespace trendlab::data
