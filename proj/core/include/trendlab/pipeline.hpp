#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "trendlab/cmaes.hpp"
#include "trendlab/data.hpp"
#include "trendlab/metrics.hpp"
#include "trendlab/strategy.hpp"

namespace trendlab::pipeline {

enum class StrategyKind { Kf, Ma };

// Box bounds, starting point, and per-coordinate sampling scales for one
// strategy's search space.
struct SearchSettings {
    Eigen::VectorXd mean0;
    Eigen::VectorXd init_scales;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<int> l1_mask;  // coordinates the L1 penalty applies to
};

// 18 coordinates: the 15 model coefficients, then offset, stop, target.
// Bounds: coefficients in [-200, 200], offset in [0, 50], stop/target in
// [1, 500].
SearchSettings default_kf_search();

// 5 coordinates: short period, long period, offset, stop, target.
SearchSettings default_ma_search();

// Vector <-> parameter mapping used at evaluation time. Stop and target are
// rounded to the nearest integer tick count and floored at 1; the MA long
// period is kept strictly greater than the short one.
strategy::KfStrategyParams kf_from_vector(const Eigen::VectorXd& x);
Eigen::VectorXd kf_to_vector(const strategy::KfStrategyParams& params);
strategy::MaStrategyParams ma_from_vector(const Eigen::VectorXd& x);
Eigen::VectorXd ma_to_vector(const strategy::MaStrategyParams& params);

using StrategyParamsVariant =
    std::variant<strategy::KfStrategyParams, strategy::MaStrategyParams>;

// Flat JSON params files. kf files carry 18 numeric entries
// (p1..p15, offset, stop, target); ma files carry 5 (short, long, offset,
// stop, target). A "strategy" tag identifies the kind.
StrategyParamsVariant load_params_file(const std::filesystem::path& path, StrategyKind expected);
void save_params_file(const StrategyParamsVariant& params, const std::filesystem::path& path);

// Instrument preset file: JSON with any of tick_size, tick_value,
// commission, currency; missing keys keep the defaults.
strategy::InstrumentSpec load_instrument(const std::filesystem::path& path,
                                         strategy::InstrumentSpec base = {});

struct RunConfig {
    std::optional<std::filesystem::path> data_path;
    std::optional<data::SynthParams> synth;
    data::SplitSpec split;
    strategy::InstrumentSpec instrument;
    StrategyKind strategy = StrategyKind::Kf;
    std::uint64_t seed = 1;
    std::int64_t max_evals = 20000;
    double l1_weight = 0.0;
    double initial_capital = 100000.0;
    std::optional<int> population;
    std::optional<double> sigma0;
    std::optional<double> kf_reference;  // constant control reference override
    std::filesystem::path out_dir = "out";

    void validate() const;  // exactly one data source, valid split
};

// Loads the configured data source (CSV file or synthetic generator).
data::BarSeries load_input_series(const RunConfig& config);

struct OptimizeArtifacts {
    std::filesystem::path best_params;
    std::filesystem::path history;
    std::filesystem::path report_train_json, report_train_csv;
    std::filesystem::path report_test_json, report_test_csv;
    std::filesystem::path equity_train, equity_test;
    double best_fitness = 0;
    std::string termination;
};

// Optimizes on the train split only (the objective never sees test bars),
// then evaluates the best parameters on both splits and writes the full
// artifact set under out_dir.
OptimizeArtifacts cmd_optimize(const RunConfig& config);

// Evaluates fixed parameters on both splits; writes reports and equity
// curves, no optimization.
void cmd_backtest(const RunConfig& config, const std::filesystem::path& params_file);

// Test-split comparison row per algorithm, with the train net profit
// appended; writes compare.csv and compare.json.
void cmd_compare(const RunConfig& config, const std::filesystem::path& kf_params,
                 const std::filesystem::path& ma_params);

// Writes the synthetic series to out_dir/synth.csv and returns the path.
std::filesystem::path cmd_synth(const RunConfig& config);

}  // namespace trendlab::pipeline
