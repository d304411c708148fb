#include "trendlab/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "trendlab/errors.hpp"
#include "trendlab/kalman.hpp"
#include "trendlab/text.hpp"

namespace trendlab::pipeline {

namespace {

using nlohmann::json;

int round_ticks(double value) {
    return std::max(1, static_cast<int>(std::llround(value)));
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "."
                                                                   : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return j;
}

double require_number(const json& j, const std::string& key, const std::filesystem::path& path) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw SchemaMismatchError(path.string() + ": missing numeric entry '" + key + "'");
    }
    return j[key].get<double>();
}

}  // namespace

SearchSettings default_kf_search() {
    SearchSettings s;
    s.mean0 = Eigen::VectorXd(18);
    // Start from random-walk-like dynamics with a direct price readout.
    s.mean0 << 1, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0, 0, 5, 50, 50;
    s.init_scales = Eigen::VectorXd(18);
    s.init_scales << 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 20, 5, 50, 50;
    s.lower = Eigen::VectorXd(18);
    s.upper = Eigen::VectorXd(18);
    for (int i = 0; i < 15; ++i) {
        s.lower[i] = -200;
        s.upper[i] = 200;
    }
    s.lower[15] = 0;
    s.upper[15] = 50;
    s.lower[16] = 1;
    s.upper[16] = 500;
    s.lower[17] = 1;
    s.upper[17] = 500;
    s.l1_mask.resize(15);
    for (int i = 0; i < 15; ++i) s.l1_mask[i] = i;
    return s;
}

SearchSettings default_ma_search() {
    SearchSettings s;
    s.mean0 = Eigen::VectorXd(5);
    s.mean0 << 10, 50, 5, 50, 50;
    s.init_scales = Eigen::VectorXd(5);
    s.init_scales << 5, 25, 5, 50, 50;
    s.lower = Eigen::VectorXd(5);
    s.lower << 1, 2, 0, 1, 1;
    s.upper = Eigen::VectorXd(5);
    s.upper << 100, 250, 50, 500, 500;
    return s;
}

strategy::KfStrategyParams kf_from_vector(const Eigen::VectorXd& x) {
    if (x.size() != 18) throw SchemaMismatchError("kf parameter vector must have 18 entries");
    strategy::KfStrategyParams p;
    std::array<double, kalman::KalmanParams::kDim> flat{};
    for (int i = 0; i < kalman::KalmanParams::kDim; ++i) flat[i] = x[i];
    p.model = kalman::KalmanParams::from_array(flat);
    p.offset_ticks = x[15];
    p.stop_ticks = round_ticks(x[16]);
    p.target_ticks = round_ticks(x[17]);
    return p;
}

Eigen::VectorXd kf_to_vector(const strategy::KfStrategyParams& params) {
    Eigen::VectorXd x(18);
    auto flat = params.model.to_array();
    for (int i = 0; i < kalman::KalmanParams::kDim; ++i) x[i] = flat[i];
    x[15] = params.offset_ticks;
    x[16] = params.stop_ticks;
    x[17] = params.target_ticks;
    return x;
}

strategy::MaStrategyParams ma_from_vector(const Eigen::VectorXd& x) {
    if (x.size() != 5) throw SchemaMismatchError("ma parameter vector must have 5 entries");
    strategy::MaStrategyParams p;
    p.short_period = std::max(1, static_cast<int>(std::llround(x[0])));
    p.long_period = std::max(p.short_period + 1, static_cast<int>(std::llround(x[1])));
    p.offset_ticks = x[2];
    p.stop_ticks = round_ticks(x[3]);
    p.target_ticks = round_ticks(x[4]);
    return p;
}

Eigen::VectorXd ma_to_vector(const strategy::MaStrategyParams& params) {
    Eigen::VectorXd x(5);
    x << static_cast<double>(params.short_period), static_cast<double>(params.long_period),
        params.offset_ticks, static_cast<double>(params.stop_ticks),
        static_cast<double>(params.target_ticks);
    return x;
}

StrategyParamsVariant load_params_file(const std::filesystem::path& path, StrategyKind expected) {
    json j = read_json_file(path);
    std::string kind = j.value("strategy", "");
    std::string want = expected == StrategyKind::Kf ? "kf" : "ma";
    if (kind != want) {
        throw SchemaMismatchError(path.string() + ": strategy '" + kind + "' does not match '" +
                                  want + "'");
    }
    if (expected == StrategyKind::Kf) {
        strategy::KfStrategyParams p;
        std::array<double, kalman::KalmanParams::kDim> flat{};
        for (int i = 0; i < kalman::KalmanParams::kDim; ++i) {
            flat[i] = require_number(j, "p" + std::to_string(i + 1), path);
        }
        p.model = kalman::KalmanParams::from_array(flat);
        p.offset_ticks = require_number(j, "offset", path);
        p.stop_ticks = static_cast<int>(std::llround(require_number(j, "stop", path)));
        p.target_ticks = static_cast<int>(std::llround(require_number(j, "target", path)));
        return p;
    }
    strategy::MaStrategyParams p;
    p.short_period = static_cast<int>(std::llround(require_number(j, "short", path)));
    p.long_period = static_cast<int>(std::llround(require_number(j, "long", path)));
    if (p.short_period < 1 || p.long_period <= p.short_period) {
        throw SchemaMismatchError(path.string() + ": need 1 <= short < long");
    }
    p.offset_ticks = require_number(j, "offset", path);
    p.stop_ticks = static_cast<int>(std::llround(require_number(j, "stop", path)));
    p.target_ticks = static_cast<int>(std::llround(require_number(j, "target", path)));
    return p;
}

void save_params_file(const StrategyParamsVariant& params, const std::filesystem::path& path) {
    json j;
    if (const auto* kf = std::get_if<strategy::KfStrategyParams>(&params)) {
        j["strategy"] = "kf";
        auto flat = kf->model.to_array();
        for (int i = 0; i < kalman::KalmanParams::kDim; ++i) {
            j["p" + std::to_string(i + 1)] = flat[i];
        }
        j["offset"] = kf->offset_ticks;
        j["stop"] = kf->stop_ticks;
        j["target"] = kf->target_ticks;
    } else {
        const auto& ma = std::get<strategy::MaStrategyParams>(params);
        j["strategy"] = "ma";
        j["short"] = ma.short_period;
        j["long"] = ma.long_period;
        j["offset"] = ma.offset_ticks;
        j["stop"] = ma.stop_ticks;
        j["target"] = ma.target_ticks;
    }
    write_file(path, j.dump(2) + "\n");
}

strategy::InstrumentSpec load_instrument(const std::filesystem::path& path,
                                         strategy::InstrumentSpec base) {
    json j = read_json_file(path);
    if (j.contains("tick_size")) base.tick_size = j["tick_size"].get<double>();
    if (j.contains("tick_value")) base.tick_value = j["tick_value"].get<double>();
    if (j.contains("commission")) base.commission = j["commission"].get<double>();
    if (j.contains("currency")) base.currency = j["currency"].get<std::string>();
    base.validate();
    return base;
}

void RunConfig::validate() const {
    if (data_path.has_value() == synth.has_value()) {
        throw ConfigError("exactly one of --data and --synth must be given");
    }
    split.validate();
    instrument.validate();
    if (max_evals < 2) throw ConfigError("--evals must be at least 2");
    if (l1_weight < 0) throw ConfigError("--l1 must be nonnegative");
}

data::BarSeries load_input_series(const RunConfig& config) {
    if (config.data_path) return data::load_csv(*config.data_path);
    return data::synth_series(*config.synth, config.seed);
}

namespace {

struct SplitEval {
    std::vector<strategy::Trade> trades;
    metrics::EquityCurve curve;
    metrics::PerfReport report;
};

std::vector<Date> calendar_of(std::span<const strategy::Bar> bars) {
    std::vector<Date> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.date);
    return out;
}

SplitEval evaluate_split(const data::BarSeries& segment, const RunConfig& config,
                         const StrategyParamsVariant& params) {
    SplitEval eval;
    if (const auto* kf = std::get_if<strategy::KfStrategyParams>(&params)) {
        eval.trades = strategy::run_kf(segment.bars, config.instrument, *kf, config.kf_reference);
    } else {
        eval.trades = strategy::run_ma(segment.bars, config.instrument,
                                       std::get<strategy::MaStrategyParams>(params));
    }
    metrics::ReportContext ctx{config.initial_capital, config.instrument.commission, 252};
    eval.curve = metrics::build_equity_curve(eval.trades, calendar_of(segment.bars),
                                             config.initial_capital);
    eval.report = metrics::full_report(eval.trades, eval.curve, ctx);
    return eval;
}

void write_split_artifacts(const SplitEval& eval, std::string_view label,
                           const std::filesystem::path& report_json_path,
                           const std::filesystem::path& report_csv_path,
                           const std::filesystem::path& equity_path) {
    write_file(report_json_path, metrics::report_json(eval.report));
    write_file(report_csv_path, metrics::report_csv(eval.report, label));
    write_file(equity_path, metrics::equity_csv(eval.curve));
}

cmaes::Objective make_objective(const data::BarSeries& train, const RunConfig& config) {
    metrics::ReportContext ctx{config.initial_capital, config.instrument.commission, 252};
    // The closure owns a copy of the train bars; test data never enters it.
    if (config.strategy == StrategyKind::Kf) {
        return [bars = train.bars, instrument = config.instrument, ctx,
                reference = config.kf_reference](const Eigen::VectorXd& x) {
            return metrics::objective_sharpe(bars, instrument, kf_from_vector(x), reference, ctx);
        };
    }
    return [bars = train.bars, instrument = config.instrument, ctx](const Eigen::VectorXd& x) {
        return metrics::objective_sharpe(bars, instrument, ma_from_vector(x), ctx);
    };
}

}  // namespace

OptimizeArtifacts cmd_optimize(const RunConfig& config) {
    config.validate();
    data::BarSeries series = load_input_series(config);
    auto [train, test] = data::split(series, config.split);

    SearchSettings search =
        config.strategy == StrategyKind::Kf ? default_kf_search() : default_ma_search();
    const int dim = static_cast<int>(search.mean0.size());

    cmaes::CmaConfig cma = cmaes::default_config(dim, search.mean0,
                                                 config.sigma0.value_or(1.0), config.seed,
                                                 config.population.value_or(0));
    cma.init_scales = search.init_scales;
    cma.max_evals = config.max_evals;
    cma.l1_weight = config.l1_weight;
    cma.lower = search.lower;
    cma.upper = search.upper;

    cmaes::Objective objective = cmaes::penalized_objective(
        make_objective(train, config), config.l1_weight, search.l1_mask, search.lower,
        search.upper);
    cmaes::CmaResult result = cmaes::optimize(objective, cma);

    // The evaluated parameterization is the clamped vector.
    Eigen::VectorXd best = result.best_x.cwiseMax(search.lower).cwiseMin(search.upper);
    StrategyParamsVariant params;
    if (config.strategy == StrategyKind::Kf) {
        params = kf_from_vector(best);
    } else {
        params = ma_from_vector(best);
    }

    OptimizeArtifacts artifacts;
    artifacts.best_fitness = result.best_fitness;
    artifacts.termination = result.termination;
    const auto& out = config.out_dir;
    artifacts.best_params = out / "best_params.json";
    artifacts.history = out / "history.csv";
    artifacts.report_train_json = out / "report_train.json";
    artifacts.report_train_csv = out / "report_train.csv";
    artifacts.report_test_json = out / "report_test.json";
    artifacts.report_test_csv = out / "report_test.csv";
    artifacts.equity_train = out / "equity_train.csv";
    artifacts.equity_test = out / "equity_test.csv";

    save_params_file(params, artifacts.best_params);

    std::string history = cmaes::history_csv_header() + "\n";
    for (const auto& row : result.history) history += cmaes::history_csv_row(row) + "\n";
    write_file(artifacts.history, history);

    SplitEval train_eval = evaluate_split(train, config, params);
    SplitEval test_eval = evaluate_split(test, config, params);
    write_split_artifacts(train_eval, "Train", artifacts.report_train_json,
                          artifacts.report_train_csv, artifacts.equity_train);
    write_split_artifacts(test_eval, "Test", artifacts.report_test_json,
                          artifacts.report_test_csv, artifacts.equity_test);
    return artifacts;
}

void cmd_backtest(const RunConfig& config, const std::filesystem::path& params_file) {
    config.validate();
    StrategyParamsVariant params = load_params_file(params_file, config.strategy);
    data::BarSeries series = load_input_series(config);
    auto [train, test] = data::split(series, config.split);

    SplitEval train_eval = evaluate_split(train, config, params);
    SplitEval test_eval = evaluate_split(test, config, params);
    const auto& out = config.out_dir;
    write_split_artifacts(train_eval, "Train", out / "report_train.json",
                          out / "report_train.csv", out / "equity_train.csv");
    write_split_artifacts(test_eval, "Test", out / "report_test.json", out / "report_test.csv",
                          out / "equity_test.csv");
}

namespace {

json compare_row(const std::string& label, const metrics::PerfReport& test,
                 const metrics::PerfReport& train) {
    json j;
    j["Algo"] = label;
    j["Total Net Profit"] = test.net_profit;
    j["Recovery Factor"] = test.recovery_factor ? json(*test.recovery_factor) : json(nullptr);
    j["Profit Factor"] = test.profit_factor ? json(*test.profit_factor) : json(nullptr);
    j["Max. Drawdown"] = test.max_drawdown;
    j["Sharpe Ratio"] = test.sharpe ? json(*test.sharpe) : json(nullptr);
    j["Total # of Trades"] = test.n_trades;
    j["Percent Profitable"] =
        test.percent_profitable ? json(*test.percent_profitable) : json(nullptr);
    j["Train: Total Net Profit"] = train.net_profit;
    return j;
}

std::string compare_csv_row(const json& row) {
    auto cell = [&row](const char* key) -> std::string {
        const auto& v = row[key];
        if (v.is_null()) return "";
        if (v.is_string()) return csv_escape(v.get<std::string>());
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        return format_number(v.get<double>());
    };
    return cell("Algo") + "," + cell("Total Net Profit") + "," + cell("Recovery Factor") + "," +
           cell("Profit Factor") + "," + cell("Max. Drawdown") + "," + cell("Sharpe Ratio") + "," +
           cell("Total # of Trades") + "," + cell("Percent Profitable") + "," +
           cell("Train: Total Net Profit");
}

}  // namespace

void cmd_compare(const RunConfig& config, const std::filesystem::path& kf_params,
                 const std::filesystem::path& ma_params) {
    config.validate();
    StrategyParamsVariant kf = load_params_file(kf_params, StrategyKind::Kf);
    StrategyParamsVariant ma = load_params_file(ma_params, StrategyKind::Ma);
    data::BarSeries series = load_input_series(config);
    auto [train, test] = data::split(series, config.split);

    RunConfig kf_config = config;
    kf_config.strategy = StrategyKind::Kf;
    RunConfig ma_config = config;
    ma_config.strategy = StrategyKind::Ma;

    json ma_row = compare_row("MA Cross over", evaluate_split(test, ma_config, ma).report,
                              evaluate_split(train, ma_config, ma).report);
    json kf_row = compare_row("Kalman filter", evaluate_split(test, kf_config, kf).report,
                              evaluate_split(train, kf_config, kf).report);

    std::string csv =
        "Algo,Total Net Profit,Recovery Factor,Profit Factor,Max. Drawdown,Sharpe Ratio,"
        "Total # of Trades,Percent Profitable,Train: Total Net Profit\n";
    csv += compare_csv_row(ma_row) + "\n";
    csv += compare_csv_row(kf_row) + "\n";
    write_file(config.out_dir / "compare.csv", csv);

    json rows = json::array({ma_row, kf_row});
    write_file(config.out_dir / "compare.json", rows.dump(2) + "\n");
}

std::filesystem::path cmd_synth(const RunConfig& config) {
    if (!config.synth) throw ConfigError("synth command requires --synth");
    data::BarSeries series = data::synth_series(*config.synth, config.seed);
    std::filesystem::create_directories(config.out_dir);
    std::filesystem::path path = config.out_dir / "synth.csv";
    data::save_csv(series, path);
    return path;
}

}  // namespace trendlab::pipeline
