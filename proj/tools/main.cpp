// trendlab CLI: optimize | backtest | compare | synth
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "trendlab/errors.hpp"
#include "trendlab/pipeline.hpp"

namespace {

using trendlab::ConfigError;
using trendlab::Date;
namespace pipeline = trendlab::pipeline;

struct CommonOpts {
    std::string data;
    std::string synth;
    std::string train_start, train_end, test_end;
    std::string strategy = "kf";
    std::uint64_t seed = 1;
    std::int64_t evals = 20000;
    double l1 = 0.0;
    std::string out = "out";
    std::string instrument_file;
    std::optional<double> tick_size, tick_value, commission;
    std::optional<std::string> currency;
    double capital = 100000.0;
    std::optional<int> popsize;
    std::optional<double> sigma0;
    std::optional<double> kref;
};

Date parse_cli_date(const std::string& value, const char* flag) {
    auto d = Date::try_parse(value);
    if (!d) throw ConfigError(std::string(flag) + " expects YYYY-MM-DD, got '" + value + "'");
    return *d;
}

void add_data_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--data", o.data, "OHLC CSV file (date,open,high,low,close[,volume])");
    cmd->add_option("--synth", o.synth,
                    "synthetic series spec, e.g. sine:n=252,s0=2500,amp=30,period=40,drift=0.4");
}

void add_split_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--train-start", o.train_start, "train window start (inclusive)")->required();
    cmd->add_option("--train-end", o.train_end, "train end / test start")->required();
    cmd->add_option("--test-end", o.test_end, "test window end (exclusive)")->required();
}

void add_instrument_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--instrument", o.instrument_file, "instrument preset JSON file");
    cmd->add_option("--tick-size", o.tick_size, "price units per tick (default 0.25)");
    cmd->add_option("--tick-value", o.tick_value, "currency per tick per contract (default 12.5)");
    cmd->add_option("--commission", o.commission, "currency per trade side (default 0)");
    cmd->add_option("--currency", o.currency, "currency label (default EUR)");
    cmd->add_option("--capital", o.capital, "initial capital for percentage rows");
}

pipeline::RunConfig build_config(const CommonOpts& o, bool need_split) {
    pipeline::RunConfig config;
    if (!o.data.empty()) config.data_path = o.data;
    if (!o.synth.empty()) config.synth = trendlab::data::parse_synth_spec(o.synth);
    if (need_split) {
        config.split.train_start = parse_cli_date(o.train_start, "--train-start");
        config.split.train_end = parse_cli_date(o.train_end, "--train-end");
        config.split.test_end = parse_cli_date(o.test_end, "--test-end");
    }
    if (!o.instrument_file.empty()) {
        config.instrument = pipeline::load_instrument(o.instrument_file, config.instrument);
    }
    if (o.tick_size) config.instrument.tick_size = *o.tick_size;
    if (o.tick_value) config.instrument.tick_value = *o.tick_value;
    if (o.commission) config.instrument.commission = *o.commission;
    if (o.currency) config.instrument.currency = *o.currency;

    if (o.strategy == "kf") config.strategy = pipeline::StrategyKind::Kf;
    else if (o.strategy == "ma") config.strategy = pipeline::StrategyKind::Ma;
    else throw ConfigError("--strategy must be kf or ma");

    config.seed = o.seed;
    config.max_evals = o.evals;
    config.l1_weight = o.l1;
    config.initial_capital = o.capital;
    config.population = o.popsize;
    config.sigma0 = o.sigma0;
    config.kf_reference = o.kref;
    config.out_dir = o.out;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trendlab: trend-following lab pairing a Kalman-filter forecaster with a "
                 "CMA-ES Sharpe-ratio search"};
    app.require_subcommand(1);

    CommonOpts opt;
    std::string params_file, params_kf, params_ma;

    CLI::App* optimize = app.add_subcommand(
        "optimize", "search strategy parameters on the train split, report on both splits");
    add_data_options(optimize, opt);
    add_split_options(optimize, opt);
    add_instrument_options(optimize, opt);
    optimize->add_option("--strategy", opt.strategy, "kf or ma (default kf)");
    optimize->add_option("--seed", opt.seed, "random seed (default 1)");
    optimize->add_option("--evals", opt.evals, "objective evaluation budget (default 20000)");
    optimize->add_option("--l1", opt.l1, "L1 penalty weight on the model coefficients");
    optimize->add_option("--popsize", opt.popsize, "CMA-ES population size override");
    optimize->add_option("--sigma0", opt.sigma0, "CMA-ES initial step size (default 1)");
    optimize->add_option("--k-ref", opt.kref,
                         "constant control reference (default: previous close)");
    optimize->add_option("--out", opt.out, "output directory (default ./out)");

    CLI::App* backtest = app.add_subcommand("backtest", "evaluate fixed parameters on both splits");
    add_data_options(backtest, opt);
    add_split_options(backtest, opt);
    add_instrument_options(backtest, opt);
    backtest->add_option("--strategy", opt.strategy, "kf or ma (default kf)");
    backtest->add_option("--params", params_file, "strategy parameters JSON")->required();
    backtest->add_option("--k-ref", opt.kref,
                         "constant control reference (default: previous close)");
    backtest->add_option("--out", opt.out, "output directory (default ./out)");

    CLI::App* compare = app.add_subcommand(
        "compare", "test-split comparison of a kf and an ma parameter set");
    add_data_options(compare, opt);
    add_split_options(compare, opt);
    add_instrument_options(compare, opt);
    compare->add_option("--params-kf", params_kf, "kf parameters JSON")->required();
    compare->add_option("--params-ma", params_ma, "ma parameters JSON")->required();
    compare->add_option("--k-ref", opt.kref,
                        "constant control reference (default: previous close)");
    compare->add_option("--out", opt.out, "output directory (default ./out)");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic OHLC CSV");
    synth->add_option("--synth", opt.synth, "synthetic series spec")->required();
    synth->add_option("--seed", opt.seed, "random seed (default 1)");
    synth->add_option("--out", opt.out, "output directory (default ./out)");

    try {
        app.parse(argc, argv);

        if (optimize->parsed()) {
            pipeline::RunConfig config = build_config(opt, true);
            pipeline::OptimizeArtifacts artifacts = pipeline::cmd_optimize(config);
            std::cout << "best objective " << artifacts.best_fitness << " (termination: "
                      << artifacts.termination << ")\n"
                      << "artifacts in " << config.out_dir.string() << "\n";
        } else if (backtest->parsed()) {
            pipeline::RunConfig config = build_config(opt, true);
            pipeline::cmd_backtest(config, params_file);
            std::cout << "reports in " << config.out_dir.string() << "\n";
        } else if (compare->parsed()) {
            pipeline::RunConfig config = build_config(opt, true);
            pipeline::cmd_compare(config, params_kf, params_ma);
            std::cout << "comparison in " << config.out_dir.string() << "\n";
        } else if (synth->parsed()) {
            pipeline::RunConfig config;
            config.synth = trendlab::data::parse_synth_spec(opt.synth);
            config.seed = opt.seed;
            config.out_dir = opt.out;
            std::filesystem::path path = pipeline::cmd_synth(config);
            std::cout << "wrote " << path.string() << "\n";
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const trendlab::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
