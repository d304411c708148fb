#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trendlab/calendar.hpp"
#include "trendlab/strategy.hpp"

namespace trendlab::metrics {

// Closed-trade equity marked on every trading day: initial capital plus the
// P&L of all trades exited on or before that day.
struct EquityCurve {
    std::vector<Date> dates;
    std::vector<double> equity;
};

EquityCurve build_equity_curve(std::span<const strategy::Trade> trades,
                               std::span<const Date> calendar, double initial_capital);

// r[t] = equity[t]/equity[t-1] - 1. Throws NonPositiveEquityError.
std::vector<double> daily_returns(const EquityCurve& curve);

// mean / sample stddev * sqrt(periods_per_year); absent when the deviation
// is zero or fewer than 2 returns are given.
std::optional<double> sharpe(std::span<const double> returns, int periods_per_year);

// Same shape with downside deviation (minimal acceptable return 0).
std::optional<double> sortino(std::span<const double> returns, int periods_per_year);

// Worst equity decline from a running peak; <= 0, in currency.
double max_drawdown(const EquityCurve& curve);

// Mirrors the train/test statistics block of the report tables. Ratio
// fields that would divide by zero are absent.
struct PerfReport {
    double net_profit = 0;
    double gross_profit = 0;
    double gross_loss = 0;  // <= 0
    int n_trades = 0;
    int n_contracts = 0;
    std::optional<double> avg_trade;
    std::optional<double> total_net_profit_pct;
    std::optional<double> ann_net_profit_pct;
    std::optional<double> vol_ann_pct;          // daily vol, annualized, in %
    std::optional<double> monthly_vol_ann_pct;  // month-aggregated vol * sqrt(12)
    std::optional<double> sharpe;
    std::optional<double> daily_sharpe;
    std::optional<double> daily_sortino;
    std::optional<double> trades_per_day;
    std::optional<double> avg_time_in_market_days;
    double max_drawdown = 0;
    std::optional<double> recovery_factor;
    double commission_total = 0;
    std::optional<double> percent_profitable;
    std::optional<double> profit_factor;
    int n_winners = 0;
    std::optional<double> avg_winner;
    int max_consec_winners = 0;
    std::optional<double> largest_winner;
    int n_losers = 0;
    std::optional<double> avg_loser;
    int max_consec_losers = 0;
    std::optional<double> largest_loser;
    std::optional<double> avg_win_over_avg_loss;
    std::optional<double> avg_bars_in_trade;
    std::optional<double> time_to_recover_days;
};

struct ReportContext {
    double initial_capital = 100000.0;
    double commission_per_side = 0.0;
    int periods_per_year = 252;
};

PerfReport full_report(std::span<const strategy::Trade> trades, const EquityCurve& curve,
                       const ReportContext& ctx);

// Flat JSON object; absent ratios serialize as null.
std::string report_json(const PerfReport& report);

// Two-row CSV (header + one data row) using the report-table column names.
std::string report_csv(const PerfReport& report, std::string_view label);

// Equity curve as "date,equity" CSV.
std::string equity_csv(const EquityCurve& curve);

// Objective fed to the optimizer: simulate, build the equity curve, and
// take the annualized Sharpe of daily P&L over the initial capital (fixed
// base, so the currency scale cancels). Returns kSentinel when fewer than
// 2 trades occur or the Sharpe is undefined.
inline constexpr double kSentinel = -1e9;

double objective_from_trades(std::span<const strategy::Trade> trades,
                             std::span<const Date> calendar, const ReportContext& ctx);

double objective_sharpe(std::span<const strategy::Bar> bars, const strategy::InstrumentSpec& spec,
                        const strategy::KfStrategyParams& params,
                        std::optional<double> reference_override = {},
                        const ReportContext& ctx = {});
double objective_sharpe(std::span<const strategy::Bar> bars, const strategy::InstrumentSpec& spec,
                        const strategy::MaStrategyParams& params, const ReportContext& ctx = {});

}  // namespace trendlab::metrics
