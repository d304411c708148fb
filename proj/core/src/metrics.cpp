#include "trendlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "trendlab/errors.hpp"
#include "trendlab/text.hpp"

namespace trendlab::metrics {

namespace {

double sample_std(std::span<const double> values) {
    const std::size_t n = values.size();
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

EquityCurve build_equity_curve(std::span<const strategy::Trade> trades,
                               std::span<const Date> calendar, double initial_capital) {
    if (calendar.empty()) throw EmptySeriesError("equity curve needs a trading calendar");

    std::vector<std::pair<Date, double>> exits;
    exits.reserve(trades.size());
    for (const auto& t : trades) exits.emplace_back(t.exit_date, t.pnl);
    std::stable_sort(exits.begin(), exits.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    EquityCurve curve;
    curve.dates.assign(calendar.begin(), calendar.end());
    curve.equity.reserve(calendar.size());
    double equity = initial_capital;
    std::size_t next_exit = 0;
    for (const Date& day : calendar) {
        while (next_exit < exits.size() && exits[next_exit].first <= day) {
            equity += exits[next_exit].second;
            ++next_exit;
        }
        curve.equity.push_back(equity);
    }
    return curve;
}

std::vector<double> daily_returns(const EquityCurve& curve) {
    std::vector<double> out;
    if (curve.equity.size() < 2) return out;
    for (double e : curve.equity) {
        if (!(e > 0)) throw NonPositiveEquityError("equity must stay positive for returns");
    }
    out.reserve(curve.equity.size() - 1);
    for (std::size_t t = 1; t < curve.equity.size(); ++t) {
        out.push_back(curve.equity[t] / curve.equity[t - 1] - 1.0);
    }
    return out;
}

namespace {

// Degenerate-variance guard: a deviation this far below the mean's scale is
// numerical residue of a constant series, not real dispersion.
bool degenerate_std(double sd, double mean) { return sd <= std::abs(mean) * 1e-12; }

}  // namespace

std::optional<double> sharpe(std::span<const double> returns, int periods_per_year) {
    if (returns.size() < 2) return std::nullopt;
    double mean = 0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double sd = sample_std(returns);
    if (degenerate_std(sd, mean)) return std::nullopt;
    return mean / sd * std::sqrt(static_cast<double>(periods_per_year));
}

std::optional<double> sortino(std::span<const double> returns, int periods_per_year) {
    if (returns.size() < 2) return std::nullopt;
    double mean = 0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double ss = 0;
    for (double r : returns) {
        double d = std::min(r, 0.0);
        ss += d * d;
    }
    double downside = std::sqrt(ss / static_cast<double>(returns.size() - 1));
    if (degenerate_std(downside, mean) || downside == 0) return std::nullopt;
    return mean / downside * std::sqrt(static_cast<double>(periods_per_year));
}

double max_drawdown(const EquityCurve& curve) {
    double peak = -std::numeric_limits<double>::infinity();
    double worst = 0;
    for (double e : curve.equity) {
        peak = std::max(peak, e);
        worst = std::min(worst, e - peak);
    }
    return worst;
}

namespace {

// Month-end equity points -> month-over-month returns, annualized stddev.
std::optional<double> monthly_vol(const EquityCurve& curve) {
    std::vector<double> month_end;
    for (std::size_t i = 0; i < curve.dates.size(); ++i) {
        bool last_of_month = i + 1 == curve.dates.size() ||
                             curve.dates[i + 1].month() != curve.dates[i].month() ||
                             curve.dates[i + 1].year() != curve.dates[i].year();
        if (last_of_month) month_end.push_back(curve.equity[i]);
    }
    if (month_end.size() < 3) return std::nullopt;  // need >= 2 monthly returns
    std::vector<double> rets;
    for (std::size_t j = 1; j < month_end.size(); ++j) {
        if (!(month_end[j - 1] > 0)) return std::nullopt;
        rets.push_back(month_end[j] / month_end[j - 1] - 1.0);
    }
    return sample_std(rets) * std::sqrt(12.0) * 100.0;
}

// Longest completed peak-to-new-peak span that contains an actual dip.
std::optional<double> time_to_recover(const EquityCurve& curve) {
    if (curve.equity.empty()) return std::nullopt;
    double peak = curve.equity[0];
    Date peak_date = curve.dates[0];
    bool dipped = false;
    std::optional<double> longest;
    for (std::size_t i = 1; i < curve.equity.size(); ++i) {
        if (curve.equity[i] > peak) {
            if (dipped) {
                double span = static_cast<double>(peak_date.days_until(curve.dates[i]));
                longest = std::max(longest.value_or(0.0), span);
            }
            peak = curve.equity[i];
            peak_date = curve.dates[i];
            dipped = false;
        } else if (curve.equity[i] < peak) {
            dipped = true;
        }
    }
    return longest;
}

}  // namespace

PerfReport full_report(std::span<const strategy::Trade> trades, const EquityCurve& curve,
                       const ReportContext& ctx) {
    PerfReport rep;
    rep.n_trades = static_cast<int>(trades.size());
    rep.n_contracts = rep.n_trades;  // one contract per trade

    int consec_win = 0, consec_loss = 0;
    double time_in_market = 0, bars_in_trade = 0;
    for (const auto& t : trades) {
        if (t.pnl > 0) {
            rep.gross_profit += t.pnl;
            rep.n_winners += 1;
            consec_win += 1;
            consec_loss = 0;
            rep.largest_winner = std::max(rep.largest_winner.value_or(t.pnl), t.pnl);
        } else if (t.pnl < 0) {
            rep.gross_loss += t.pnl;
            rep.n_losers += 1;
            consec_loss += 1;
            consec_win = 0;
            rep.largest_loser = std::min(rep.largest_loser.value_or(t.pnl), t.pnl);
        } else {
            consec_win = 0;
            consec_loss = 0;
        }
        rep.max_consec_winners = std::max(rep.max_consec_winners, consec_win);
        rep.max_consec_losers = std::max(rep.max_consec_losers, consec_loss);
        time_in_market += t.entry_date.days_until(t.exit_date);
        bars_in_trade += static_cast<double>(t.exit_index - t.entry_index + 1);
    }
    // Ledger identity by construction (zero-pnl trades contribute nothing).
    rep.net_profit = rep.gross_profit + rep.gross_loss;

    if (rep.n_trades > 0) {
        rep.avg_trade = rep.net_profit / rep.n_trades;
        rep.percent_profitable = static_cast<double>(rep.n_winners) / rep.n_trades;
        rep.avg_time_in_market_days = time_in_market / rep.n_trades;
        rep.avg_bars_in_trade = bars_in_trade / rep.n_trades;
    }
    if (rep.n_winners > 0) rep.avg_winner = rep.gross_profit / rep.n_winners;
    if (rep.n_losers > 0) rep.avg_loser = rep.gross_loss / rep.n_losers;
    if (rep.avg_winner && rep.avg_loser) {
        rep.avg_win_over_avg_loss = *rep.avg_winner / std::abs(*rep.avg_loser);
    }
    if (rep.gross_loss < 0) rep.profit_factor = rep.gross_profit / std::abs(rep.gross_loss);
    rep.commission_total = 2.0 * ctx.commission_per_side * rep.n_trades;

    rep.total_net_profit_pct = rep.net_profit / ctx.initial_capital * 100.0;
    if (curve.dates.size() >= 2) {
        double days = curve.dates.front().days_until(curve.dates.back());
        double growth = 1.0 + rep.net_profit / ctx.initial_capital;
        if (days >= 1 && growth > 0) {
            rep.ann_net_profit_pct = (std::pow(growth, 365.25 / days) - 1.0) * 100.0;
        }
    }

    std::vector<double> rets = daily_returns(curve);
    if (rets.size() >= 2) {
        rep.vol_ann_pct =
            sample_std(rets) * std::sqrt(static_cast<double>(ctx.periods_per_year)) * 100.0;
    }
    rep.daily_sharpe = sharpe(rets, ctx.periods_per_year);
    rep.sharpe = rep.daily_sharpe;  // report layout repeats the daily figure
    rep.daily_sortino = sortino(rets, ctx.periods_per_year);
    rep.monthly_vol_ann_pct = monthly_vol(curve);

    if (!curve.dates.empty()) {
        rep.trades_per_day = static_cast<double>(rep.n_trades) / curve.dates.size();
    }
    rep.max_drawdown = max_drawdown(curve);
    if (rep.max_drawdown < 0) {
        rep.recovery_factor = rep.net_profit / std::abs(rep.max_drawdown);
    }
    rep.time_to_recover_days = time_to_recover(curve);
    return rep;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

std::string opt_csv(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
}

}  // namespace

std::string report_json(const PerfReport& r) {
    nlohmann::json j;
    j["net_profit"] = r.net_profit;
    j["gross_profit"] = r.gross_profit;
    j["gross_loss"] = r.gross_loss;
    j["n_trades"] = r.n_trades;
    j["n_contracts"] = r.n_contracts;
    j["avg_trade"] = opt_json(r.avg_trade);
    j["total_net_profit_pct"] = opt_json(r.total_net_profit_pct);
    j["ann_net_profit_pct"] = opt_json(r.ann_net_profit_pct);
    j["vol_ann_pct"] = opt_json(r.vol_ann_pct);
    j["monthly_vol_ann_pct"] = opt_json(r.monthly_vol_ann_pct);
    j["sharpe"] = opt_json(r.sharpe);
    j["daily_sharpe"] = opt_json(r.daily_sharpe);
    j["daily_sortino"] = opt_json(r.daily_sortino);
    j["trades_per_day"] = opt_json(r.trades_per_day);
    j["avg_time_in_market_days"] = opt_json(r.avg_time_in_market_days);
    j["max_drawdown"] = r.max_drawdown;
    j["recovery_factor"] = opt_json(r.recovery_factor);
    j["commission_total"] = r.commission_total;
    j["percent_profitable"] = opt_json(r.percent_profitable);
    j["profit_factor"] = opt_json(r.profit_factor);
    j["n_winners"] = r.n_winners;
    j["avg_winner"] = opt_json(r.avg_winner);
    j["max_consec_winners"] = r.max_consec_winners;
    j["largest_winner"] = opt_json(r.largest_winner);
    j["n_losers"] = r.n_losers;
    j["avg_loser"] = opt_json(r.avg_loser);
    j["max_consec_losers"] = r.max_consec_losers;
    j["largest_loser"] = opt_json(r.largest_loser);
    j["avg_win_over_avg_loss"] = opt_json(r.avg_win_over_avg_loss);
    j["avg_bars_in_trade"] = opt_json(r.avg_bars_in_trade);
    j["time_to_recover_days"] = opt_json(r.time_to_recover_days);
    return j.dump(2) + "\n";
}

std::string report_csv(const PerfReport& r, std::string_view label) {
    std::string header =
        "Performance,Net Profit,Gross Profit,Gross Loss,# of Trades,# of Contracts,"
        "Avg. Trade,Tot. Net Profit (%),Ann. Net Profit (%),Vol,Sharpe Ratio,"
        "Trades per Day,Avg. Time in Market,Max. Drawdown,Recovery Factor,"
        "Daily Ann. Vol,Monthly Ann. Vol,Daily Sharpe Ratio,Daily Sortino Ratio,"
        "Commission,Percent Profitable,Profit Factor,# of Winning Trades,"
        "Avg. Winning Trade,Max. conseq. Winners,Largest Winning Trade,"
        "# of Losing Trades,Avg. Losing Trade,Max. conseq. Losers,"
        "Largest Losing Trade,Avg. Win/Avg. Loss,Avg. Bars in Trade,Time to Recover";
    std::string row = csv_escape(label);
    auto add = [&row](const std::string& field) { row += "," + field; };
    add(format_number(r.net_profit));
    add(format_number(r.gross_profit));
    add(format_number(r.gross_loss));
    add(std::to_string(r.n_trades));
    add(std::to_string(r.n_contracts));
    add(opt_csv(r.avg_trade));
    add(opt_csv(r.total_net_profit_pct));
    add(opt_csv(r.ann_net_profit_pct));
    add(opt_csv(r.vol_ann_pct));  // Vol
    add(opt_csv(r.sharpe));
    add(opt_csv(r.trades_per_day));
    add(opt_csv(r.avg_time_in_market_days));
    add(format_number(r.max_drawdown));
    add(opt_csv(r.recovery_factor));
    add(opt_csv(r.vol_ann_pct));  // Daily Ann. Vol (same daily measure)
    add(opt_csv(r.monthly_vol_ann_pct));
    add(opt_csv(r.daily_sharpe));
    add(opt_csv(r.daily_sortino));
    add(format_number(r.commission_total));
    add(opt_csv(r.percent_profitable));
    add(opt_csv(r.profit_factor));
    add(std::to_string(r.n_winners));
    add(opt_csv(r.avg_winner));
    add(std::to_string(r.max_consec_winners));
    add(opt_csv(r.largest_winner));
    add(std::to_string(r.n_losers));
    add(opt_csv(r.avg_loser));
    add(std::to_string(r.max_consec_losers));
    add(opt_csv(r.largest_loser));
    add(opt_csv(r.avg_win_over_avg_loss));
    add(opt_csv(r.avg_bars_in_trade));
    add(opt_csv(r.time_to_recover_days));
    return header + "\n" + row + "\n";
}

std::string equity_csv(const EquityCurve& curve) {
    std::string out = "date,equity\n";
    for (std::size_t i = 0; i < curve.dates.size(); ++i) {
        out += curve.dates[i].to_string() + "," + format_fixed(curve.equity[i]) + "\n";
    }
    return out;
}

double objective_from_trades(std::span<const strategy::Trade> trades,
                             std::span<const Date> calendar, const ReportContext& ctx) {
    if (trades.size() < 2) return kSentinel;
    EquityCurve curve = build_equity_curve(trades, calendar, ctx.initial_capital);
    // Daily P&L over a fixed base: the tick value scales out of mean/stddev.
    std::vector<double> rets;
    rets.reserve(curve.equity.size());
    for (std::size_t t = 1; t < curve.equity.size(); ++t) {
        rets.push_back((curve.equity[t] - curve.equity[t - 1]) / ctx.initial_capital);
    }
    std::optional<double> s = sharpe(rets, ctx.periods_per_year);
    return s.value_or(kSentinel);
}

double objective_sharpe(std::span<const strategy::Bar> bars, const strategy::InstrumentSpec& spec,
                        const strategy::KfStrategyParams& params,
                        std::optional<double> reference_override, const ReportContext& ctx) {
    std::vector<strategy::Trade> trades = strategy::run_kf(bars, spec, params, reference_override);
    std::vector<Date> calendar;
    calendar.reserve(bars.size());
    for (const auto& b : bars) calendar.push_back(b.date);
    return objective_from_trades(trades, calendar, ctx);
}

double objective_sharpe(std::span<const strategy::Bar> bars, const strategy::InstrumentSpec& spec,
                        const strategy::MaStrategyParams& params, const ReportContext& ctx) {
    std::vector<strategy::Trade> trades = strategy::run_ma(bars, spec, params);
    std::vector<Date> calendar;
    calendar.reserve(bars.size());
    for (const auto& b : bars) calendar.push_back(b.date);
    return objective_from_trades(trades, calendar, ctx);
}

}  // namespace trendlab::metrics
