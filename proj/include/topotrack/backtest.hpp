#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "topotrack/market_data.hpp"
#include "topotrack/penalty.hpp"
#include "topotrack/solver.hpp"

// Rolling-window protocol: fit on d1 in-sample days, hold the weights fixed
// over the next d2 days, shift by d2, repeat; concatenate the out-of-sample
// returns and evaluate the full metric suite.

namespace topotrack::backtest {

struct WindowRange {
  std::size_t in_start = 0;   // [in_start, in_start + d1)
  std::size_t out_start = 0;  // [out_start, out_start + d2)
};

struct WindowPlan {
  std::size_t total_days = 0;      // T
  std::size_t in_sample_days = 504;   // d1
  std::size_t out_sample_days = 21;   // d2 (also the shift)

  /// floor((T - d1) / d2); throws if no window fits.
  std::size_t window_count() const;
  std::vector<WindowRange> windows() const;
  void validate() const;
};

struct MetricSuite {
  double terror = 0;
  double correlation = 0;
  double volatility = 0;
  double dd = 0;
  double var_alpha = 0;
  double cvar_alpha = 0;
  double shr = 0;
  double ir = 0;
  double emr = 0;
  double tr = 0;
  double mean_assets = 0;
};

struct WindowResult {
  solver::WeightVector weights;
  solver::SolveDiagnostics diagnostics;
  int nonzero_assets = 0;
  double in_sample_terror = 0;
  double out_sample_terror = 0;
};

struct BacktestReport {
  std::vector<WindowResult> per_window;
  std::vector<double> oos_returns;  // concatenated, length = windows * d2
  std::vector<double> index_oos;    // aligned index slice
  MetricSuite metrics;              // on the concatenated series
  MetricSuite in_sample_mean;       // per-window in-sample metrics, averaged
  std::vector<double> wealth_curve; // cumprod(1 + r), leading 1
};

struct BacktestConfig {
  double var_alpha = 0.95;
  bool warm_start = true;
  bool retune_per_window = false;   // grid-searched kinds: retune every window
  bool skip_failed_windows = false; // otherwise a solver failure aborts
  penalty::SubSeriesPlan sub_series;     // penalty-learning split (last 126 days)
  tda::EmbeddingParams embedding;        // d = 3, tau = 1
  penalty::NormOrder norm;               // p = 1, k_max = 1
  solver::SolveOptions solve;
  /// Relative levels applied to a per-window reference scale when tuning
  /// the Vol / SLOPE / AdaptiveEN parameters on the first window.
  std::vector<double> tuning_levels{1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0};
};

/// Run the rolling-window protocol for each requested model kind.
std::map<penalty::PenaltyKind, BacktestReport> run_backtest(
    const market_data::ReturnPanel& panel, const WindowPlan& plan,
    std::span<const penalty::PenaltyKind> kinds, const BacktestConfig& config = {});

// --- metric suite -----------------------------------------------------------

/// sqrt( sum (R_w - R_0)^2 / (T - 1) )
double tracking_error(std::span<const double> portfolio, std::span<const double> index);

/// Pearson correlation of the two series.
double correlation(std::span<const double> portfolio, std::span<const double> index);

/// sqrt( sum ((R_0 - R_w)^+)^2 / T ): only shortfalls below the index count.
double downside_deviation(std::span<const double> portfolio, std::span<const double> index);

/// Empirical VaR/CVaR of the loss series L = -R at confidence alpha:
/// VaR is the smallest loss whose empirical CDF exceeds alpha, CVaR the mean
/// of losses strictly beyond it (VaR itself when that tail is empty).
std::pair<double, double> var_cvar(std::span<const double> portfolio, double alpha);

struct RiskAdjusted {
  double shr = 0;
  double ir = 0;
  double emr = 0;
};

/// Sharpe ratio ((mean - rf)/stdev when mean > rf, else 0), excess mean
/// return over the index, and information ratio EMR / stdev(R_w - R_0).
/// A zero-deviation denominator reports 0 when EMR is 0 and throws otherwise.
RiskAdjusted sharpe_ir(std::span<const double> portfolio, std::span<const double> index,
                       double risk_free = 0.0);

/// Mean L1 distance between consecutive weight vectors; history[0] is the
/// initial allocation and does not count as a trade.
double turnover(std::span<const solver::WeightVector> history);

/// Uncentered annualized volatility of the series (same convention as
/// market_data::volatility).
double annualized_volatility(std::span<const double> portfolio);

MetricSuite compute_metrics(std::span<const double> portfolio, std::span<const double> index,
                            double var_alpha);

}  // namespace topotrack::backtest
