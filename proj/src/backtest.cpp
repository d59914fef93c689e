#include "topotrack/backtest.hpp"

#include <algorithm>
#include <cmath>

#include "topotrack/kernels.hpp"

namespace topotrack::backtest {

namespace {

using penalty::PenaltyKind;

Matrix slice_rows(const Matrix& m, std::size_t start, std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto src = m.col(c);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(start),
              src.begin() + static_cast<std::ptrdiff_t>(start + count), out.col(c).begin());
  }
  return out;
}

double sample_stdev(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = kernels::sum(v.data(), v.size()) / n;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / (n - 1.0));
}

bool needs_tuning(PenaltyKind kind) {
  return kind == PenaltyKind::VolEN || kind == PenaltyKind::Vol_L1 ||
         kind == PenaltyKind::SLOPE || kind == PenaltyKind::AdaptiveEN;
}

/// Reference kind whose nonzero count anchors the tuning band: EN-type kinds
/// compare against TDAEN12, L1-type against TDA_L1.
PenaltyKind reference_kind(PenaltyKind kind) {
  return penalty::is_elastic_net_kind(kind) ? PenaltyKind::TDAEN12 : PenaltyKind::TDA_L1;
}

const std::vector<PenaltyKind> kCanonicalOrder{
    PenaltyKind::TE,     PenaltyKind::TDAEN11, PenaltyKind::TDAEN12,   PenaltyKind::VolEN,
    PenaltyKind::AdaptiveEN, PenaltyKind::TDA_L1, PenaltyKind::Vol_L1, PenaltyKind::SLOPE};

struct KindState {
  bool requested = false;
  bool tuned = false;
  std::pair<double, double> params{0.0, 0.0};
  std::optional<std::vector<double>> warm;
  BacktestReport report;
  std::vector<solver::WeightVector> history;
  std::vector<MetricSuite> in_sample_suites;
  double nonzero_total = 0.0;
  std::size_t completed_windows = 0;
};

struct WindowContext {
  Matrix in_returns;
  std::vector<double> in_index;
  std::size_t in_start = 0;
  std::size_t out_start = 0;
};

}  // namespace

std::size_t WindowPlan::window_count() const {
  validate();
  return (total_days - in_sample_days) / out_sample_days;
}

void WindowPlan::validate() const {
  if (in_sample_days < 2 || out_sample_days < 1) throw DataError("invalid window plan");
  if (total_days < in_sample_days + out_sample_days)
    throw DataError("panel too short for one rolling window");
}

std::vector<WindowRange> WindowPlan::windows() const {
  const std::size_t count = window_count();
  std::vector<WindowRange> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w)
    out.push_back({w * out_sample_days, w * out_sample_days + in_sample_days});
  return out;
}

double tracking_error(std::span<const double> portfolio, std::span<const double> index) {
  if (portfolio.size() != index.size()) throw DataError("series length mismatch");
  if (portfolio.size() < 2) throw DataError("tracking error needs at least 2 observations");
  const double sse = kernels::sum_sq_diff(portfolio.data(), index.data(), portfolio.size());
  return std::sqrt(sse / static_cast<double>(portfolio.size() - 1));
}

double correlation(std::span<const double> portfolio, std::span<const double> index) {
  if (portfolio.size() != index.size()) throw DataError("series length mismatch");
  if (portfolio.size() < 2) throw DataError("correlation needs at least 2 observations");
  if (std::equal(portfolio.begin(), portfolio.end(), index.begin())) return 1.0;
  const double n = static_cast<double>(portfolio.size());
  const double mx = kernels::sum(portfolio.data(), portfolio.size()) / n;
  const double my = kernels::sum(index.data(), index.size()) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < portfolio.size(); ++t) {
    const double dx = portfolio[t] - mx;
    const double dy = index[t] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double downside_deviation(std::span<const double> portfolio, std::span<const double> index) {
  if (portfolio.size() != index.size()) throw DataError("series length mismatch");
  if (portfolio.empty()) throw DataError("downside deviation needs observations");
  const double shortfall =
      kernels::sum_sq_pos_diff(index.data(), portfolio.data(), portfolio.size());
  return std::sqrt(shortfall / static_cast<double>(portfolio.size()));
}

std::pair<double, double> var_cvar(std::span<const double> portfolio, double alpha) {
  if (portfolio.empty()) throw DataError("VaR needs observations");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must be in (0, 1)");
  std::vector<double> losses(portfolio.size());
  for (std::size_t t = 0; t < portfolio.size(); ++t) losses[t] = -portfolio[t];
  std::sort(losses.begin(), losses.end());

  // smallest order statistic whose empirical CDF strictly exceeds alpha
  const double n = static_cast<double>(losses.size());
  std::size_t k = static_cast<std::size_t>(std::floor(alpha * n)) + 1;
  if (k > losses.size()) k = losses.size();
  const double var = losses[k - 1];

  double tail_sum = 0.0;
  std::size_t tail_count = 0;
  for (auto it = losses.rbegin(); it != losses.rend() && *it > var; ++it) {
    tail_sum += *it;
    ++tail_count;
  }
  const double cvar = tail_count > 0 ? tail_sum / static_cast<double>(tail_count) : var;
  return {var, cvar};
}

RiskAdjusted sharpe_ir(std::span<const double> portfolio, std::span<const double> index,
                       double risk_free) {
  if (portfolio.size() != index.size()) throw DataError("series length mismatch");
  if (portfolio.size() < 2) throw DataError("sharpe_ir needs at least 2 observations");
  const double n = static_cast<double>(portfolio.size());

  RiskAdjusted out;
  const double mean = kernels::sum(portfolio.data(), portfolio.size()) / n;
  const double stdev = sample_stdev(portfolio);
  if (mean > risk_free) {
    if (stdev == 0.0) throw DataError("Sharpe ratio undefined: zero volatility with excess mean");
    out.shr = (mean - risk_free) / stdev;
  }

  std::vector<double> excess(portfolio.size());
  for (std::size_t t = 0; t < portfolio.size(); ++t) excess[t] = portfolio[t] - index[t];
  out.emr = kernels::sum(excess.data(), excess.size()) / n;
  const double sigma_e = sample_stdev(excess);
  if (sigma_e == 0.0) {
    if (out.emr != 0.0)
      throw DataError("information ratio undefined: zero deviation with nonzero excess mean");
    out.ir = 0.0;
  } else {
    out.ir = out.emr / sigma_e;
  }
  return out;
}

double turnover(std::span<const solver::WeightVector> history) {
  if (history.size() < 2) throw DataError("turnover needs an initial allocation plus a rebalance");
  const std::size_t n = history.front().weights.size();
  double total = 0.0;
  for (std::size_t r = 1; r < history.size(); ++r) {
    if (history[r].weights.size() != n) throw DataError("weight history dimension mismatch");
    total += kernels::sum_abs_diff(history[r].weights.data(), history[r - 1].weights.data(), n);
  }
  return total / static_cast<double>(history.size() - 1);
}

double annualized_volatility(std::span<const double> portfolio) {
  return market_data::volatility(portfolio);
}

MetricSuite compute_metrics(std::span<const double> portfolio, std::span<const double> index,
                            double var_alpha) {
  MetricSuite suite;
  suite.terror = tracking_error(portfolio, index);
  suite.correlation = correlation(portfolio, index);
  suite.volatility = annualized_volatility(portfolio);
  suite.dd = downside_deviation(portfolio, index);
  const auto [var, cvar] = var_cvar(portfolio, var_alpha);
  suite.var_alpha = var;
  suite.cvar_alpha = cvar;
  const auto risk = sharpe_ir(portfolio, index, 0.0);
  suite.shr = risk.shr;
  suite.ir = risk.ir;
  suite.emr = risk.emr;
  return suite;
}

std::map<PenaltyKind, BacktestReport> run_backtest(const market_data::ReturnPanel& panel,
                                                   const WindowPlan& plan,
                                                   std::span<const PenaltyKind> kinds,
                                                   const BacktestConfig& config) {
  plan.validate();
  if (kinds.empty()) throw DataError("no model kinds requested");
  if (plan.total_days > panel.days()) throw DataError("plan exceeds panel length");
  const std::size_t feed_days = static_cast<std::size_t>(config.sub_series.total_days());

  std::map<PenaltyKind, KindState> states;
  for (PenaltyKind kind : kinds) states[kind].requested = true;

  penalty::LandscapeCache cache;
  const auto ranges = plan.windows();
  const std::size_t n = panel.assets();

  for (std::size_t w = 0; w < ranges.size(); ++w) {
    WindowContext ctx;
    ctx.in_start = ranges[w].in_start;
    ctx.out_start = ranges[w].out_start;
    ctx.in_returns = slice_rows(panel.asset_returns, ctx.in_start, plan.in_sample_days);
    ctx.in_index.assign(panel.index_returns.begin() + static_cast<std::ptrdiff_t>(ctx.in_start),
                        panel.index_returns.begin() +
                            static_cast<std::ptrdiff_t>(ctx.in_start + plan.in_sample_days));

    std::map<PenaltyKind, solver::SolveResult> solved;

    // Solve a kind for this window, memoized; reference kinds may be pulled
    // in by the tuning step even when not requested.
    auto ensure_solved = [&](auto&& self, PenaltyKind kind) -> const solver::SolveResult& {
      if (auto it = solved.find(kind); it != solved.end()) return it->second;
      KindState& state = states[kind];

      solver::TrackingProblem problem;
      problem.index_returns = ctx.in_index;

      switch (kind) {
        case PenaltyKind::TE:
          problem.penalty = penalty::PenaltySpec::te(n);
          break;
        case PenaltyKind::TDAEN12:
        case PenaltyKind::TDAEN11:
        case PenaltyKind::TDA_L1:
          if (feed_days > plan.in_sample_days)
            throw DataError("penalty-learning window exceeds the in-sample window");
          problem.penalty = penalty::build_tda_spec(
              panel, ctx.in_start + plan.in_sample_days - feed_days, config.sub_series,
              config.embedding, kind, &cache, config.norm);
          break;
        case PenaltyKind::VolEN:
        case PenaltyKind::Vol_L1:
        case PenaltyKind::SLOPE:
        case PenaltyKind::AdaptiveEN: {
          if (!state.tuned || config.retune_per_window) {
            const auto& reference = self(self, reference_kind(kind));
            const auto grid = penalty::default_tuning_grid(kind, ctx.in_returns, ctx.in_index,
                                                           config.tuning_levels);
            state.params = penalty::grid_search_scaling(
                ctx.in_returns, ctx.in_index, kind,
                std::max(reference.weights.nonzero_count, 1), grid);
            state.tuned = true;
          }
          if (kind == PenaltyKind::AdaptiveEN) {
            const auto& pilot = self(self, PenaltyKind::TE);
            problem.penalty = penalty::adaptive_en_spec(pilot.weights.weights,
                                                        state.params.first, state.params.second);
          } else {
            problem.penalty = penalty::spec_for_parameters(ctx.in_returns, ctx.in_index, kind,
                                                           state.params.first,
                                                           state.params.second);
          }
          break;
        }
      }

      problem.asset_returns = ctx.in_returns;
      solver::SolveOptions options = config.solve;
      if (config.warm_start && state.warm) options.warm_start = state.warm;
      auto result = kind == PenaltyKind::SLOPE ? solver::solve_slope(problem, options)
                                               : solver::solve_tracking(problem, options);
      return solved.emplace(kind, std::move(result)).first->second;
    };

    for (PenaltyKind kind : kCanonicalOrder) {
      auto it = states.find(kind);
      if (it == states.end() || !it->second.requested) continue;
      KindState& state = it->second;

      WindowResult window_result;
      try {
        const auto& result = ensure_solved(ensure_solved, kind);
        window_result.weights = result.weights;
        window_result.diagnostics = result.diagnostics;
        window_result.nonzero_assets = result.weights.nonzero_count;
      } catch (const SolverError&) {
        if (!config.skip_failed_windows) throw;
        window_result.diagnostics.converged = false;
        state.report.per_window.push_back(std::move(window_result));
        continue;
      }

      state.warm = window_result.weights.weights;
      state.history.push_back(window_result.weights);
      state.nonzero_total += window_result.nonzero_assets;
      ++state.completed_windows;

      const auto in_series =
          solver::portfolio_returns(ctx.in_returns, window_result.weights.weights);
      window_result.in_sample_terror = tracking_error(in_series, ctx.in_index);
      state.in_sample_suites.push_back(compute_metrics(in_series, ctx.in_index, config.var_alpha));

      std::vector<double> out_index(
          panel.index_returns.begin() + static_cast<std::ptrdiff_t>(ctx.out_start),
          panel.index_returns.begin() +
              static_cast<std::ptrdiff_t>(ctx.out_start + plan.out_sample_days));
      const Matrix out_returns =
          slice_rows(panel.asset_returns, ctx.out_start, plan.out_sample_days);
      const auto out_series =
          solver::portfolio_returns(out_returns, window_result.weights.weights);
      window_result.out_sample_terror = tracking_error(out_series, out_index);

      auto& report = state.report;
      report.oos_returns.insert(report.oos_returns.end(), out_series.begin(), out_series.end());
      report.index_oos.insert(report.index_oos.end(), out_index.begin(), out_index.end());
      report.per_window.push_back(std::move(window_result));
    }
  }

  std::map<PenaltyKind, BacktestReport> reports;
  for (auto& [kind, state] : states) {
    if (!state.requested) continue;
    BacktestReport& report = state.report;
    if (!report.oos_returns.empty()) {
      report.metrics = compute_metrics(report.oos_returns, report.index_oos, config.var_alpha);
      report.metrics.tr = state.history.size() >= 2 ? turnover(state.history) : 0.0;
      report.metrics.mean_assets =
          state.completed_windows > 0
              ? state.nonzero_total / static_cast<double>(state.completed_windows)
              : 0.0;

      report.wealth_curve.assign(1, 1.0);
      for (double r : report.oos_returns)
        report.wealth_curve.push_back(report.wealth_curve.back() * (1.0 + r));
    }
    if (!state.in_sample_suites.empty()) {
      MetricSuite& mean = report.in_sample_mean;
      for (const auto& suite : state.in_sample_suites) {
        mean.terror += suite.terror;
        mean.correlation += suite.correlation;
        mean.volatility += suite.volatility;
        mean.dd += suite.dd;
        mean.var_alpha += suite.var_alpha;
        mean.cvar_alpha += suite.cvar_alpha;
        mean.shr += suite.shr;
        mean.ir += suite.ir;
        mean.emr += suite.emr;
      }
      const double count = static_cast<double>(state.in_sample_suites.size());
      mean.terror /= count;
      mean.correlation /= count;
      mean.volatility /= count;
      mean.dd /= count;
      mean.var_alpha /= count;
      mean.cvar_alpha /= count;
      mean.shr /= count;
      mean.ir /= count;
      mean.emr /= count;
      mean.mean_assets = report.metrics.mean_assets;
    }
    reports.emplace(kind, std::move(report));
  }
  return reports;
}

}  // namespace topotrack::backtest
