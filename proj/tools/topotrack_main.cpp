// topotrack command-line interface: stats, penalties, backtest, synth.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "topotrack/backtest.hpp"
#include "topotrack/config.hpp"
#include "topotrack/kernels.hpp"
#include "topotrack/market_data.hpp"
#include "topotrack/penalty.hpp"
#include "topotrack/report_io.hpp"
#include "topotrack/solver.hpp"
#include "topotrack/synth.hpp"

namespace fs = std::filesystem;
using namespace topotrack;
using config::RunConfig;
using penalty::PenaltyKind;
using report::format_number;
using report::Row;

namespace {

struct FlagOverrides {
  std::string config_path;
  std::string data;
  std::string index_ticker;
  std::string models;
  std::string out_dir;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  bool retune = false;
  bool no_warm_start = false;
  bool no_simd = false;
};

void attach_common_flags(CLI::App* cmd, FlagOverrides& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--data", flags.data, "price CSV (date column + one column per ticker)");
  cmd->add_option("--index-ticker", flags.index_ticker, "ticker of the tracked index");
  cmd->add_option("--models", flags.models, "comma-separated model kinds");
  cmd->add_option("--out-dir", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "random seed for synthetic generators");
  cmd->add_option("--alpha", flags.alpha, "VaR confidence level")->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--retune-per-window", flags.retune, "re-run grid search every window");
  cmd->add_flag("--no-warm-start", flags.no_warm_start, "solve each window from uniform weights");
  cmd->add_flag("--no-simd", flags.no_simd, "force the scalar kernel backend");
}

RunConfig resolve_config(const CLI::App* cmd, const FlagOverrides& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = config::load_config(flags.config_path);
  if (cmd->count("--data")) cfg.data_path = flags.data;
  if (cmd->count("--index-ticker")) cfg.index_ticker = flags.index_ticker;
  if (cmd->count("--models")) {
    cfg.models.clear();
    std::stringstream ss(flags.models);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) cfg.models.push_back(item);
  }
  if (cmd->count("--out-dir")) cfg.out_dir = flags.out_dir;
  if (cmd->count("--seed")) cfg.seed = flags.seed;
  if (cmd->count("--alpha")) cfg.var_alpha = flags.alpha;
  if (cmd->count("--retune-per-window")) cfg.retune_per_window = true;
  if (cmd->count("--no-warm-start")) cfg.warm_start = false;
  if (flags.no_simd) kernels::set_backend(kernels::Backend::Scalar);
  cfg.validate();
  return cfg;
}

std::vector<PenaltyKind> parse_kinds(const RunConfig& cfg) {
  std::vector<PenaltyKind> kinds;
  for (const auto& name : cfg.models) kinds.push_back(penalty::kind_from_string(name));
  return kinds;
}

market_data::ReturnPanel load_returns(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw DataError("no data path configured (--data or config)");
  market_data::CsvFormat format{cfg.delimiter[0]};
  auto panel = market_data::load_prices(cfg.data_path, format);
  panel = market_data::restrict_dates(panel, cfg.date_from, cfg.date_to);
  panel = market_data::filter_full_history(panel, cfg.index_ticker);
  if (panel.assets() < 2) throw DataError("no constituents left after filtering");
  return market_data::compute_returns(panel, cfg.index_ticker);
}

penalty::SubSeriesPlan sub_series_plan(const RunConfig& cfg) {
  return {cfg.sub_series_months, cfg.sub_series_days, cfg.sub_series_step};
}

backtest::BacktestConfig backtest_config(const RunConfig& cfg) {
  backtest::BacktestConfig bc;
  bc.var_alpha = cfg.var_alpha;
  bc.warm_start = cfg.warm_start;
  bc.retune_per_window = cfg.retune_per_window;
  bc.skip_failed_windows = cfg.skip_failed_windows;
  bc.sub_series = sub_series_plan(cfg);
  bc.embedding = {cfg.embed_dimension, cfg.embed_delay};
  bc.norm = {cfg.norm_p, cfg.norm_k_max};
  bc.tuning_levels = cfg.tuning_levels;
  return bc;
}

char delim(const RunConfig& cfg) { return cfg.delimiter[0]; }

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg) {
  synth::SynthParams params;
  params.assets = cfg.synth_assets;
  params.true_assets = cfg.synth_true_assets;
  params.days = cfg.synth_days;
  params.noise_level = cfg.synth_noise;
  params.seed = cfg.seed;
  const auto result = synth::generate(params);

  Row header{"date"};
  for (const auto& t : result.prices.tickers) header.push_back(t);
  std::vector<Row> rows;
  rows.reserve(result.prices.days());
  for (std::size_t r = 0; r < result.prices.days(); ++r) {
    Row row{result.prices.dates[r]};
    for (std::size_t c = 0; c < result.prices.assets(); ++c)
      row.push_back(format_number(result.prices.prices(r, c)));
    rows.push_back(std::move(row));
  }
  report::write_table(out_path(cfg, "prices.csv"), header, rows, delim(cfg));

  std::vector<Row> truth;
  for (std::size_t i = 0; i < result.true_weights.size(); ++i)
    if (result.true_weights[i] != 0.0)
      truth.push_back({result.returns.tickers[i], format_number(result.true_weights[i])});
  report::write_table(out_path(cfg, "true_weights.csv"), {"ticker", "weight"}, truth, delim(cfg));
  std::cout << "wrote " << out_path(cfg, "prices.csv") << " (" << result.prices.days()
            << " days, " << result.prices.assets() << " series)\n";
  return 0;
}

Row stats_row(const std::string& label, const market_data::DescriptiveStats& s) {
  return {label,
          format_number(s.mean),
          format_number(s.max),
          format_number(s.min),
          format_number(s.std_dev),
          format_number(s.volatility),
          format_number(s.skewness),
          format_number(s.kurtosis),
          format_number(s.percentile_10),
          format_number(s.percentile_50),
          format_number(s.percentile_90)};
}

const Row kStatsHeader{"series",   "mean",        "max",           "min",
                       "std_dev",  "volatility",  "skewness",      "kurtosis",
                       "percentile_10", "percentile_50", "percentile_90"};

int cmd_stats(const RunConfig& cfg, bool dump_tda) {
  const auto returns = load_returns(cfg);
  const auto plan = sub_series_plan(cfg);
  const std::size_t feed = static_cast<std::size_t>(plan.total_days());
  if (returns.days() < feed)
    throw DataError("need at least " + std::to_string(feed) + " return observations");
  const std::size_t feed_start = returns.days() - feed;

  {
    // key-value layout for the single index series
    const auto s = market_data::describe(returns.index_returns);
    const auto row = stats_row(cfg.index_ticker, s);
    std::vector<Row> kv;
    for (std::size_t i = 1; i < kStatsHeader.size(); ++i) kv.push_back({kStatsHeader[i], row[i]});
    report::write_table(out_path(cfg, "describe_index.csv"), {"statistic", "value"}, kv,
                        delim(cfg));
  }

  std::vector<Row> asset_rows;
  for (std::size_t i = 0; i < returns.assets(); ++i)
    asset_rows.push_back(
        stats_row(returns.tickers[i], market_data::describe(returns.asset_returns.col(i))));
  report::write_table(out_path(cfg, "describe_assets.csv"), kStatsHeader, asset_rows, delim(cfg));

  // per-asset histogram source data over the most recent penalty window
  const std::vector<std::string> stat_names{"correlation", "mean",      "std_dev",
                                            "volatility",  "dim0_norm", "dim1_norm"};
  std::vector<std::vector<double>> columns(stat_names.size());
  std::vector<Row> hist_rows;
  penalty::LandscapeCache cache;
  for (std::size_t i = 0; i < returns.assets(); ++i) {
    const auto series = returns.asset_returns.col(i);
    const auto stats = market_data::describe(series);
    const auto [a, b] = penalty::tda_coefficients(
        series.subspan(feed_start, feed), plan, {cfg.embed_dimension, cfg.embed_delay}, &cache, i,
        feed_start, {cfg.norm_p, cfg.norm_k_max});
    const double corr = backtest::correlation(series, returns.index_returns);
    const std::vector<double> values{corr, stats.mean, stats.std_dev, stats.volatility, a, b};
    Row row{returns.tickers[i]};
    for (std::size_t c = 0; c < values.size(); ++c) {
      columns[c].push_back(values[c]);
      row.push_back(format_number(values[c]));
    }
    hist_rows.push_back(std::move(row));
  }
  Row hist_header{"ticker"};
  for (const auto& name : stat_names) hist_header.push_back(name);
  report::write_table(out_path(cfg, "asset_histograms.csv"), hist_header, hist_rows, delim(cfg));

  std::vector<Row> marker_rows;
  for (std::size_t c = 0; c < stat_names.size(); ++c) {
    auto sorted = columns[c];
    std::sort(sorted.begin(), sorted.end());
    const double mean =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    const double median = market_data::percentile(sorted, 0.5);
    marker_rows.push_back({stat_names[c], format_number(mean), format_number(median)});
  }
  report::write_table(out_path(cfg, "asset_histogram_markers.csv"), {"statistic", "mean", "median"},
                      marker_rows, delim(cfg));

  if (dump_tda) {
    // per-asset diagram and landscapes of the most recent sub-series
    const std::string dir = out_path(cfg, "tda_debug");
    fs::create_directories(dir);
    const std::size_t sub = static_cast<std::size_t>(plan.sub_series_days);
    for (std::size_t i = 0; i < returns.assets(); ++i) {
      const auto series = returns.asset_returns.col(i);
      const auto cloud = tda::takens_embed(series.subspan(returns.days() - sub, sub),
                                           cfg.embed_dimension, cfg.embed_delay);
      const auto diagram = tda::rips_persistence(cloud);
      const auto& ticker = returns.tickers[i];
      report::write_diagram(dir + "/diagram_" + ticker + ".csv", diagram, delim(cfg));
      report::write_landscape(dir + "/landscape0_" + ticker + ".csv",
                              tda::landscape_from_diagram(diagram, 0), delim(cfg));
      report::write_landscape(dir + "/landscape1_" + ticker + ".csv",
                              tda::landscape_from_diagram(diagram, 1), delim(cfg));
    }
  }
  std::cout << "wrote 4 stats files to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_penalties(const RunConfig& cfg) {
  const auto returns = load_returns(cfg);
  const auto plan = sub_series_plan(cfg);
  const std::size_t window = std::min<std::size_t>(cfg.in_sample_days, returns.days());
  if (window < static_cast<std::size_t>(plan.total_days()))
    throw DataError("panel shorter than the penalty-learning window");
  const std::size_t window_start = returns.days() - window;
  const std::size_t feed_start = returns.days() - static_cast<std::size_t>(plan.total_days());

  Matrix window_returns(window, returns.assets());
  for (std::size_t c = 0; c < returns.assets(); ++c) {
    const auto src = returns.asset_returns.col(c);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(window_start), src.end(),
              window_returns.col(c).begin());
  }
  const std::vector<double> window_index(
      returns.index_returns.begin() + static_cast<std::ptrdiff_t>(window_start),
      returns.index_returns.end());

  penalty::LandscapeCache cache;
  const tda::EmbeddingParams embed{cfg.embed_dimension, cfg.embed_delay};
  const penalty::NormOrder norm{cfg.norm_p, cfg.norm_k_max};

  const auto tda_spec_of = [&](PenaltyKind kind) {
    return penalty::build_tda_spec(returns, feed_start, plan, embed, kind, &cache, norm);
  };

  for (const auto& name : cfg.models) {
    const PenaltyKind kind = penalty::kind_from_string(name);
    penalty::PenaltySpec spec;
    switch (kind) {
      case PenaltyKind::TE:
        spec = penalty::PenaltySpec::te(returns.assets());
        break;
      case PenaltyKind::TDAEN12:
      case PenaltyKind::TDAEN11:
      case PenaltyKind::TDA_L1:
        spec = tda_spec_of(kind);
        break;
      default: {
        const auto reference =
            tda_spec_of(penalty::is_elastic_net_kind(kind) ? PenaltyKind::TDAEN12
                                                           : PenaltyKind::TDA_L1);
        solver::TrackingProblem ref_problem{window_returns, window_index, reference};
        const auto ref_solve = solver::solve_tracking(ref_problem);
        const auto grid =
            penalty::default_tuning_grid(kind, window_returns, window_index, cfg.tuning_levels);
        const auto params = penalty::grid_search_scaling(
            window_returns, window_index, kind,
            std::max(ref_solve.weights.nonzero_count, 1), grid);
        spec = penalty::spec_for_parameters(window_returns, window_index, kind, params.first,
                                            params.second);
        break;
      }
    }
    std::vector<Row> rows;
    for (std::size_t i = 0; i < returns.assets(); ++i) {
      const double alpha =
          kind == PenaltyKind::SLOPE ? spec.slope_sequence[i] : spec.alphas[i];
      rows.push_back({returns.tickers[i], format_number(alpha), format_number(spec.betas[i])});
    }
    report::write_table(out_path(cfg, "penalties_" + name + ".csv"),
                        {"ticker", "alpha", "beta"}, rows, delim(cfg));
  }
  std::cout << "wrote penalty files for " << cfg.models.size() << " kind(s) to " << cfg.out_dir
            << "\n";
  return 0;
}

int cmd_backtest(const RunConfig& cfg) {
  const auto returns = load_returns(cfg);
  backtest::WindowPlan plan;
  plan.total_days = returns.days();
  plan.in_sample_days = cfg.in_sample_days;
  plan.out_sample_days = cfg.out_sample_days;
  const auto kinds = parse_kinds(cfg);

  const auto reports = backtest::run_backtest(returns, plan, kinds, backtest_config(cfg));
  const char d = delim(cfg);

  // metric tables, rows = metrics, columns = model kinds
  Row header{"metric"};
  for (const auto& [kind, report] : reports) header.push_back(penalty::to_string(kind));
  const auto metric_rows = [&](auto&& pick) {
    const std::vector<std::pair<std::string, double backtest::MetricSuite::*>> fields{
        {"TError", &backtest::MetricSuite::terror},
        {"Correlation", &backtest::MetricSuite::correlation},
        {"Volatility", &backtest::MetricSuite::volatility},
        {"DD", &backtest::MetricSuite::dd},
        {"VaR", &backtest::MetricSuite::var_alpha},
        {"CVaR", &backtest::MetricSuite::cvar_alpha},
        {"SHR", &backtest::MetricSuite::shr},
        {"IR", &backtest::MetricSuite::ir},
        {"EMR", &backtest::MetricSuite::emr},
        {"TR", &backtest::MetricSuite::tr},
        {"Assets", &backtest::MetricSuite::mean_assets}};
    std::vector<Row> rows;
    for (const auto& [label, member] : fields) {
      Row row{label};
      for (const auto& [kind, report] : reports) row.push_back(format_number(pick(report).*member));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  report::write_table(out_path(cfg, "metrics_table.csv"), header,
                      metric_rows([](const backtest::BacktestReport& r) -> const auto& {
                        return r.metrics;
                      }),
                      d);
  report::write_table(out_path(cfg, "in_sample_table.csv"), header,
                      metric_rows([](const backtest::BacktestReport& r) -> const auto& {
                        return r.in_sample_mean;
                      }),
                      d);

  // concatenated out-of-sample series and wealth curves
  const auto& first_report = reports.begin()->second;
  const std::size_t oos_len = first_report.oos_returns.size();
  std::vector<Row> oos_rows(oos_len);
  Row oos_header{"date", "index"};
  for (std::size_t t = 0; t < oos_len; ++t) {
    oos_rows[t].push_back(returns.dates[cfg.in_sample_days + t]);
    oos_rows[t].push_back(format_number(first_report.index_oos[t]));
  }
  std::map<std::string, std::vector<double>> curves;
  std::vector<Row> wealth_rows(oos_len + 1);
  Row wealth_header{"step"};
  for (std::size_t t = 0; t <= oos_len; ++t) wealth_rows[t].push_back(std::to_string(t));
  for (const auto& [kind, report] : reports) {
    oos_header.push_back(penalty::to_string(kind));
    wealth_header.push_back(penalty::to_string(kind));
    for (std::size_t t = 0; t < oos_len; ++t)
      oos_rows[t].push_back(format_number(report.oos_returns[t]));
    for (std::size_t t = 0; t <= oos_len; ++t)
      wealth_rows[t].push_back(format_number(report.wealth_curve[t]));
    curves[penalty::to_string(kind)] = report.wealth_curve;
  }
  report::write_table(out_path(cfg, "oos_returns.csv"), oos_header, oos_rows, d);
  report::write_table(out_path(cfg, "wealth_curves.csv"), wealth_header, wealth_rows, d);
  report::write_line_chart_svg(out_path(cfg, "wealth_curve.svg"), curves,
                               "Wealth of $1 invested");

  // per-window weights and diagnostics, one file per kind
  std::vector<Row> failures;
  for (const auto& [kind, report] : reports) {
    const std::string name = penalty::to_string(kind);
    std::vector<Row> weight_rows;
    std::vector<Row> window_rows;
    for (std::size_t w = 0; w < report.per_window.size(); ++w) {
      const auto& window = report.per_window[w];
      if (window.weights.weights.empty()) {
        failures.push_back({name, std::to_string(w), "solver failure"});
        continue;
      }
      for (std::size_t i = 0; i < window.weights.weights.size(); ++i)
        if (window.weights.weights[i] != 0.0)
          weight_rows.push_back({std::to_string(w), returns.tickers[i],
                                 format_number(window.weights.weights[i])});
      window_rows.push_back({std::to_string(w), std::to_string(window.nonzero_assets),
                             format_number(window.in_sample_terror),
                             format_number(window.out_sample_terror),
                             std::to_string(window.diagnostics.iterations),
                             format_number(window.diagnostics.kkt_residual),
                             window.diagnostics.converged ? "1" : "0"});
    }
    report::write_table(out_path(cfg, "weights_" + name + ".csv"),
                        {"window", "ticker", "weight"}, weight_rows, d);
    report::write_table(out_path(cfg, "windows_" + name + ".csv"),
                        {"window", "nonzero_assets", "in_sample_terror", "out_sample_terror",
                         "iterations", "kkt_residual", "converged"},
                        window_rows, d);
  }
  if (!failures.empty())
    report::write_table(out_path(cfg, "failure_manifest.csv"), {"kind", "window", "reason"},
                        failures, d);

  std::cout << "backtest complete: " << first_report.per_window.size() << " windows, "
            << reports.size() << " model kind(s); reports in " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse index tracking with topology-learned regularization"};
  app.require_subcommand(1);

  FlagOverrides flags;
  bool dump_tda = false;
  auto* synth_cmd = app.add_subcommand("synth", "generate a seeded synthetic price panel");
  auto* stats_cmd = app.add_subcommand("stats", "descriptive statistics and histogram data");
  auto* penalties_cmd =
      app.add_subcommand("penalties", "per-asset regularization coefficients");
  auto* backtest_cmd = app.add_subcommand("backtest", "rolling-window tracking backtest");
  for (auto* cmd : {synth_cmd, stats_cmd, penalties_cmd, backtest_cmd})
    attach_common_flags(cmd, flags);
  stats_cmd->add_flag("--dump-tda", dump_tda,
                      "emit per-asset persistence diagrams and landscapes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const CLI::App* active = app.get_subcommands().front();
    const RunConfig cfg = resolve_config(active, flags);
    if (active == synth_cmd) return cmd_synth(cfg);
    if (active == stats_cmd) return cmd_stats(cfg, dump_tda);
    if (active == penalties_cmd) return cmd_penalties(cfg);
    return cmd_backtest(cfg);
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
