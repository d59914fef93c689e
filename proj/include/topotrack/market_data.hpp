#pragma once

#include <optional>
#include <string>
#include <vector>

#include "topotrack/common.hpp"

// Price ingestion, return computation, constituent filtering and per-series
// descriptive statistics.

namespace topotrack::market_data {

/// Daily closing prices for one index plus its constituents. Missing
/// observations are stored as NaN and only survive until
/// filter_full_history(); a panel fed to compute_returns() must be gap-free
/// and strictly positive.
struct PricePanel {
  std::vector<std::string> dates;    // ISO-8601, strictly increasing
  std::vector<std::string> tickers;  // column labels, positions match prices
  Matrix prices;                     // dates.size() x tickers.size()

  std::size_t days() const { return dates.size(); }
  std::size_t assets() const { return tickers.size(); }
  /// Column index of a ticker, or throws DataError.
  std::size_t column_of(const std::string& ticker) const;
  bool has_gaps() const;
};

/// Simple returns over consecutive trading days, split into the tracked
/// index series and the constituent matrix (T x n, column per asset).
struct ReturnPanel {
  std::vector<std::string> dates;  // return dates, length T (panel day 1..T)
  std::vector<std::string> tickers;
  std::vector<double> index_returns;  // length T
  Matrix asset_returns;               // T x n

  std::size_t days() const { return index_returns.size(); }
  std::size_t assets() const { return tickers.size(); }
};

struct DescriptiveStats {
  double mean = 0;
  double max = 0;
  double min = 0;
  double std_dev = 0;     // sample (T-1) denominator
  double volatility = 0;  // sqrt(252 * sum(r^2) / T), uncentered
  double skewness = 0;    // sample-adjusted Fisher
  double kurtosis = 0;    // sample-adjusted Fisher, excess
  double percentile_10 = 0;
  double percentile_50 = 0;
  double percentile_90 = 0;
};

struct CsvFormat {
  char delimiter = ',';
};

/// Parse a delimiter-separated price file: first column a date, one column
/// per ticker, header row with ticker symbols. Rows are sorted by date.
/// Empty cells and the tokens NA/NaN/nan mark missing observations.
/// Throws DataError (with row/column context) on malformed numbers,
/// non-positive prices and duplicate dates.
PricePanel load_prices(const std::string& path, const CsvFormat& format = {});

/// Same parser over an in-memory buffer; `origin` names the source in errors.
PricePanel parse_prices(const std::string& text, const CsvFormat& format = {},
                        const std::string& origin = "<memory>");

/// Keep exactly the tickers with a value on every date. The index ticker
/// must survive, otherwise DataError.
PricePanel filter_full_history(const PricePanel& panel, const std::string& index_ticker);

/// Rows within [from, to] inclusive; an empty bound is open. ISO-8601
/// strings compare lexicographically.
PricePanel restrict_dates(const PricePanel& panel, const std::string& from,
                          const std::string& to);

/// Simple returns r_t = (P_t - P_{t-1}) / P_{t-1}; output has T_in - 1 rows.
/// Requires a gap-free panel with positive prices and >= 2 dates.
ReturnPanel compute_returns(const PricePanel& panel, const std::string& index_ticker);

/// Sample moments, annualized volatility and interpolated percentiles of a
/// return series. Requires length >= 4 (kurtosis).
DescriptiveStats describe(std::span<const double> series);

/// Uncentered annualized volatility, sqrt(252 * sum(r^2) / T).
double volatility(std::span<const double> series);

/// Linear-interpolation percentile of a series, q in [0, 1].
double percentile(std::span<const double> series, double q);

}  // namespace topotrack::market_data
