#include "topotrack/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "topotrack/kernels.hpp"

namespace topotrack::market_data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delimiter)) cells.push_back(cell);
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::size_t PricePanel::column_of(const std::string& ticker) const {
  auto it = std::find(tickers.begin(), tickers.end(), ticker);
  if (it == tickers.end()) throw DataError("ticker not found: " + ticker);
  return static_cast<std::size_t>(it - tickers.begin());
}

bool PricePanel::has_gaps() const {
  for (std::size_t c = 0; c < assets(); ++c)
    for (double p : prices.col(c))
      if (std::isnan(p)) return true;
  return false;
}

PricePanel parse_prices(const std::string& text, const CsvFormat& format,
                        const std::string& origin) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file");

  const auto header = split_line(trim(line), format.delimiter);
  if (header.size() < 2)
    throw DataError(origin + ": header must contain a date column and at least one ticker");

  PricePanel panel;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string ticker = trim(header[i]);
    if (ticker.empty())
      throw DataError(origin + ": empty ticker name in header column " + std::to_string(i + 1));
    panel.tickers.push_back(ticker);
  }

  const std::size_t n = panel.tickers.size();
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_line(line, format.delimiter);
    if (cells.size() != n + 1)
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(n + 1) + " columns, got " + std::to_string(cells.size()));
    std::vector<double> row(n, kNaN);
    for (std::size_t c = 0; c < n; ++c) {
      const std::string cell = trim(cells[c + 1]);
      if (is_missing_token(cell)) continue;
      double value;
      try {
        std::size_t pos = 0;
        value = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError(origin + ":" + std::to_string(lineno) + ": column " +
                        std::to_string(c + 2) + ": malformed price '" + cell + "'");
      }
      if (!(value > 0.0) || !std::isfinite(value))
        throw DataError(origin + ":" + std::to_string(lineno) + ": column " +
                        std::to_string(c + 2) + ": non-positive price for " + panel.tickers[c]);
      row[c] = value;
    }
    rows.emplace_back(trim(cells[0]), std::move(row));
  }
  if (rows.size() < 1) throw DataError(origin + ": no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].first == rows[r - 1].first)
      throw DataError(origin + ": duplicate date " + rows[r].first);

  panel.prices = Matrix(rows.size(), n);
  panel.dates.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    panel.dates.push_back(rows[r].first);
    for (std::size_t c = 0; c < n; ++c) panel.prices(r, c) = rows[r].second[c];
  }
  return panel;
}

PricePanel load_prices(const std::string& path, const CsvFormat& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open price file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_prices(buffer.str(), format, path);
}

PricePanel filter_full_history(const PricePanel& panel, const std::string& index_ticker) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < panel.assets(); ++c) {
    const auto column = panel.prices.col(c);
    const bool complete = std::none_of(column.begin(), column.end(),
                                       [](double p) { return std::isnan(p); });
    if (complete)
      keep.push_back(c);
    else if (panel.tickers[c] == index_ticker)
      throw DataError("index ticker " + index_ticker + " has missing observations");
  }
  PricePanel out;
  out.dates = panel.dates;
  out.prices = Matrix(panel.days(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.tickers.push_back(panel.tickers[keep[j]]);
    const auto src = panel.prices.col(keep[j]);
    std::copy(src.begin(), src.end(), out.prices.col(j).begin());
  }
  out.column_of(index_ticker);  // must survive
  return out;
}

PricePanel restrict_dates(const PricePanel& panel, const std::string& from,
                          const std::string& to) {
  std::size_t begin = 0;
  std::size_t end = panel.days();
  if (!from.empty())
    while (begin < end && panel.dates[begin] < from) ++begin;
  if (!to.empty())
    while (end > begin && panel.dates[end - 1] > to) --end;
  if (begin == end) throw DataError("date range [" + from + ", " + to + "] selects no rows");

  PricePanel out;
  out.tickers = panel.tickers;
  out.dates.assign(panel.dates.begin() + static_cast<std::ptrdiff_t>(begin),
                   panel.dates.begin() + static_cast<std::ptrdiff_t>(end));
  out.prices = Matrix(end - begin, panel.assets());
  for (std::size_t c = 0; c < panel.assets(); ++c) {
    const auto src = panel.prices.col(c);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin),
              src.begin() + static_cast<std::ptrdiff_t>(end), out.prices.col(c).begin());
  }
  return out;
}

ReturnPanel compute_returns(const PricePanel& panel, const std::string& index_ticker) {
  if (panel.days() < 2) throw DataError("need at least 2 dates to compute returns");
  if (panel.has_gaps()) throw DataError("panel has missing observations; filter first");
  const std::size_t index_col = panel.column_of(index_ticker);
  const std::size_t T = panel.days() - 1;

  ReturnPanel out;
  out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
  for (std::size_t c = 0; c < panel.assets(); ++c)
    if (c != index_col) out.tickers.push_back(panel.tickers[c]);
  out.index_returns.resize(T);
  out.asset_returns = Matrix(T, out.tickers.size());

  const auto fill = [&](std::size_t src_col, auto&& sink) {
    const auto p = panel.prices.col(src_col);
    for (std::size_t t = 0; t < T; ++t) sink(t, (p[t + 1] - p[t]) / p[t]);
  };
  fill(index_col, [&](std::size_t t, double r) { out.index_returns[t] = r; });
  std::size_t j = 0;
  for (std::size_t c = 0; c < panel.assets(); ++c) {
    if (c == index_col) continue;
    fill(c, [&, j](std::size_t t, double r) { out.asset_returns(t, j) = r; });
    ++j;
  }
  return out;
}

double volatility(std::span<const double> series) {
  if (series.empty()) return 0.0;
  const double T = static_cast<double>(series.size());
  return std::sqrt(252.0 * kernels::sum_sq(series.data(), series.size()) / T);
}

double percentile(std::span<const double> series, double q) {
  if (series.empty()) throw DataError("percentile of empty series");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

DescriptiveStats describe(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) throw DataError("describe needs at least 4 observations");
  const double N = static_cast<double>(n);

  DescriptiveStats s;
  s.mean = kernels::sum(series.data(), n) / N;
  s.max = *std::max_element(series.begin(), series.end());
  s.min = *std::min_element(series.begin(), series.end());

  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : series) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= N;
  m3 /= N;
  m4 /= N;

  s.std_dev = std::sqrt(m2 * N / (N - 1.0));
  s.volatility = volatility(series);
  if (m2 > 0.0) {
    const double g1 = m3 / std::pow(m2, 1.5);
    const double g2 = m4 / (m2 * m2) - 3.0;
    s.skewness = g1 * std::sqrt(N * (N - 1.0)) / (N - 2.0);
    s.kurtosis = ((N + 1.0) * g2 + 6.0) * (N - 1.0) / ((N - 2.0) * (N - 3.0));
  }
  s.percentile_10 = percentile(series, 0.10);
  s.percentile_50 = percentile(series, 0.50);
  s.percentile_90 = percentile(series, 0.90);
  return s;
}

}  // namespace topotrack::market_data
