#include "topotrack/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace topotrack::synth {

namespace {

/// Sequential weekday dates starting 2000-01-03.
std::vector<std::string> trading_dates(std::size_t count) {
  using namespace std::chrono;
  std::vector<std::string> dates;
  dates.reserve(count);
  sys_days day{year{2000} / January / 3};
  while (dates.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      dates.emplace_back(buf);
    }
    day += days{1};
  }
  return dates;
}

}  // namespace

void SynthParams::validate() const {
  if (assets < 1 || true_assets < 1 || true_assets > assets)
    throw DataError("need 1 <= k <= n");
  if (days < 2) throw DataError("need at least 2 return observations");
  if (noise_level < 0.0 || min_vol <= 0.0 || max_vol < min_vol)
    throw DataError("invalid volatility parameters");
}

SynthResult generate(const SynthParams& params) {
  params.validate();
  const std::size_t n = params.assets;
  const std::size_t T = params.days;

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> vol_dist(params.min_vol, params.max_vol);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> sigmas(n);
  for (auto& s : sigmas) s = vol_dist(rng);

  // ground-truth support: a seeded draw of k distinct assets
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> true_weights(n, 0.0);
  std::uniform_real_distribution<double> mass(0.5, 1.5);
  double total = 0.0;
  for (std::size_t j = 0; j < params.true_assets; ++j) {
    true_weights[order[j]] = mass(rng);
    total += true_weights[order[j]];
  }
  for (auto& w : true_weights) w /= total;

  SynthResult result;
  result.index_ticker = "INDEX";
  auto& prices = result.prices;
  prices.dates = trading_dates(T + 1);
  prices.tickers.push_back(result.index_ticker);
  for (std::size_t i = 0; i < n; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "SYN%03zu", i);
    prices.tickers.emplace_back(name);
  }
  prices.prices = Matrix(T + 1, n + 1);

  // asset prices first; the returns a loader recovers from them are the
  // exact series the index combination uses
  Matrix asset_returns(T, n);
  for (std::size_t i = 0; i < n; ++i) {
    double px = 100.0;
    prices.prices(0, i + 1) = px;
    for (std::size_t t = 0; t < T; ++t) {
      const double z = std::clamp(gauss(rng), -8.0, 8.0);
      px *= 1.0 + sigmas[i] * z;
      prices.prices(t + 1, i + 1) = px;
    }
    const auto col = prices.prices.col(i + 1);
    for (std::size_t t = 0; t < T; ++t)
      asset_returns(t, i) = (col[t + 1] - col[t]) / col[t];
  }

  std::vector<double> index_returns(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (true_weights[i] != 0.0) r += true_weights[i] * asset_returns(t, i);
    if (params.noise_level > 0.0)
      r += params.noise_level * std::clamp(gauss(rng), -8.0, 8.0);
    index_returns[t] = r;
  }
  double index_px = 100.0;
  prices.prices(0, 0) = index_px;
  for (std::size_t t = 0; t < T; ++t) {
    index_px *= 1.0 + index_returns[t];
    prices.prices(t + 1, 0) = index_px;
  }

  auto& returns = result.returns;
  returns.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  returns.tickers.assign(prices.tickers.begin() + 1, prices.tickers.end());
  returns.index_returns = std::move(index_returns);
  returns.asset_returns = std::move(asset_returns);
  result.true_weights = std::move(true_weights);
  return result;
}

}  // namespace topotrack::synth
