#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "topotrack/market_data.hpp"
#include "topotrack/penalty.hpp"
#include "topotrack/solver.hpp"
#include "topotrack/tda.hpp"

using namespace topotrack;
using penalty::PenaltyKind;
using penalty::SubSeriesPlan;

namespace {

market_data::ReturnPanel synthetic_panel(std::mt19937_64& rng, std::size_t T, std::size_t n,
                                         double scale = 0.01) {
  std::normal_distribution<double> gauss(0.0, scale);
  market_data::ReturnPanel panel;
  panel.asset_returns = Matrix(T, n);
  panel.index_returns.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    panel.dates.push_back("d" + std::to_string(t));
    panel.index_returns[t] = gauss(rng);
    for (std::size_t i = 0; i < n; ++i) panel.asset_returns(t, i) = gauss(rng);
  }
  for (std::size_t i = 0; i < n; ++i) panel.tickers.push_back("A" + std::to_string(i));
  return panel;
}

}  // namespace

TEST_SUITE("penalty") {

TEST_CASE("sub-series plan default matches the documented protocol") {
  const SubSeriesPlan plan;  // M = 6, T~ = 42, h = 21
  CHECK(plan.total_days() == 126);
  CHECK(plan.count() == 5);

  SubSeriesPlan bad = plan;
  bad.step_days = 42;
  CHECK_THROWS_AS(bad.count(), DataError);
  bad = plan;
  bad.step_days = 20;  // (126 - 42) not divisible by 20
  CHECK_THROWS_AS(bad.count(), DataError);
}

TEST_CASE("tda_coefficients on a constant series is zero") {
  const std::vector<double> flat(126, 0.004);
  const auto [alpha, beta] = penalty::tda_coefficients(flat, SubSeriesPlan{}, {3, 1});
  CHECK(alpha == 0.0);
  CHECK(beta == 0.0);
}

TEST_CASE("tda_coefficients scale quadratically") {
  std::mt19937_64 rng(20260810);
  std::normal_distribution<double> gauss(0.0, 0.01);
  std::vector<double> series(126), doubled(126);
  for (std::size_t i = 0; i < series.size(); ++i) {
    series[i] = gauss(rng);
    doubled[i] = 2.0 * series[i];
  }
  const auto [a1, b1] = penalty::tda_coefficients(series, SubSeriesPlan{}, {3, 1});
  const auto [a2, b2] = penalty::tda_coefficients(doubled, SubSeriesPlan{}, {3, 1});
  CHECK(a2 == doctest::Approx(4.0 * a1).epsilon(1e-9));
  CHECK(b2 == doctest::Approx(4.0 * b1).epsilon(1e-9));
  CHECK(a1 > 0.0);
}

TEST_CASE("tda_coefficients uses exactly the planned sub-series") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 0.01);
  std::vector<double> series(126);
  for (auto& r : series) r = gauss(rng);

  penalty::LandscapeCache cache;
  penalty::tda_coefficients(series, SubSeriesPlan{}, {3, 1}, &cache, 0, 0);
  CHECK(cache.size() == 5);  // M=6, T~=42, h=21 gives exactly 5 sub-series

  CHECK_THROWS_AS(
      penalty::tda_coefficients(std::vector<double>(100, 0.0), SubSeriesPlan{}, {3, 1}),
      DataError);
}

TEST_CASE("warm cache reproduces the cold-cache spec exactly") {
  std::mt19937_64 rng(17);
  const auto panel = synthetic_panel(rng, 126, 4);
  penalty::LandscapeCache cache;
  const auto cold =
      penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN12, &cache);
  const auto warm =
      penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN12, &cache);
  const auto uncached =
      penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN12, nullptr);
  CHECK(cold.alphas == warm.alphas);
  CHECK(cold.betas == warm.betas);
  CHECK(cold.alphas == uncached.alphas);
  CHECK(cold.betas == uncached.betas);
}

TEST_CASE("build_tda_spec kinds have the required structure") {
  std::mt19937_64 rng(23);
  const auto panel = synthetic_panel(rng, 126, 3);

  const auto en12 = penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN12);
  const auto en11 = penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN11);
  const auto l1 = penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDA_L1);

  CHECK(en11.betas == en11.alphas);
  CHECK(en11.alphas == en12.alphas);
  CHECK(l1.alphas == en12.alphas);
  for (double b : l1.betas) CHECK(b == 0.0);

  // per-asset values match a direct evaluation outside the batch path
  for (std::size_t i = 0; i < 3; ++i) {
    const auto [a, b] =
        penalty::tda_coefficients(panel.asset_returns.col(i), SubSeriesPlan{}, {3, 1});
    CHECK(en12.alphas[i] == a);
    CHECK(en12.betas[i] == b);
  }

  en12.validate();
  en11.validate();
  l1.validate();
}

TEST_CASE("vol_spec scaling behavior") {
  std::mt19937_64 rng(31);
  const auto panel = synthetic_panel(rng, 80, 3);

  const auto zero_phi = penalty::vol_spec(panel.asset_returns, PenaltyKind::Vol_L1, 0.0, 0.0);
  for (double a : zero_phi.alphas) CHECK(a == 0.0);

  const auto base = penalty::vol_spec(panel.asset_returns, PenaltyKind::VolEN, 1.0, 0.5);
  const auto doubled = penalty::vol_spec(panel.asset_returns, PenaltyKind::VolEN, 2.0, 0.5);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(doubled.alphas[i] == doctest::Approx(2.0 * base.alphas[i]).epsilon(1e-15));
    CHECK(base.alphas[i] ==
          doctest::Approx(market_data::volatility(panel.asset_returns.col(i))).epsilon(1e-15));
    CHECK(base.betas[i] == doctest::Approx(0.5 * base.alphas[i]).epsilon(1e-12));
  }

  Matrix flat(60, 2, 0.0);
  const auto silent = penalty::vol_spec(flat, PenaltyKind::VolEN, 3.0, 2.0);
  for (double a : silent.alphas) CHECK(a == 0.0);
  for (double b : silent.betas) CHECK(b == 0.0);
}

TEST_CASE("adaptive_en_spec reciprocal weights with floor") {
  const auto spec = penalty::adaptive_en_spec(std::vector<double>{0.5, 0.5}, 1.0, 0.25);
  CHECK(spec.alphas == std::vector<double>{2.0, 2.0});
  CHECK(spec.betas == std::vector<double>{0.25, 0.25});

  const auto zero = penalty::adaptive_en_spec(std::vector<double>{0.5, 0.5}, 0.0, 0.0);
  CHECK(zero.alphas == std::vector<double>{0.0, 0.0});

  const auto floored = penalty::adaptive_en_spec(std::vector<double>{1e-9, 1.0}, 1.0, 0.0);
  CHECK(floored.alphas[0] == doctest::Approx(1e6));
}

TEST_CASE("slope_sequence linear shape") {
  const auto seq = penalty::slope_sequence(4, 1.0);
  CHECK(seq == std::vector<double>{1.0, 0.75, 0.5, 0.25});

  const auto zero = penalty::slope_sequence(3, 0.0);
  CHECK(zero == std::vector<double>{0.0, 0.0, 0.0});

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = penalty::slope_sequence(1 + rng() % 12, u(rng));
    auto sorted = s;
    std::sort(sorted.rbegin(), sorted.rend());
    CHECK(s == sorted);
  }
}

TEST_CASE("every produced spec satisfies its invariants") {
  std::mt19937_64 rng(53);
  const auto panel = synthetic_panel(rng, 126, 4);
  penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN12).validate();
  penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN11).validate();
  penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDA_L1).validate();
  penalty::vol_spec(panel.asset_returns, PenaltyKind::VolEN, 0.7, 0.3).validate();
  penalty::vol_spec(panel.asset_returns, PenaltyKind::Vol_L1, 0.7, 0.0).validate();
  penalty::adaptive_en_spec(std::vector<double>{0.4, 0.3, 0.2, 0.1}, 0.5, 0.2).validate();
  penalty::slope_spec(4, 0.9).validate();
  penalty::PenaltySpec::te(4).validate();
}

TEST_CASE("grid search honors the asset band and tracking error") {
  std::mt19937_64 rng(61);
  const auto panel = synthetic_panel(rng, 60, 3);

  // singleton grid returns its only point
  const std::vector<std::pair<double, double>> single{{0.7, 0.2}};
  CHECK(penalty::grid_search_scaling(panel.asset_returns, panel.index_returns,
                                     PenaltyKind::VolEN, 2, single) ==
        std::pair<double, double>{0.7, 0.2});

  // unpenalized least squares keeps all assets and minimizes in-sample error
  const std::vector<std::pair<double, double>> two{{0.0, 0.0}, {1e4, 0.0}};
  CHECK(penalty::grid_search_scaling(panel.asset_returns, panel.index_returns,
                                     PenaltyKind::Vol_L1, 3, two) ==
        std::pair<double, double>{0.0, 0.0});
}

TEST_CASE("grid search matches exhaustive evaluation") {
  std::mt19937_64 rng(67);
  const auto panel = synthetic_panel(rng, 60, 3);
  const std::vector<std::pair<double, double>> grid{
      {0.0, 0.0}, {1e-3, 0.0}, {1e-2, 0.0}, {1e-1, 0.0}, {1.0, 0.0}};
  const int target = 2;
  const auto chosen = penalty::grid_search_scaling(panel.asset_returns, panel.index_returns,
                                                   PenaltyKind::Vol_L1, target, grid);

  // exhaustive reference evaluation
  double best_terror = 0.0;
  std::pair<double, double> best{-1, -1};
  int best_dist = 1 << 20;
  const int band = static_cast<int>(std::lround(0.1 * target));
  for (const auto& point : grid) {
    solver::TrackingProblem problem;
    problem.asset_returns = panel.asset_returns;
    problem.index_returns = panel.index_returns;
    problem.penalty = penalty::vol_spec(panel.asset_returns, PenaltyKind::Vol_L1, point.first,
                                        point.second);
    const auto solved = solver::solve_tracking(problem);
    const auto series = solver::portfolio_returns(panel.asset_returns, solved.weights.weights);
    double sse = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
      const double d = series[t] - panel.index_returns[t];
      sse += d * d;
    }
    const double terror = std::sqrt(sse / static_cast<double>(series.size() - 1));
    const int dist = std::abs(solved.weights.nonzero_count - target);
    const bool in_band = dist <= band;
    const bool best_in_band = best_dist <= band;
    bool better;
    if (in_band && best_in_band)
      better = terror < best_terror;
    else if (in_band != best_in_band)
      better = in_band;
    else
      better = dist < best_dist || (dist == best_dist && terror < best_terror);
    if (best.first < 0 || better) {
      best = point;
      best_terror = terror;
      best_dist = dist;
    }
  }
  CHECK(chosen == best);
}

TEST_CASE("cache supports concurrent readers with serialized inserts") {
  std::mt19937_64 rng(81);
  const auto panel = synthetic_panel(rng, 126, 6);
  const auto serial =
      penalty::build_tda_spec(panel, 0, SubSeriesPlan{}, {3, 1}, PenaltyKind::TDAEN12);

  penalty::LandscapeCache cache;
  std::vector<std::thread> workers;
  std::vector<std::pair<double, double>> results(panel.assets());
  for (std::size_t i = 0; i < panel.assets(); ++i)
    workers.emplace_back([&, i] {
      // every thread walks all assets so reads and inserts interleave
      for (std::size_t j = 0; j < panel.assets(); ++j) {
        const auto coeffs = penalty::tda_coefficients(panel.asset_returns.col(j), SubSeriesPlan{},
                                                      {3, 1}, &cache, j, 0);
        if (i == j) results[j] = coeffs;
      }
    });
  for (auto& worker : workers) worker.join();
  for (std::size_t i = 0; i < panel.assets(); ++i) {
    CHECK(results[i].first == serial.alphas[i]);
    CHECK(results[i].second == serial.betas[i]);
  }
  CHECK(cache.size() == panel.assets() * 5);
}

TEST_CASE("mean dim-0 landscape norm rises with generating volatility") {
  std::mt19937_64 rng(73);
  const std::vector<double> sigmas{0.01, 0.02, 0.04};
  std::vector<double> means;
  for (double sigma : sigmas) {
    std::normal_distribution<double> gauss(0.0, sigma);
    double total = 0.0;
    const int draws = 60;
    for (int draw = 0; draw < draws; ++draw) {
      std::vector<double> series(126);
      for (auto& r : series) r = gauss(rng);
      total += penalty::tda_coefficients(series, SubSeriesPlan{}, {3, 1}).first;
    }
    means.push_back(total / draws);
  }
  CHECK(means[0] < means[1]);
  CHECK(means[1] < means[2]);
}

}  // TEST_SUITE
