#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "topotrack/penalty.hpp"
#include "topotrack/solver.hpp"

using namespace topotrack;
using penalty::PenaltyKind;
using penalty::PenaltySpec;
using solver::TrackingProblem;

namespace {

struct RandomInstance {
  TrackingProblem problem;
  std::vector<std::vector<double>> rows;  // row-major copy for the oracles
};

RandomInstance random_problem(std::mt19937_64& rng, std::size_t T, std::size_t n,
                              double return_scale = 0.02) {
  std::normal_distribution<double> gauss(0.0, return_scale);
  RandomInstance inst;
  inst.problem.asset_returns = Matrix(T, n);
  inst.rows.assign(T, std::vector<double>(n));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      const double r = gauss(rng);
      inst.problem.asset_returns(t, i) = r;
      inst.rows[t][i] = r;
    }
  inst.problem.index_returns.resize(T);
  for (auto& r : inst.problem.index_returns) r = gauss(rng);
  inst.problem.penalty = PenaltySpec::te(n);
  return inst;
}

oracles::NaivePenalty naive_penalty(const PenaltySpec& spec) {
  oracles::NaivePenalty p;
  p.alphas = spec.alphas;
  p.betas = spec.betas;
  p.slope_sequence = spec.slope_sequence;
  return p;
}

PenaltySpec en_spec(std::vector<double> alphas, std::vector<double> betas) {
  PenaltySpec spec;
  spec.kind = PenaltyKind::VolEN;  // structurally an arbitrary weighted EN
  spec.alphas = std::move(alphas);
  spec.betas = std::move(betas);
  return spec;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("n = 1 is pinned by the constraint") {
  TrackingProblem problem;
  problem.asset_returns = Matrix(5, 1);
  for (std::size_t t = 0; t < 5; ++t) problem.asset_returns(t, 0) = 0.01 * (1.0 + t);
  problem.index_returns = {0.0, 0.01, 0.02, -0.01, 0.005};
  problem.penalty = en_spec({37.0}, {12.0});
  const auto result = solver::solve_tracking(problem);
  CHECK(result.weights.weights == std::vector<double>{1.0});
  CHECK(result.diagnostics.converged);
}

TEST_CASE("zero penalties recover an exactly replicable index") {
  std::mt19937_64 rng(2026);
  auto inst = random_problem(rng, 50, 3);
  // make the index equal asset 3 exactly
  for (std::size_t t = 0; t < 50; ++t)
    inst.problem.index_returns[t] = inst.problem.asset_returns(t, 2);
  const auto result = solver::solve_tracking(inst.problem);
  CHECK(result.weights.weights[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(result.weights.weights[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(result.weights.weights[2] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.diagnostics.kkt_residual <= 1e-8);

  // cross-check against the bordered normal equations
  const auto oracle = oracles::constrained_least_squares(inst.rows, inst.problem.index_returns);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(result.weights.weights[i] == doctest::Approx(oracle[i]).epsilon(1e-6));
}

TEST_CASE("large L1 penalties zero out the unneeded assets") {
  std::mt19937_64 rng(7);
  auto inst = random_problem(rng, 60, 3);
  std::normal_distribution<double> noise(0.0, 1e-4);
  for (std::size_t t = 0; t < 60; ++t)
    inst.problem.index_returns[t] = inst.problem.asset_returns(t, 0) + noise(rng);
  inst.problem.penalty = en_spec({0.0, 100.0, 100.0}, {0.0, 0.0, 0.0});
  const auto result = solver::solve_tracking(inst.problem);
  CHECK(result.weights.weights[1] == 0.0);
  CHECK(result.weights.weights[2] == 0.0);
  CHECK(result.weights.weights[0] == doctest::Approx(1.0));
  CHECK(result.diagnostics.kkt_residual <= 1e-8);

  // nothing on the neighborhood grid beats the returned objective
  const double mine = solver::objective_value(inst.problem, result.weights.weights);
  const double grid = oracles::grid_refine_best(inst.rows, inst.problem.index_returns,
                                                naive_penalty(inst.problem.penalty),
                                                result.weights.weights, 0.2, 20, 4);
  CHECK(mine <= grid + 1e-9);
}

TEST_CASE("weighted EN solves match grid refinement on random instances") {
  std::mt19937_64 rng(20260810);
  std::uniform_real_distribution<double> amp(0.0, 2e-4);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_problem(rng, 50, 3);
    inst.problem.penalty =
        en_spec({amp(rng), amp(rng), amp(rng)}, {amp(rng), amp(rng), amp(rng)});
    const auto result = solver::solve_tracking(inst.problem);
    CHECK(result.diagnostics.converged);
    CHECK(result.diagnostics.kkt_residual <= 1e-8);
    const double sum = std::accumulate(result.weights.weights.begin(),
                                       result.weights.weights.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));

    const double mine = solver::objective_value(inst.problem, result.weights.weights);
    const double grid = oracles::grid_refine_best(inst.rows, inst.problem.index_returns,
                                                  naive_penalty(inst.problem.penalty),
                                                  result.weights.weights, 0.1, 16, 4);
    CHECK(mine <= grid + 1e-6);
  }
}

TEST_CASE("solver is bitwise deterministic") {
  std::mt19937_64 rng(5150);
  auto inst = random_problem(rng, 40, 4);
  inst.problem.penalty = en_spec({1e-4, 2e-4, 0.0, 5e-5}, {1e-3, 0.0, 2e-3, 0.0});
  const auto a = solver::solve_tracking(inst.problem);
  const auto b = solver::solve_tracking(inst.problem);
  CHECK(a.weights.weights == b.weights.weights);
  CHECK(a.diagnostics.kkt_residual == b.diagnostics.kkt_residual);
  CHECK(a.diagnostics.iterations == b.diagnostics.iterations);
}

TEST_CASE("scaling the L1 level never removes zeros") {
  std::mt19937_64 rng(99);
  auto inst = random_problem(rng, 50, 6);
  std::vector<double> base_alpha{5e-5, 1e-4, 3e-5, 8e-5, 6e-5, 2e-5};
  int previous_zeros = -1;
  for (double c : {1.0, 2.0, 5.0, 20.0}) {
    auto alphas = base_alpha;
    for (auto& a : alphas) a *= c;
    inst.problem.penalty = en_spec(alphas, std::vector<double>(6, 0.0));
    inst.problem.penalty.kind = PenaltyKind::Vol_L1;
    const auto result = solver::solve_tracking(inst.problem);
    const int zeros = static_cast<int>(result.weights.weights.size()) -
                      result.weights.nonzero_count;
    CHECK(zeros >= previous_zeros);
    previous_zeros = zeros;
  }
}

TEST_CASE("warm starts do not change the solution") {
  std::mt19937_64 rng(321);
  auto inst = random_problem(rng, 50, 5);
  inst.problem.penalty = en_spec(std::vector<double>(5, 1e-4), std::vector<double>(5, 0.0));
  const auto cold = solver::solve_tracking(inst.problem);
  solver::SolveOptions options;
  options.warm_start = std::vector<double>{0.9, 0.1, 0.0, 0.0, 0.0};
  const auto warm = solver::solve_tracking(inst.problem, options);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(warm.weights.weights[i] == doctest::Approx(cold.weights.weights[i]).epsilon(1e-7));
}

TEST_CASE("slope with a zero sequence equals the TE solution") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = random_problem(rng, 50, 3);
    auto te = inst.problem;
    te.penalty = PenaltySpec::te(3);
    const auto te_result = solver::solve_tracking(te);

    inst.problem.penalty = penalty::slope_spec(3, 0.0);
    const auto slope_result = solver::solve_slope(inst.problem);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(slope_result.weights.weights[i] ==
            doctest::Approx(te_result.weights.weights[i]).epsilon(1e-8));
  }
}

TEST_CASE("slope with a constant sequence equals plain L1") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = random_problem(rng, 50, 3);
    const double level = 1e-4;

    auto l1 = inst.problem;
    l1.penalty = en_spec(std::vector<double>(3, level), std::vector<double>(3, 0.0));
    l1.penalty.kind = PenaltyKind::Vol_L1;
    const auto l1_result = solver::solve_tracking(l1);

    inst.problem.penalty.kind = PenaltyKind::SLOPE;
    inst.problem.penalty.alphas.assign(3, 0.0);
    inst.problem.penalty.betas.assign(3, 0.0);
    inst.problem.penalty.slope_sequence.assign(3, level);
    const auto slope_result = solver::solve_slope(inst.problem);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(slope_result.weights.weights[i] ==
            doctest::Approx(l1_result.weights.weights[i]).epsilon(1e-8));
  }
}

TEST_CASE("slope objective matches grid refinement") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = random_problem(rng, 50, 3);
    inst.problem.penalty = penalty::slope_spec(3, 3e-4);
    const auto result = solver::solve_slope(inst.problem);
    CHECK(result.diagnostics.kkt_residual <= 1e-8);
    const double mine = solver::objective_value(inst.problem, result.weights.weights);
    const double grid = oracles::grid_refine_best(inst.rows, inst.problem.index_returns,
                                                  naive_penalty(inst.problem.penalty),
                                                  result.weights.weights, 0.1, 16, 4);
    CHECK(mine <= grid + 1e-6);
  }
}

TEST_CASE("prox_sorted_l1 agrees with hand pooling and beats perturbations") {
  // u - t*seq = (1, 1) pools into a single flat block
  const std::vector<double> v{3.0, -1.0};
  const std::vector<double> seq{2.0, 0.0};
  const auto x = solver::prox_sorted_l1(v, seq, 1.0);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(-1.0));

  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng() % 8);
    std::vector<double> point(n), sequence(n);
    for (auto& p : point) p = gauss(rng);
    for (auto& s : sequence) s = unif(rng);
    std::sort(sequence.rbegin(), sequence.rend());
    const double t = 0.1 + unif(rng);

    const auto prox = solver::prox_sorted_l1(point, sequence, t);
    const auto objective = [&](const std::vector<double>& x) {
      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) obj += 0.5 * (x[i] - point[i]) * (x[i] - point[i]);
      std::vector<double> mags(x);
      for (auto& m : mags) m = std::fabs(m);
      std::sort(mags.rbegin(), mags.rend());
      for (std::size_t i = 0; i < n; ++i) obj += t * sequence[i] * mags[i];
      return obj;
    };
    const double at_prox = objective(prox);
    for (int probe = 0; probe < 200; ++probe) {
      auto candidate = prox;
      for (auto& c : candidate) c += 0.2 * gauss(rng);
      CHECK(at_prox <= objective(candidate) + 1e-12);
    }
  }
}

TEST_CASE("objective_value closed forms and naive-loop equivalence") {
  std::mt19937_64 rng(41);
  auto inst = random_problem(rng, 30, 3);
  // replicating weights with zero penalties give exactly zero
  for (std::size_t t = 0; t < 30; ++t)
    inst.problem.index_returns[t] =
        0.2 * inst.problem.asset_returns(t, 0) + 0.3 * inst.problem.asset_returns(t, 1) +
        0.5 * inst.problem.asset_returns(t, 2);
  CHECK(solver::objective_value(inst.problem, std::vector<double>{0.2, 0.3, 0.5}) ==
        doctest::Approx(0.0).epsilon(1e-15));

  // pure single L1 term
  auto fitless = inst.problem;
  fitless.penalty = en_spec({2.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
  for (std::size_t t = 0; t < 30; ++t)
    fitless.index_returns[t] = fitless.asset_returns(t, 0);
  CHECK(solver::objective_value(fitless, std::vector<double>{1.0, 0.0, 0.0}) ==
        doctest::Approx(2.0).epsilon(1e-15));

  for (int trial = 0; trial < 10; ++trial) {
    auto random_inst = random_problem(rng, 25, 4);
    std::uniform_real_distribution<double> amp(0.0, 1e-3);
    random_inst.problem.penalty = en_spec({amp(rng), amp(rng), amp(rng), amp(rng)},
                                          {amp(rng), amp(rng), amp(rng), amp(rng)});
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> w(4);
    for (auto& x : w) x = gauss(rng);
    const double expected = oracles::naive_objective(
        random_inst.rows, random_inst.problem.index_returns,
        naive_penalty(random_inst.problem.penalty), w);
    CHECK(solver::objective_value(random_inst.problem, w) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("apply_threshold zeroing and renormalization") {
  const auto a = solver::apply_threshold(std::vector<double>{0.6, 0.4 - 3e-9, 3e-9});
  CHECK(a.nonzero_count == 2);
  CHECK(a.weights[2] == 0.0);
  CHECK(a.weights[0] == doctest::Approx(0.6 / (1.0 - 3e-9)).epsilon(1e-15));
  CHECK(a.weights[1] == doctest::Approx((0.4 - 3e-9) / (1.0 - 3e-9)).epsilon(1e-15));
  CHECK(a.weights[0] + a.weights[1] == doctest::Approx(1.0).epsilon(1e-15));

  const std::vector<double> untouched{0.5, 0.25, 0.25};
  const auto b = solver::apply_threshold(untouched);
  CHECK(b.weights == untouched);
  CHECK(b.nonzero_count == 3);

  const auto c = solver::apply_threshold(std::vector<double>{1.0, -4e-9, 4e-9});
  CHECK(c.weights == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(c.nonzero_count == 1);

  CHECK_THROWS_AS(solver::apply_threshold(std::vector<double>{1e-9, -1e-9}), SolverError);
}

}  // TEST_SUITE
