#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "topotrack/common.hpp"
#include "topotrack/penalty.hpp"

// Penalized index-tracking solver:
//   minimize  sum_t (R_{w,t} - R_{0,t})^2 + sum_i alpha_i |w_i|
//             + sum_i beta_i^2 w_i^2      subject to  sum_i w_i = 1,
// plus the SLOPE variant where the L1 term pairs a non-increasing sequence
// with the sorted absolute weights. Weights are sign-unrestricted.

namespace topotrack::solver {

struct TrackingProblem {
  Matrix asset_returns;               // T x n
  std::vector<double> index_returns;  // length T
  penalty::PenaltySpec penalty;

  std::size_t days() const { return index_returns.size(); }
  std::size_t assets() const { return asset_returns.cols(); }
  void validate() const;
};

/// Hard-zero cutoff applied to solver output; sub-threshold entries are
/// exactly 0 and the survivors are rescaled so the weights sum to 1.
constexpr double kWeightThreshold = 1e-8;

struct WeightVector {
  std::vector<double> weights;
  int nonzero_count = 0;
};

struct SolveDiagnostics {
  double objective_value = 0;  // at the returned (thresholded) weights
  double kkt_residual = 0;     // at the raw optimizer iterate
  long iterations = 0;
  bool converged = false;
};

struct SolveOptions {
  double tolerance = 1e-8;
  long max_iterations = 100000;
  std::optional<std::vector<double>> warm_start;  // default: uniform 1/n
};

struct SolveResult {
  WeightVector weights;
  SolveDiagnostics diagnostics;
};

/// Solve the weighted Elastic-Net tracking problem (any kind but SLOPE).
/// Optimality is certified by the KKT residual of the convex program; with
/// all penalties zero and a rank-deficient fit the minimum-norm solution on
/// the constraint set is returned.
SolveResult solve_tracking(const TrackingProblem& problem, const SolveOptions& options = {});

/// Solve the SLOPE-penalized problem; the sorted-L1 proximal step pools
/// adjacent violators exactly, and optimality is certified by a subgradient
/// residual (dual-ball feasibility plus alignment).
SolveResult solve_slope(const TrackingProblem& problem, const SolveOptions& options = {});

/// Exact objective of the problem at the given weights (the SLOPE objective
/// when the penalty kind is SLOPE).
double objective_value(const TrackingProblem& problem, std::span<const double> weights);

/// Apply the 1e-8 hard-zero cutoff and renormalize the survivors to sum 1.
/// Throws SolverError if every entry is below the cutoff.
WeightVector apply_threshold(std::span<const double> weights);

/// Proximal operator of t * sorted-L1: argmin_x 1/2||x - v||^2 + t * J(x)
/// with J(x) = sum_i seq_i |x|_(i). Exposed for testing.
std::vector<double> prox_sorted_l1(std::span<const double> v, std::span<const double> sequence,
                                   double t);

/// Portfolio return series A * w (length T).
std::vector<double> portfolio_returns(const Matrix& asset_returns, std::span<const double> weights);

}  // namespace topotrack::solver
