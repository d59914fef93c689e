#include "topotrack/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "topotrack/kernels.hpp"

namespace topotrack::solver {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::Map<const MatrixXd> eigen_view(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

/// Orthonormal basis of the hyperplane {x : sum(x) = 0}, as the last n-1
/// columns of the Householder reflector that maps e1 to ones/sqrt(n).
MatrixXd sum_zero_basis(std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  VectorXd h = VectorXd::Constant(ni, -1.0 / std::sqrt(static_cast<double>(n)));
  h(0) += 1.0;
  MatrixXd reflector = MatrixXd::Identity(ni, ni);
  const double hh = h.squaredNorm();
  if (hh > 0) reflector -= (2.0 / hh) * (h * h.transpose());
  return reflector.rightCols(ni - 1);
}

double sorted_l1_value(std::span<const double> sequence, std::span<const double> w) {
  std::vector<double> mags(w.begin(), w.end());
  for (auto& x : mags) x = std::fabs(x);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double acc = 0.0;
  for (std::size_t i = 0; i < mags.size(); ++i) acc += sequence[i] * mags[i];
  return acc;
}

struct KktInput {
  const MatrixXd& gram;        // A'A
  const VectorXd& corr;        // A'y
  const VectorXd& beta_sq;     // beta_i^2 (zeros for SLOPE)
  const penalty::PenaltySpec& spec;
};

/// Stationarity residual of the weighted-EN KKT system at iterate `w` with
/// the sparsity pattern and signs taken from `z`. Reports the best residual
/// over the candidate multipliers.
double kkt_residual_en(const KktInput& in, const VectorXd& w, const VectorXd& z, double nu_admm) {
  const Eigen::Index n = w.size();
  VectorXd g = 2.0 * (in.gram * w - in.corr) + 2.0 * in.beta_sq.cwiseProduct(w);
  const auto& alphas = in.spec.alphas;

  double nu_active = 0.0;
  int active = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (z(i) != 0.0) {
      nu_active -= g(i) + alphas[static_cast<std::size_t>(i)] * (z(i) > 0 ? 1.0 : -1.0);
      ++active;
    }
  }
  nu_active = active > 0 ? nu_active / active : -g.mean();

  double best = std::numeric_limits<double>::infinity();
  for (double nu : {nu_admm, nu_active}) {
    double res = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = alphas[static_cast<std::size_t>(i)];
      if (z(i) != 0.0)
        res = std::max(res, std::fabs(g(i) + nu + a * (z(i) > 0 ? 1.0 : -1.0)));
      else
        res = std::max(res, std::max(0.0, std::fabs(g(i) + nu) - a));
    }
    best = std::min(best, res);
  }
  return std::max(best, std::fabs(w.sum() - 1.0));
}

/// Subgradient residual for SLOPE: v = -grad - nu must lie in the sorted-L1
/// dual ball (prefix sums of sorted |v| below prefix sums of the sequence)
/// and align with w (v'w = J(w)).
double kkt_residual_slope(const KktInput& in, const VectorXd& w, double nu) {
  const VectorXd g = 2.0 * (in.gram * w - in.corr);
  const Eigen::Index n = w.size();
  std::vector<double> v(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = -(g(i) + nu);

  std::vector<double> mags(v);
  for (auto& x : mags) x = std::fabs(x);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double ball = 0.0, cum_v = 0.0, cum_seq = 0.0;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    cum_v += mags[i];
    cum_seq += in.spec.slope_sequence[i];
    ball = std::max(ball, cum_v - cum_seq);
  }

  double align = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) align += v[static_cast<std::size_t>(i)] * w(i);
  align = std::fabs(align - sorted_l1_value(in.spec.slope_sequence,
                                            {w.data(), static_cast<std::size_t>(n)}));
  return std::max({ball, align, std::fabs(w.sum() - 1.0)});
}

struct AdmmOutcome {
  VectorXd w;
  VectorXd z;
  double kkt = std::numeric_limits<double>::infinity();
  long iterations = 0;
  bool converged = false;
};

/// Scaled ADMM on  min h(w) + J(z)  s.t. w = z, 1'w = 1, where h is the
/// quadratic fit (plus ridge) handled in closed form and J is the L1 /
/// sorted-L1 penalty handled by its prox.
template <typename Prox, typename Residual>
AdmmOutcome run_admm(const KktInput& in, const SolveOptions& options, Prox&& prox,
                     Residual&& residual) {
  const Eigen::Index n = in.gram.rows();
  const double tol = options.tolerance;
  const double primal_eps = std::min(tol * 0.1, 1e-9);
  constexpr double kRelax = 1.6;

  double rho = 2.0 * in.gram.trace() / static_cast<double>(n) + 2.0 * in.beta_sq.mean();
  if (!(rho > 0.0)) rho = 1.0;

  MatrixXd H = 2.0 * in.gram;
  H.diagonal() += 2.0 * in.beta_sq;
  H.diagonal().array() += rho;
  const Eigen::LDLT<MatrixXd> ldlt(H);
  const VectorXd ones = VectorXd::Ones(n);
  const VectorXd hinv_ones = ldlt.solve(ones);
  const double denom = ones.dot(hinv_ones);

  if (options.warm_start && options.warm_start->size() != static_cast<std::size_t>(n))
    throw DataError("warm start dimension mismatch");
  AdmmOutcome out;
  out.z = options.warm_start
              ? Eigen::Map<const VectorXd>(options.warm_start->data(), n).eval()
              : VectorXd::Constant(n, 1.0 / static_cast<double>(n)).eval();
  VectorXd u = VectorXd::Zero(n);
  VectorXd z_old(n), rhs(n), x0(n), w_relaxed(n);
  double nu = 0.0;

  for (out.iterations = 1; out.iterations <= options.max_iterations; ++out.iterations) {
    rhs = 2.0 * in.corr + rho * (out.z - u);
    x0 = ldlt.solve(rhs);
    nu = (ones.dot(x0) - 1.0) / denom;
    out.w = x0 - nu * hinv_ones;

    z_old = out.z;
    w_relaxed = kRelax * out.w + (1.0 - kRelax) * z_old;
    out.z = prox(w_relaxed + u, rho);
    u += w_relaxed - out.z;

    const double r_primal = (out.w - out.z).lpNorm<Eigen::Infinity>();
    const double r_dual = rho * (out.z - z_old).lpNorm<Eigen::Infinity>();
    if ((r_primal <= primal_eps && r_dual <= primal_eps) || out.iterations % 512 == 0) {
      out.kkt = residual(out.w, out.z, nu);
      if (out.kkt <= tol && r_primal <= primal_eps) {
        out.converged = true;
        return out;
      }
    }
  }
  out.iterations = options.max_iterations;
  out.kkt = residual(out.w, out.z, nu);
  out.converged = out.kkt <= tol;
  return out;
}

SolveResult finish(const TrackingProblem& problem, const VectorXd& w, double kkt, long iterations,
                   bool converged) {
  SolveResult result;
  result.weights = apply_threshold({w.data(), static_cast<std::size_t>(w.size())});
  result.diagnostics.kkt_residual = kkt;
  result.diagnostics.iterations = iterations;
  result.diagnostics.converged = converged;
  result.diagnostics.objective_value = objective_value(problem, result.weights.weights);
  return result;
}

/// Exact solve when no L1 term is present: reduce the affine constraint with
/// an orthonormal basis and take the minimum-norm least-squares solution of
/// the stacked fit + ridge system (minimum-norm makes the all-zero-penalty
/// rank-deficient case well defined).
SolveResult solve_no_l1(const TrackingProblem& problem, const MatrixXd& gram, const VectorXd& corr,
                        const VectorXd& beta_sq) {
  const auto T = static_cast<Eigen::Index>(problem.days());
  const auto n = static_cast<Eigen::Index>(problem.assets());
  const auto A = eigen_view(problem.asset_returns);
  const VectorXd y = Eigen::Map<const VectorXd>(problem.index_returns.data(), T);

  const bool has_ridge = beta_sq.maxCoeff() > 0.0;
  const Eigen::Index rows = has_ridge ? T + n : T;
  MatrixXd C(rows, n);
  C.topRows(T) = A;
  if (has_ridge) {
    C.bottomRows(n).setZero();
    C.bottomRows(n).diagonal() = beta_sq.cwiseSqrt();
  }

  const VectorXd uniform = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  VectorXd target(rows);
  target.topRows(T) = y;
  if (has_ridge) target.bottomRows(n).setZero();
  target -= C * uniform;

  const MatrixXd basis = sum_zero_basis(static_cast<std::size_t>(n));
  const MatrixXd reduced = C * basis;
  const VectorXd v =
      reduced.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);
  const VectorXd w = uniform + basis * v;

  VectorXd g = 2.0 * (gram * w - corr) + 2.0 * beta_sq.cwiseProduct(w);
  const double nu = -g.mean();
  const double kkt =
      std::max((g.array() + nu).abs().maxCoeff(), std::fabs(w.sum() - 1.0));
  return finish(problem, w, kkt, 1, true);
}

}  // namespace

void TrackingProblem::validate() const {
  if (days() == 0 || assets() == 0) throw DataError("tracking problem needs T >= 1 and n >= 1");
  if (asset_returns.rows() != days())
    throw DataError("asset/index return length mismatch");
  penalty.validate();
  if (penalty.assets() != assets())
    throw DataError("penalty dimension does not match asset count");
}

std::vector<double> portfolio_returns(const Matrix& asset_returns,
                                      std::span<const double> weights) {
  std::vector<double> out(asset_returns.rows(), 0.0);
  for (std::size_t i = 0; i < asset_returns.cols(); ++i) {
    if (weights[i] == 0.0) continue;
    kernels::axpy(weights[i], asset_returns.col(i).data(), out.data(), out.size());
  }
  return out;
}

double objective_value(const TrackingProblem& problem, std::span<const double> weights) {
  if (weights.size() != problem.assets()) throw DataError("weight dimension mismatch");
  const auto series = portfolio_returns(problem.asset_returns, weights);
  double value =
      kernels::sum_sq_diff(series.data(), problem.index_returns.data(), series.size());
  const auto& spec = problem.penalty;
  if (spec.kind == penalty::PenaltyKind::SLOPE) {
    value += sorted_l1_value(spec.slope_sequence, weights);
  } else {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      value += spec.alphas[i] * std::fabs(weights[i]);
      value += spec.betas[i] * spec.betas[i] * weights[i] * weights[i];
    }
  }
  return value;
}

WeightVector apply_threshold(std::span<const double> weights) {
  WeightVector out;
  out.weights.assign(weights.begin(), weights.end());
  double surviving = 0.0;
  for (auto& w : out.weights) {
    if (std::fabs(w) < kWeightThreshold)
      w = 0.0;
    else
      surviving += w;
  }
  if (surviving == 0.0) throw SolverError("all weights below threshold");
  const double scale = 1.0 / surviving;
  for (auto& w : out.weights) {
    if (w != 0.0) {
      w *= scale;
      ++out.nonzero_count;
    }
  }
  return out;
}

std::vector<double> prox_sorted_l1(std::span<const double> v, std::span<const double> sequence,
                                   double t) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::fabs(v[a]) > std::fabs(v[b]); });

  // stack-based pool-adjacent-violators on |v| sorted descending
  std::vector<std::size_t> block_lo(n), block_hi(n);
  std::vector<double> block_sum(n), block_avg(n);
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    block_lo[blocks] = i;
    block_hi[blocks] = i;
    block_sum[blocks] = std::fabs(v[order[i]]) - t * sequence[i];
    block_avg[blocks] = block_sum[blocks];
    while (blocks > 0 && block_avg[blocks - 1] <= block_avg[blocks]) {
      --blocks;
      block_hi[blocks] = i;
      block_sum[blocks] += block_sum[blocks + 1];
      block_avg[blocks] =
          block_sum[blocks] / static_cast<double>(i - block_lo[blocks] + 1);
    }
    ++blocks;
  }

  std::vector<double> x(n, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const double value = std::max(block_avg[b], 0.0);
    for (std::size_t i = block_lo[b]; i <= block_hi[b]; ++i) {
      const std::size_t j = order[i];
      x[j] = v[j] < 0.0 ? -value : value;
    }
  }
  return x;
}

SolveResult solve_tracking(const TrackingProblem& problem, const SolveOptions& options) {
  problem.validate();
  if (problem.penalty.kind == penalty::PenaltyKind::SLOPE)
    throw DataError("solve_tracking does not handle SLOPE; use solve_slope");
  const auto n = static_cast<Eigen::Index>(problem.assets());

  if (n == 1) {
    // the budget constraint pins the single weight
    VectorXd w = VectorXd::Ones(1);
    return finish(problem, w, 0.0, 0, true);
  }

  const auto A = eigen_view(problem.asset_returns);
  const VectorXd y =
      Eigen::Map<const VectorXd>(problem.index_returns.data(), static_cast<Eigen::Index>(problem.days()));
  const MatrixXd gram = A.transpose() * A;
  const VectorXd corr = A.transpose() * y;
  VectorXd beta_sq(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b = problem.penalty.betas[static_cast<std::size_t>(i)];
    beta_sq(i) = b * b;
  }

  const double alpha_max =
      *std::max_element(problem.penalty.alphas.begin(), problem.penalty.alphas.end());
  if (alpha_max == 0.0) return solve_no_l1(problem, gram, corr, beta_sq);

  const KktInput in{gram, corr, beta_sq, problem.penalty};
  const auto& alphas = problem.penalty.alphas;
  auto prox = [&](const VectorXd& v, double rho) {
    VectorXd z(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      z(i) = soft_threshold(v(i), alphas[static_cast<std::size_t>(i)] / rho);
    return z;
  };
  auto residual = [&](const VectorXd& w, const VectorXd& z, double nu) {
    return kkt_residual_en(in, w, z, nu);
  };
  const auto outcome = run_admm(in, options, prox, residual);
  if (!outcome.converged && outcome.kkt > 1.0)
    throw SolverError("tracking solve diverged (KKT residual " + std::to_string(outcome.kkt) + ")");
  return finish(problem, outcome.w, outcome.kkt, outcome.iterations, outcome.converged);
}

SolveResult solve_slope(const TrackingProblem& problem, const SolveOptions& options) {
  problem.validate();
  if (problem.penalty.kind != penalty::PenaltyKind::SLOPE)
    throw DataError("solve_slope requires a SLOPE penalty");
  const auto n = static_cast<Eigen::Index>(problem.assets());

  if (n == 1) {
    VectorXd w = VectorXd::Ones(1);
    return finish(problem, w, 0.0, 0, true);
  }

  const auto A = eigen_view(problem.asset_returns);
  const VectorXd y =
      Eigen::Map<const VectorXd>(problem.index_returns.data(), static_cast<Eigen::Index>(problem.days()));
  const MatrixXd gram = A.transpose() * A;
  const VectorXd corr = A.transpose() * y;
  const VectorXd beta_sq = VectorXd::Zero(n);
  const KktInput in{gram, corr, beta_sq, problem.penalty};

  const auto& seq = problem.penalty.slope_sequence;
  auto prox = [&](const VectorXd& v, double rho) {
    const auto x = prox_sorted_l1({v.data(), static_cast<std::size_t>(v.size())}, seq, 1.0 / rho);
    return Eigen::Map<const VectorXd>(x.data(), v.size()).eval();
  };
  auto residual = [&](const VectorXd& w, const VectorXd&, double nu) {
    return kkt_residual_slope(in, w, nu);
  };
  const auto outcome = run_admm(in, options, prox, residual);
  if (!outcome.converged && outcome.kkt > 1.0)
    throw SolverError("SLOPE solve diverged (KKT residual " + std::to_string(outcome.kkt) + ")");
  return finish(problem, outcome.w, outcome.kkt, outcome.iterations, outcome.converged);
}

}  // namespace topotrack::solver
