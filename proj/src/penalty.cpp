#include "topotrack/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "topotrack/kernels.hpp"
#include "topotrack/solver.hpp"

namespace topotrack::penalty {

namespace {

constexpr double kAdaptiveFloor = 1e-6;

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

bool all_nonneg_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x >= 0.0; });
}

}  // namespace

const char* to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::TE: return "TE";
    case PenaltyKind::TDAEN11: return "TDAEN11";
    case PenaltyKind::TDAEN12: return "TDAEN12";
    case PenaltyKind::VolEN: return "VolEN";
    case PenaltyKind::AdaptiveEN: return "AdaptiveEN";
    case PenaltyKind::TDA_L1: return "TDA_L1";
    case PenaltyKind::Vol_L1: return "Vol_L1";
    case PenaltyKind::SLOPE: return "SLOPE";
  }
  return "?";
}

PenaltyKind kind_from_string(const std::string& name) {
  for (PenaltyKind kind : {PenaltyKind::TE, PenaltyKind::TDAEN11, PenaltyKind::TDAEN12,
                           PenaltyKind::VolEN, PenaltyKind::AdaptiveEN, PenaltyKind::TDA_L1,
                           PenaltyKind::Vol_L1, PenaltyKind::SLOPE})
    if (name == to_string(kind)) return kind;
  throw DataError("unknown model kind: " + name);
}

bool is_elastic_net_kind(PenaltyKind kind) {
  return kind == PenaltyKind::TDAEN11 || kind == PenaltyKind::TDAEN12 ||
         kind == PenaltyKind::VolEN || kind == PenaltyKind::AdaptiveEN;
}

void PenaltySpec::validate() const {
  if (alphas.size() != betas.size()) throw DataError("alpha/beta length mismatch");
  if (alphas.empty()) throw DataError("penalty spec has no assets");
  if (!all_nonneg_finite(alphas) || !all_nonneg_finite(betas))
    throw DataError("penalty coefficients must be finite and nonnegative");
  switch (kind) {
    case PenaltyKind::TE:
      if (!all_zero(alphas) || !all_zero(betas)) throw DataError("TE penalty must be zero");
      break;
    case PenaltyKind::TDAEN11:
      if (betas != alphas) throw DataError("TDAEN11 requires betas == alphas");
      break;
    case PenaltyKind::TDA_L1:
    case PenaltyKind::Vol_L1:
      if (!all_zero(betas)) throw DataError("L1-only penalty requires zero betas");
      break;
    case PenaltyKind::AdaptiveEN:
      for (double b : betas)
        if (b != betas.front()) throw DataError("AdaptiveEN requires a uniform beta");
      break;
    case PenaltyKind::SLOPE: {
      if (slope_sequence.size() != alphas.size())
        throw DataError("SLOPE sequence length mismatch");
      if (!all_nonneg_finite(slope_sequence))
        throw DataError("SLOPE sequence must be finite and nonnegative");
      if (!std::is_sorted(slope_sequence.rbegin(), slope_sequence.rend()))
        throw DataError("SLOPE sequence must be non-increasing");
      break;
    }
    default:
      break;
  }
  if (kind != PenaltyKind::SLOPE && !slope_sequence.empty())
    throw DataError("slope_sequence only valid for kind SLOPE");
}

PenaltySpec PenaltySpec::te(std::size_t n) {
  PenaltySpec spec;
  spec.kind = PenaltyKind::TE;
  spec.alphas.assign(n, 0.0);
  spec.betas.assign(n, 0.0);
  return spec;
}

int SubSeriesPlan::count() const {
  validate();
  return (total_days() - sub_series_days) / step_days + 1;
}

void SubSeriesPlan::validate() const {
  if (months < 1 || sub_series_days < 2 || step_days < 1)
    throw DataError("invalid sub-series plan");
  if (step_days >= sub_series_days)
    throw DataError("sub-series overlap step must be smaller than the sub-series length");
  if ((total_days() - sub_series_days) % step_days != 0)
    throw DataError("(T - T~) must be divisible by the step");
  if (total_days() < sub_series_days) throw DataError("window shorter than one sub-series");
}

const LandscapeCache::Entry* LandscapeCache::find(const Key& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

const LandscapeCache::Entry& LandscapeCache::insert(const Key& key, Entry entry) {
  std::unique_lock lock(mutex_);
  return entries_.try_emplace(key, std::move(entry)).first->second;
}

std::size_t LandscapeCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::pair<double, double> tda_coefficients(std::span<const double> slice,
                                           const SubSeriesPlan& plan,
                                           const tda::EmbeddingParams& embed,
                                           LandscapeCache* cache, std::size_t asset_id,
                                           std::size_t global_start, const NormOrder& norm) {
  plan.validate();
  if (slice.size() != static_cast<std::size_t>(plan.total_days()))
    throw DataError("penalty window slice has " + std::to_string(slice.size()) +
                    " days, plan expects " + std::to_string(plan.total_days()));

  const int count = plan.count();
  std::vector<tda::PersistenceLandscape> dim0;
  std::vector<tda::PersistenceLandscape> dim1;
  dim0.reserve(static_cast<std::size_t>(count));
  dim1.reserve(static_cast<std::size_t>(count));

  for (int j = 0; j < count; ++j) {
    const std::size_t local = static_cast<std::size_t>(j) * static_cast<std::size_t>(plan.step_days);
    const LandscapeCache::Key key{asset_id, global_start + local};
    if (cache) {
      if (const auto* hit = cache->find(key)) {
        dim0.push_back(hit->first);
        dim1.push_back(hit->second);
        continue;
      }
    }
    const auto sub = slice.subspan(local, static_cast<std::size_t>(plan.sub_series_days));
    const auto cloud = tda::takens_embed(sub, embed.dimension, embed.delay);
    const auto diagram = tda::rips_persistence(cloud);
    LandscapeCache::Entry entry{tda::landscape_from_diagram(diagram, 0),
                                tda::landscape_from_diagram(diagram, 1)};
    if (cache) {
      const auto& stored = cache->insert(key, std::move(entry));
      dim0.push_back(stored.first);
      dim1.push_back(stored.second);
    } else {
      dim0.push_back(std::move(entry.first));
      dim1.push_back(std::move(entry.second));
    }
  }

  const auto mean0 = tda::mean_landscape(dim0);
  const auto mean1 = tda::mean_landscape(dim1);
  return {tda::landscape_norm(mean0, norm.p, norm.k_max).value,
          tda::landscape_norm(mean1, norm.p, norm.k_max).value};
}

PenaltySpec build_tda_spec(const market_data::ReturnPanel& panel, std::size_t window_start,
                           const SubSeriesPlan& plan, const tda::EmbeddingParams& embed,
                           PenaltyKind kind, LandscapeCache* cache, const NormOrder& norm) {
  if (kind != PenaltyKind::TDAEN12 && kind != PenaltyKind::TDAEN11 && kind != PenaltyKind::TDA_L1)
    throw DataError("build_tda_spec expects a TDA kind");
  const std::size_t T = static_cast<std::size_t>(plan.total_days());
  if (window_start + T > panel.days()) throw DataError("penalty window exceeds panel");

  const std::size_t n = panel.assets();
  PenaltySpec spec;
  spec.kind = kind;
  spec.alphas.resize(n);
  spec.betas.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto column = panel.asset_returns.col(i);
    const auto [a, b] = tda_coefficients(column.subspan(window_start, T), plan, embed, cache, i,
                                         window_start, norm);
    spec.alphas[i] = a;
    switch (kind) {
      case PenaltyKind::TDAEN12: spec.betas[i] = b; break;
      case PenaltyKind::TDAEN11: spec.betas[i] = a; break;
      default: spec.betas[i] = 0.0; break;
    }
  }
  spec.validate();
  return spec;
}

PenaltySpec vol_spec(const Matrix& window_returns, PenaltyKind kind, double phi, double psi) {
  if (kind != PenaltyKind::VolEN && kind != PenaltyKind::Vol_L1)
    throw DataError("vol_spec expects VolEN or Vol_L1");
  if (phi < 0.0 || psi < 0.0) throw DataError("scaling parameters must be nonnegative");

  PenaltySpec spec;
  spec.kind = kind;
  const std::size_t n = window_returns.cols();
  spec.alphas.resize(n);
  spec.betas.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vol = market_data::volatility(window_returns.col(i));
    spec.alphas[i] = phi * vol;
    spec.betas[i] = kind == PenaltyKind::VolEN ? psi * vol : 0.0;
  }
  spec.validate();
  return spec;
}

PenaltySpec adaptive_en_spec(std::span<const double> unpenalized_weights, double lambda1,
                             double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw DataError("lambdas must be nonnegative");
  PenaltySpec spec;
  spec.kind = PenaltyKind::AdaptiveEN;
  spec.alphas.reserve(unpenalized_weights.size());
  for (double w : unpenalized_weights)
    spec.alphas.push_back(lambda1 / std::max(std::fabs(w), kAdaptiveFloor));
  spec.betas.assign(unpenalized_weights.size(), lambda2);
  spec.validate();
  return spec;
}

std::vector<double> slope_sequence(std::size_t n, double lambda, SlopeShape shape) {
  if (n < 1) throw DataError("slope_sequence needs n >= 1");
  if (lambda < 0.0) throw DataError("lambda must be nonnegative");
  std::vector<double> seq(n);
  switch (shape) {
    case SlopeShape::Linear:
      for (std::size_t i = 0; i < n; ++i)
        seq[i] = lambda * static_cast<double>(n - i) / static_cast<double>(n);
      break;
  }
  return seq;
}

PenaltySpec slope_spec(std::size_t n, double lambda, SlopeShape shape) {
  PenaltySpec spec;
  spec.kind = PenaltyKind::SLOPE;
  spec.alphas.assign(n, 0.0);
  spec.betas.assign(n, 0.0);
  spec.slope_sequence = slope_sequence(n, lambda, shape);
  spec.validate();
  return spec;
}

PenaltySpec spec_for_parameters(const Matrix& window_returns,
                                std::span<const double> index_returns, PenaltyKind kind,
                                double phi, double psi) {
  switch (kind) {
    case PenaltyKind::VolEN:
    case PenaltyKind::Vol_L1:
      return vol_spec(window_returns, kind, phi, psi);
    case PenaltyKind::SLOPE:
      return slope_spec(window_returns.cols(), phi);
    case PenaltyKind::AdaptiveEN: {
      solver::TrackingProblem pilot;
      pilot.asset_returns = window_returns;
      pilot.index_returns.assign(index_returns.begin(), index_returns.end());
      pilot.penalty = PenaltySpec::te(window_returns.cols());
      const auto solved = solver::solve_tracking(pilot);
      return adaptive_en_spec(solved.weights.weights, phi, psi);
    }
    default:
      throw DataError("kind is not grid-tuned");
  }
}

std::vector<std::pair<double, double>> default_tuning_grid(PenaltyKind kind,
                                                           const Matrix& window_returns,
                                                           std::span<const double> index_returns,
                                                           std::span<const double> levels) {
  const std::size_t n = window_returns.cols();
  const std::size_t T = window_returns.rows();
  double lambda_max = 0.0;
  double col_sq_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = window_returns.col(i);
    lambda_max =
        std::max(lambda_max, 2.0 * std::fabs(kernels::dot(col.data(), index_returns.data(), T)));
    col_sq_total += kernels::sum_sq(col.data(), T);
  }
  if (lambda_max <= 0.0) lambda_max = 1.0;

  std::vector<double> vols(n);
  for (std::size_t i = 0; i < n; ++i) vols[i] = market_data::volatility(window_returns.col(i));
  std::nth_element(vols.begin(), vols.begin() + static_cast<std::ptrdiff_t>(n / 2), vols.end());
  const double vol_ref = vols[n / 2] > 0.0 ? vols[n / 2] : 1.0;

  std::vector<std::pair<double, double>> grid;
  switch (kind) {
    case PenaltyKind::Vol_L1:
      for (double level : levels) grid.emplace_back(level * lambda_max / vol_ref, 0.0);
      break;
    case PenaltyKind::VolEN: {
      const double psi_ref = std::sqrt(static_cast<double>(T) / 252.0);
      for (double level : levels)
        for (double m : {0.05, 0.5, 1.5})
          grid.emplace_back(level * lambda_max / vol_ref, m * psi_ref);
      break;
    }
    case PenaltyKind::SLOPE:
      for (double level : levels) grid.emplace_back(level * lambda_max, 0.0);
      break;
    case PenaltyKind::AdaptiveEN: {
      const double lambda1_ref = lambda_max / static_cast<double>(n);
      const double lambda2_ref = std::sqrt(col_sq_total / static_cast<double>(n));
      for (double level : levels)
        for (double m : {0.05, 0.5, 1.5})
          grid.emplace_back(level * lambda1_ref, m * lambda2_ref);
      break;
    }
    default:
      throw DataError("kind is not grid-tuned");
  }
  return grid;
}

std::pair<double, double> grid_search_scaling(const Matrix& window_returns,
                                              std::span<const double> index_returns,
                                              PenaltyKind kind, int target_assets,
                                              std::span<const std::pair<double, double>> grid) {
  if (grid.empty()) throw DataError("grid search needs a nonempty grid");
  if (target_assets < 1) throw DataError("target asset count must be >= 1");

  solver::TrackingProblem problem;
  problem.asset_returns = window_returns;
  problem.index_returns.assign(index_returns.begin(), index_returns.end());

  // pilot weights are parameter-independent for AdaptiveEN; solve once
  std::vector<double> pilot;
  if (kind == PenaltyKind::AdaptiveEN) {
    solver::TrackingProblem te = problem;
    te.penalty = PenaltySpec::te(window_returns.cols());
    pilot = solver::solve_tracking(te).weights.weights;
  }

  const int band = static_cast<int>(std::lround(0.1 * target_assets));
  struct Evaluated {
    std::pair<double, double> point;
    int count;
    double terror;
  };
  std::vector<Evaluated> results;
  results.reserve(grid.size());
  for (const auto& [phi, psi] : grid) {
    problem.penalty = kind == PenaltyKind::AdaptiveEN
                          ? adaptive_en_spec(pilot, phi, psi)
                          : spec_for_parameters(window_returns, index_returns, kind, phi, psi);
    const auto solved = kind == PenaltyKind::SLOPE ? solver::solve_slope(problem)
                                                   : solver::solve_tracking(problem);
    const auto series = solver::portfolio_returns(window_returns, solved.weights.weights);
    const double sse =
        kernels::sum_sq_diff(series.data(), index_returns.data(), series.size());
    const double denom = static_cast<double>(series.size() > 1 ? series.size() - 1 : 1);
    results.push_back({{phi, psi}, solved.weights.nonzero_count, std::sqrt(sse / denom)});
  }

  const Evaluated* best = nullptr;
  for (const auto& r : results) {
    if (std::abs(r.count - target_assets) > band) continue;
    if (!best || r.terror < best->terror) best = &r;
  }
  if (!best) {
    for (const auto& r : results) {
      if (!best) {
        best = &r;
        continue;
      }
      const int d_new = std::abs(r.count - target_assets);
      const int d_best = std::abs(best->count - target_assets);
      if (d_new < d_best || (d_new == d_best && r.terror < best->terror)) best = &r;
    }
  }
  return best->point;
}

}  // namespace topotrack::penalty
