#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topotrack/market_data.hpp"
#include "topotrack/tda.hpp"

// Per-asset regularization coefficients: learned from persistence landscapes,
// from asset volatility with grid-searched scaling, from an unpenalized pilot
// solve (adaptive Elastic-Net), or as a SLOPE coefficient sequence.

namespace topotrack::penalty {

enum class PenaltyKind { TE, TDAEN11, TDAEN12, VolEN, AdaptiveEN, TDA_L1, Vol_L1, SLOPE };

const char* to_string(PenaltyKind kind);
PenaltyKind kind_from_string(const std::string& name);
/// True for kinds whose L1 coefficients pair with an L2 term.
bool is_elastic_net_kind(PenaltyKind kind);

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::TE;
  std::vector<double> alphas;          // L1 coefficients, >= 0
  std::vector<double> betas;           // L2 coefficients, >= 0 (solver squares them)
  std::vector<double> slope_sequence;  // non-increasing, only for kind SLOPE

  std::size_t assets() const { return kind == PenaltyKind::SLOPE ? slope_sequence.size() : alphas.size(); }
  /// Enforce the per-kind structural invariants; throws DataError.
  void validate() const;

  static PenaltySpec te(std::size_t n);
};

/// How a penalty-learning window is split into overlapping sub-series.
struct SubSeriesPlan {
  int months = 6;            // M
  int sub_series_days = 42;  // T-tilde
  int step_days = 21;        // h

  int total_days() const { return 21 * months; }
  /// Number of sub-series, (T - T~)/h + 1. Throws if the plan is inconsistent.
  int count() const;
  void validate() const;
};

/// Memo of per-(asset, sub-series start) landscapes, dimensions 0 and 1.
/// Reads are concurrent; inserts serialize. Entries always equal a fresh
/// recomputation, callers key on the panel-global start index.
class LandscapeCache {
 public:
  using Key = std::pair<std::size_t, std::size_t>;  // (asset id, global start)
  using Entry = std::pair<tda::PersistenceLandscape, tda::PersistenceLandscape>;

  const Entry* find(const Key& key) const;
  const Entry& insert(const Key& key, Entry entry);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<Key, Entry> entries_;
};

/// Landscape-norm order used when turning mean landscapes into coefficients;
/// the defaults follow the documented protocol (p = 1, first function only).
struct NormOrder {
  double p = 1.0;
  int k_max = 1;
};

/// Landscape-norm coefficients for one asset over a penalty-learning window
/// (split into sub-series, embed, Rips persistence, landscapes, mean
/// landscape per dimension, norm of the mean landscape).
/// `slice` must have exactly plan.total_days() observations; `global_start`
/// is the slice's position in the panel, used only as the cache key base.
std::pair<double, double> tda_coefficients(std::span<const double> slice,
                                           const SubSeriesPlan& plan,
                                           const tda::EmbeddingParams& embed,
                                           LandscapeCache* cache = nullptr,
                                           std::size_t asset_id = 0,
                                           std::size_t global_start = 0,
                                           const NormOrder& norm = {});

/// TDA penalty for every asset of a panel window. `window_start` is the
/// panel row where the plan window begins (the slice covers
/// [window_start, window_start + plan.total_days())).
PenaltySpec build_tda_spec(const market_data::ReturnPanel& panel, std::size_t window_start,
                           const SubSeriesPlan& plan, const tda::EmbeddingParams& embed,
                           PenaltyKind kind, LandscapeCache* cache = nullptr,
                           const NormOrder& norm = {});

/// Volatility-scaled penalty on a window: alpha_i = phi * Vol_i and
/// beta_i = psi * Vol_i (VolEN) or 0 (Vol_L1).
PenaltySpec vol_spec(const Matrix& window_returns, PenaltyKind kind, double phi, double psi);

/// Adaptive Elastic-Net coefficients from an unpenalized pilot solve:
/// alpha_i = lambda1 / max(|w_i|, 1e-6), beta_i = lambda2 for all i.
PenaltySpec adaptive_en_spec(std::span<const double> unpenalized_weights, double lambda1,
                             double lambda2);

/// Non-increasing SLOPE sequence; the default linear shape is
/// lambda * (n - i + 1) / n for i = 1..n.
enum class SlopeShape { Linear };
std::vector<double> slope_sequence(std::size_t n, double lambda,
                                   SlopeShape shape = SlopeShape::Linear);
PenaltySpec slope_spec(std::size_t n, double lambda, SlopeShape shape = SlopeShape::Linear);

/// Grid search over scaling parameters for the grid-tuned kinds
/// (VolEN / Vol_L1: (phi, psi); SLOPE: phi = lambda; AdaptiveEN:
/// (lambda1, lambda2)). Among grid points whose solved in-sample portfolio
/// has a nonzero-asset count within +-10% (rounded) of `target_assets`,
/// returns the one with minimal in-sample tracking error; if the band is
/// empty, the count closest to target wins (ties by lower tracking error).
std::pair<double, double> grid_search_scaling(const Matrix& window_returns,
                                              std::span<const double> index_returns,
                                              PenaltyKind kind, int target_assets,
                                              std::span<const std::pair<double, double>> grid);

/// Penalty a grid point denotes for a grid-tuned kind (used by the search
/// and by the backtest once parameters are fixed).
PenaltySpec spec_for_parameters(const Matrix& window_returns,
                                std::span<const double> index_returns, PenaltyKind kind,
                                double phi, double psi);

/// Default (phi, psi) candidate grid for a tuned kind, expressed relative to
/// the window's gradient scale so the levels are unit-free.
std::vector<std::pair<double, double>> default_tuning_grid(PenaltyKind kind,
                                                           const Matrix& window_returns,
                                                           std::span<const double> index_returns,
                                                           std::span<const double> levels);

}  // namespace topotrack::penalty
