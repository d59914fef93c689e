#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "topotrack/common.hpp"

// Delay embedding, Vietoris-Rips persistence in dimensions 0 and 1,
// persistence landscapes and their norms.

namespace topotrack::tda {

struct EmbeddingParams {
  int dimension = 3;  // d
  int delay = 1;      // tau
};

/// M points in R^d, stored row-per-point.
struct PointCloud {
  Matrix points;  // M x d, column-major like everything else
  EmbeddingParams embedding;

  std::size_t size() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }
};

/// The filtration is exact: every pairwise distance is a critical scale,
/// so there is no resolution grid to configure.
struct FiltrationSpec {
  int max_homology_dim = 1;  // 0 or 1
};

constexpr double kInfiniteDeath = std::numeric_limits<double>::infinity();

struct Feature {
  double birth = 0;
  double death = 0;  // kInfiniteDeath for the essential component
  int dim = 0;       // 0 = component, 1 = loop

  double persistence() const { return death - birth; }
  bool operator==(const Feature&) const = default;
};

/// Multiset of (birth, death, dim) features. Zero-persistence features are
/// never stored. A nonempty cloud contributes exactly one infinite-death
/// dim-0 feature and no infinite-death dim-1 features (the flag complex is
/// built to the full diameter).
struct PersistenceDiagram {
  std::vector<Feature> features;

  std::vector<Feature> finite_features(int dim) const;
};

/// Sequence of piecewise-linear functions lambda_1 >= lambda_2 >= ... , each
/// stored as critical points (x, y) with y >= 0 and zero outside the first
/// and last x. Functions are 1-Lipschitz by construction.
struct PersistenceLandscape {
  struct Point {
    double x = 0;
    double y = 0;
    bool operator==(const Point&) const = default;
  };
  std::vector<std::vector<Point>> functions;

  std::size_t depth() const { return functions.size(); }
  bool empty() const { return functions.empty(); }
  /// Value of lambda_k at x; k is 1-based, zero beyond depth().
  double value(std::size_t k, double x) const;
};

struct LandscapeNorm {
  double value = 0;
  double p = 1;
  int k_max = 1;
};

/// Delay-embed a scalar series: point j = (x_j, x_{j+tau}, ..., x_{j+(d-1)tau}),
/// giving M = T - (d-1)*tau points. Requires d >= 2, tau >= 1 and M >= 1.
PointCloud takens_embed(std::span<const double> series, int dimension, int delay);

/// Euclidean pairwise-distance matrix of a cloud (symmetric, zero diagonal).
Matrix pairwise_distances(const PointCloud& cloud);

/// Vietoris-Rips persistence of a cloud. Dim-0 features come from the
/// minimum-spanning-tree merge events over pairwise distances; dim-1 from
/// boundary-matrix reduction over Z_2 on the flag complex of all edges and
/// triangles, ordered by diameter with dimension then lexicographic vertex
/// order as tie-breaks. Zero-persistence features are discarded.
PersistenceDiagram rips_persistence(const PointCloud& cloud, const FiltrationSpec& spec = {});

/// Landscape of the finite features of one dimension: lambda_k is the
/// pointwise k-th maximum of the tent functions of the bars. Empty feature
/// sets give an empty landscape.
PersistenceLandscape landscape_from_diagram(const PersistenceDiagram& diagram, int dim);

/// Landscape built directly from (birth, death) bars.
PersistenceLandscape landscape_from_bars(std::vector<std::pair<double, double>> bars);

/// Pointwise mean of landscapes, exact on the merged critical-point grid.
/// A landscape lacking a k-th function contributes the zero function.
PersistenceLandscape mean_landscape(std::span<const PersistenceLandscape> landscapes);

/// ( sum_{k<=k_max} ||lambda_k||_p^p )^(1/p) with each ||lambda_k||_p
/// integrated exactly over the piecewise-linear segments.
LandscapeNorm landscape_norm(const PersistenceLandscape& landscape, double p = 1.0,
                             int k_max = 1);

}  // namespace topotrack::tda
