#include "topotrack/tda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "topotrack/kernels.hpp"

namespace topotrack::tda {

namespace {

struct Edge {
  double diam;
  std::uint32_t u, v;  // u < v
};

struct Triangle {
  double diam;
  std::uint32_t a, b, c;  // a < b < c
};

// Union-find with union by size; path halving.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::uint32_t>(i);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool merge(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

bool bar_order(const std::pair<double, double>& a, const std::pair<double, double>& b) {
  if (a.first != b.first) return a.first < b.first;
  return a.second > b.second;  // birth ascending, death descending
}

}  // namespace

std::vector<Feature> PersistenceDiagram::finite_features(int dim) const {
  std::vector<Feature> out;
  for (const Feature& f : features)
    if (f.dim == dim && std::isfinite(f.death)) out.push_back(f);
  return out;
}

PointCloud takens_embed(std::span<const double> series, int dimension, int delay) {
  if (dimension < 2) throw DataError("embedding dimension must be >= 2");
  if (delay < 1) throw DataError("embedding delay must be >= 1");
  const std::size_t span = static_cast<std::size_t>(dimension - 1) * static_cast<std::size_t>(delay);
  if (series.size() < span + 1)
    throw DataError("series too short for embedding: need at least " + std::to_string(span + 1) +
                    " observations, got " + std::to_string(series.size()));
  const std::size_t m = series.size() - span;
  PointCloud cloud;
  cloud.embedding = {dimension, delay};
  cloud.points = Matrix(m, static_cast<std::size_t>(dimension));
  for (std::size_t j = 0; j < m; ++j)
    for (int k = 0; k < dimension; ++k)
      cloud.points(j, static_cast<std::size_t>(k)) =
          series[j + static_cast<std::size_t>(k) * static_cast<std::size_t>(delay)];
  return cloud;
}

Matrix pairwise_distances(const PointCloud& cloud) {
  const std::size_t m = cloud.size();
  const std::size_t d = cloud.dim();
  // row-per-point copies so each point is contiguous for the kernel
  std::vector<double> pts(m * d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < d; ++k) pts[i * d + k] = cloud.points(i, k);
  Matrix dist(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double dij = std::sqrt(kernels::sum_sq_diff(&pts[i * d], &pts[j * d], d));
      dist(i, j) = dij;
      dist(j, i) = dij;
    }
  return dist;
}

PersistenceDiagram rips_persistence(const PointCloud& cloud, const FiltrationSpec& spec) {
  if (cloud.size() == 0) throw DataError("rips_persistence needs at least one point");
  if (spec.max_homology_dim < 0 || spec.max_homology_dim > 1)
    throw DataError("max_homology_dim must be 0 or 1");

  const std::uint32_t m = static_cast<std::uint32_t>(cloud.size());
  const Matrix dist = pairwise_distances(cloud);

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (std::uint32_t u = 0; u < m; ++u)
    for (std::uint32_t v = u + 1; v < m; ++v) edges.push_back({dist(u, v), u, v});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.diam != b.diam) return a.diam < b.diam;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });

  PersistenceDiagram diagram;

  // Dimension 0: minimum-spanning-tree merge events. All vertices are born
  // at scale 0, so each merge at distance d yields a bar (0, d).
  DisjointSets components(m);
  for (const Edge& e : edges)
    if (components.merge(e.u, e.v) && e.diam > 0.0)
      diagram.features.push_back({0.0, e.diam, 0});
  diagram.features.push_back({0.0, kInfiniteDeath, 0});

  if (spec.max_homology_dim < 1 || m < 3) return diagram;

  // Dimension 1: reduce triangle boundary columns over Z_2. Edge indices
  // follow the sorted filtration order above; a reduced column's low edge is
  // the cycle-creating edge paired with the triangle.
  std::vector<std::uint32_t> edge_index(static_cast<std::size_t>(m) * m);
  for (std::uint32_t e = 0; e < edges.size(); ++e) {
    edge_index[edges[e].u * m + edges[e].v] = e;
    edge_index[edges[e].v * m + edges[e].u] = e;
  }

  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(m) * (m - 1) * (m - 2) / 6);
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t b = a + 1; b < m; ++b)
      for (std::uint32_t c = b + 1; c < m; ++c)
        triangles.push_back({std::max({dist(a, b), dist(a, c), dist(b, c)}), a, b, c});
  std::sort(triangles.begin(), triangles.end(), [](const Triangle& x, const Triangle& y) {
    if (x.diam != y.diam) return x.diam < y.diam;
    if (x.a != y.a) return x.a < y.a;
    if (x.b != y.b) return x.b < y.b;
    return x.c < y.c;
  });

  std::vector<std::vector<std::uint32_t>> reduced;  // stored reduced columns
  std::unordered_map<std::uint32_t, std::uint32_t> pair_of_low;  // low edge -> reduced index
  reduced.reserve(triangles.size() / 4);
  std::vector<std::uint32_t> column, scratch;

  for (const Triangle& t : triangles) {
    column = {edge_index[t.a * m + t.b], edge_index[t.a * m + t.c], edge_index[t.b * m + t.c]};
    std::sort(column.begin(), column.end());
    while (!column.empty()) {
      const auto hit = pair_of_low.find(column.back());
      if (hit == pair_of_low.end()) break;
      const auto& other = reduced[hit->second];
      scratch.clear();
      std::set_symmetric_difference(column.begin(), column.end(), other.begin(), other.end(),
                                    std::back_inserter(scratch));
      column.swap(scratch);
    }
    if (column.empty()) continue;
    const std::uint32_t low = column.back();
    pair_of_low.emplace(low, static_cast<std::uint32_t>(reduced.size()));
    reduced.push_back(column);
    if (t.diam > edges[low].diam) diagram.features.push_back({edges[low].diam, t.diam, 1});
  }
  return diagram;
}

PersistenceLandscape landscape_from_bars(std::vector<std::pair<double, double>> bars) {
  std::erase_if(bars, [](const auto& bar) { return !(bar.second > bar.first); });
  std::sort(bars.begin(), bars.end(), bar_order);

  PersistenceLandscape landscape;
  auto& remaining = bars;
  while (!remaining.empty()) {
    std::vector<PersistenceLandscape::Point> fn;
    auto [b, d] = remaining.front();
    remaining.erase(remaining.begin());
    std::size_t p = 0;
    fn.push_back({b, 0.0});
    fn.push_back({(b + d) / 2.0, (d - b) / 2.0});
    while (true) {
      std::size_t q = p;
      while (q < remaining.size() && remaining[q].second <= d) ++q;
      if (q == remaining.size()) {
        fn.push_back({d, 0.0});
        break;
      }
      auto [b2, d2] = remaining[q];
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(q));
      p = q;
      if (b2 > d) fn.push_back({d, 0.0});
      if (b2 >= d) {
        fn.push_back({b2, 0.0});
      } else {
        fn.push_back({(b2 + d) / 2.0, (d - b2) / 2.0});
        // the overlap beyond the crossing feeds the next landscape level
        const std::pair<double, double> rest{b2, d};
        auto pos = std::lower_bound(remaining.begin() + static_cast<std::ptrdiff_t>(p),
                                    remaining.end(), rest, bar_order);
        p = static_cast<std::size_t>(pos - remaining.begin()) + 1;
        remaining.insert(pos, rest);
      }
      fn.push_back({(b2 + d2) / 2.0, (d2 - b2) / 2.0});
      b = b2;
      d = d2;
    }
    landscape.functions.push_back(std::move(fn));
  }
  return landscape;
}

PersistenceLandscape landscape_from_diagram(const PersistenceDiagram& diagram, int dim) {
  std::vector<std::pair<double, double>> bars;
  for (const Feature& f : diagram.finite_features(dim)) bars.emplace_back(f.birth, f.death);
  return landscape_from_bars(std::move(bars));
}

double PersistenceLandscape::value(std::size_t k, double x) const {
  if (k == 0 || k > functions.size()) return 0.0;
  const auto& fn = functions[k - 1];
  if (fn.empty() || x < fn.front().x || x > fn.back().x) return 0.0;
  auto it = std::lower_bound(fn.begin(), fn.end(), x,
                             [](const Point& p, double xv) { return p.x < xv; });
  if (it->x == x) return it->y;
  const Point& hi = *it;
  const Point& lo = *(it - 1);
  const double t = (x - lo.x) / (hi.x - lo.x);
  return lo.y + t * (hi.y - lo.y);
}

PersistenceLandscape mean_landscape(std::span<const PersistenceLandscape> landscapes) {
  if (landscapes.empty()) throw DataError("mean_landscape needs at least one landscape");
  std::size_t depth = 0;
  for (const auto& l : landscapes) depth = std::max(depth, l.depth());

  PersistenceLandscape mean;
  const double count = static_cast<double>(landscapes.size());
  for (std::size_t k = 1; k <= depth; ++k) {
    std::vector<double> grid;
    for (const auto& l : landscapes) {
      if (k > l.depth()) continue;
      for (const auto& pt : l.functions[k - 1]) grid.push_back(pt.x);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<PersistenceLandscape::Point> fn;
    fn.reserve(grid.size());
    for (double x : grid) {
      double y = 0.0;
      for (const auto& l : landscapes) y += l.value(k, x);
      fn.push_back({x, y / count});
    }
    mean.functions.push_back(std::move(fn));
  }
  return mean;
}

LandscapeNorm landscape_norm(const PersistenceLandscape& landscape, double p, int k_max) {
  if (p < 1.0) throw DataError("norm order p must be >= 1");
  if (k_max < 1) throw DataError("k_max must be >= 1");

  double total = 0.0;
  const std::size_t levels = std::min<std::size_t>(static_cast<std::size_t>(k_max),
                                                   landscape.depth());
  for (std::size_t k = 0; k < levels; ++k) {
    const auto& fn = landscape.functions[k];
    double integral = 0.0;
    for (std::size_t i = 1; i < fn.size(); ++i) {
      const double dx = fn[i].x - fn[i - 1].x;
      if (dx <= 0.0) continue;
      const double y0 = fn[i - 1].y;
      const double y1 = fn[i].y;
      if (y0 == y1) {
        integral += dx * std::pow(y0, p);
      } else {
        // exact integral of a linear segment raised to the p-th power
        integral += dx * (std::pow(y1, p + 1.0) - std::pow(y0, p + 1.0)) / ((p + 1.0) * (y1 - y0));
      }
    }
    total += integral;
  }
  return {std::pow(total, 1.0 / p), p, k_max};
}

}  // namespace topotrack::tda
