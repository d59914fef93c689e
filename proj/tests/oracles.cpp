#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace oracles {

namespace {

struct Simplex {
  std::vector<int> vertices;  // sorted
  double diam;
  int dim() const { return static_cast<int>(vertices.size()) - 1; }
};

bool simplex_order(const Simplex& a, const Simplex& b) {
  if (a.diam != b.diam) return a.diam < b.diam;
  if (a.dim() != b.dim()) return a.dim() < b.dim();
  return a.vertices < b.vertices;
}

}  // namespace

std::vector<Bar> naive_rips_persistence(const std::vector<std::vector<double>>& points) {
  const int m = static_cast<int>(points.size());
  std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double d = points[i][k] - points[j][k];
        s += d * d;
      }
      dist[i][j] = dist[j][i] = std::sqrt(s);
    }

  std::vector<Simplex> simplices;
  for (int i = 0; i < m; ++i) simplices.push_back({{i}, 0.0});
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) simplices.push_back({{i, j}, dist[i][j]});
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int k = j + 1; k < m; ++k)
        simplices.push_back({{i, j, k}, std::max({dist[i][j], dist[i][k], dist[j][k]})});
  std::sort(simplices.begin(), simplices.end(), simplex_order);

  const std::size_t n = simplices.size();
  std::vector<std::size_t> index_of(n);  // lookup by identity via map from vertex set
  std::vector<std::vector<std::size_t>> columns(n);

  // map each simplex (by vertex list) to its position in the sorted order
  std::vector<std::pair<std::vector<int>, std::size_t>> lookup;
  lookup.reserve(n);
  for (std::size_t s = 0; s < n; ++s) lookup.emplace_back(simplices[s].vertices, s);
  std::sort(lookup.begin(), lookup.end());
  const auto position = [&](std::vector<int> verts) {
    auto it = std::lower_bound(lookup.begin(), lookup.end(), verts,
                               [](const auto& a, const std::vector<int>& v) { return a.first < v; });
    return it->second;
  };

  for (std::size_t s = 0; s < n; ++s) {
    const auto& verts = simplices[s].vertices;
    if (verts.size() == 1) continue;
    std::vector<std::size_t> boundary;
    for (std::size_t drop = 0; drop < verts.size(); ++drop) {
      std::vector<int> face;
      for (std::size_t i = 0; i < verts.size(); ++i)
        if (i != drop) face.push_back(verts[i]);
      boundary.push_back(position(face));
    }
    std::sort(boundary.begin(), boundary.end());
    columns[s] = std::move(boundary);
  }

  // textbook left-to-right reduction
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> owner_of_low(n, kNone);
  std::vector<char> is_paired(n, 0);
  std::vector<Bar> bars;
  for (std::size_t j = 0; j < n; ++j) {
    auto& col = columns[j];
    while (!col.empty() && owner_of_low[col.back()] != kNone) {
      const auto& other = columns[owner_of_low[col.back()]];
      std::vector<std::size_t> merged;
      std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                    std::back_inserter(merged));
      col = std::move(merged);
    }
    if (col.empty()) continue;
    const std::size_t i = col.back();
    owner_of_low[i] = j;
    is_paired[i] = 1;
    is_paired[j] = 1;
    const double birth = simplices[i].diam;
    const double death = simplices[j].diam;
    if (death > birth) bars.push_back({birth, death, simplices[i].dim()});
  }
  for (std::size_t s = 0; s < n; ++s)
    if (!is_paired[s] && simplices[s].dim() <= 1)
      bars.push_back({simplices[s].diam, std::numeric_limits<double>::infinity(),
                      simplices[s].dim()});
  return bars;
}

std::vector<Bar> canonical(std::vector<Bar> bars) {
  std::sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  });
  return bars;
}

double tent(double birth, double death, double x) {
  if (x <= birth || x >= death) return 0.0;
  return std::min(x - birth, death - x);
}

double kth_max_tent(const std::vector<std::pair<double, double>>& bars, std::size_t k, double x) {
  std::vector<double> values;
  values.reserve(bars.size());
  for (const auto& [b, d] : bars) values.push_back(tent(b, d, x));
  if (k > values.size()) return 0.0;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   values.end(), std::greater<double>());
  return values[k - 1];
}

double quadrature_tent_norm_pp(const std::vector<std::pair<double, double>>& bars, std::size_t k,
                               double p, double lo, double hi, std::size_t steps) {
  const double h = (hi - lo) / static_cast<double>(steps);
  double acc = 0.5 * (std::pow(kth_max_tent(bars, k, lo), p) +
                      std::pow(kth_max_tent(bars, k, hi), p));
  for (std::size_t i = 1; i < steps; ++i)
    acc += std::pow(kth_max_tent(bars, k, lo + h * static_cast<double>(i)), p);
  return acc * h;
}

std::vector<double> gauss_solve(std::vector<std::vector<double>> M, std::vector<double> rhs) {
  const std::size_t n = M.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(M[r][col]) > std::fabs(M[pivot][col])) pivot = r;
    if (M[pivot][col] == 0.0) throw std::runtime_error("singular system in gauss_solve");
    std::swap(M[col], M[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = M[r][col] / M[col][col];
      for (std::size_t c = col; c < n; ++c) M[r][c] -= f * M[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double acc = rhs[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= M[r][c] * x[c];
    x[r] = acc / M[r][r];
  }
  return x;
}

std::vector<double> constrained_least_squares(const std::vector<std::vector<double>>& A,
                                              const std::vector<double>& y) {
  const std::size_t T = A.size();
  const std::size_t n = A[0].size();
  // bordered system: [2A'A  1; 1' 0] [w; nu] = [2A'y; 1]
  std::vector<std::vector<double>> M(n + 1, std::vector<double>(n + 1, 0.0));
  std::vector<double> rhs(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double g = 0.0;
      for (std::size_t t = 0; t < T; ++t) g += A[t][i] * A[t][j];
      M[i][j] = 2.0 * g;
    }
    M[i][n] = 1.0;
    M[n][i] = 1.0;
    double c = 0.0;
    for (std::size_t t = 0; t < T; ++t) c += A[t][i] * y[t];
    rhs[i] = 2.0 * c;
  }
  rhs[n] = 1.0;
  auto solution = gauss_solve(std::move(M), std::move(rhs));
  solution.resize(n);
  return solution;
}

double naive_objective(const std::vector<std::vector<double>>& A, const std::vector<double>& y,
                       const NaivePenalty& penalty, const std::vector<double>& w) {
  double fit = 0.0;
  for (std::size_t t = 0; t < A.size(); ++t) {
    double r = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) r += A[t][i] * w[i];
    const double d = r - y[t];
    fit += d * d;
  }
  if (!penalty.slope_sequence.empty()) {
    std::vector<double> mags(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) mags[i] = std::fabs(w[i]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    for (std::size_t i = 0; i < mags.size(); ++i) fit += penalty.slope_sequence[i] * mags[i];
    return fit;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    fit += penalty.alphas[i] * std::fabs(w[i]);
    fit += penalty.betas[i] * penalty.betas[i] * w[i] * w[i];
  }
  return fit;
}

double grid_refine_best(const std::vector<std::vector<double>>& A, const std::vector<double>& y,
                        const NaivePenalty& penalty, const std::vector<double>& center,
                        double radius, int steps, int levels) {
  if (center.size() != 3) throw std::runtime_error("grid_refine_best handles n = 3 only");
  std::vector<double> best_point = center;
  double best = naive_objective(A, y, penalty, best_point);
  for (int level = 0; level < levels; ++level) {
    const std::vector<double> base = best_point;
    for (int i = -steps; i <= steps; ++i)
      for (int j = -steps; j <= steps; ++j) {
        const double w1 = base[0] + radius * static_cast<double>(i) / steps;
        const double w2 = base[1] + radius * static_cast<double>(j) / steps;
        const std::vector<double> w{w1, w2, 1.0 - w1 - w2};
        const double obj = naive_objective(A, y, penalty, w);
        if (obj < best) {
          best = obj;
          best_point = w;
        }
      }
    radius /= static_cast<double>(steps) / 2.0;
  }
  return best;
}

}  // namespace oracles
