#pragma once

// Space-time cube grids, tube incidences, dyadic pigeonhole buckets, the
// focusing relation between tubes and coarse cells, and the double-end
// counting experiment.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "wavepacket/flow.hpp"
#include "wavepacket/geometry.hpp"

namespace wp {

// Grid over the space-time cube Q_R = [-R/2, R/2)^{d+1} (d space axes plus
// time). Fine cells have side R^{1/2}, coarse cells side R^{1-delta}; every
// fine cell belongs to the unique coarse cell containing its center.
struct CubeGrid {
  int d = 1;
  double R = 1.0;
  double delta = 0.0;
  double fine_side = 1.0;
  double coarse_side = 1.0;
  int n_fine = 1;    // cells per axis
  int n_coarse = 1;

  CubeGrid(int dim, double R_, double delta_) : d(dim), R(R_), delta(delta_) {
    if (dim != 1 && dim != 2) throw ParameterError("CubeGrid: d must be 1 or 2");
    if (!(R >= 4.0)) throw ParameterError("CubeGrid: R must be >= 4");
    if (!(delta >= 0.0 && delta < 0.5)) throw ParameterError("CubeGrid: delta in [0, 1/2)");
    fine_side = std::sqrt(R);
    coarse_side = std::pow(R, 1.0 - delta);
    n_fine = static_cast<int>(std::ceil(R / fine_side - 1e-9));
    n_coarse = static_cast<int>(std::ceil(R / coarse_side - 1e-9));
  }

  int axes() const { return d + 1; }
  long cell_count() const {
    long n = 1;
    for (int a = 0; a < axes(); ++a) n *= n_fine;
    return n;
  }
  long coarse_count() const {
    long n = 1;
    for (int a = 0; a < axes(); ++a) n *= n_coarse;
    return n;
  }
  double circumradius() const { return fine_side * std::sqrt(axes()) / 2.0; }

  // flattened id <-> per-axis index (space axes first, time last)
  long flatten(const std::array<int, 3>& idx) const {
    long id = 0;
    for (int a = 0; a < axes(); ++a) id = id * n_fine + idx[static_cast<size_t>(a)];
    return id;
  }
  std::array<int, 3> unflatten(long id) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = axes() - 1; a >= 0; --a) {
      idx[static_cast<size_t>(a)] = static_cast<int>(id % n_fine);
      id /= n_fine;
    }
    return idx;
  }
  // cell center along one axis
  double center(int i) const { return -R / 2.0 + (i + 0.5) * fine_side; }
  // per-axis index of the cell containing coordinate u, clamped to the grid
  int index_of(double u) const {
    int i = static_cast<int>(std::floor((u + R / 2.0) / fine_side));
    return std::clamp(i, 0, n_fine - 1);
  }

  long coarse_flatten(const std::array<int, 3>& idx) const {
    long id = 0;
    for (int a = 0; a < axes(); ++a) id = id * n_coarse + idx[static_cast<size_t>(a)];
    return id;
  }
  // coarse cell owning a fine cell (by its center)
  long coarse_of(long fine_id) const {
    std::array<int, 3> fi = unflatten(fine_id);
    std::array<int, 3> ci{0, 0, 0};
    for (int a = 0; a < axes(); ++a) {
      double u = center(fi[static_cast<size_t>(a)]);
      int i = static_cast<int>(std::floor((u + R / 2.0) / coarse_side));
      ci[static_cast<size_t>(a)] = std::clamp(i, 0, n_coarse - 1);
    }
    return coarse_flatten(ci);
  }
};

struct Tube {
  Bicharacteristic core;
  double radius = 1.0;     // R^{1/2 + delta}
  double t_min = 0.0, t_max = 0.0;
  int family = 1;          // 1 or 2
  Vec freq0;               // frequency label at t = 0
};

// Builds a tube around the bicharacteristic through `start` (state at t = 0)
// and checks that the core stays inside Q_R's spatial extent over the
// declared time window.
inline Tube make_tube(const SymbolModel& sym, const PhasePoint& start, double R,
                      double delta, double t_min, double t_max, int family,
                      int steps = 256) {
  if (family != 1 && family != 2) throw ParameterError("make_tube: family is 1 or 2");
  Tube tube;
  FlowOptions opt;
  opt.steps = steps;
  tube.core = integrate_bicharacteristic(sym, start, t_min, t_max, opt);
  tube.radius = std::pow(R, 0.5 + delta);
  tube.t_min = t_min;
  tube.t_max = t_max;
  tube.family = family;
  tube.freq0 = start.xi;
  for (size_t i = 0; i < tube.core.t.size(); ++i) {
    const Vec& x = tube.core.state[i].x;
    for (int a = 0; a < x.dim; ++a)
      if (std::abs(x[a]) > R / 2.0)
        throw ParameterError("make_tube: core leaves the spatial extent of Q_R");
  }
  return tube;
}

struct Incidence {
  std::vector<std::vector<long>> cells_of_tube;  // sorted cell ids per tube
  std::map<long, std::vector<int>> tubes_of_cell;
};

namespace detail {

// squared distance from point p to the segment [a, b] in up-to-3 coordinates
inline double segment_dist_sq(const std::array<double, 3>& p,
                              const std::array<double, 3>& a,
                              const std::array<double, 3>& b, int n) {
  double ab2 = 0.0, ap_ab = 0.0;
  for (int k = 0; k < n; ++k) {
    double e = b[static_cast<size_t>(k)] - a[static_cast<size_t>(k)];
    ab2 += e * e;
    ap_ab += (p[static_cast<size_t>(k)] - a[static_cast<size_t>(k)]) * e;
  }
  double s = (ab2 > 0.0) ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (int k = 0; k < n; ++k) {
    double c = a[static_cast<size_t>(k)] +
               s * (b[static_cast<size_t>(k)] - a[static_cast<size_t>(k)]) -
               p[static_cast<size_t>(k)];
    d2 += c * c;
  }
  return d2;
}

inline std::array<double, 3> tube_point(const Tube& tube, size_t i, int d) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int a = 0; a < d; ++a) p[static_cast<size_t>(a)] = tube.core.state[i].x[a];
  p[static_cast<size_t>(d)] = tube.core.t[i];
  return p;
}

}  // namespace detail

// Incidence via point-to-segment distance from cell centers to the sampled
// core polyline. The threshold is the cell circumradius plus the dilation
// excess radius - R^{1/2}: testing against the full dilated radius would make
// a straight axis-aligned tube incident to three columns of cells instead of
// the column carrying its core.
inline Incidence incidences(const std::vector<Tube>& tubes, const CubeGrid& grid) {
  Incidence inc;
  inc.cells_of_tube.resize(tubes.size());
  int ax = grid.axes();

  for (size_t ti = 0; ti < tubes.size(); ++ti) {
    const Tube& tube = tubes[ti];
    double thresh = grid.circumradius() + std::max(0.0, tube.radius - grid.fine_side);
    std::vector<char> hit(static_cast<size_t>(grid.cell_count()), 0);
    for (size_t i = 0; i + 1 < tube.core.t.size(); ++i) {
      std::array<double, 3> a = detail::tube_point(tube, i, grid.d);
      std::array<double, 3> b = detail::tube_point(tube, i + 1, grid.d);
      double arc2 = 0.0;
      for (int k = 0; k < ax; ++k) {
        double e = b[static_cast<size_t>(k)] - a[static_cast<size_t>(k)];
        arc2 += e * e;
      }
      if (std::sqrt(arc2) > grid.fine_side / 4.0 + 1e-12)
        throw ResolutionError("incidences: tube core sampled coarser than R^{1/2}/4");

      // candidate cells from the segment's bounding box, padded by the
      // threshold
      std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
      for (int k = 0; k < ax; ++k) {
        double mn = std::min(a[static_cast<size_t>(k)], b[static_cast<size_t>(k)]);
        double mx = std::max(a[static_cast<size_t>(k)], b[static_cast<size_t>(k)]);
        lo[static_cast<size_t>(k)] = grid.index_of(mn - thresh);
        hi[static_cast<size_t>(k)] = grid.index_of(mx + thresh);
      }
      std::array<int, 3> idx = lo;
      while (true) {
        std::array<double, 3> c{0.0, 0.0, 0.0};
        for (int k = 0; k < ax; ++k)
          c[static_cast<size_t>(k)] = grid.center(idx[static_cast<size_t>(k)]);
        if (detail::segment_dist_sq(c, a, b, ax) <= thresh * thresh)
          hit[static_cast<size_t>(grid.flatten(idx))] = 1;
        int k = ax - 1;
        while (k >= 0) {
          if (++idx[static_cast<size_t>(k)] <= hi[static_cast<size_t>(k)]) break;
          idx[static_cast<size_t>(k)] = lo[static_cast<size_t>(k)];
          --k;
        }
        if (k < 0) break;
      }
    }
    for (long c = 0; c < grid.cell_count(); ++c)
      if (hit[static_cast<size_t>(c)]) {
        inc.cells_of_tube[ti].push_back(c);
        inc.tubes_of_cell[c].push_back(static_cast<int>(ti));
      }
  }
  return inc;
}

// ---------------------------------------------------------------------------

inline uint64_t dyadic_floor(uint64_t n) {
  uint64_t p = 1;
  while (p * 2 <= n) p *= 2;
  return p;
}

struct Buckets {
  // q[mu1, mu2]: cells keyed by dyadically rounded per-family incidence
  // counts; cells with no incidences at all are not listed
  std::map<std::pair<uint64_t, uint64_t>, std::vector<long>> cells;
  // T1[lambda1, mu1, mu2]: family-1 tubes keyed per (mu1, mu2) panel by the
  // rounded number of panel cells they hit
  std::map<std::tuple<uint64_t, uint64_t, uint64_t>, std::vector<int>> tubes1;
};

inline Buckets pigeonhole_buckets(const std::vector<Tube>& tubes, const Incidence& inc) {
  Buckets b;
  for (const auto& [cell, tube_ids] : inc.tubes_of_cell) {
    uint64_t n1 = 0, n2 = 0;
    for (int ti : tube_ids) (tubes[static_cast<size_t>(ti)].family == 1 ? n1 : n2)++;
    uint64_t mu1 = n1 ? dyadic_floor(n1) : 0;
    uint64_t mu2 = n2 ? dyadic_floor(n2) : 0;
    b.cells[{mu1, mu2}].push_back(cell);
  }
  for (const auto& [key, panel_cells] : b.cells) {
    for (size_t ti = 0; ti < tubes.size(); ++ti) {
      if (tubes[ti].family != 1) continue;
      const std::vector<long>& mine = inc.cells_of_tube[ti];
      size_t hits = 0;
      for (long c : panel_cells)
        if (std::binary_search(mine.begin(), mine.end(), c)) ++hits;
      if (hits == 0) continue;
      b.tubes1[{dyadic_floor(hits), key.first, key.second}].push_back(
          static_cast<int>(ti));
    }
  }
  return b;
}

// ---------------------------------------------------------------------------

struct FocusingRelation {
  // family-1 tube id -> sorted coarse-cell ids it relates to (union over all
  // dyadic triples of the per-panel maximizer and its neighbors)
  std::map<int, std::vector<long>> related;
  int max_per_tube = 0;
};

namespace detail {

inline std::vector<long> coarse_neighbors(const CubeGrid& grid, long coarse_id) {
  int ax = grid.axes();
  std::array<int, 3> ci{0, 0, 0};
  long id = coarse_id;
  for (int a = ax - 1; a >= 0; --a) {
    ci[static_cast<size_t>(a)] = static_cast<int>(id % grid.n_coarse);
    id /= grid.n_coarse;
  }
  std::vector<long> out;
  std::array<int, 3> off{-1, -1, -1};
  while (true) {
    std::array<int, 3> nb = ci;
    bool ok = true;
    for (int a = 0; a < ax; ++a) {
      nb[static_cast<size_t>(a)] += off[static_cast<size_t>(a)];
      if (nb[static_cast<size_t>(a)] < 0 || nb[static_cast<size_t>(a)] >= grid.n_coarse)
        ok = false;
    }
    if (ok) out.push_back(grid.coarse_flatten(nb));
    int a = ax - 1;
    while (a >= 0) {
      if (++off[static_cast<size_t>(a)] <= 1) break;
      off[static_cast<size_t>(a)] = -1;
      --a;
    }
    if (a < 0) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

// Per dyadic triple, each family-1 tube relates to the coarse cell carrying
// the most of its bucket-cell hits (smallest coarse id on ties) plus that
// cell's neighbors.
inline FocusingRelation focusing_relation(const Buckets& buckets, const Incidence& inc,
                                          const CubeGrid& grid) {
  FocusingRelation rel;
  for (const auto& [key, tube_ids] : buckets.tubes1) {
    const std::vector<long>& panel_cells =
        buckets.cells.at({std::get<1>(key), std::get<2>(key)});
    for (int ti : tube_ids) {
      const std::vector<long>& mine = inc.cells_of_tube[static_cast<size_t>(ti)];
      std::map<long, int> per_coarse;
      for (long c : panel_cells)
        if (std::binary_search(mine.begin(), mine.end(), c)) per_coarse[grid.coarse_of(c)]++;
      long best = -1;
      int best_n = 0;
      for (const auto& [cs, n] : per_coarse)
        if (n > best_n) {  // map iteration is id-ascending: ties keep the
          best = cs;       // lexicographically smallest coarse cell
          best_n = n;
        }
      if (best < 0) continue;
      std::vector<long>& acc = rel.related[ti];
      for (long nb : detail::coarse_neighbors(grid, best)) acc.push_back(nb);
    }
  }
  for (auto& [ti, ids] : rel.related) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    rel.max_per_tube = std::max(rel.max_per_tube, static_cast<int>(ids.size()));
  }
  return rel;
}

// ---------------------------------------------------------------------------

struct DoubleEndCounts {
  std::map<long, int> per_cell;  // q' -> number of shell tubes through q and q'
  int total_cells = 0;           // |Q_q|: cells q' with a nonzero count
  double time_extent = 0.0;      // span of the counted q' along T2, in time
  double predicted_extent = 0.0; // nu^{-1} R^{1/2 + delta}
};

// Counts, per far cell q' on T2, the shell tubes passing through both the
// anchor cell q and q'. Cells closer to q than R^{1-delta} (in space-time)
// are excluded from the enumeration.
inline DoubleEndCounts double_end_count(long q_cell, const std::vector<Tube>& shell,
                                        const Tube& T2, const CubeGrid& grid,
                                        const ScaleParams& params) {
  DoubleEndCounts out;
  out.predicted_extent = std::pow(grid.R, 0.5 + grid.delta) / params.nu;
  if (shell.empty()) return out;

  std::vector<Tube> all = shell;
  all.push_back(T2);
  Incidence inc = incidences(all, grid);
  size_t n_shell = shell.size();
  for (size_t ti = 0; ti < n_shell; ++ti)
    if (!std::binary_search(inc.cells_of_tube[ti].begin(), inc.cells_of_tube[ti].end(),
                            q_cell))
      throw ParameterError("double_end_count: shell tube misses the anchor cell");

  std::array<int, 3> qi = grid.unflatten(q_cell);
  double far = std::pow(grid.R, 1.0 - grid.delta);
  double t_lo = 0.0, t_hi = 0.0;
  bool any = false;
  for (long c : inc.cells_of_tube[n_shell]) {  // cells on T2
    if (c == q_cell) continue;
    std::array<int, 3> ci = grid.unflatten(c);
    double dist2 = 0.0;
    for (int a = 0; a < grid.axes(); ++a) {
      double e = grid.center(ci[static_cast<size_t>(a)]) -
                 grid.center(qi[static_cast<size_t>(a)]);
      dist2 += e * e;
    }
    if (dist2 < far * far) continue;
    int n = 0;
    auto it = inc.tubes_of_cell.find(c);
    if (it != inc.tubes_of_cell.end())
      for (int ti : it->second)
        if (static_cast<size_t>(ti) < n_shell) ++n;
    if (n == 0) continue;
    out.per_cell[c] = n;
    double tc = grid.center(ci[static_cast<size_t>(grid.d)]);
    if (!any) {
      t_lo = t_hi = tc;
      any = true;
    } else {
      t_lo = std::min(t_lo, tc);
      t_hi = std::max(t_hi, tc);
    }
  }
  out.total_cells = static_cast<int>(out.per_cell.size());
  if (any) out.time_extent = t_hi - t_lo + grid.fine_side;
  return out;
}

}  // namespace wp
