#pragma once

// Phase-space geometry: the scaled metric d_r, lattices r^{1/2} Z^d x
// r^{-1/2} Z^d, ball/sector regions with thickening margins, and the smooth
// Shepard-normalized partition of unity subordinate to a lattice.

#include <cmath>
#include <vector>

#include "wavepacket/common.hpp"

namespace wp {

struct PhasePoint {
  Vec x;
  Vec xi;
};

struct ScaleParams {
  double R = 1.0;
  double nu = 1.0;
  double delta0 = 0.1;
  double delta = 0.1;
  bool nu_clamped = false;
};

// Validates ranges; nu below R^{-1/2} is clamped up to R^{-1/2+delta0} and
// flagged rather than rejected.
inline ScaleParams make_scale_params(double R, double nu, double delta0, double delta) {
  if (R < 1.0) throw ParameterError("ScaleParams: R must be >= 1");
  if (!(delta0 >= 0.0 && delta0 < 0.5)) throw ParameterError("ScaleParams: delta0 in [0, 1/2)");
  if (!(delta >= 0.0 && delta < 0.5)) throw ParameterError("ScaleParams: delta in [0, 1/2)");
  if (nu > 1.0) throw ParameterError("ScaleParams: nu must be <= 1");
  ScaleParams p{R, nu, delta0, delta, false};
  double floor_nu = std::pow(R, -0.5 + delta0);
  if (nu < floor_nu) {
    p.nu = floor_nu;
    p.nu_clamped = true;
  }
  return p;
}

inline double d_r_metric(const PhasePoint& p1, const PhasePoint& p2, double r) {
  if (!(r > 0.0)) throw ParameterError("d_r_metric: scale must be positive");
  return norm(p1.x - p2.x) / std::sqrt(r) + norm(p1.xi - p2.xi) * std::sqrt(r);
}

// Ball-in-x times ball-or-sector-in-xi region, with additive thickening
// margins. In sector mode xi_center is a unit direction, xi_radius is the
// angular aperture, and the magnitude is confined to the annulus [1/2, 2].
struct PhaseSpaceRegion {
  Vec x_center;
  double x_radius = 0.0;
  Vec xi_center;
  double xi_radius = 0.0;
  bool sector = false;
  double margin_x = 0.0;
  double margin_xi = 0.0;

  void validate() const {
    if (x_radius < 0.0 || xi_radius < 0.0) throw ParameterError("region: negative radius");
    if (margin_x < 0.0 || margin_xi < 0.0) throw ParameterError("region: negative margin");
    if (xi_radius > 1.0) throw ParameterError("region: frequency radius must be <= 1");
    if (sector && std::abs(norm(xi_center) - 1.0) > 1e-12)
      throw ParameterError("region: sector center must be a unit vector");
  }

  // Signed distances past the (margin-inflated) boundary; <= 0 means inside.
  double x_excess(const Vec& x) const {
    return norm(x - x_center) - (x_radius + margin_x);
  }
  double xi_excess(const Vec& xi) const {
    if (!sector) return norm(xi - xi_center) - (xi_radius + margin_xi);
    double m = norm(xi);
    double ang = (m > 0.0) ? norm(xi * (1.0 / m) - xi_center) : 2.0;
    double ang_ex = ang - (xi_radius + margin_xi);
    double mag_ex = std::max(0.5 - m, m - 2.0);
    return std::max(ang_ex, mag_ex);
  }
  bool contains(const PhasePoint& p) const {
    return x_excess(p.x) <= 0.0 && xi_excess(p.xi) <= 0.0;
  }
};

// Margins grow by (R r^{-1/2+delta0}, r^{-1/2+delta0}), times `factor` for the
// outer thickening (factor = C, default 1 for the inner one).
inline PhaseSpaceRegion thicken(const PhaseSpaceRegion& region, double r,
                                const ScaleParams& params, double factor = 1.0) {
  double rmin = std::pow(params.nu, -2.0 - params.delta0);
  if (!(r >= rmin * (1.0 - 1e-12) && r <= params.R * (1.0 + 1e-12)))
    throw ParameterError("thicken: scale outside [nu^{-2-delta0}, R]");
  if (factor < 1.0) throw ParameterError("thicken: factor must be >= 1");
  PhaseSpaceRegion out = region;
  double s = std::pow(r, -0.5 + params.delta0);
  out.margin_x += factor * params.R * s;
  out.margin_xi += factor * s;
  return out;
}

struct Lattice {
  double r = 1.0;
  std::vector<PhasePoint> points;
};

// Grid points of r^{1/2} Z^d x r^{-1/2} Z^d inside the region (margins
// included), ordered lexicographically by grid index.
inline Lattice lattice_points(double r, const PhaseSpaceRegion& region) {
  if (!(r >= 1.0)) throw ParameterError("lattice_points: scale must be >= 1");
  region.validate();
  int d = region.x_center.dim;
  double hx = std::sqrt(r);
  double hxi = 1.0 / std::sqrt(r);

  double xr = region.x_radius + region.margin_x;
  double xir_lo[2], xir_hi[2];
  for (int i = 0; i < d; ++i) {
    if (!region.sector) {
      double rad = region.xi_radius + region.margin_xi;
      xir_lo[i] = region.xi_center[i] - rad;
      xir_hi[i] = region.xi_center[i] + rad;
    } else {
      xir_lo[i] = -2.0;
      xir_hi[i] = 2.0;
    }
  }

  long long ix_lo[2], ix_hi[2], ik_lo[2], ik_hi[2];
  for (int i = 0; i < d; ++i) {
    ix_lo[i] = static_cast<long long>(std::ceil((region.x_center[i] - xr) / hx - 1e-12));
    ix_hi[i] = static_cast<long long>(std::floor((region.x_center[i] + xr) / hx + 1e-12));
    ik_lo[i] = static_cast<long long>(std::ceil(xir_lo[i] / hxi - 1e-12));
    ik_hi[i] = static_cast<long long>(std::floor(xir_hi[i] / hxi + 1e-12));
  }
  if (d == 1) {
    ix_lo[1] = ix_hi[1] = ik_lo[1] = ik_hi[1] = 0;
  }

  Lattice lat;
  lat.r = r;
  for (long long i0 = ix_lo[0]; i0 <= ix_hi[0]; ++i0)
    for (long long i1 = ix_lo[1]; i1 <= ix_hi[1]; ++i1)
      for (long long k0 = ik_lo[0]; k0 <= ik_hi[0]; ++k0)
        for (long long k1 = ik_lo[1]; k1 <= ik_hi[1]; ++k1) {
          PhasePoint p;
          p.x = zero_vec(d);
          p.xi = zero_vec(d);
          p.x[0] = i0 * hx;
          p.xi[0] = k0 * hxi;
          if (d == 2) {
            p.x[1] = i1 * hx;
            p.xi[1] = k1 * hxi;
          }
          const double tol = 1e-9;
          if (region.x_excess(p.x) <= tol && region.xi_excess(p.xi) <= tol)
            lat.points.push_back(p);
        }
  return lat;
}

// Smooth partition of unity subordinate to the full (unclipped) lattice:
// raw weight = radial bump supported in one lattice spacing (identically 1
// within half a spacing) in each of x and xi, then Shepard normalization.
// Supports sit well inside B(x0, 3 r^{1/2}) x B(xi0, 3 r^{-1/2}) and the
// normalized weights sum to exactly 1 everywhere.
struct PartitionWeights {
  double r;
  int dim;

  explicit PartitionWeights(double r_, int dim_) : r(r_), dim(dim_) {
    if (!(r > 0.0)) throw ParameterError("PartitionWeights: positive scale required");
  }

  double raw(const PhasePoint& center, const PhasePoint& p) const {
    double hx = std::sqrt(r);
    double hxi = 1.0 / std::sqrt(r);
    return bump(2.0 * norm(p.x - center.x) / hx) *
           bump(2.0 * norm(p.xi - center.xi) / hxi);
  }

  // Sum of raw weights over the full lattice (only nearby cells contribute).
  double denominator(const PhasePoint& p) const {
    double hx = std::sqrt(r);
    double hxi = 1.0 / std::sqrt(r);
    long long ix[2] = {0, 0}, ik[2] = {0, 0};
    for (int i = 0; i < dim; ++i) {
      ix[i] = static_cast<long long>(std::llround(p.x[i] / hx));
      ik[i] = static_cast<long long>(std::llround(p.xi[i] / hxi));
    }
    double s = 0.0;
    const long long w = 3;
    for (long long a0 = ix[0] - w; a0 <= ix[0] + w; ++a0)
      for (long long a1 = (dim == 2 ? ix[1] - w : 0); a1 <= (dim == 2 ? ix[1] + w : 0); ++a1)
        for (long long b0 = ik[0] - w; b0 <= ik[0] + w; ++b0)
          for (long long b1 = (dim == 2 ? ik[1] - w : 0); b1 <= (dim == 2 ? ik[1] + w : 0);
               ++b1) {
            PhasePoint c;
            c.x = zero_vec(dim);
            c.xi = zero_vec(dim);
            c.x[0] = a0 * hx;
            c.xi[0] = b0 * hxi;
            if (dim == 2) {
              c.x[1] = a1 * hx;
              c.xi[1] = b1 * hxi;
            }
            s += raw(c, p);
          }
    return s;
  }

  double weight(const PhasePoint& center, const PhasePoint& p) const {
    double rw = raw(center, p);
    if (rw == 0.0) return 0.0;
    return rw / denominator(p);
  }
};

}  // namespace wp
