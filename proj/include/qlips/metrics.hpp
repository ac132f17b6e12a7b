#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qlips/assembly.hpp"
#include "qlips/errors.hpp"
#include "qlips/geometry.hpp"
#include "qlips/perturbation.hpp"
#include "qlips/problem.hpp"

namespace qlips {

struct ErrorPair {
  double l2 = 0.0;
  double linf = 0.0;
};

/// sqrt(sum (g - h)^2) / sqrt(sum g^2) and max|g - h| / max|g|.
inline ErrorPair relative_errors(std::span<const double> exact, std::span<const double> approx) {
  if (exact.size() != approx.size()) throw ShapeError("relative_errors: length mismatch");
  double num2 = 0.0, den2 = 0.0, num_inf = 0.0, den_inf = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double e = exact[i] - approx[i];
    num2 += e * e;
    den2 += exact[i] * exact[i];
    num_inf = std::max(num_inf, std::abs(e));
    den_inf = std::max(den_inf, std::abs(exact[i]));
  }
  if (!(den_inf > 0.0)) throw NumericalError("relative_errors: exact solution vanishes on the test set");
  return {std::sqrt(num2) / std::sqrt(den2), num_inf / den_inf};
}

/// Uniform tensor test grid over the bounding box (and time interval).
struct TestGrid {
  int nx = 201;
  int ny = 201;
  int nt = 11;
  double band = 1e-10;  // points this close to the interface are dropped

  static TestGrid defaults_for(bool timed) {
    return timed ? TestGrid{101, 101, 11, 1e-10} : TestGrid{201, 201, 1, 1e-10};
  }
};

struct GridPoint {
  Point point;
  int side = 0;
};

inline std::vector<GridPoint> grid_points(const InterfaceGeometry& geom, const TestGrid& grid) {
  if (grid.nx < 2 || grid.ny < 2 || grid.nt < 1) throw ConfigError("test grid too small");
  const Box& b = geom.box();
  const int nt = b.timed ? std::max(grid.nt, 2) : 1;
  std::vector<GridPoint> out;
  out.reserve(static_cast<std::size_t>(grid.nx) * grid.ny * nt);
  for (int k = 0; k < nt; ++k) {
    const double t = b.timed ? b.t_min + b.duration() * k / (nt - 1) : 0.0;
    for (int j = 0; j < grid.ny; ++j) {
      const double y = b.y_min + b.height() * j / (grid.ny - 1);
      for (int i = 0; i < grid.nx; ++i) {
        const Point p{b.x_min + b.width() * i / (grid.nx - 1), y, t};
        if (geom.interface_proximity(p) <= grid.band) continue;
        out.push_back({p, geom.subdomain_of(p)});
      }
    }
  }
  return out;
}

using FieldFn = std::function<double(const Point&, int side)>;

struct ErrorReport {
  ErrorPair global;
  std::vector<ErrorPair> per_subdomain;
  std::vector<std::string> names;
  std::size_t points = 0;
};

/// Exact values on a fixed test grid, reused for several approximations.
class ErrorEvaluator {
 public:
  ErrorEvaluator(const InterfaceProblem& problem, const TestGrid& grid)
      : names_(), points_(grid_points(problem.geometry, grid)) {
    if (!problem.has_exact()) throw ConfigError("error metrics need an exact solution");
    for (int s = 0; s < problem.subdomain_count(); ++s) names_.push_back(problem.side(s).name);
    exact_.reserve(points_.size());
    for (const auto& g : points_) exact_.push_back(problem.side(g.side).exact(g.point).u);
  }

  const std::vector<GridPoint>& points() const { return points_; }
  const std::vector<double>& exact() const { return exact_; }

  std::vector<double> sample(const FieldFn& f) const {
    std::vector<double> v;
    v.reserve(points_.size());
    for (const auto& g : points_) v.push_back(f(g.point, g.side));
    return v;
  }

  ErrorReport errors(const std::vector<double>& approx) const {
    ErrorReport r;
    r.names = names_;
    r.points = points_.size();
    r.global = relative_errors(exact_, approx);
    for (std::size_t s = 0; s < names_.size(); ++s) {
      std::vector<double> e, a;
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (points_[i].side != static_cast<int>(s)) continue;
        e.push_back(exact_[i]);
        a.push_back(approx[i]);
      }
      r.per_subdomain.push_back(relative_errors(e, a));
    }
    return r;
  }

  ErrorReport errors(const FieldFn& f) const { return errors(sample(f)); }

 private:
  std::vector<std::string> names_;
  std::vector<GridPoint> points_;
  std::vector<double> exact_;
};

inline ErrorReport relative_errors(const InterfaceProblem& problem, const FieldFn& approx,
                                   const TestGrid& grid) {
  return ErrorEvaluator(problem, grid).errors(approx);
}

struct TraceRow {
  double param = 0.0;
  double x = 0.0;
  double y = 0.0;
  double base_error = 0.0;  // u_N - u_exact, plus side
  double correction = 0.0;  // eps * u_p, plus side
};

/// Samples the interface uniformly in its parameter (angle for closed curves,
/// global fraction otherwise) at time slice `t`.
inline std::vector<TraceRow> interface_trace(const InterfaceProblem& problem,
                                             const LayeredSolution& sol, int n_samples, double t = 0.0) {
  if (n_samples < 1) throw ConfigError("interface_trace: need at least one sample");
  const auto& geom = problem.geometry;
  const bool closed = geom.kind() == InterfaceKind::circle ||
                      geom.kind() == InterfaceKind::plum_blossom ||
                      geom.kind() == InterfaceKind::moving_circle;
  std::vector<TraceRow> rows;
  for (int k = 0; k < n_samples; ++k) {
    const double s = static_cast<double>(k) / n_samples;
    const InterfacePoint ip = geom.interface_point(s, t);
    const int side = geom.segment(ip.segment).plus;
    const double exact = problem.side(side).exact(ip.point).u;
    const double base = sol.partial_value(ip.point, side, 1);
    const double full = sol.value(ip.point, side);
    rows.push_back({closed ? 2.0 * std::numbers::pi * s : s, ip.point.x, ip.point.y, base - exact,
                    full - base});
  }
  return rows;
}

struct GroupNorm {
  std::string name;
  std::size_t rows = 0;
  double scale = 1.0;
  double scaled = 0.0;    // |scale * R_D|
  double unscaled = 0.0;  // |R_D|
};

inline std::vector<GroupNorm> residual_diagnostics(const ResidualSystem& sys) {
  std::vector<GroupNorm> out;
  for (const auto& g : sys.groups) {
    const double n = sys.F.segment(static_cast<Eigen::Index>(g.begin), static_cast<Eigen::Index>(g.size)).norm();
    out.push_back({g.name, g.size, g.scale, n, g.scale > 0.0 ? n / g.scale : 0.0});
  }
  return out;
}

}  // namespace qlips
