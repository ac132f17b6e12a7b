#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qlips/coefficient.hpp"
#include "qlips/detail/rng.hpp"
#include "qlips/errors.hpp"
#include "qlips/geometry.hpp"
#include "qlips/operators.hpp"
#include "qlips/types.hpp"

namespace qlips {

/// Analytic field returning the full local jet (value, gradient, Hessian, u_t).
using ExactField = std::function<Jet(const Point&)>;

struct Subdomain {
  std::string name;
  Coefficient beta;
  Source source;
  ExactField exact;  // may be empty
};

/// Constants that only appear in the well-posedness analysis. Stored for
/// documentation; nothing reads them numerically.
struct AnalysisConstants {
  std::optional<double> ellipticity;        // delta
  std::optional<double> monotonicity;       // lambda
  std::optional<double> poincare;           // C_P
  std::optional<double> source_lipschitz;   // L_f
};

struct InterfaceProblem {
  std::string id;
  InterfaceGeometry geometry;
  std::vector<Subdomain> subdomains;
  std::function<double(const Point&, int segment)> jump_w;
  std::function<double(const Point&, int segment)> jump_v;
  std::function<double(const Point&, int subdomain)> boundary_g;
  bool parabolic = false;
  AnalysisConstants analysis;

  int subdomain_count() const { return static_cast<int>(subdomains.size()); }
  bool has_exact() const {
    return std::all_of(subdomains.begin(), subdomains.end(),
                       [](const Subdomain& s) { return static_cast<bool>(s.exact); });
  }
  const Subdomain& side(int s) const {
    if (s < 0 || s >= subdomain_count()) throw ConfigError("subdomain index out of range");
    return subdomains[static_cast<std::size_t>(s)];
  }
  int input_dim() const { return geometry.time_dependent() ? 3 : 2; }
};

/// f = [parabolic] u_t - div(beta grad u) for the exact solution on `side`.
inline double manufactured_source(const InterfaceProblem& problem, int side, const Point& x) {
  const Subdomain& sd = problem.side(side);
  if (!sd.exact) throw ConfigError("manufactured_source: no exact solution for " + sd.name);
  const InteriorOperator op(sd.beta, zero_source(), x, sd.exact(x), problem.parabolic);
  return -op.residual();
}

struct JumpData {
  double w = 0.0;
  double v = 0.0;
};

/// Jumps of the exact solution and of its normal flux at an interface point.
inline JumpData jump_data_from_exact(const InterfaceProblem& problem, const Point& x, int segment,
                                     double tol = 1e-10) {
  const auto& geom = problem.geometry;
  if (geom.interface_proximity(x) > tol)
    throw DomainError("jump_data_from_exact: point is not on the interface");
  const InterfaceSegment seg = geom.segment(segment);
  const Subdomain& plus = problem.side(seg.plus);
  const Subdomain& minus = problem.side(seg.minus);
  if (!plus.exact || !minus.exact)
    throw ConfigError("jump_data_from_exact: exact solution required on both sides");
  const Vec2 n = geom.normal_at(x, segment);
  const Jet up = plus.exact(x);
  const Jet um = minus.exact(x);
  return {up.u - um.u,
          FluxOperator(plus.beta, x, up, n).value() - FluxOperator(minus.beta, x, um, n).value()};
}

// Manufactured fields built from sums of separable products X(x) Y(y) T(t).

/// One-variable profile: value, first and second derivative.
using Profile = std::function<std::array<double, 3>(double)>;

namespace profiles {

inline Profile constant(double c) {
  return [c](double) { return std::array<double, 3>{c, 0.0, 0.0}; };
}
inline Profile identity() {
  return [](double s) { return std::array<double, 3>{s, 1.0, 0.0}; };
}
inline Profile power(int n) {
  return [n](double s) {
    const double k = n;
    return std::array<double, 3>{std::pow(s, k), n >= 1 ? k * std::pow(s, k - 1) : 0.0,
                                 n >= 2 ? k * (k - 1) * std::pow(s, k - 2) : 0.0};
  };
}
/// e^{a s}
inline Profile exponential(double a) {
  return [a](double s) {
    const double e = std::exp(a * s);
    return std::array<double, 3>{e, a * e, a * a * e};
  };
}
/// sin(w s)
inline Profile sine(double w) {
  return [w](double s) {
    const double v = std::sin(w * s);
    return std::array<double, 3>{v, w * std::cos(w * s), -w * w * v};
  };
}
/// cos(w s)
inline Profile cosine(double w) {
  return [w](double s) {
    const double v = std::cos(w * s);
    return std::array<double, 3>{v, -w * std::sin(w * s), -w * w * v};
  };
}
inline Profile product(Profile f, Profile g) {
  return [f = std::move(f), g = std::move(g)](double s) {
    const auto a = f(s);
    const auto b = g(s);
    return std::array<double, 3>{a[0] * b[0], a[1] * b[0] + a[0] * b[1],
                                 a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2]};
  };
}

}  // namespace profiles

struct ProductTerm {
  double scale = 1.0;
  Profile x = profiles::constant(1.0);
  Profile y = profiles::constant(1.0);
  Profile t = profiles::constant(1.0);
};

inline ExactField sum_of_products(std::vector<ProductTerm> terms) {
  return [terms = std::move(terms)](const Point& p) {
    Jet j;
    for (const auto& term : terms) {
      const auto X = term.x(p.x);
      const auto Y = term.y(p.y);
      const auto T = term.t(p.t);
      const double c = term.scale;
      j.u += c * X[0] * Y[0] * T[0];
      j.grad[0] += c * X[1] * Y[0] * T[0];
      j.grad[1] += c * X[0] * Y[1] * T[0];
      j.hess[0] += c * X[2] * Y[0] * T[0];
      j.hess[1] += c * X[1] * Y[1] * T[0];
      j.hess[2] += c * X[0] * Y[2] * T[0];
      j.dt += c * X[0] * Y[0] * T[1];
    }
    return j;
  };
}

/// Fills sources, jump data and boundary data from the exact solutions.
/// Sources depend on x (and t) only.
inline void manufacture(InterfaceProblem& problem) {
  if (!problem.has_exact()) throw ConfigError("manufacture: exact solution required on every side");
  auto shared = std::make_shared<InterfaceProblem>(problem);
  for (int s = 0; s < problem.subdomain_count(); ++s) {
    problem.subdomains[static_cast<std::size_t>(s)].source.eval = [shared, s](const Point& x,
                                                                             double) {
      return SourcePartials{manufactured_source(*shared, s, x), 0.0, 0.0};
    };
    problem.subdomains[static_cast<std::size_t>(s)].source.state_dependent = false;
  }
  problem.jump_w = [shared](const Point& x, int seg) {
    return jump_data_from_exact(*shared, x, seg, 1e-8).w;
  };
  problem.jump_v = [shared](const Point& x, int seg) {
    return jump_data_from_exact(*shared, x, seg, 1e-8).v;
  };
  problem.boundary_g = [shared](const Point& x, int s) { return shared->side(s).exact(x).u; };
}

struct ExampleParams {
  double contrast = 1e8;  // ex4: beta+ (beta- is O(1))
  int petals = 5;         // ex3
  double r0 = 0.5;        // ex3: mean radius
  double amplitude = 0.1; // ex3: petal amplitude
  double horizon = 0.2;   // ex5: final time
};

inline const std::vector<std::string>& builtin_example_ids() {
  static const std::vector<std::string> ids{"ex1", "ex2", "ex3", "ex4", "ex5", "ex6"};
  return ids;
}

namespace detail {

inline Coefficient exp_plus_one() {
  ScalarLaw law = [](double u) {
    const double e = std::exp(u);
    return std::array<double, 4>{e + 1.0, e, e, e};
  };
  return separable_coefficient({}, law, {}, "exp(u)+1");
}

inline Coefficient one_plus_sin() {
  ScalarLaw law = [](double u) {
    const double s = std::sin(u), c = std::cos(u);
    return std::array<double, 4>{1.0 + s, c, -s, -c};
  };
  return separable_coefficient({}, law, {}, "1+sin(u)");
}

/// x^2 + y^2 + exp(u/2)
inline Coefficient radial_plus_exp_half() {
  SpatialTerm a{[](const Point& x) { return x.x * x.x + x.y * x.y; },
                [](const Point& x) { return Vec2{2.0 * x.x, 2.0 * x.y}; }};
  ScalarLaw law = [](double u) {
    const double e = std::exp(0.5 * u);
    return std::array<double, 4>{e, 0.5 * e, 0.25 * e, 0.125 * e};
  };
  return separable_coefficient(std::move(a), std::move(law), {}, "x^2+y^2+exp(u/2)");
}

/// 1 + |grad u|^2
inline Coefficient one_plus_gradient_squared() {
  GradientTerm c;
  c.value = [](const Vec2& p) { return p[0] * p[0] + p[1] * p[1]; };
  c.gradient = [](const Vec2& p) { return Vec2{2.0 * p[0], 2.0 * p[1]}; };
  c.hessian = [](const Vec2&) { return std::array<Vec2, 2>{Vec2{2.0, 0.0}, Vec2{0.0, 2.0}}; };
  c.third = [](const Vec2&) { return std::array<std::array<Vec2, 2>, 2>{}; };
  ScalarLaw one = [](double) { return std::array<double, 4>{1.0, 0.0, 0.0, 0.0}; };
  return separable_coefficient({}, std::move(one), std::move(c), "1+|grad u|^2");
}

inline InterfaceProblem two_sided(std::string id, InterfaceGeometry geom, Coefficient beta_plus,
                                  ExactField u_plus, Coefficient beta_minus, ExactField u_minus) {
  InterfaceProblem p{std::move(id), std::move(geom), {}, {}, {}, {}, false, {}};
  p.subdomains.resize(2);
  p.subdomains[kPlus] = {p.geometry.subdomain_name(kPlus), std::move(beta_plus), {},
                         std::move(u_plus)};
  p.subdomains[kMinus] = {p.geometry.subdomain_name(kMinus), std::move(beta_minus), {},
                          std::move(u_minus)};
  return p;
}

}  // namespace detail

/// Builtin benchmark problems ex1..ex6 with manufactured data.
inline InterfaceProblem builtin_example(const std::string& id, const ExampleParams& params = {}) {
  using namespace profiles;
  constexpr double pi = std::numbers::pi;
  const Box square{-1.0, 1.0, -1.0, 1.0};
  const auto make = [&]() -> InterfaceProblem {

  if (id == "ex1") {
    // x^2 y^2 on the left, e^{-x} x^2 y^2 on the right; interface x = 0.
    auto geom = InterfaceGeometry::vertical_line(0.0, Box{-1.0, 1.0, 0.0, 1.0});
    return detail::two_sided(id, std::move(geom), polynomial_coefficient({1.0, 0.0, 0.5}, "1+u^2/2"),
                          sum_of_products({{1.0, product(exponential(-1.0), power(2)), power(2)}}),
                          polynomial_coefficient({1.0, 1.0}, "1+u"),
                          sum_of_products({{1.0, power(2), power(2)}}));
  } else if (id == "ex2") {
    auto geom = InterfaceGeometry::axes_cross(square);
    InterfaceProblem p{id, std::move(geom), {}, {}, {}, {}, false, {}};
    const Profile x2 = power(2);
    const Profile ex2 = product(exponential(-1.0), power(2));
    // Omega1..Omega4: upper left, upper right, lower left, lower right.
    std::vector<Coefficient> betas{polynomial_coefficient({1.0, 1.0}, "1+u"),
                                   polynomial_coefficient({1.0, 0.0, 0.5}, "1+0.5u^2"),
                                   polynomial_coefficient({1.0, 0.0, 0.25}, "1+0.25u^2"),
                                   polynomial_coefficient({1.0, 0.0, 0.0, 0.1}, "1+0.1u^3")};
    std::vector<ExactField> exact{sum_of_products({{1.0, x2, x2}}),
                                  sum_of_products({{1.0, ex2, x2}}),
                                  sum_of_products({{1.0, x2, ex2}}),
                                  sum_of_products({{1.0, ex2, ex2}})};
    for (int s = 0; s < 4; ++s)
      p.subdomains.push_back({p.geometry.subdomain_name(s), betas[static_cast<std::size_t>(s)], {},
                              exact[static_cast<std::size_t>(s)]});
    return p;
  } else if (id == "ex3") {
    auto geom = InterfaceGeometry::plum_blossom(params.r0, params.amplitude, params.petals, square);
    return detail::two_sided(id, std::move(geom), detail::radial_plus_exp_half(),
                          sum_of_products({{0.5, exponential(-1.0), cosine(1.0)}}),
                          detail::one_plus_sin(), sum_of_products({{1.0, sine(1.0), sine(1.0)}}));
  } else if (id == "ex4") {
    if (!(params.contrast > 0.0)) throw ConfigError("ex4: contrast must be positive");
    const double bp = params.contrast;
    auto geom = InterfaceGeometry::circle({0.0, 0.0}, 0.5, square);
    return detail::two_sided(id, std::move(geom), constant_coefficient(bp),
                          sum_of_products({{1.0 / bp, power(3), constant(1.0)},
                                           {1.0 / bp, constant(1.0), power(3)}}),
                          polynomial_coefficient({1.0, 0.0, 0.0, 1.0}, "1+u^3"),
                          sum_of_products({{1.0, sine(pi), sine(pi)}}));
  } else if (id == "ex5") {
    if (!(params.horizon > 0.0)) throw ConfigError("ex5: horizon must be positive");
    Box box = square;
    box.timed = true;
    box.t_min = 0.0;
    box.t_max = params.horizon;
    auto geom = InterfaceGeometry::moving_circle(0.5, 0.5, box);
    auto p = detail::two_sided(id, std::move(geom), polynomial_coefficient({1.0, 0.0, 1.0}, "1+u^2"),
                          sum_of_products({{1.0, sine(pi), sine(pi), exponential(-1.0)}}),
                          detail::exp_plus_one(),
                          sum_of_products({{1.0, power(2), constant(1.0), identity()},
                                           {1.0, constant(1.0), power(2), identity()}}));
    p.parabolic = true;
    return p;
  } else if (id == "ex6") {
    auto geom = InterfaceGeometry::circle({0.0, 0.0}, 0.5, square);
    return detail::two_sided(id, std::move(geom), detail::one_plus_gradient_squared(),
                          sum_of_products({{0.5, sine(pi), sine(pi)}, {0.25}}),
                          polynomial_coefficient({1.0, 0.0, 1.0}, "1+u^2"),
                          sum_of_products({{0.25}, {-1.0, power(2)}, {-1.0, constant(1.0), power(2)}}));
  }
    throw ConfigError("unknown example id '" + id + "'");
  };
  InterfaceProblem p = make();
  manufacture(p);
  return p;
}

// Validation hooks

/// Smallest coefficient value over random points of every subdomain, with the
/// exact state (or u = 0 when no exact solution is known).
inline double ellipticity_bound(const InterfaceProblem& problem, std::size_t samples = 1000,
                                std::uint64_t seed = 7) {
  detail::Rng rng(seed);
  const Box& box = problem.geometry.box();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    Point x{rng.uniform(box.x_min, box.x_max), rng.uniform(box.y_min, box.y_max),
            box.timed ? rng.uniform(box.t_min, box.t_max) : 0.0};
    const int s = problem.geometry.subdomain_of(x);
    const Subdomain& sd = problem.side(s);
    const Jet j = sd.exact ? sd.exact(x) : Jet{};
    lo = std::min(lo, sd.beta.value(x, j.u, j.grad));
  }
  return lo;
}

/// Largest relative mismatch between the analytic partials of `beta` and
/// central differences at (x, u, p), relative to max(1, |analytic|).
inline double coefficient_partials_error(const Coefficient& beta, const Point& x, double u,
                                         const Vec2& p, double h = 1e-5) {
  const auto at = [&](const Vec3& z, const Point& y) { return beta(y, z[0], {z[1], z[2]}); };
  const Vec3 z0{u, p[0], p[1]};
  const CoefficientPartials c = at(z0, x);
  double err = 0.0;
  const auto cmp = [&err](double fd, double exact) {
    err = std::max(err, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
  };
  for (int a = 0; a < 3; ++a) {
    Vec3 zp = z0, zm = z0;
    zp[a] += h;
    zm[a] -= h;
    const auto P = at(zp, x), M = at(zm, x);
    cmp((P.value - M.value) / (2 * h), c.dz[a]);
    for (int b = 0; b < 3; ++b) {
      cmp((P.dz[b] - M.dz[b]) / (2 * h), c.dzz[a][b]);
      for (int e = 0; e < 3; ++e) cmp((P.dzz[b][e] - M.dzz[b][e]) / (2 * h), c.dzzz[a][b][e]);
      for (int k = 0; k < 2; ++k) cmp((P.dxz[k][b] - M.dxz[k][b]) / (2 * h), c.dxzz[k][a][b]);
    }
    for (int k = 0; k < 2; ++k) cmp((P.dx[k] - M.dx[k]) / (2 * h), c.dxz[k][a]);
  }
  for (int k = 0; k < 2; ++k) {
    Point xp = x, xm = x;
    (k == 0 ? xp.x : xp.y) += h;
    (k == 0 ? xm.x : xm.y) -= h;
    cmp((at(z0, xp).value - at(z0, xm).value) / (2 * h), c.dx[k]);
  }
  return err;
}

/// Same check for a source's u-partials.
inline double source_partials_error(const Source& f, const Point& x, double u, double h = 1e-5) {
  const SourcePartials c = f(x, u);
  const SourcePartials P = f(x, u + h), M = f(x, u - h);
  const double e1 = std::abs((P.value - M.value) / (2 * h) - c.d_u) / std::max(1.0, std::abs(c.d_u));
  const double e2 = std::abs((P.d_u - M.d_u) / (2 * h) - c.d_uu) / std::max(1.0, std::abs(c.d_uu));
  return std::max(e1, e2);
}

}  // namespace qlips
