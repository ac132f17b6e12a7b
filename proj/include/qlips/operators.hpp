#pragma once

#include "qlips/coefficient.hpp"
#include "qlips/detail/series.hpp"
#include "qlips/types.hpp"

namespace qlips {

using detail::Series2;

namespace detail {

inline Vec3 state_direction(const Jet& d) { return {d.u, d.grad[0], d.grad[1]}; }

inline double contract(const Vec3& a, const Vec3& z) { return a[0] * z[0] + a[1] * z[1] + a[2] * z[2]; }

inline double quadratic(const Mat3& m, const Vec3& z) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += z[a] * contract(m[a], z);
  return s;
}

// f(z0 + eps z1) to second order from value, gradient and Hessian at z0.
inline Series2 taylor(double value, const Vec3& grad, const Mat3& hess, const Vec3& z1) {
  return {value, contract(grad, z1), 0.5 * quadratic(hess, z1)};
}

inline Series2 linear(double base, double dir) { return {base, dir, 0.0}; }

}  // namespace detail

/// Interior residual div(beta grad u) + f - [parabolic] u_t at one point, as a
/// function of the local jet of u. With the divergence expanded by the chain rule
///   div(beta grad u) = beta lap u + grad u . beta_x + beta_u |grad u|^2
///                      + grad u^T H beta_p,
/// `expand(v)` returns the exact second-order Taylor coefficients of the
/// residual at u + eps v.
class InteriorOperator {
 public:
  InteriorOperator(const Coefficient& beta, const Source& f, const Point& x, const Jet& base,
                   bool parabolic)
      : InteriorOperator(beta, f(x, base.u), x, base, parabolic) {}

  /// Source already evaluated at (x, base.u).
  InteriorOperator(const Coefficient& beta, const SourcePartials& f, const Point& x,
                   const Jet& base, bool parabolic)
      : p_(beta(x, base.u, base.grad)),
        s_(f),
        base_(base),
        parabolic_(parabolic),
        gradient_dependent_(beta.gradient_dependent) {}

  double residual() const { return expand(Jet{}).c0; }

  Series2 expand(const Jet& dir) const {
    using detail::linear;
    using detail::taylor;
    const Vec3 z1 = detail::state_direction(dir);

    const Series2 beta = taylor(p_.value, p_.dz, p_.dzz, z1);
    const Series2 beta_u = taylor(p_.dz[0], p_.dzz[0], p_.dzzz[0], z1);
    const Series2 lap = linear(base_.laplacian(), dir.laplacian());
    const Series2 gx = linear(base_.grad[0], dir.grad[0]);
    const Series2 gy = linear(base_.grad[1], dir.grad[1]);

    Series2 r = beta * lap;
    r += taylor(p_.dx[0], p_.dxz[0], p_.dxzz[0], z1) * gx;
    r += taylor(p_.dx[1], p_.dxz[1], p_.dxzz[1], z1) * gy;
    r += beta_u * (gx * gx + gy * gy);
    if (gradient_dependent_) {
      const Series2 bpx = taylor(p_.dz[1], p_.dzz[1], p_.dzzz[1], z1);
      const Series2 bpy = taylor(p_.dz[2], p_.dzz[2], p_.dzzz[2], z1);
      const Series2 hxx = linear(base_.hess[0], dir.hess[0]);
      const Series2 hxy = linear(base_.hess[1], dir.hess[1]);
      const Series2 hyy = linear(base_.hess[2], dir.hess[2]);
      // grad u^T H beta_p
      r += (gx * hxx + gy * hxy) * bpx;
      r += (gx * hxy + gy * hyy) * bpy;
    }
    r += Series2{s_.value, s_.d_u * dir.u, 0.5 * s_.d_uu * dir.u * dir.u};
    if (parabolic_) r = r - linear(base_.dt, dir.dt);
    return r;
  }

  /// First derivative of the residual with respect to each jet component.
  JetForm linear_form() const {
    JetForm a{};
    for (int c = 0; c < Jet::kComponents; ++c) a[c] = expand(Jet::unit(c)).c1;
    return a;
  }

  /// Second derivative contracted with v: b_c = D2R[v, e_c], by polarization
  /// of the quadratic coefficient (which equals D2R[w, w] / 2).
  JetForm bilinear_form(const Jet& v) const {
    JetForm b{};
    const double qv = expand(v).c2;
    for (int c = 0; c < Jet::kComponents; ++c) {
      const Jet e = Jet::unit(c);
      b[c] = expand(v + e).c2 - qv - expand(e).c2;
    }
    return b;
  }

 private:
  CoefficientPartials p_;
  SourcePartials s_;
  Jet base_;
  bool parabolic_;
  bool gradient_dependent_;
};

/// Normal flux beta(x, u, grad u) d_n u at one interface point.
class FluxOperator {
 public:
  FluxOperator(const Coefficient& beta, const Point& x, const Jet& base, const Vec2& normal)
      : p_(beta(x, base.u, base.grad)), base_(base), n_(normal) {}

  double value() const { return p_.value * base_.normal_derivative(n_); }

  Series2 expand(const Jet& dir) const {
    const Vec3 z1 = detail::state_direction(dir);
    const Series2 beta = detail::taylor(p_.value, p_.dz, p_.dzz, z1);
    return beta * detail::linear(base_.normal_derivative(n_), dir.normal_derivative(n_));
  }

  JetForm linear_form() const {
    JetForm a{};
    for (int c = 0; c < 3; ++c) a[c] = expand(Jet::unit(c)).c1;
    return a;
  }

  JetForm bilinear_form(const Jet& v) const {
    JetForm b{};
    const double qv = expand(v).c2;
    for (int c = 0; c < 3; ++c) {
      const Jet e = Jet::unit(c);
      b[c] = expand(v + e).c2 - qv - expand(e).c2;
    }
    return b;
  }

 private:
  CoefficientPartials p_;
  Jet base_;
  Vec2 n_;
};

}  // namespace qlips
