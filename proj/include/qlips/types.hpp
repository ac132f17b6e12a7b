#pragma once

#include <array>
#include <cmath>

namespace qlips {

using Vec2 = std::array<double, 2>;

/// A location in space or space-time. `t` is ignored by stationary problems.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
};

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }

/// Local first/second order information of a scalar field at one point:
/// value, spatial gradient, spatial Hessian (xx, xy, yy) and time derivative.
///
/// A Jet is also used as a *direction* in jet space; `hess[1]` then stands for
/// both off-diagonal entries of the symmetric Hessian.
struct Jet {
  double u = 0.0;
  Vec2 grad{};
  std::array<double, 3> hess{};
  double dt = 0.0;

  double laplacian() const { return hess[0] + hess[2]; }
  double normal_derivative(const Vec2& n) const { return dot(grad, n); }

  static constexpr int kComponents = 7;

  /// Flat view: (u, gx, gy, hxx, hxy, hyy, dt).
  double component(int c) const {
    switch (c) {
      case 0: return u;
      case 1: return grad[0];
      case 2: return grad[1];
      case 3: return hess[0];
      case 4: return hess[1];
      case 5: return hess[2];
      default: return dt;
    }
  }

  static Jet unit(int c) {
    Jet j;
    switch (c) {
      case 0: j.u = 1.0; break;
      case 1: j.grad[0] = 1.0; break;
      case 2: j.grad[1] = 1.0; break;
      case 3: j.hess[0] = 1.0; break;
      case 4: j.hess[1] = 1.0; break;
      case 5: j.hess[2] = 1.0; break;
      default: j.dt = 1.0; break;
    }
    return j;
  }

  Jet& operator+=(const Jet& o) {
    u += o.u;
    grad[0] += o.grad[0];
    grad[1] += o.grad[1];
    for (int k = 0; k < 3; ++k) hess[k] += o.hess[k];
    dt += o.dt;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }

  friend Jet operator*(double s, Jet a) {
    a.u *= s;
    a.grad[0] *= s;
    a.grad[1] *= s;
    for (auto& h : a.hess) h *= s;
    a.dt *= s;
    return a;
  }
};

using JetForm = std::array<double, Jet::kComponents>;

inline double apply(const JetForm& form, const Jet& j) {
  double s = 0.0;
  for (int c = 0; c < Jet::kComponents; ++c) s += form[c] * j.component(c);
  return s;
}

}  // namespace qlips
