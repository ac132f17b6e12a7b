#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qlips/types.hpp"

namespace qlips {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;
using Ten3 = std::array<Mat3, 3>;

/// Diffusion coefficient beta(x, u, p) with p = grad u, and every partial the
/// residual expansions need. State variables are z = (u, p_x, p_y); `dx*`
/// hold explicit spatial partials. Unused entries stay zero.
struct CoefficientPartials {
  double value = 0.0;
  Vec3 dz{};   // d beta / d z_a
  Mat3 dzz{};  // d2 beta / d z_a d z_b
  Ten3 dzzz{};
  Vec2 dx{};                   // d beta / d x_k
  std::array<Vec3, 2> dxz{};   // d2 beta / d x_k d z_a
  std::array<Mat3, 2> dxzz{};  // d3 beta / d x_k d z_a d z_b

  double d_u() const { return dz[0]; }
  double d_uu() const { return dzz[0][0]; }
  Vec2 d_p() const { return {dz[1], dz[2]}; }
};

/// Closure record: the callable returns beta and its partials at (x, u, grad u).
struct Coefficient {
  std::function<CoefficientPartials(const Point&, double, const Vec2&)> eval;
  bool gradient_dependent = false;
  std::string label;

  CoefficientPartials operator()(const Point& x, double u, const Vec2& p) const {
    return eval(x, u, p);
  }
  double value(const Point& x, double u, const Vec2& p = {0.0, 0.0}) const {
    return eval(x, u, p).value;
  }
};

/// Scalar law b(u) with b, b', b'', b'''.
using ScalarLaw = std::function<std::array<double, 4>(double)>;

/// Spatial term a(x) with a and grad a.
struct SpatialTerm {
  std::function<double(const Point&)> value;
  std::function<Vec2(const Point&)> gradient;
};

/// Gradient-magnitude term c(p): value, gradient, Hessian and third derivative
/// tensor with respect to p.
struct GradientTerm {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  std::function<std::array<Vec2, 2>(const Vec2&)> hessian;
  std::function<std::array<std::array<Vec2, 2>, 2>(const Vec2&)> third;
};

/// beta = a(x) + b(u) + c(grad u); each part optional.
inline Coefficient separable_coefficient(SpatialTerm a, ScalarLaw b, GradientTerm c,
                                         std::string label) {
  Coefficient k;
  k.gradient_dependent = static_cast<bool>(c.value);
  k.label = std::move(label);
  k.eval = [a = std::move(a), b = std::move(b), c = std::move(c)](const Point& x, double u,
                                                                  const Vec2& p) {
    CoefficientPartials r;
    if (a.value) {
      r.value += a.value(x);
      r.dx = a.gradient(x);
    }
    if (b) {
      const auto d = b(u);
      r.value += d[0];
      r.dz[0] = d[1];
      r.dzz[0][0] = d[2];
      r.dzzz[0][0][0] = d[3];
    }
    if (c.value) {
      r.value += c.value(p);
      const Vec2 g = c.gradient(p);
      const auto h = c.hessian(p);
      const auto t = c.third(p);
      for (int k1 = 0; k1 < 2; ++k1) {
        r.dz[1 + k1] = g[k1];
        for (int k2 = 0; k2 < 2; ++k2) {
          r.dzz[1 + k1][1 + k2] = h[k1][k2];
          for (int k3 = 0; k3 < 2; ++k3) r.dzzz[1 + k1][1 + k2][1 + k3] = t[k1][k2][k3];
        }
      }
    }
    return r;
  };
  return k;
}

/// sum_k c_k u^k.
inline ScalarLaw polynomial_law(std::vector<double> c) {
  return [c = std::move(c)](double u) {
    std::array<double, 4> d{};
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double ck = c[k];
      const double kk = static_cast<double>(k);
      d[0] += ck * std::pow(u, kk);
      if (k >= 1) d[1] += ck * kk * std::pow(u, kk - 1);
      if (k >= 2) d[2] += ck * kk * (kk - 1) * std::pow(u, kk - 2);
      if (k >= 3) d[3] += ck * kk * (kk - 1) * (kk - 2) * std::pow(u, kk - 3);
    }
    return d;
  };
}

inline Coefficient polynomial_coefficient(std::vector<double> c, std::string label) {
  return separable_coefficient({}, polynomial_law(std::move(c)), {}, std::move(label));
}

inline Coefficient constant_coefficient(double value) {
  return polynomial_coefficient({value}, std::to_string(value));
}

/// Source f(x, u) with df/du and d2f/du2.
struct SourcePartials {
  double value = 0.0;
  double d_u = 0.0;
  double d_uu = 0.0;
};

struct Source {
  std::function<SourcePartials(const Point&, double)> eval;
  bool state_dependent = true;  // false: f(x) only, safe to cache per point

  SourcePartials operator()(const Point& x, double u) const {
    return eval ? eval(x, u) : SourcePartials{};
  }
};

inline Source zero_source() {
  return {[](const Point&, double) { return SourcePartials{}; }, false};
}

}  // namespace qlips
