#pragma once

namespace qlips::detail {

// Polynomial in a small parameter, truncated after the quadratic term.
struct Series2 {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  Series2() = default;
  constexpr Series2(double a, double b = 0.0, double c = 0.0) : c0(a), c1(b), c2(c) {}

  double at(double eps) const { return c0 + eps * (c1 + eps * c2); }

  friend Series2 operator+(const Series2& a, const Series2& b) {
    return {a.c0 + b.c0, a.c1 + b.c1, a.c2 + b.c2};
  }
  friend Series2 operator-(const Series2& a, const Series2& b) {
    return {a.c0 - b.c0, a.c1 - b.c1, a.c2 - b.c2};
  }
  friend Series2 operator*(const Series2& a, const Series2& b) {
    return {a.c0 * b.c0, a.c0 * b.c1 + a.c1 * b.c0, a.c0 * b.c2 + a.c1 * b.c1 + a.c2 * b.c0};
  }
  friend Series2 operator*(double s, const Series2& a) { return {s * a.c0, s * a.c1, s * a.c2}; }
  Series2& operator+=(const Series2& o) {
    c0 += o.c0;
    c1 += o.c1;
    c2 += o.c2;
    return *this;
  }
};

}  // namespace qlips::detail
