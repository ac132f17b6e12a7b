#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlips/detail/rng.hpp"
#include "qlips/errors.hpp"
#include "qlips/types.hpp"

namespace qlips {

enum class Activation { tanh, sin };

inline const char* to_string(Activation a) { return a == Activation::tanh ? "tanh" : "sin"; }

struct Range {
  double lo = -1.0;
  double hi = 1.0;
};

/// Activation value and its first two derivatives at z.
inline void activate(Activation a, double z, double& s0, double& s1, double& s2) {
  if (a == Activation::tanh) {
    s0 = std::tanh(z);
    s1 = 1.0 - s0 * s0;
    s2 = -2.0 * s0 * s1;
  } else {
    s0 = std::sin(z);
    s1 = std::cos(z);
    s2 = -s0;
  }
}

/// Single hidden layer with frozen random weights; only the output
/// coefficients are trainable. Inputs are (x, y) or (x, y, t).
class RandomFeatureNet {
 public:
  RandomFeatureNet(int neurons, int dim, Activation activation, Range weight_range,
                   Range bias_range, std::uint64_t seed)
      : activation_(activation), weight_range_(weight_range), bias_range_(bias_range), seed_(seed) {
    if (neurons < 1) throw ConfigError("init_net: need at least one neuron");
    if (dim != 2 && dim != 3) throw ConfigError("init_net: input dimension must be 2 or 3");
    if (!(weight_range.hi >= weight_range.lo) || !(bias_range.hi >= bias_range.lo))
      throw ConfigError("init_net: sampling ranges must be nonempty");
    weights_.resize(neurons, dim);
    biases_.resize(neurons);
    detail::Rng rng(seed);
    for (int j = 0; j < neurons; ++j) {
      for (int k = 0; k < dim; ++k) weights_(j, k) = rng.uniform(weight_range.lo, weight_range.hi);
      biases_(j) = rng.uniform(bias_range.lo, bias_range.hi);
    }
    coefficients_ = Eigen::VectorXd::Zero(neurons);
  }

  int size() const { return static_cast<int>(biases_.size()); }
  int dim() const { return static_cast<int>(weights_.cols()); }
  bool timed() const { return dim() == 3; }
  Activation activation() const { return activation_; }
  Range weight_range() const { return weight_range_; }
  Range bias_range() const { return bias_range_; }
  std::uint64_t seed() const { return seed_; }

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& biases() const { return biases_; }

  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  void set_coefficients(const Eigen::Ref<const Eigen::VectorXd>& c) {
    if (c.size() != coefficients_.size()) throw ShapeError("coefficient length != neuron count");
    coefficients_ = c;
  }

  double preactivation(int j, const Point& p) const {
    double z = weights_(j, 0) * p.x + weights_(j, 1) * p.y + biases_(j);
    if (timed()) z += weights_(j, 2) * p.t;
    return z;
  }

  /// Direct summation of sum_j c_j phi(w_j . x + b_j).
  double value(const Point& p) const {
    double s = 0.0;
    for (int j = 0; j < size(); ++j) {
      double s0, s1, s2;
      activate(activation_, preactivation(j, p), s0, s1, s2);
      s += coefficients_(j) * s0;
    }
    return s;
  }

 private:
  Activation activation_;
  Range weight_range_;
  Range bias_range_;
  std::uint64_t seed_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd biases_;
  Eigen::VectorXd coefficients_;
};

inline RandomFeatureNet init_net(int m, int d, Activation activation, Range weight_range,
                                 Range bias_range, std::uint64_t seed) {
  return RandomFeatureNet(m, d, activation, weight_range, bias_range, seed);
}

class FeatureBlock;

/// Evaluates the activation tables of `net` at `points`. `normals` is either
/// empty or one unit normal per point.
FeatureBlock features(const RandomFeatureNet& net, std::span<const Point> points,
                      std::span<const Vec2> normals = {}, bool second_order = true);

/// Activation tables of one net at a fixed point set. Derivative blocks are
/// recovered from sigma, sigma', sigma'' and the hidden weights, so every
/// quantity is a linear map of the output coefficients. Stored column major,
/// N_points x m.
class FeatureBlock {
 public:
  FeatureBlock() = default;

  std::size_t rows() const { return static_cast<std::size_t>(s0_.rows()); }
  int cols() const { return static_cast<int>(s0_.cols()); }
  bool has_second() const { return s2_.size() > 0; }
  bool has_normals() const { return !normals_.empty(); }
  bool timed() const { return wt_.size() > 0; }

  const Eigen::MatrixXd& sigma() const { return s0_; }
  const Eigen::MatrixXd& dsigma() const { return s1_; }
  const Eigen::MatrixXd& d2sigma() const { return s2_; }
  const Eigen::VectorXd& wx() const { return wx_; }
  const Eigen::VectorXd& wy() const { return wy_; }
  const Eigen::VectorXd& wt() const { return wt_; }
  const std::vector<Vec2>& normals() const { return normals_; }

  Eigen::MatrixXd values() const { return s0_; }

  /// d/dx (k = 0), d/dy (k = 1) or d/dt (k = 2) of every basis function.
  Eigen::MatrixXd gradient(int k) const {
    const Eigen::VectorXd& w = k == 0 ? wx_ : (k == 1 ? wy_ : wt_);
    if (k == 2 && !timed()) throw ShapeError("feature block has no time input");
    return s1_ * w.asDiagonal();
  }

  Eigen::MatrixXd laplacian() const {
    require_second();
    return s2_ * (wx_.array().square() + wy_.array().square()).matrix().asDiagonal();
  }

  /// Hessian entry (k, l), spatial indices.
  Eigen::MatrixXd hessian(int k, int l) const {
    require_second();
    const Eigen::VectorXd& a = k == 0 ? wx_ : wy_;
    const Eigen::VectorXd& b = l == 0 ? wx_ : wy_;
    return s2_ * a.cwiseProduct(b).asDiagonal();
  }

  Eigen::MatrixXd time_derivative() const { return gradient(2); }

  Eigen::MatrixXd normal_derivative() const {
    if (!has_normals()) throw ShapeError("feature block was built without normals");
    Eigen::MatrixXd out = s1_;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const Vec2& n = normals_[static_cast<std::size_t>(i)];
      out.row(i) = out.row(i).cwiseProduct((n[0] * wx_ + n[1] * wy_).transpose());
    }
    return out;
  }

  /// Jet of basis function j at row i.
  Jet basis_jet(std::size_t i, int j) const {
    const auto r = static_cast<Eigen::Index>(i);
    Jet jet;
    jet.u = s0_(r, j);
    const double d1 = s1_(r, j);
    jet.grad = {wx_(j) * d1, wy_(j) * d1};
    if (has_second()) {
      const double d2 = s2_(r, j);
      jet.hess = {wx_(j) * wx_(j) * d2, wx_(j) * wy_(j) * d2, wy_(j) * wy_(j) * d2};
    }
    if (timed()) jet.dt = wt_(j) * d1;
    return jet;
  }

  friend FeatureBlock features(const RandomFeatureNet& net, std::span<const Point> points,
                               std::span<const Vec2> normals, bool second_order);

 private:
  void require_second() const {
    if (!has_second()) throw ShapeError("feature block was built without second derivatives");
  }

  Eigen::MatrixXd s0_, s1_, s2_;
  Eigen::VectorXd wx_, wy_, wt_;
  std::vector<Vec2> normals_;
};

inline FeatureBlock features(const RandomFeatureNet& net, std::span<const Point> points,
                             std::span<const Vec2> normals, bool second_order) {
  if (!normals.empty() && normals.size() != points.size())
    throw ShapeError("features: one normal per point required");
  const auto n = static_cast<Eigen::Index>(points.size());
  const int m = net.size();
  FeatureBlock fb;
  fb.s0_.resize(n, m);
  fb.s1_.resize(n, m);
  if (second_order) fb.s2_.resize(n, m);
  fb.wx_ = net.weights().col(0);
  fb.wy_ = net.weights().col(1);
  if (net.timed()) fb.wt_ = net.weights().col(2);
  fb.normals_.assign(normals.begin(), normals.end());
  for (int j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double s0, s1, s2;
      activate(net.activation(), net.preactivation(j, points[static_cast<std::size_t>(i)]), s0,
               s1, s2);
      fb.s0_(i, j) = s0;
      fb.s1_(i, j) = s1;
      if (second_order) fb.s2_(i, j) = s2;
    }
  }
  return fb;
}

/// Pointwise state of u = Phi c at every row of `block`.
inline std::vector<Jet> eval_state(const FeatureBlock& block,
                                   const Eigen::Ref<const Eigen::VectorXd>& c) {
  if (c.size() != block.cols()) throw ShapeError("eval_state: coefficient/feature mismatch");
  const auto n = block.rows();
  std::vector<Jet> out(n);
  if (n == 0) return out;
  const Eigen::VectorXd u = block.sigma() * c;
  const Eigen::VectorXd gx = block.dsigma() * block.wx().cwiseProduct(c);
  const Eigen::VectorXd gy = block.dsigma() * block.wy().cwiseProduct(c);
  Eigen::VectorXd hxx, hxy, hyy, dt;
  if (block.has_second()) {
    hxx = block.d2sigma() * block.wx().cwiseProduct(block.wx()).cwiseProduct(c);
    hxy = block.d2sigma() * block.wx().cwiseProduct(block.wy()).cwiseProduct(c);
    hyy = block.d2sigma() * block.wy().cwiseProduct(block.wy()).cwiseProduct(c);
  }
  if (block.timed()) dt = block.dsigma() * block.wt().cwiseProduct(c);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Jet& j = out[i];
    j.u = u(r);
    j.grad = {gx(r), gy(r)};
    if (block.has_second()) j.hess = {hxx(r), hxy(r), hyy(r)};
    if (block.timed()) j.dt = dt(r);
  }
  return out;
}

inline std::vector<Jet> eval_state(const RandomFeatureNet& net, const FeatureBlock& block) {
  if (net.size() != block.cols()) throw ShapeError("eval_state: stale feature block");
  return eval_state(block, net.coefficients());
}

}  // namespace qlips
