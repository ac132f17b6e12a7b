#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qlips/basis.hpp"

using namespace qlips;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<Point> random_points(int n, bool timed, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), timed ? 0.5 * (u(rng) + 1.0) : 0.0});
  return pts;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(InitNet, RangesAndShapes) {
  const auto net = init_net(100, 2, Activation::tanh, {-1.0, 1.0}, {-0.1, 0.1}, 7);
  EXPECT_EQ(net.size(), 100);
  EXPECT_EQ(net.dim(), 2);
  EXPECT_LE(net.weights().maxCoeff(), 1.0);
  EXPECT_GE(net.weights().minCoeff(), -1.0);
  EXPECT_LE(net.biases().maxCoeff(), 0.1);
  EXPECT_GE(net.biases().minCoeff(), -0.1);
  EXPECT_EQ(net.coefficients().norm(), 0.0);
}

TEST(InitNet, WideSinRange) {
  const auto net = init_net(2000, 2, Activation::sin, {-7 * pi, 7 * pi}, {-pi, pi}, 3);
  EXPECT_LE(net.weights().cwiseAbs().maxCoeff(), 7 * pi);
  EXPECT_GT(net.weights().cwiseAbs().maxCoeff(), 6 * pi);
  EXPECT_LE(net.biases().cwiseAbs().maxCoeff(), pi);
  EXPECT_EQ(net.activation(), Activation::sin);
}

TEST(InitNet, SameSeedSameParameters) {
  const auto a = init_net(50, 3, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 11);
  const auto b = init_net(50, 3, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 11);
  const auto c = init_net(50, 3, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 12);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.biases(), b.biases());
  EXPECT_NE(a.weights(), c.weights());
}

TEST(InitNet, RejectsBadArguments) {
  EXPECT_THROW(init_net(0, 2, Activation::tanh, {-1, 1}, {0, 0}, 0), ConfigError);
  EXPECT_THROW(init_net(3, 4, Activation::tanh, {-1, 1}, {0, 0}, 0), ConfigError);
  EXPECT_THROW(init_net(3, 2, Activation::tanh, {1, -1}, {0, 0}, 0), ConfigError);
  auto net = init_net(3, 2, Activation::tanh, {-1, 1}, {0, 0}, 0);
  EXPECT_THROW(net.set_coefficients(Eigen::VectorXd::Zero(4)), ShapeError);
}

TEST(Features, TanhNeuronAtOrigin) {
  // Degenerate ranges pin w = (1, 1) and b = 0.
  const auto net = init_net(1, 2, Activation::tanh, {1.0, 1.0}, {0.0, 0.0}, 0);
  const std::vector<Point> pts{{0.0, 0.0}};
  const auto fb = features(net, pts);
  const Jet j = fb.basis_jet(0, 0);
  EXPECT_EQ(j.u, 0.0);
  EXPECT_EQ(j.grad[0], 1.0);
  EXPECT_EQ(j.grad[1], 1.0);
  EXPECT_EQ(j.laplacian(), 0.0);
}

TEST(Features, SinNeuronAtQuarterPeriod) {
  // w = (pi, pi), x = (0.25, 0.25): z = pi/2.
  const auto net = init_net(1, 2, Activation::sin, {pi, pi}, {0.0, 0.0}, 0);
  const std::vector<Point> pts{{0.25, 0.25}};
  const auto fb = features(net, pts);
  const Jet j = fb.basis_jet(0, 0);
  EXPECT_NEAR(j.u, 1.0, 1e-15);
  EXPECT_NEAR(j.grad[0], 0.0, 1e-15);
  EXPECT_NEAR(j.grad[1], 0.0, 1e-15);
  EXPECT_NEAR(j.laplacian(), -2.0 * pi * pi, 1e-13);
}

TEST(Features, DerivativesMatchCentralDifferences) {
  for (Activation act : {Activation::tanh, Activation::sin}) {
    for (int dim : {2, 3}) {
      const auto net = init_net(30, dim, act, {-2.0, 2.0}, {-1.0, 1.0}, 21);
      const auto pts = random_points(20, dim == 3, 5);
      const auto fb = features(net, pts);
      const double h = 1e-5;
      auto value = [&](Point p, int j) {
        const std::vector<Point> q{p};
        return features(net, q, {}, false).basis_jet(0, j).u;
      };
      auto grad = [&](Point p, int j) {
        const std::vector<Point> q{p};
        return features(net, q, {}, false).basis_jet(0, j).grad;
      };
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int j = 0; j < net.size(); ++j) {
          const Jet jet = fb.basis_jet(i, j);
          Point xp = pts[i], xm = pts[i], yp = pts[i], ym = pts[i];
          xp.x += h;
          xm.x -= h;
          yp.y += h;
          ym.y -= h;
          ASSERT_LE(rel(jet.grad[0], (value(xp, j) - value(xm, j)) / (2 * h)), 1e-6);
          ASSERT_LE(rel(jet.grad[1], (value(yp, j) - value(ym, j)) / (2 * h)), 1e-6);
          ASSERT_LE(rel(jet.hess[0], (grad(xp, j)[0] - grad(xm, j)[0]) / (2 * h)), 1e-6);
          ASSERT_LE(rel(jet.hess[1], (grad(yp, j)[0] - grad(ym, j)[0]) / (2 * h)), 1e-6);
          ASSERT_LE(rel(jet.hess[2], (grad(yp, j)[1] - grad(ym, j)[1]) / (2 * h)), 1e-6);
          if (dim == 3) {
            Point tp = pts[i], tm = pts[i];
            tp.t += h;
            tm.t -= h;
            ASSERT_LE(rel(jet.dt, (value(tp, j) - value(tm, j)) / (2 * h)), 1e-6);
          }
        }
      }
    }
  }
}

TEST(Features, BlockAccessorsAgree) {
  const auto net = init_net(12, 3, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 2);
  const auto pts = random_points(9, true, 3);
  std::vector<Vec2> normals;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double a = 0.7 * static_cast<double>(i);
    normals.push_back({std::cos(a), std::sin(a)});
  }
  const auto fb = features(net, pts, normals);
  ASSERT_EQ(fb.rows(), pts.size());
  ASSERT_EQ(fb.cols(), 12);
  const Eigen::MatrixXd gx = fb.gradient(0), gy = fb.gradient(1), lap = fb.laplacian();
  const Eigen::MatrixXd dn = fb.normal_derivative(), dt = fb.time_derivative();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int j = 0; j < 12; ++j) {
      const Jet jet = fb.basis_jet(i, j);
      const auto r = static_cast<Eigen::Index>(i);
      EXPECT_DOUBLE_EQ(gx(r, j), jet.grad[0]);
      EXPECT_DOUBLE_EQ(gy(r, j), jet.grad[1]);
      EXPECT_NEAR(lap(r, j), jet.laplacian(), 1e-14);
      EXPECT_NEAR(dn(r, j), jet.normal_derivative(normals[i]), 1e-14);
      EXPECT_DOUBLE_EQ(dt(r, j), jet.dt);
    }
}

TEST(Features, MissingBlocksAreShapeErrors) {
  const auto net = init_net(4, 2, Activation::tanh, {-1.0, 1.0}, {-1.0, 1.0}, 2);
  const auto pts = random_points(3, false, 1);
  const auto fb = features(net, pts, {}, false);
  EXPECT_THROW(fb.laplacian(), ShapeError);
  EXPECT_THROW(fb.normal_derivative(), ShapeError);
  const std::vector<Vec2> one{{1.0, 0.0}};
  EXPECT_THROW(features(net, pts, one), ShapeError);
}

TEST(EvalState, ZeroCoefficientsGiveZeroField) {
  const auto net = init_net(20, 2, Activation::sin, {-3.0, 3.0}, {-1.0, 1.0}, 4);
  const auto pts = random_points(15, false, 2);
  for (const Jet& j : eval_state(net, features(net, pts))) {
    EXPECT_EQ(j.u, 0.0);
    EXPECT_EQ(j.grad[0], 0.0);
    EXPECT_EQ(j.laplacian(), 0.0);
  }
}

TEST(EvalState, UnitCoefficientExtractsColumn) {
  auto net = init_net(20, 2, Activation::tanh, {-3.0, 3.0}, {-1.0, 1.0}, 4);
  const auto pts = random_points(15, false, 2);
  const auto fb = features(net, pts);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(20);
  e(7) = 1.0;
  net.set_coefficients(e);
  const auto st = eval_state(net, fb);
  for (std::size_t i = 0; i < pts.size(); ++i)
    EXPECT_EQ(st[i].u, fb.sigma()(static_cast<Eigen::Index>(i), 7));
}

TEST(EvalState, MatchesDirectSummation) {
  auto net = init_net(60, 3, Activation::tanh, {-2.0, 2.0}, {-1.0, 1.0}, 9);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::VectorXd c(60);
  for (auto& v : c) v = g(rng);
  net.set_coefficients(c);
  const auto pts = random_points(25, true, 6);
  const auto st = eval_state(net, features(net, pts));
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(st[i].u, net.value(pts[i]), 1e-14);
}

TEST(EvalState, LinearInCoefficients) {
  const auto net = init_net(40, 3, Activation::sin, {-4.0, 4.0}, {-1.0, 1.0}, 13);
  const auto pts = random_points(30, true, 8);
  const auto fb = features(net, pts);
  const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(40, -1.0, 2.0);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(40, 3.0, -0.5);
  const double s = -1.75;
  const auto ua = eval_state(fb, a), ub = eval_state(fb, b), uc = eval_state(fb, a + s * b);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int k = 0; k < Jet::kComponents; ++k) {
      const double expect = ua[i].component(k) + s * ub[i].component(k);
      EXPECT_NEAR(uc[i].component(k), expect, 1e-12 * std::max(1.0, std::abs(expect)));
    }
}

TEST(EvalState, StaleBlockIsShapeError) {
  const auto small = init_net(5, 2, Activation::tanh, {-1.0, 1.0}, {-1.0, 1.0}, 1);
  const auto big = init_net(6, 2, Activation::tanh, {-1.0, 1.0}, {-1.0, 1.0}, 1);
  const auto pts = random_points(3, false, 1);
  EXPECT_THROW(eval_state(big, features(small, pts)), ShapeError);
}
