#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qlips/perturbation.hpp"

using namespace qlips;

namespace {

Discretization small_disc(const InterfaceProblem& p, std::size_t n_int = 60, std::size_t n_if = 20,
                          std::size_t n_b = 40, std::uint64_t seed = 5) {
  CollocationSpec spec;
  spec.interior.assign(static_cast<std::size_t>(p.subdomain_count()), n_int);
  spec.interface = n_if;
  spec.boundary = n_b;
  return Discretization(p, sample_collocation(p.geometry, spec, seed));
}

SolverOptions few_iters(int n) {
  SolverOptions o;
  o.max_iters = n;
  o.stop_tol = 1e-10;
  return o;
}

LayeredSolution base_solution(const Discretization& d, int m = 20, int iters = 3) {
  NetSpec spec{m, Activation::tanh, {-1.0, 1.0}, {-0.5, 0.5}, 9};
  return initialize(d, spec, few_iters(iters)).solution;
}

std::vector<RandomFeatureNet> correction_nets(const Discretization& d, int m, std::uint64_t seed = 4) {
  return make_nets({m, Activation::sin, {-3.0, 3.0}, {-1.0, 1.0}, seed}, d.subdomains(),
                   d.problem().input_dim());
}

Eigen::VectorXd random_coeffs(Eigen::Index n, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd c(n);
  for (auto& v : c) v = u(rng);
  return c;
}

/// F evaluated at u_N + t v for the full field.
Eigen::VectorXd residual_along(const Discretization& d, const FieldState& base, const FieldState& v, double t) {
  FieldState u;
  accumulate(u, base, 1.0);
  accumulate(u, v, t);
  return assemble_state(d, u).F;
}

}  // namespace

TEST(Perturbation, EpsilonIsBaseResidualNorm) {
  const auto p = builtin_example("ex1");
  const auto d = small_disc(p);
  const auto sol = base_solution(d);
  const PerturbationState ps(d, sol.evaluate(d));
  EXPECT_DOUBLE_EQ(ps.epsilon(), assemble_state(d, sol.evaluate(d)).norm());
  EXPECT_FALSE(ps.skip());
  EXPECT_TRUE(epsilon_from_residual(Eigen::VectorXd::Zero(4)).skip);
  EXPECT_DOUBLE_EQ(epsilon_from_residual(Eigen::Vector2d(3.0, 4.0)).epsilon, 5.0);
}

TEST(Perturbation, ZeroCorrectionReproducesBaseResidual) {
  const auto p = builtin_example("ex1");
  const auto d = small_disc(p);
  const PerturbationState ps(d, base_solution(d).evaluate(d));
  const auto nets = correction_nets(d, 15);
  const NetBlocks blocks = d.features(nets);
  const auto sys = assemble_perturbation(ps, blocks, Eigen::VectorXd::Zero(blocks.cols));
  EXPECT_LE((ps.epsilon() * sys.F - ps.base_residual()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Perturbation, ZeroCorrectionJacobianIsBaseLinearization) {
  const auto p = builtin_example("ex1");
  const auto d = small_disc(p);
  const PerturbationState ps(d, base_solution(d).evaluate(d));
  const auto nets = correction_nets(d, 12);
  const NetBlocks blocks = d.features(nets);
  const Eigen::MatrixXd Jp = assemble_perturbation(ps, blocks, Eigen::VectorXd::Zero(blocks.cols)).J;
  const Eigen::MatrixXd Jl = detail::assemble(d, &blocks, ps.base(), {}).J;
  EXPECT_LE((Jp - Jl).norm(), 1e-13 * Jl.norm());
}

TEST(Perturbation, ValueJumpColumnsArePlusMinusFeatures) {
  const auto p = builtin_example("ex4", ExampleParams{10.0});
  const auto d = small_disc(p);
  const PerturbationState ps(d, base_solution(d).evaluate(d));
  const auto nets = correction_nets(d, 10);
  const NetBlocks blocks = d.features(nets);
  const Eigen::MatrixXd J = assemble_perturbation(ps, blocks, random_coeffs(blocks.cols, 0.5, 1)).J;
  const RowGroup& g = d.value_group();
  const auto& set = d.collocation();
  for (std::size_t i = 0; i < set.interface.size(); ++i) {
    const Point& x = set.interface[i].point;
    for (Eigen::Index j = 0; j < 10; ++j) {
      const double plus = std::sin(nets[kPlus].preactivation(static_cast<int>(j), x));
      const double minus = std::sin(nets[kMinus].preactivation(static_cast<int>(j), x));
      const auto r = static_cast<Eigen::Index>(g.begin + i);
      EXPECT_NEAR(J(r, blocks.offsets[kPlus] + j), g.scale * plus, 1e-14);
      EXPECT_NEAR(J(r, blocks.offsets[kMinus] + j), -g.scale * minus, 1e-14);
    }
  }
}

TEST(Perturbation, JacobianMatchesCentralDifferences) {
  for (const std::string id : {"ex1", "ex2", "ex3", "ex4", "ex5", "ex6"}) {
    const auto p = builtin_example(id, ExampleParams{id == "ex4" ? 10.0 : 1e8});
    const auto d = small_disc(p, 10, 8, 8);
    const PerturbationState ps(d, base_solution(d, 6, 2).evaluate(d));
    const auto nets = correction_nets(d, 5);
    const NetBlocks blocks = d.features(nets);
    for (std::uint64_t state = 0; state < 5; ++state) {
      const Eigen::VectorXd g = random_coeffs(blocks.cols, 0.5, 30 + state);
      const Eigen::MatrixXd J = assemble_perturbation(ps, blocks, g).J;
      Eigen::MatrixXd fd(J.rows(), J.cols());
      const double h = 1e-6;
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        Eigen::VectorXd gp = g, gm = g;
        gp(j) += h;
        gm(j) -= h;
        fd.col(j) = (assemble_perturbation(ps, blocks, gp, false).F - assemble_perturbation(ps, blocks, gm, false).F) /
                    (2 * h);
      }
      ASSERT_LE((J - fd).norm() / fd.norm(), 1e-6) << id << " state " << state;
    }
  }
}

TEST(Perturbation, RowsMatchPolynomialExpansionOracle) {
  // ex1 rows are cubic in the correction amplitude, so the five-point
  // stencils at t = 0, +-1, +-2 recover the Taylor coefficients exactly.
  const auto p = builtin_example("ex1");
  const auto d = small_disc(p);
  const PerturbationState ps(d, base_solution(d).evaluate(d));
  const auto nets = correction_nets(d, 15);
  const NetBlocks blocks = d.features(nets);
  const Eigen::VectorXd g = random_coeffs(blocks.cols, 0.3, 2);
  const FieldState v = d.evaluate(blocks, g);
  const Eigen::VectorXd f0 = residual_along(d, ps.base(), v, 0.0);
  const Eigen::VectorXd f1 = residual_along(d, ps.base(), v, 1.0), fm1 = residual_along(d, ps.base(), v, -1.0);
  const Eigen::VectorXd f2 = residual_along(d, ps.base(), v, 2.0), fm2 = residual_along(d, ps.base(), v, -2.0);
  const Eigen::VectorXd c1 = (8.0 * (f1 - fm1) - (f2 - fm2)) / 12.0;
  const Eigen::VectorXd c2 = (f1 + fm1 - 2.0 * f0) / 2.0;
  const double eps = ps.epsilon();
  const Eigen::VectorXd oracle = f0 / eps + c1 + eps * c2;
  const double got = 0.5 * assemble_perturbation(ps, blocks, g, false).F.squaredNorm();
  const double want = 0.5 * oracle.squaredNorm();
  EXPECT_NEAR(got, want, 1e-12 * want);

  const PerturbationState first(d, ps.base(), false);
  const Eigen::VectorXd lin = f0 / eps + c1;
  EXPECT_LE((assemble_perturbation(first, blocks, g, false).F - lin).norm(), 1e-12 * lin.norm());
}

TEST(Perturbation, TruncationErrorIsThirdOrder) {
  const auto p = builtin_example("ex1");
  const auto d = small_disc(p);
  const PerturbationState ps(d, base_solution(d).evaluate(d));
  const auto nets = correction_nets(d, 15);
  const NetBlocks blocks = d.features(nets);
  const Eigen::VectorXd g = random_coeffs(blocks.cols, 0.3, 3);
  const FieldState v = d.evaluate(blocks, g);
  std::vector<double> logs, errs;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const Eigen::VectorXd Fp = detail::assemble(d, nullptr, ps.base(), {&v, eps, true}).F;
    const double err = (residual_along(d, ps.base(), v, eps) - eps * Fp).norm();
    logs.push_back(std::log10(eps));
    errs.push_back(std::log10(err));
  }
  for (std::size_t k = 1; k < logs.size(); ++k)
    EXPECT_GE((errs[k - 1] - errs[k]) / (logs[k - 1] - logs[k]), 2.7) << k;
}

TEST(Perturbation, ExactBaseIsSkipped) {
  const auto p = builtin_example("ex1");
  const auto d = small_disc(p, 10, 6, 6);
  const auto& set = d.collocation();
  FieldState u;
  u.interior.resize(2);
  u.interface.resize(2);
  u.boundary.resize(2);
  for (int s = 0; s < 2; ++s) {
    const auto su = static_cast<std::size_t>(s);
    for (const Point& x : set.interior[su]) u.interior[su].push_back(p.side(s).exact(x));
    for (std::size_t i : d.interface_samples(s)) u.interface[su].push_back(p.side(s).exact(set.interface[i].point));
    for (std::size_t k = d.boundary_begin(s); k < d.boundary_begin(s) + d.boundary_count(s); ++k)
      u.boundary[su].push_back(p.side(s).exact(set.boundary[k].point));
  }
  const PerturbationState ps(d, u);
  EXPECT_TRUE(ps.skip());
  EXPECT_LT(ps.epsilon(), PerturbationState::kSkipFloor);
}

TEST(Perturbation, CorrectionComposesLayersAndReducesResidual) {
  const auto p = builtin_example("ex1");
  const auto d = small_disc(p, 150, 40, 80);
  const auto base = base_solution(d, 30, 5);
  CorrectionSpec spec;
  spec.m_p = 60;
  const auto res = correct(d, base, spec, few_iters(4));
  ASSERT_FALSE(res.skipped());
  EXPECT_TRUE(res.solution.corrected());
  EXPECT_DOUBLE_EQ(res.solution.epsilon(), res.epsilon());
  EXPECT_LT(res.rounds.front().residual_after, res.rounds.front().residual_before);
  const Layer& corr = res.solution.layers().at(1);
  for (const Point x : {Point{-0.4, 0.3}, Point{0.6, 0.8}}) {
    const int side = x.x < 0.0 ? kMinus : kPlus;
    const double expect = base.value(x, side) + res.epsilon() * corr.nets[static_cast<std::size_t>(side)].value(x);
    EXPECT_NEAR(res.solution.value(x, side), expect, 1e-15);
    EXPECT_EQ(res.solution.partial_value(x, side, 1), base.value(x, side));
  }
  CorrectionSpec bad = spec;
  bad.rounds = 0;
  EXPECT_THROW(correct(d, base, bad, few_iters(1)), ConfigError);
}
