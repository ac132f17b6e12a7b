#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "qlips/assembly.hpp"
#include "qlips/basis.hpp"
#include "qlips/solver.hpp"

namespace qlips {

/// One set of nets (one per subdomain) entering the solution with a common factor.
struct Layer {
  std::vector<RandomFeatureNet> nets;
  double scale = 1.0;
};

inline Eigen::VectorXd concat_coefficients(const std::vector<RandomFeatureNet>& nets) {
  Eigen::Index n = 0;
  for (const auto& net : nets) n += net.size();
  Eigen::VectorXd c(n);
  n = 0;
  for (const auto& net : nets) {
    c.segment(n, net.size()) = net.coefficients();
    n += net.size();
  }
  return c;
}

inline void scatter_coefficients(std::vector<RandomFeatureNet>& nets,
                                 const Eigen::Ref<const Eigen::VectorXd>& c) {
  Eigen::Index n = 0;
  for (auto& net : nets) n += net.size();
  if (n != c.size()) throw ShapeError("coefficient vector does not match the nets");
  n = 0;
  for (auto& net : nets) {
    net.set_coefficients(c.segment(n, net.size()));
    n += net.size();
  }
}

/// u = sum_k scale_k * u_k per subdomain. After one correction round this is
/// u_N + eps * u_p.
class LayeredSolution {
 public:
  LayeredSolution() = default;
  explicit LayeredSolution(std::vector<RandomFeatureNet> base) { layers_.push_back({std::move(base), 1.0}); }

  const std::vector<Layer>& layers() const { return layers_; }
  void add_layer(std::vector<RandomFeatureNet> nets, double scale) {
    if (!layers_.empty() && nets.size() != layers_.front().nets.size())
      throw ShapeError("layer subdomain count mismatch");
    layers_.push_back({std::move(nets), scale});
  }
  int subdomains() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().nets.size()); }
  const Layer& base() const { return layers_.front(); }
  bool corrected() const { return layers_.size() > 1; }
  double epsilon() const { return corrected() ? layers_[1].scale : 0.0; }

  double value(const Point& p, int side) const {
    double v = 0.0;
    for (const auto& l : layers_) v += l.scale * l.nets[static_cast<std::size_t>(side)].value(p);
    return v;
  }

  /// Value using only the first `count` layers.
  double partial_value(const Point& p, int side, std::size_t count) const {
    double v = 0.0;
    for (std::size_t k = 0; k < std::min(count, layers_.size()); ++k)
      v += layers_[k].scale * layers_[k].nets[static_cast<std::size_t>(side)].value(p);
    return v;
  }

  FieldState evaluate(const Discretization& d) const {
    FieldState acc;
    for (const auto& l : layers_) {
      const NetBlocks b = d.features(l.nets);
      accumulate(acc, d.evaluate(b, concat_coefficients(l.nets)), l.scale);
    }
    return acc;
  }

 private:
  std::vector<Layer> layers_;
};

struct NetSpec {
  int neurons = 100;
  Activation activation = Activation::tanh;
  Range weight_range{-1.0, 1.0};
  Range bias_range{-0.1, 0.1};
  std::uint64_t seed = 1;
};

/// One net per subdomain, each with its own sub-seed.
inline std::vector<RandomFeatureNet> make_nets(const NetSpec& spec, int subdomains, int dim) {
  std::vector<RandomFeatureNet> nets;
  for (int s = 0; s < subdomains; ++s)
    nets.push_back(init_net(spec.neurons, dim, spec.activation, spec.weight_range, spec.bias_range,
                            detail::sub_seed(spec.seed, static_cast<std::uint64_t>(s))));
  return nets;
}

struct InitResult {
  LayeredSolution solution;
  SolveReport report;
};

/// Gauss-Newton fit of the base nets from alpha_0 = 0.
inline InitResult initialize(const Discretization& d, const NetSpec& spec, const SolverOptions& opts,
                             const IterationHook& hook = {}) {
  auto nets = make_nets(spec, d.subdomains(), d.problem().input_dim());
  const NetBlocks blocks = d.features(nets);
  SolveReport rep = gauss_newton(
      [&](const Eigen::VectorXd& a) { return assemble_system(d, blocks, a); },
      Eigen::VectorXd::Zero(blocks.cols), opts, hook);
  scatter_coefficients(nets, rep.coefficients);
  return {LayeredSolution(std::move(nets)), std::move(rep)};
}

struct CorrectionSpec {
  int m_p = 600;
  Activation activation = Activation::sin;
  Range weight_range{-2.0 * std::numbers::pi, 2.0 * std::numbers::pi};
  Range bias_range{-std::numbers::pi, std::numbers::pi};
  std::uint64_t seed = 2;
  bool keep_second_order = true;
  int rounds = 1;  // more than one round is experimental
};

struct EpsilonChoice {
  double epsilon = 0.0;
  bool skip = false;
};

inline EpsilonChoice epsilon_from_residual(const Eigen::Ref<const Eigen::VectorXd>& F) {
  if (!F.allFinite()) throw NumericalError("epsilon_from_residual: residual is not finite");
  const double e = F.norm();
  return {e, e < PerturbationState::kSkipFloor};
}

struct CorrectionRound {
  double epsilon = 0.0;
  bool skipped = false;
  SolveReport report;
  double residual_before = 0.0;  // |F(u)| on the correction set before the round
  double residual_after = 0.0;
};

struct CorrectionResult {
  LayeredSolution solution;
  std::vector<CorrectionRound> rounds;

  bool skipped() const { return rounds.empty() || rounds.front().skipped; }
  double epsilon() const { return rounds.empty() ? 0.0 : rounds.front().epsilon; }
  const SolveReport& report() const { return rounds.front().report; }
};

/// Perturbation correction on collocation set `d`: eps = |F(u)|, fit sin nets
/// u_p to the expanded residual, and append eps * u_p as a new layer.
inline CorrectionResult correct(const Discretization& d, LayeredSolution base, const CorrectionSpec& spec,
                                const SolverOptions& opts, const IterationHook& hook = {}) {
  if (spec.rounds < 1) throw ConfigError("correction: rounds must be >= 1");
  CorrectionResult out{std::move(base), {}};
  for (int round = 0; round < spec.rounds; ++round) {
    CorrectionRound cr;
    const PerturbationState ps(d, out.solution.evaluate(d), spec.keep_second_order);
    cr.epsilon = ps.epsilon();
    cr.residual_before = ps.epsilon();
    if (ps.skip()) {
      cr.skipped = true;
      cr.residual_after = cr.residual_before;
      out.rounds.push_back(std::move(cr));
      break;
    }
    NetSpec ns{spec.m_p, spec.activation, spec.weight_range, spec.bias_range,
               detail::sub_seed(spec.seed, static_cast<std::uint64_t>(1000 + round))};
    auto nets = make_nets(ns, d.subdomains(), d.problem().input_dim());
    const NetBlocks blocks = d.features(nets);
    cr.report = gauss_newton(
        [&](const Eigen::VectorXd& g) { return assemble_perturbation(ps, blocks, g); },
        Eigen::VectorXd::Zero(blocks.cols), opts, hook);
    scatter_coefficients(nets, cr.report.coefficients);
    out.solution.add_layer(std::move(nets), ps.epsilon());
    cr.residual_after = assemble_state(d, out.solution.evaluate(d)).norm();
    out.rounds.push_back(std::move(cr));
  }
  return out;
}

}  // namespace qlips
