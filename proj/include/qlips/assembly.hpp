#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qlips/basis.hpp"
#include "qlips/errors.hpp"
#include "qlips/geometry.hpp"
#include "qlips/operators.hpp"
#include "qlips/problem.hpp"

namespace qlips {

/// Contiguous block of residual rows sharing one weight. `scale` is
/// sqrt(weight / point count), so |F|^2 is the weighted discrete functional.
struct RowGroup {
  std::string name;
  std::size_t begin = 0;
  std::size_t size = 0;
  double scale = 1.0;

  std::size_t end() const { return begin + size; }
};

struct ResidualSystem {
  Eigen::VectorXd F;
  Eigen::MatrixXd J;  // empty unless requested
  std::vector<RowGroup> groups;

  double norm() const { return F.norm(); }
  bool has_jacobian() const { return J.size() > 0; }
};

/// Activation tables of one net per subdomain on every point group.
struct NetBlocks {
  std::vector<FeatureBlock> interior;
  std::vector<FeatureBlock> interface;  // rows follow Discretization::interface_samples(s)
  std::vector<FeatureBlock> boundary;
  std::vector<Eigen::Index> offsets;    // first column of each subdomain
  Eigen::Index cols = 0;

  int subdomains() const { return static_cast<int>(interior.size()); }
  Eigen::Index size(int s) const { return interior[static_cast<std::size_t>(s)].cols(); }
};

/// Pointwise jets of a field, laid out like NetBlocks rows.
struct FieldState {
  std::vector<std::vector<Jet>> interior;
  std::vector<std::vector<Jet>> interface;
  std::vector<std::vector<Jet>> boundary;
};

/// acc += scale * x
inline void accumulate(FieldState& acc, const FieldState& x, double scale) {
  const auto add = [scale](std::vector<std::vector<Jet>>& a, const std::vector<std::vector<Jet>>& b) {
    if (a.empty()) {
      a.resize(b.size());
      for (std::size_t s = 0; s < b.size(); ++s) a[s].assign(b[s].size(), Jet{});
    }
    for (std::size_t s = 0; s < b.size(); ++s)
      for (std::size_t i = 0; i < b[s].size(); ++i) a[s][i] += scale * b[s][i];
  };
  add(acc.interior, x.interior);
  add(acc.interface, x.interface);
  add(acc.boundary, x.boundary);
}

/// A problem bound to one collocation set: row layout, per-point data
/// (sources, jump and boundary values) and the interface bookkeeping that
/// maps each interface sample onto the two subdomains it separates.
class Discretization {
 public:
  Discretization(InterfaceProblem problem, CollocationSet set)
      : problem_(std::move(problem)), set_(std::move(set)) {
    const int ns = problem_.subdomain_count();
    if (ns != problem_.geometry.subdomain_count())
      throw ConfigError("problem subdomains do not match its geometry");
    if (static_cast<int>(set_.interior.size()) != ns)
      throw ShapeError("collocation set does not match the problem");
    if (!problem_.jump_w || !problem_.jump_v) throw ConfigError("problem has no jump data");
    if (!problem_.boundary_g) throw ConfigError("problem has no boundary data");

    const auto& w = set_.weights;
    std::size_t row = 0;
    for (int s = 0; s < ns; ++s) {
      const std::size_t n = set_.interior[static_cast<std::size_t>(s)].size();
      groups_.push_back({"interior:" + problem_.geometry.subdomain_name(s), row, n,
                         std::sqrt(w.interior[static_cast<std::size_t>(s)] / static_cast<double>(n))});
      row += n;
    }
    const std::size_t ng = set_.interface.size();
    groups_.push_back({"interface_value", row, ng, std::sqrt(w.interface_value / double(ng))});
    row += ng;
    groups_.push_back({"interface_flux", row, ng, std::sqrt(w.interface_flux / double(ng))});
    row += ng;
    const std::size_t nb = set_.boundary.size();
    groups_.push_back({"boundary", row, nb, std::sqrt(w.boundary / double(nb))});
    rows_ = row + nb;

    sources_.resize(static_cast<std::size_t>(ns));
    for (int s = 0; s < ns; ++s) {
      const Subdomain& sd = problem_.side(s);
      if (sd.source.state_dependent) continue;
      for (const Point& x : set_.interior[static_cast<std::size_t>(s)])
        sources_[static_cast<std::size_t>(s)].push_back(sd.source(x, 0.0));
    }

    iface_samples_.resize(static_cast<std::size_t>(ns));
    iface_points_.resize(static_cast<std::size_t>(ns));
    iface_normals_.resize(static_cast<std::size_t>(ns));
    iface_pos_.resize(ng);
    for (std::size_t i = 0; i < ng; ++i) {
      const auto& smp = set_.interface[i];
      const InterfaceSegment seg = problem_.geometry.segment(smp.segment);
      for (int side : {seg.plus, seg.minus}) {
        const auto s = static_cast<std::size_t>(side);
        (side == seg.plus ? iface_pos_[i].first : iface_pos_[i].second) = iface_samples_[s].size();
        iface_samples_[s].push_back(i);
        iface_points_[s].push_back(smp.point);
        iface_normals_[s].push_back(smp.normal);
      }
      w_.push_back(problem_.jump_w(smp.point, smp.segment));
      v_.push_back(problem_.jump_v(smp.point, smp.segment));
    }

    boundary_begin_.assign(static_cast<std::size_t>(ns) + 1, 0);
    for (const auto& b : set_.boundary) ++boundary_begin_[static_cast<std::size_t>(b.subdomain) + 1];
    for (int s = 0; s < ns; ++s)
      boundary_begin_[static_cast<std::size_t>(s) + 1] += boundary_begin_[static_cast<std::size_t>(s)];
    for (const auto& b : set_.boundary) g_.push_back(problem_.boundary_g(b.point, b.subdomain));
  }

  const InterfaceProblem& problem() const { return problem_; }
  const CollocationSet& collocation() const { return set_; }
  int subdomains() const { return problem_.subdomain_count(); }
  std::size_t rows() const { return rows_; }
  const std::vector<RowGroup>& groups() const { return groups_; }
  const RowGroup& interior_group(int s) const { return groups_[static_cast<std::size_t>(s)]; }
  const RowGroup& value_group() const { return groups_[groups_.size() - 3]; }
  const RowGroup& flux_group() const { return groups_[groups_.size() - 2]; }
  const RowGroup& boundary_group() const { return groups_.back(); }

  /// Interface sample indices touching subdomain s, in row order of its block.
  const std::vector<std::size_t>& interface_samples(int s) const {
    return iface_samples_[static_cast<std::size_t>(s)];
  }
  /// Position of interface sample i in the plus and minus side lists.
  std::pair<std::size_t, std::size_t> interface_positions(std::size_t i) const { return iface_pos_[i]; }

  std::size_t boundary_begin(int s) const { return boundary_begin_[static_cast<std::size_t>(s)]; }
  std::size_t boundary_count(int s) const {
    return boundary_begin_[static_cast<std::size_t>(s) + 1] - boundary_begin(s);
  }

  double jump_w(std::size_t i) const { return w_[i]; }
  double jump_v(std::size_t i) const { return v_[i]; }
  double boundary_value(std::size_t k) const { return g_[k]; }

  SourcePartials source(int s, std::size_t i, double u) const {
    const auto& cache = sources_[static_cast<std::size_t>(s)];
    if (!cache.empty()) return cache[i];
    return problem_.side(s).source(set_.interior[static_cast<std::size_t>(s)][i], u);
  }

  /// Feature blocks of `nets` (one per subdomain) on every point group.
  NetBlocks features(const std::vector<RandomFeatureNet>& nets) const {
    const int ns = subdomains();
    if (static_cast<int>(nets.size()) != ns) throw ShapeError("need one net per subdomain");
    NetBlocks b;
    for (int s = 0; s < ns; ++s) {
      const auto& net = nets[static_cast<std::size_t>(s)];
      const auto su = static_cast<std::size_t>(s);
      if (net.dim() != problem_.input_dim())
        throw ShapeError("net input dimension does not match the problem");
      b.offsets.push_back(b.cols);
      b.cols += net.size();
      b.interior.push_back(qlips::features(net, set_.interior[su], {}, true));
      b.interface.push_back(qlips::features(net, iface_points_[su], iface_normals_[su], false));
      std::vector<Point> bp;
      for (std::size_t k = boundary_begin(s); k < boundary_begin(s) + boundary_count(s); ++k)
        bp.push_back(set_.boundary[k].point);
      b.boundary.push_back(qlips::features(net, bp, {}, false));
    }
    return b;
  }

  /// Jets of u = sum_s Phi_s c_s at every collocation point.
  FieldState evaluate(const NetBlocks& b, const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
    if (coeffs.size() != b.cols) throw ShapeError("coefficient vector does not match the nets");
    FieldState st;
    for (int s = 0; s < b.subdomains(); ++s) {
      const auto su = static_cast<std::size_t>(s);
      const Eigen::VectorXd c = coeffs.segment(b.offsets[su], b.size(s));
      st.interior.push_back(eval_state(b.interior[su], c));
      st.interface.push_back(eval_state(b.interface[su], c));
      st.boundary.push_back(eval_state(b.boundary[su], c));
    }
    return st;
  }

 private:
  InterfaceProblem problem_;
  CollocationSet set_;
  std::vector<RowGroup> groups_;
  std::size_t rows_ = 0;
  std::vector<std::vector<SourcePartials>> sources_;
  std::vector<std::vector<std::size_t>> iface_samples_;
  std::vector<std::vector<Point>> iface_points_;
  std::vector<std::vector<Vec2>> iface_normals_;
  std::vector<std::pair<std::size_t, std::size_t>> iface_pos_;
  std::vector<std::size_t> boundary_begin_;
  std::vector<double> w_, v_, g_;
};

namespace detail {

/// Expansion request. Without a direction, rows are the residual at `base`
/// and the Jacobian is its linearization. With a direction v, rows are
/// (1/eps)[R0 + eps R1(v) + eps^2 R2(v)] and the Jacobian is taken in v.
struct Expansion {
  const FieldState* dir = nullptr;
  double eps = 1.0;
  bool second_order = true;
};

inline double combine(const Series2& s, const Expansion& e, double data) {
  if (!e.dir) return s.c0 - data;
  double r = (s.c0 - data) / e.eps + s.c1;
  if (e.second_order) r += e.eps * s.c2;
  return r;
}

template <class Op>
JetForm differential(const Op& op, const Jet& v, const Expansion& e) {
  JetForm a = op.linear_form();
  if (e.dir && e.second_order) {
    const JetForm b = op.bilinear_form(v);
    for (int c = 0; c < Jet::kComponents; ++c) a[c] += e.eps * b[c];
  }
  return a;
}

inline ResidualSystem assemble(const Discretization& d, const NetBlocks* blocks,
                               const FieldState& base, const Expansion& e) {
  const InterfaceProblem& pb = d.problem();
  const CollocationSet& set = d.collocation();
  const int ns = d.subdomains();
  const bool jac = blocks != nullptr;
  const Jet zero{};
  const auto dir_at = [&](const std::vector<std::vector<Jet>> FieldState::*group, int s,
                          std::size_t i) -> const Jet& {
    return e.dir ? (e.dir->*group)[static_cast<std::size_t>(s)][i] : zero;
  };

  ResidualSystem sys;
  sys.groups = d.groups();
  sys.F.resize(static_cast<Eigen::Index>(d.rows()));
  if (jac) sys.J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.rows()), blocks->cols);

  // Interior rows.
  for (int s = 0; s < ns; ++s) {
    const auto su = static_cast<std::size_t>(s);
    const RowGroup& g = d.interior_group(s);
    const auto& pts = set.interior[su];
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd A;
    if (jac) A.resize(n, Jet::kComponents);
    const Coefficient& beta = pb.side(s).beta;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Jet& u = base.interior[su][i];
      const Jet& v = dir_at(&FieldState::interior, s, i);
      const InteriorOperator op(beta, d.source(s, i, u.u), pts[i], u, pb.parabolic);
      sys.F(static_cast<Eigen::Index>(g.begin + i)) = g.scale * combine(op.expand(v), e, 0.0);
      if (jac) {
        const JetForm a = differential(op, v, e);
        for (int c = 0; c < Jet::kComponents; ++c) A(static_cast<Eigen::Index>(i), c) = g.scale * a[c];
      }
    }
    if (!jac || n == 0) continue;
    const FeatureBlock& fb = blocks->interior[su];
    const Eigen::Index off = blocks->offsets[su];
    const bool timed = fb.timed();
    for (Eigen::Index j = 0; j < fb.cols(); ++j) {
      const double wx = fb.wx()(j), wy = fb.wy()(j), wt = timed ? fb.wt()(j) : 0.0;
      auto col = sys.J.col(off + j).segment(static_cast<Eigen::Index>(g.begin), n);
      col = (A.col(0).array() * fb.sigma().col(j).array() +
             (wx * A.col(1).array() + wy * A.col(2).array() + wt * A.col(6).array()) *
                 fb.dsigma().col(j).array() +
             (wx * wx * A.col(3).array() + wx * wy * A.col(4).array() + wy * wy * A.col(5).array()) *
                 fb.d2sigma().col(j).array())
                .matrix();
    }
  }

  // Interface rows: value jump and flux jump per sample.
  const RowGroup& gv = d.value_group();
  const RowGroup& gd = d.flux_group();
  std::vector<Eigen::MatrixXd> flux_form(static_cast<std::size_t>(ns));
  if (jac)
    for (int s = 0; s < ns; ++s)
      flux_form[static_cast<std::size_t>(s)].resize(
          static_cast<Eigen::Index>(d.interface_samples(s).size()), 3);
  for (std::size_t i = 0; i < set.interface.size(); ++i) {
    const auto& smp = set.interface[i];
    const InterfaceSegment seg = pb.geometry.segment(smp.segment);
    const auto [pp, pm] = d.interface_positions(i);
    const Jet& up = base.interface[static_cast<std::size_t>(seg.plus)][pp];
    const Jet& um = base.interface[static_cast<std::size_t>(seg.minus)][pm];
    const Jet& vp = dir_at(&FieldState::interface, seg.plus, pp);
    const Jet& vm = dir_at(&FieldState::interface, seg.minus, pm);

    const Series2 jump{up.u - um.u, vp.u - vm.u, 0.0};
    sys.F(static_cast<Eigen::Index>(gv.begin + i)) = gv.scale * combine(jump, e, d.jump_w(i));

    const FluxOperator qp(pb.side(seg.plus).beta, smp.point, up, smp.normal);
    const FluxOperator qm(pb.side(seg.minus).beta, smp.point, um, smp.normal);
    sys.F(static_cast<Eigen::Index>(gd.begin + i)) =
        gd.scale * combine(qp.expand(vp) - qm.expand(vm), e, d.jump_v(i));
    if (jac) {
      const JetForm ap = differential(qp, vp, e);
      const JetForm am = differential(qm, vm, e);
      for (int c = 0; c < 3; ++c) {
        flux_form[static_cast<std::size_t>(seg.plus)](static_cast<Eigen::Index>(pp), c) = gd.scale * ap[c];
        flux_form[static_cast<std::size_t>(seg.minus)](static_cast<Eigen::Index>(pm), c) = -gd.scale * am[c];
      }
    }
  }
  if (jac) {
    for (int s = 0; s < ns; ++s) {
      const auto su = static_cast<std::size_t>(s);
      const FeatureBlock& fb = blocks->interface[su];
      const Eigen::Index off = blocks->offsets[su];
      const auto& samples = d.interface_samples(s);
      const Eigen::MatrixXd& Q = flux_form[su];
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const std::size_t i = samples[k];
        const InterfaceSegment seg = pb.geometry.segment(set.interface[i].segment);
        const double sign = seg.plus == s ? 1.0 : -1.0;
        const auto r = static_cast<Eigen::Index>(k);
        const auto rv = static_cast<Eigen::Index>(gv.begin + i);
        const auto rd = static_cast<Eigen::Index>(gd.begin + i);
        sys.J.row(rv).segment(off, fb.cols()) = (sign * gv.scale) * fb.sigma().row(r);
        sys.J.row(rd).segment(off, fb.cols()) =
            Q(r, 0) * fb.sigma().row(r) +
            fb.dsigma().row(r).cwiseProduct((Q(r, 1) * fb.wx() + Q(r, 2) * fb.wy()).transpose());
      }
    }
  }

  // Outer boundary rows.
  const RowGroup& gb = d.boundary_group();
  for (int s = 0; s < ns; ++s) {
    const auto su = static_cast<std::size_t>(s);
    const std::size_t b0 = d.boundary_begin(s);
    for (std::size_t k = 0; k < d.boundary_count(s); ++k) {
      const Jet& u = base.boundary[su][k];
      const Jet& v = dir_at(&FieldState::boundary, s, k);
      sys.F(static_cast<Eigen::Index>(gb.begin + b0 + k)) =
          gb.scale * combine(Series2{u.u, v.u, 0.0}, e, d.boundary_value(b0 + k));
    }
    if (jac && d.boundary_count(s) > 0) {
      const FeatureBlock& fb = blocks->boundary[su];
      sys.J.block(static_cast<Eigen::Index>(gb.begin + b0), blocks->offsets[su], fb.sigma().rows(),
                  fb.cols()) = gb.scale * fb.sigma();
    }
  }

  if (!sys.F.allFinite()) throw NumericalError("residual is not finite (state outside the admissible range)");
  return sys;
}

}  // namespace detail

/// Stacked, row-scaled residual F(alpha) and, when `blocks` is given, J(alpha).
inline ResidualSystem assemble_system(const Discretization& d, const NetBlocks& blocks,
                                      const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                      bool with_jacobian = true) {
  const FieldState u = d.evaluate(blocks, alpha);
  return detail::assemble(d, with_jacobian ? &blocks : nullptr, u, {});
}

inline Eigen::VectorXd assemble_residual(const Discretization& d, const NetBlocks& blocks,
                                         const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  return assemble_system(d, blocks, alpha, false).F;
}

inline Eigen::MatrixXd assemble_jacobian(const Discretization& d, const NetBlocks& blocks,
                                         const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  return assemble_system(d, blocks, alpha, true).J;
}

/// Residual of an already evaluated field (no Jacobian).
inline ResidualSystem assemble_state(const Discretization& d, const FieldState& u) {
  return detail::assemble(d, nullptr, u, {});
}

/// Frozen base field u_N on a collocation set together with eps = |F(u_N)|.
class PerturbationState {
 public:
  static constexpr double kSkipFloor = 1e-14;

  PerturbationState(const Discretization& d, FieldState base, bool keep_second_order = true)
      : d_(&d), base_(std::move(base)), second_order_(keep_second_order) {
    base_residual_ = assemble_state(d, base_).F;
    epsilon_ = base_residual_.norm();
    if (!std::isfinite(epsilon_)) throw NumericalError("base residual is not finite");
  }

  const Discretization& discretization() const { return *d_; }
  const FieldState& base() const { return base_; }
  const Eigen::VectorXd& base_residual() const { return base_residual_; }
  double epsilon() const { return epsilon_; }
  bool skip() const { return epsilon_ < kSkipFloor; }
  bool keep_second_order() const { return second_order_; }

 private:
  const Discretization* d_;
  FieldState base_;
  Eigen::VectorXd base_residual_;
  double epsilon_ = 0.0;
  bool second_order_ = true;
};

/// F_p(gamma) and, when `with_jacobian`, J_p(gamma) for correction nets with
/// feature blocks `blocks`.
inline ResidualSystem assemble_perturbation(const PerturbationState& ps, const NetBlocks& blocks,
                                            const Eigen::Ref<const Eigen::VectorXd>& gamma,
                                            bool with_jacobian = true) {
  if (!(ps.epsilon() > 0.0)) throw NumericalError("perturbation parameter must be positive");
  const Discretization& d = ps.discretization();
  const FieldState v = d.evaluate(blocks, gamma);
  return detail::assemble(d, with_jacobian ? &blocks : nullptr, ps.base(),
                          {&v, ps.epsilon(), ps.keep_second_order()});
}

}  // namespace qlips
