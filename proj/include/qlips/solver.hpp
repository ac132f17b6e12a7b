#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qlips/assembly.hpp"
#include "qlips/errors.hpp"

namespace qlips {

struct SolverOptions {
  int max_iters = 100;
  double svd_threshold = 1e-12;  // relative to the largest singular value
  double stop_tol = 1e-8;
  double damping = 1.0;          // step fraction in (0, 1]
  bool backtracking = true;      // halve the step on a non-finite residual
  int max_halvings = 20;
  double divergence_factor = 10.0;
  bool equilibrate = false;          // unit-norm columns before truncation
  bool backtrack_on_growth = false;  // also halve when |F| exceeds divergence_factor * best

  void validate() const {
    if (max_iters < 1) throw ConfigError("solver: max_iters must be >= 1");
    if (!(svd_threshold >= 0.0)) throw ConfigError("solver: svd_threshold must be >= 0");
    if (!(stop_tol > 0.0)) throw ConfigError("solver: stop_tol must be > 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("solver: damping must lie in (0, 1]");
  }
};

struct PinvResult {
  Eigen::VectorXd delta;
  int rank = 0;
  double sigma_max = 0.0;
  double sigma_min_retained = 0.0;
};

/// delta = -V S_r^+ U^T F with singular values below tau * sigma_1 dropped.
/// J is reduced by a Householder QR first, so the SVD only sees the small
/// triangular factor. With equilibrate, the columns of J are scaled to unit
/// norm first and delta is mapped back, so truncation is relative per column.
inline PinvResult truncated_pinv_solve(Eigen::MatrixXd J, const Eigen::Ref<const Eigen::VectorXd>& F,
                                       double tau = 1e-12, bool equilibrate = false) {
  const Eigen::Index m = J.rows(), n = J.cols();
  if (F.size() != m) throw ShapeError("truncated_pinv_solve: F length != J rows");
  if (!J.allFinite() || !F.allFinite()) throw NumericalError("truncated_pinv_solve: non-finite input");
  PinvResult out;
  out.delta = Eigen::VectorXd::Zero(n);
  if (m == 0 || n == 0) return out;

  Eigen::VectorXd colscale = Eigen::VectorXd::Ones(n);
  if (equilibrate) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double c = J.col(j).norm();
      if (c > 0.0) {
        colscale(j) = 1.0 / c;
        J.col(j) *= colscale(j);
      }
    }
  }

  const Eigen::Index k = std::min(m, n);
  Eigen::VectorXd qtf;
  Eigen::MatrixXd R;
  {
    Eigen::HouseholderQR<Eigen::Ref<Eigen::MatrixXd>> qr(J);
    qtf = (qr.householderQ().transpose() * F).head(k);
    R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  }
  J.resize(0, 0);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  const Eigen::VectorXd& s = svd.singularValues();
  if (!s.allFinite()) throw NumericalError("SVD produced non-finite singular values");

  out.sigma_max = s(0);
  const double cut = tau * s(0);
  Eigen::VectorXd y = svd.matrixU().transpose() * qtf;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 0.0 && s(i) >= cut) {
      y(i) /= s(i);
      ++out.rank;
      out.sigma_min_retained = s(i);
    } else {
      y(i) = 0.0;
    }
  }
  out.delta = -(svd.matrixV() * y).cwiseProduct(colscale);
  return out;
}

enum class SolveStatus { converged, max_iterations, diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    default: return "diverged";
  }
}

struct SolveReport {
  SolveStatus status = SolveStatus::max_iterations;
  int iterations = 0;
  std::vector<double> residual_history;  // |F| at alpha_0 .. alpha_k
  std::vector<double> relative_change;   // one entry per iteration
  std::vector<int> rank_history;
  std::vector<double> sigma_min_history;  // smallest retained singular value
  std::vector<double> step_history;       // accepted step fraction
  Eigen::VectorXd coefficients;
  double wall_seconds = 0.0;

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

/// Builds (F, J) at a coefficient vector; throws NumericalError for states
/// where the residual cannot be evaluated.
using SystemBuilder = std::function<ResidualSystem(const Eigen::VectorXd&)>;

/// Called after every accepted iterate with (iteration, coefficients).
using IterationHook = std::function<void(int, const Eigen::VectorXd&)>;

/// Gauss-Newton with truncated pseudoinverse steps. Stops when the relative
/// change of |F| drops below stop_tol. If |F| exceeds divergence_factor times
/// its running minimum, returns the best iterate with status `diverged`.
inline SolveReport gauss_newton(const SystemBuilder& build, Eigen::VectorXd alpha,
                                const SolverOptions& opts = {}, const IterationHook& hook = {}) {
  opts.validate();
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;

  ResidualSystem sys = build(alpha);
  double fnorm = sys.norm();
  if (!std::isfinite(fnorm)) throw NumericalError("initial residual is not finite");
  rep.residual_history.push_back(fnorm);
  Eigen::VectorXd best = alpha;
  double best_norm = fnorm;
  if (hook) hook(0, alpha);

  for (int it = 1; it <= opts.max_iters; ++it) {
    const PinvResult step = truncated_pinv_solve(std::move(sys.J), sys.F, opts.svd_threshold, opts.equilibrate);
    double frac = opts.damping;
    Eigen::VectorXd trial;
    bool accepted = false, last_finite = false;
    for (int h = 0; h <= (opts.backtracking ? opts.max_halvings : 0); ++h, frac *= 0.5) {
      trial = alpha + frac * step.delta;
      last_finite = false;
      try {
        sys = build(trial);
        const double trial_norm = sys.norm();
        last_finite = std::isfinite(trial_norm);
        if (last_finite &&
            !(opts.backtrack_on_growth && trial_norm > opts.divergence_factor * best_norm)) {
          accepted = true;
          break;
        }
      } catch (const NumericalError&) {
      }
    }
    if (!accepted && !last_finite) throw NumericalError("residual stayed non-finite after step halving");
    alpha = std::move(trial);

    const double next = sys.norm();
    rep.iterations = it;
    rep.residual_history.push_back(next);
    const double change = std::abs(next - fnorm) / std::max(next, 1e-30);
    rep.relative_change.push_back(change);
    rep.rank_history.push_back(step.rank);
    rep.sigma_min_history.push_back(step.sigma_min_retained);
    rep.step_history.push_back(frac);
    fnorm = next;
    if (hook) hook(it, alpha);

    if (next < best_norm) {
      best_norm = next;
      best = alpha;
    }
    if (next > opts.divergence_factor * best_norm) {
      rep.status = SolveStatus::diverged;
      break;
    }
    if (change <= opts.stop_tol) {
      rep.status = SolveStatus::converged;
      break;
    }
  }
  rep.coefficients = rep.status == SolveStatus::diverged ? best : alpha;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace qlips
