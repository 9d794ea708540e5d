#include "elcap/solve.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "elcap/errors.hpp"
#include "elcap/rng.hpp"

namespace elcap {

void SolveOptions::validate() const {
  if (max_iter <= 0 || tol_grad <= 0.0 || tol_step <= 0.0 || memory <= 0 ||
      armijo_c <= 0.0 || threads <= 0)
    throw ConfigError("solver options must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw ConfigError("solver.backtrack must lie in (0,1)");
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::grad: return "grad";
    case Termination::step: return "step";
    case Termination::max_iter: return "max_iter";
    case Termination::linesearch: return "linesearch";
  }
  return "?";
}

ModelPreconditioner::ModelPreconditioner(const Eigen::SparseMatrix<double>& k,
                                         double shift_rel) {
  Eigen::SparseMatrix<double> shifted = k;
  double mean_diag = 0.0;
  for (int i = 0; i < k.rows(); ++i) mean_diag += k.coeff(i, i);
  mean_diag /= std::max<int>(1, int(k.rows()));
  Eigen::SparseMatrix<double> eye(k.rows(), k.cols());
  eye.setIdentity();
  shifted += (shift_rel * mean_diag) * eye;
  llt_.compute(shifted);
  if (llt_.info() != Eigen::Success)
    throw SolverError("quadratic model factorization failed");
}

void ModelPreconditioner::operator()(Eigen::VectorXd& v) const {
  v = llt_.solve(v);
}

std::pair<Eigen::VectorXd, SolveReport> minimize(
    Eigen::VectorXd x, const Objective& obj, const GradientFn& grad_fn,
    const SolveOptions& opts, const std::vector<char>* clamp,
    const ApplyInverse& h0_inverse) {
  opts.validate();
  const auto mask = [&](Eigen::VectorXd& v) {
    if (!clamp) return;
    for (int i = 0; i < v.size(); ++i)
      if ((*clamp)[i]) v[i] = 0.0;
  };

  SolveReport rep;
  Eigen::VectorXd g(x.size()), x_new(x.size()), g_new(x.size());
  grad_fn(x, g);
  mask(g);
  double fx = obj(x);
  rep.energy_history.push_back(fx);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  int stall_count = 0;
  double best_grad = g.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    rep.grad_norm = g.lpNorm<Eigen::Infinity>();
    if (rep.grad_norm <= opts.tol_grad) {
      rep.reason = Termination::grad;
      rep.iterations = iter;
      return {std::move(x), std::move(rep)};
    }

    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    const int m = int(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (h0_inverse) {
      h0_inverse(d);
      if (m > 0) {
        Eigen::VectorXd ky = y_hist.back();
        h0_inverse(ky);
        const double denom = y_hist.back().dot(ky);
        if (denom > 0.0) d *= s_hist.back().dot(y_hist.back()) / denom;
      }
    } else if (m > 0) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      d *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }
    mask(d);

    double slope = g.dot(d);
    if (!(slope < 0.0)) {  // restart on a non-descent direction
      d = -g;
      if (h0_inverse) {
        h0_inverse(d);
        mask(d);
      }
      slope = g.dot(d);
      if (!(slope < 0.0)) {
        d = -g;
        mask(d);
        slope = g.dot(d);
      }
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = x + step * d;
      f_new = obj(x_new);
      if (f_new <= fx + opts.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) {
      rep.reason = Termination::linesearch;
      rep.iterations = iter;
      return {std::move(x), std::move(rep)};
    }

    grad_fn(x_new, g_new);
    mask(g_new);

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (int(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double decrease = fx - f_new;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    rep.energy_history.push_back(fx);
    rep.grad_norm = g.lpNorm<Eigen::Infinity>();

    if (rep.grad_norm <= opts.tol_grad) {
      rep.reason = Termination::grad;
      rep.iterations = iter + 1;
      return {std::move(x), std::move(rep)};
    }
    // A stall means no progress at all: sub-threshold energy decreases
    // while the gradient norm has also stopped improving. Tiny decreases
    // with a still-shrinking gradient are normal tail behavior on
    // ill-conditioned problems and must not end the solve early.
    if (rep.grad_norm < 0.999 * best_grad) {
      best_grad = rep.grad_norm;
      stall_count = 0;
    } else if (decrease <= opts.tol_step * (std::abs(fx) + 1e-30)) {
      ++stall_count;
    }
    if (stall_count >= 5) {
      rep.reason = Termination::step;
      rep.iterations = iter + 1;
      return {std::move(x), std::move(rep)};
    }
  }
  rep.grad_norm = g.lpNorm<Eigen::Infinity>();
  rep.reason = Termination::max_iter;
  rep.iterations = opts.max_iter;
  return {std::move(x), std::move(rep)};
}

double fd_check(const Eigen::VectorXd& x, const Objective& obj,
                const GradientFn& grad_fn, int probes, std::uint64_t seed) {
  Eigen::VectorXd g(x.size());
  grad_fn(x, g);
  Rng rng(seed);
  double worst = 0.0;
  Eigen::VectorXd xp = x;
  for (int k = 0; k < probes; ++k) {
    const int i = rng.index(int(x.size()));
    const double h = 1e-6 * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = obj(xp);
    xp[i] = x[i] - h;
    const double fm = obj(xp);
    xp[i] = x[i];
    const double fd = (fp - fm) / (2.0 * h);
    const double rel = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
    worst = std::max(worst, rel);
  }
  return worst;
}

Mat extract_rotation(const DisplacementField& v, double eps) {
  const auto& tab = v.space->quadrature();
  Mat mean = Mat::Zero(2, 2);
  double vol = 0.0;
  Vec val;
  Mat g;
  Tensor3 b;
  for (const auto& pt : tab.interior) {
    eval_field(v, pt, val, g, b);
    mean += pt.w * g;
    vol += pt.w;
  }
  const Mat m = Mat::Identity(2, 2) + eps * (mean / vol);
  if (!(det(m) > 0.0))
    throw SolverError("extract_rotation: mean deformation gradient is degenerate");
  return polar_rotation(m);
}

DisplacementField corrected_displacement(const DisplacementField& v,
                                         const Mat& r, double eps) {
  const SplineSpace& s = *v.space;
  const Mat rt = r.transpose();
  DisplacementField u = zero_field(s);
  const int S = s.scalar_count();
  for (int iy = 0; iy < s.basis_y(); ++iy)
    for (int ix = 0; ix < s.basis_x(); ++ix) {
      const int sidx = s.scalar_index(ix, iy);
      const double gx = s.greville_x(ix), gy = s.greville_y(iy);
      const double c0 = v.coeffs[sidx], c1 = v.coeffs[S + sidx];
      // R^T v plus the exactly representable affine part (R^T x - x)/eps.
      u.coeffs[sidx] = rt(0, 0) * c0 + rt(0, 1) * c1 +
                       ((rt(0, 0) - 1.0) * gx + rt(0, 1) * gy) / eps;
      u.coeffs[S + sidx] = rt(1, 0) * c0 + rt(1, 1) * c1 +
                           (rt(1, 0) * gx + (rt(1, 1) - 1.0) * gy) / eps;
    }
  return u;
}

}  // namespace elcap
