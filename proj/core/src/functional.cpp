#include "elcap/functional.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <thread>

#include "elcap/errors.hpp"

namespace elcap {

namespace {

constexpr double kKinkTol = 1e-14;

void run_blocks(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n < 2 * threads) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const int lo = int(std::int64_t(n) * t / threads);
    const int hi = int(std::int64_t(n) * (t + 1) / threads);
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Fixed-order pairwise tree reduction; the result depends only on the
// element values, never on which thread produced them.
template <class T, class Combine>
T pairwise_reduce(std::vector<T>& v, Combine comb) {
  int n = int(v.size());
  while (n > 1) {
    const int half = n / 2;
    for (int i = 0; i < half; ++i) v[i] = comb(v[2 * i], v[2 * i + 1]);
    if (n % 2 == 1) v[half] = v[n - 1];
    n = half + n % 2;
  }
  return v[0];
}

double power_abs(double s, double q) {
  // |s|^q; exact for the common q = 1, 2.
  if (q == 1.0) return std::abs(s);
  if (q == 2.0) return s * s;
  return std::pow(std::abs(s), q);
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::G: return "G";
    case Family::F: return "F";
    case Family::I: return "I";
  }
  return "?";
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::nonlinear: return "nonlinear";
    case Regime::linearized: return "linearized";
    case Regime::limit_traction: return "limit-traction";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "G" || s == "g") return Family::G;
  if (s == "F" || s == "f") return Family::F;
  if (s == "I" || s == "i") return Family::I;
  throw ConfigError("unknown family '" + s + "' (expected G, F or I)");
}

void VariantTag::validate() const {
  if (family == Family::I && regime == Regime::limit_traction)
    throw ConfigError(
        "family I has no limit-traction variant: the surface live load "
        "penalizes rotations, so the traction limit is the plain linearized "
        "functional");
}

std::string CompatReport::describe() const {
  std::ostringstream os;
  if (compatible) {
    os << "compatible load: max_theta g = " << max_g << " <= tol = " << tol
       << " (a = " << a << ", b_perp = " << b_perp << "); admissible rotations: ";
    if (full_circle)
      os << "full circle";
    else {
      os << "{";
      for (size_t i = 0; i < s0_angles.size(); ++i)
        os << (i ? ", " : "") << s0_angles[i];
      os << "}";
    }
  } else {
    os << "incompatible load: max_theta L(R_theta x - x) = " << max_g
       << " > tol = " << tol << " (a = L(x) = " << a
       << ", b_perp = L(x_perp) = " << b_perp
       << "); some rotation does positive work, the rescaled energies are "
          "unbounded below";
  }
  return os.str();
}

LoadSpec build_load(const SplineSpace& s,
                    const std::array<AffineExpr, 2>& body,
                    const std::array<std::optional<std::array<AffineExpr, 2>>, 4>&
                        traction_per_edge) {
  const auto& tab = s.quadrature();
  LoadSpec load;
  load.body.reserve(tab.interior.size());
  for (const auto& pt : tab.interior)
    load.body.push_back({body[0](pt.x0, pt.x1), body[1](pt.x0, pt.x1)});
  load.traction.reserve(tab.boundary.size());
  for (const auto& pt : tab.boundary) {
    const auto& t = traction_per_edge[int(pt.edge)];
    if (t)
      load.traction.push_back({(*t)[0](pt.x0, pt.x1), (*t)[1](pt.x0, pt.x1)});
    else
      load.traction.push_back({0.0, 0.0});
  }
  return load;
}

double load_value(const SplineSpace& s, const LoadSpec& load,
                  const DisplacementField& f) {
  const auto& tab = s.quadrature();
  double acc = 0.0;
  Vec v;
  Mat g;
  Tensor3 b;
  for (size_t i = 0; i < tab.interior.size(); ++i) {
    eval_field(f, tab.interior[i], v, g, b);
    acc += tab.interior[i].w * (load.body[i][0] * v[0] + load.body[i][1] * v[1]);
  }
  for (size_t i = 0; i < tab.boundary.size(); ++i) {
    eval_field(f, tab.boundary[i], v, g);
    acc += tab.boundary[i].w *
           (load.traction[i][0] * v[0] + load.traction[i][1] * v[1]);
  }
  return acc;
}

LoadSpec equilibrate(const SplineSpace& s, LoadSpec load) {
  const auto& tab = s.quadrature();
  // Rigid modes r1 = e1, r2 = e2, r3 = (-x2, x1).
  auto mode_at = [](int k, double x0, double x1) -> std::array<double, 2> {
    if (k == 0) return {1.0, 0.0};
    if (k == 1) return {0.0, 1.0};
    return {-x1, x0};
  };
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < tab.interior.size(); ++i) {
    const auto& pt = tab.interior[i];
    for (int k = 0; k < 3; ++k) {
      const auto rk = mode_at(k, pt.x0, pt.x1);
      rhs[k] += pt.w * (load.body[i][0] * rk[0] + load.body[i][1] * rk[1]);
      for (int l = 0; l < 3; ++l) {
        const auto rl = mode_at(l, pt.x0, pt.x1);
        gram(k, l) += pt.w * (rk[0] * rl[0] + rk[1] * rl[1]);
      }
    }
  }
  for (size_t i = 0; i < tab.boundary.size(); ++i) {
    const auto& pt = tab.boundary[i];
    for (int k = 0; k < 3; ++k) {
      const auto rk = mode_at(k, pt.x0, pt.x1);
      rhs[k] +=
          pt.w * (load.traction[i][0] * rk[0] + load.traction[i][1] * rk[1]);
    }
  }
  const Eigen::Vector3d c = gram.ldlt().solve(rhs);
  for (size_t i = 0; i < tab.interior.size(); ++i) {
    const auto& pt = tab.interior[i];
    load.body[i][0] -= c[0] - c[2] * pt.x1;
    load.body[i][1] -= c[1] + c[2] * pt.x0;
  }
  load.equilibrated = true;
  return load;
}

CompatReport compatibility_scan(const SplineSpace& s, const LoadSpec& load) {
  if (!load.equilibrated)
    throw ConfigError("compatibility_scan requires an equilibrated load");
  const auto& tab = s.quadrature();
  CompatReport rep;
  // a = L(x), b_perp = L(x_perp); then L(R_theta x - x) =
  // (cos theta - 1) a + sin(theta) b_perp.
  for (size_t i = 0; i < tab.interior.size(); ++i) {
    const auto& pt = tab.interior[i];
    rep.a += pt.w * (load.body[i][0] * pt.x0 + load.body[i][1] * pt.x1);
    rep.b_perp +=
        pt.w * (load.body[i][0] * (-pt.x1) + load.body[i][1] * pt.x0);
  }
  for (size_t i = 0; i < tab.boundary.size(); ++i) {
    const auto& pt = tab.boundary[i];
    rep.a += pt.w * (load.traction[i][0] * pt.x0 + load.traction[i][1] * pt.x1);
    rep.b_perp +=
        pt.w * (load.traction[i][0] * (-pt.x1) + load.traction[i][1] * pt.x0);
  }
  rep.max_g = std::hypot(rep.a, rep.b_perp) - rep.a;
  rep.tol = 1e-12 * std::max({std::abs(rep.a), std::abs(rep.b_perp), 1.0});
  rep.compatible = rep.max_g <= rep.tol;
  if (rep.compatible) {
    rep.full_circle = std::abs(rep.a) <= rep.tol && std::abs(rep.b_perp) <= rep.tol;
    rep.s0_angles = {0.0};
    if (!rep.full_circle && std::abs(rep.a) > rep.tol) {
      const double theta2 = 2.0 * std::atan(rep.b_perp / rep.a);
      if (std::abs(theta2) > 1e-12) rep.s0_angles.push_back(theta2);
    }
  }
  return rep;
}

EnergyAssembler::EnergyAssembler(const SplineSpace& s, const MaterialSpec& m,
                                 LoadSpec load, VariantTag tag, double eps,
                                 int threads)
    : space_(&s),
      mat_(m),
      load_(std::move(load)),
      tag_(tag),
      eps_(eps),
      threads_(std::max(1, threads)) {
  tag_.validate();
  mat_.validate();
  if (mat_.dim != 2)
    throw ConfigError("assembly is two-dimensional; material.dim must be 2");
  if (tag_.regime == Regime::nonlinear && !(eps_ > 0.0))
    throw ConfigError("nonlinear regime requires eps > 0");
  if (tag_.regime == Regime::limit_traction) {
    if (!load_.compat)
      throw ConfigError(
          "limit-traction energy requires a compatibility scan on the load");
    if (!load_.compat->compatible)
      throw IncompatibleLoadError(load_.compat->describe());
  }
  const auto& tab = s.quadrature();
  if (load_.body.size() != tab.interior.size() ||
      load_.traction.size() != tab.boundary.size())
    throw ConfigError("load samples are not aligned with the quadrature table");

  // Reference boundary measure, reduced through the very same block tree as
  // the assembly passes so that the family-F surface term vanishes exactly
  // on the zero field.
  perimeter_ = tab.boundary_measure;
  if (tag_.family == Family::F && tag_.regime == Regime::nonlinear) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(s.dof_count());
    const int nki = tab.interior_blocks(), nkb = tab.boundary_blocks();
    std::vector<BlockPartial> parts(nki + nkb);
    for (int i = 0; i < nki; ++i) parts[i] = interior_block(zero, i);
    for (int i = 0; i < nkb; ++i) parts[nki + i] = boundary_block(zero, i);
    perimeter_ = pairwise_reduce(parts, [](const BlockPartial& x,
                                           const BlockPartial& y) {
                   BlockPartial r;
                   r.surf_acc = x.surf_acc + y.surf_acc;
                   return r;
                 }).surf_acc;
  }
}

EnergyAssembler::BlockPartial EnergyAssembler::interior_block(
    const Eigen::VectorXd& coeffs, int blk) const {
  const auto& tab = space_->quadrature();
  const int bs = tab.interior_block;
  BlockPartial out;
  Vec v;
  Mat g;
  Tensor3 b;
  const Mat id = Mat::Identity(2, 2);
  for (int k = blk * bs; k < (blk + 1) * bs; ++k) {
    const auto& pt = tab.interior[k];
    eval_field(*space_, coeffs, pt, v, g, b);
    if (tag_.regime == Regime::nonlinear) {
      out.bulk += pt.w / (eps_ * eps_) * w_bulk(id + eps_ * g, mat_);
      Tensor3 eb = b;
      eb *= eps_;
      out.hyper += pt.w / std::pow(eps_, mat_.p) * h_energy(eb, mat_);
    } else {
      out.bulk += pt.w * quad_form(sym(g), mat_);
      out.hyper += pt.w * h_energy(b, mat_);
    }
    const auto& bd = load_.body[k];
    out.load_v += pt.w * (bd[0] * v[0] + bd[1] * v[1]);
    out.load_vperp += pt.w * (bd[0] * (-v[1]) + bd[1] * v[0]);
  }
  return out;
}

EnergyAssembler::BlockPartial EnergyAssembler::boundary_block(
    const Eigen::VectorXd& coeffs, int blk) const {
  const auto& tab = space_->quadrature();
  const int bs = tab.boundary_block;
  BlockPartial out;
  Vec v, n(2);
  Mat g;
  const Mat id = Mat::Identity(2, 2);
  const double q = mat_.q;
  for (int k = blk * bs; k < (blk + 1) * bs; ++k) {
    const auto& pt = tab.boundary[k];
    eval_field(*space_, coeffs, pt, v, g);
    n << pt.n0, pt.n1;
    const auto& tr = load_.traction[k];
    out.load_v += pt.w * (tr[0] * v[0] + tr[1] * v[1]);
    out.load_vperp += pt.w * (tr[0] * (-v[1]) + tr[1] * v[0]);
    if (tag_.regime == Regime::nonlinear) {
      const Mat cf = cofactor(id + eps_ * g);
      switch (tag_.family) {
        case Family::G:
          out.surf += pt.w * power_abs((cf * n).norm() - 1.0, q);
          break;
        case Family::F:
          out.surf_acc += pt.w * (cf * n).norm();
          break;
        case Family::I:
          out.surf += pt.w * power_abs(((cf - id) * n).norm(), q);
          break;
      }
    } else {
      const Mat a = lin_cof(g);
      switch (tag_.family) {
        case Family::G:
          out.surf += pt.w * power_abs(n.dot(a * n), q);
          break;
        case Family::F:
          out.surf_acc += pt.w * n.dot(a * n);
          break;
        case Family::I:
          out.surf += pt.w * power_abs((a * n).norm(), q);
          break;
      }
    }
  }
  return out;
}

EnergyBreakdown EnergyAssembler::finalize(const BlockPartial& sum) {
  const double q = mat_.q;
  const double surf_scale =
      tag_.regime == Regime::nonlinear ? mat_.gamma / std::pow(eps_, q) : mat_.gamma;
  EnergyBreakdown e;
  e.bulk = sum.bulk;
  e.hyper = sum.hyper;
  switch (tag_.family) {
    case Family::G:
    case Family::I:
      e.surface = surf_scale * sum.surf;
      break;
    case Family::F: {
      const double s = tag_.regime == Regime::nonlinear
                           ? sum.surf_acc - perimeter_
                           : sum.surf_acc;
      e.surface = surf_scale * power_abs(s, q);
      break;
    }
  }

  maximizers_.clear();
  if (tag_.regime != Regime::limit_traction) {
    e.load = sum.load_v;
  } else {
    const CompatReport& compat = *load_.compat;
    auto value_at = [&](double th) {
      return std::cos(th) * sum.load_v + std::sin(th) * sum.load_vperp;
    };
    if (compat.full_circle) {
      if (std::abs(sum.load_v) < 1e-15 && std::abs(sum.load_vperp) < 1e-15) {
        e.load = 0.0;
        maximizers_ = {0.0};
      } else {
        // Degree-1 trigonometric polynomial: a coarse grid locates the
        // maximum, one Newton step lands on it.
        double best_th = 0.0, best = value_at(0.0);
        for (int i = 1; i < 720; ++i) {
          const double th = -M_PI + 2.0 * M_PI * i / 720.0;
          const double val = value_at(th);
          if (val > best) {
            best = val;
            best_th = th;
          }
        }
        const double fp = -std::sin(best_th) * sum.load_v +
                          std::cos(best_th) * sum.load_vperp;
        if (std::abs(best) > 0.0) best_th += fp / best;  // f'' = -f
        e.load = value_at(best_th);
        maximizers_ = {best_th};
      }
    } else {
      double best = -std::numeric_limits<double>::infinity();
      for (double th : compat.s0_angles) best = std::max(best, value_at(th));
      for (double th : compat.s0_angles)
        if (value_at(th) >= best - 1e-10 * std::max(1.0, std::abs(best)))
          maximizers_.push_back(th);
      // Ties within 1e-10 are all reported; the first maximizer supplies
      // the value.
      e.load = value_at(maximizers_.front());
    }
  }
  e.total = e.bulk + e.hyper - e.load + e.surface;
  return e;
}

EnergyBreakdown EnergyAssembler::energy(const Eigen::VectorXd& coeffs) {
  const auto& tab = space_->quadrature();
  const int nki = tab.interior_blocks(), nkb = tab.boundary_blocks();
  std::vector<BlockPartial> parts(nki + nkb);
  run_blocks(nki + nkb, threads_, [&](int i) {
    parts[i] = i < nki ? interior_block(coeffs, i)
                       : boundary_block(coeffs, i - nki);
  });
  const BlockPartial sum =
      pairwise_reduce(parts, [](const BlockPartial& x, const BlockPartial& y) {
        BlockPartial r;
        r.bulk = x.bulk + y.bulk;
        r.hyper = x.hyper + y.hyper;
        r.load_v = x.load_v + y.load_v;
        r.load_vperp = x.load_vperp + y.load_vperp;
        r.surf = x.surf + y.surf;
        r.surf_acc = x.surf_acc + y.surf_acc;
        return r;
      });
  return finalize(sum);
}

double EnergyAssembler::total(const Eigen::VectorXd& coeffs) {
  return energy(coeffs).total;
}

void EnergyAssembler::gradient_interior_block(const Eigen::VectorXd& coeffs,
                                              int blk, double* out) const {
  const auto& tab = space_->quadrature();
  const int bs = tab.interior_block;
  Vec v;
  Mat g;
  Tensor3 b;
  const Mat id = Mat::Identity(2, 2);
  std::memset(out, 0, 32 * sizeof(double));

  // Load direction for the gradient: R_theta^T applied to the body force at
  // the maximizing rotation (identity for the dead-load regimes).
  double ct = 1.0, st = 0.0;
  if (tag_.regime == Regime::limit_traction && !maximizers_.empty()) {
    ct = std::cos(maximizers_[0]);
    st = std::sin(maximizers_[0]);
  }

  for (int k = blk * bs; k < (blk + 1) * bs; ++k) {
    const auto& pt = tab.interior[k];
    eval_field(*space_, coeffs, pt, v, g, b);

    Mat pk(2, 2);     // d(bulk density)/dG
    Tensor3 tk(2);    // d(hyper density)/dB
    if (tag_.regime == Regime::nonlinear) {
      pk = (pt.w / eps_) * dw_bulk(id + eps_ * g, mat_);
      Tensor3 eb = b;
      eb *= eps_;
      tk = dh_energy(eb, mat_);
      tk *= pt.w * eps_ / std::pow(eps_, mat_.p);
    } else {
      const Mat e = sym(g);
      pk = pt.w * (mat_.lambda * e.trace() * id + 2.0 * mat_.mu * e);
      tk = dh_energy(b, mat_);
      tk *= pt.w;
    }
    const auto& bd = load_.body[k];
    const double lb0 = ct * bd[0] + st * bd[1];   // (R_theta^T b)_0
    const double lb1 = -st * bd[0] + ct * bd[1];  // (R_theta^T b)_1

    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const double N = pt.nx[i] * pt.ny[j];
        const double dx = pt.dnx[i] * pt.ny[j];
        const double dy = pt.nx[i] * pt.dny[j];
        const double dxx = pt.d2nx[i] * pt.ny[j];
        const double dxy = pt.dnx[i] * pt.dny[j];
        const double dyy = pt.nx[i] * pt.d2ny[j];
        const int slot = j * 4 + i;
        out[slot] += pk(0, 0) * dx + pk(0, 1) * dy + tk(0, 0, 0) * dxx +
                     2.0 * tk(0, 0, 1) * dxy + tk(0, 1, 1) * dyy -
                     pt.w * lb0 * N;
        out[16 + slot] += pk(1, 0) * dx + pk(1, 1) * dy + tk(1, 0, 0) * dxx +
                          2.0 * tk(1, 0, 1) * dxy + tk(1, 1, 1) * dyy -
                          pt.w * lb1 * N;
      }
  }
}

void EnergyAssembler::gradient_boundary_block(const Eigen::VectorXd& coeffs,
                                              int blk, double surf_acc,
                                              double* out, long* kinks) const {
  const auto& tab = space_->quadrature();
  const int bs = tab.boundary_block;
  Vec v, n(2);
  Mat g;
  const Mat id = Mat::Identity(2, 2);
  const double q = mat_.q;
  const double surf_scale =
      tag_.regime == Regime::nonlinear ? mat_.gamma / std::pow(eps_, q) : mat_.gamma;
  std::memset(out, 0, 32 * sizeof(double));

  double ct = 1.0, st = 0.0;
  if (tag_.regime == Regime::limit_traction && !maximizers_.empty()) {
    ct = std::cos(maximizers_[0]);
    st = std::sin(maximizers_[0]);
  }

  // Chain factor of the global family-F surface term (constant per call).
  double f_factor = 0.0;
  if (tag_.family == Family::F) {
    const double s = tag_.regime == Regime::nonlinear ? surf_acc - perimeter_
                                                      : surf_acc;
    if (std::abs(s) < kKinkTol && q < 2.0)
      ++*kinks;  // subgradient 0 at the kink
    else
      f_factor = surf_scale * q * std::pow(std::abs(s), q - 1.0) *
                 (s >= 0.0 ? 1.0 : -1.0);
  }

  for (int k = blk * bs; k < (blk + 1) * bs; ++k) {
    const auto& pt = tab.boundary[k];
    eval_field(*space_, coeffs, pt, v, g);
    n << pt.n0, pt.n1;
    const auto& tr = load_.traction[k];
    const double lt0 = ct * tr[0] + st * tr[1];
    const double lt1 = -st * tr[0] + ct * tr[1];

    // Per-point surface chain data. The directional derivative of each
    // surface integrand along a coefficient perturbation with axis samples
    // (N, dx, dy) in component c has the form
    //   coef_tr * D_c + (coef_dir . D) * n_c,   D = (dx, dy),
    // coming from d lin_cof(h) n = tr(h) n - h^T n.
    double coef_tr = 0.0;     // multiplies D_c
    Vec coef_dir = Vec::Zero(2);  // dotted with D, multiplies n_c
    if (tag_.regime == Regime::nonlinear) {
      const Mat cf = cofactor(id + eps_ * g);
      const Vec m = cf * n;
      const double mn = m.norm();
      switch (tag_.family) {
        case Family::G: {
          const double s = mn - 1.0;
          double s_factor;
          if (std::abs(s) < kKinkTol && q < 2.0) {
            ++*kinks;
            s_factor = 0.0;
          } else {
            s_factor = surf_scale * q * std::pow(std::abs(s), q - 1.0) *
                       (s >= 0.0 ? 1.0 : -1.0);
          }
          if (mn < kKinkTol) {
            ++*kinks;  // |cof F n| has a kink at zero
          } else {
            const Vec mh = m / mn;
            coef_tr = s_factor * eps_ * mh.dot(n);
            coef_dir = -s_factor * eps_ * mh;
          }
          break;
        }
        case Family::F: {
          if (mn < kKinkTol) {
            ++*kinks;
          } else {
            const Vec mh = m / mn;
            coef_tr = f_factor * eps_ * mh.dot(n);
            coef_dir = -f_factor * eps_ * mh;
          }
          break;
        }
        case Family::I: {
          const Vec r = (cf - id) * n;
          const double rn = r.norm();
          if (rn < kKinkTol && q < 2.0) {
            ++*kinks;
          } else {
            const double rfac =
                surf_scale * q * (q == 2.0 ? 1.0 : std::pow(rn, q - 2.0));
            coef_tr = rfac * eps_ * r.dot(n);
            coef_dir = -rfac * eps_ * r;
          }
          break;
        }
      }
    } else {
      const Mat a = lin_cof(g);
      switch (tag_.family) {
        case Family::G: {
          const double s = n.dot(a * n);
          double s_factor;
          if (std::abs(s) < kKinkTol && q < 2.0) {
            ++*kinks;
            s_factor = 0.0;
          } else {
            s_factor = surf_scale * q * std::pow(std::abs(s), q - 1.0) *
                       (s >= 0.0 ? 1.0 : -1.0);
          }
          coef_tr = s_factor;
          coef_dir = -s_factor * n;
          break;
        }
        case Family::F: {
          coef_tr = f_factor;
          coef_dir = -f_factor * n;
          break;
        }
        case Family::I: {
          const Vec r = a * n;
          const double rn = r.norm();
          if (rn < kKinkTol && q < 2.0) {
            ++*kinks;
          } else {
            const double rfac =
                surf_scale * q * (q == 2.0 ? 1.0 : std::pow(rn, q - 2.0));
            coef_tr = rfac * r.dot(n);
            coef_dir = -rfac * r;
          }
          break;
        }
      }
    }

    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const double N = pt.nx[i] * pt.ny[j];
        const double dx = pt.dnx[i] * pt.ny[j];
        const double dy = pt.nx[i] * pt.dny[j];
        const double dot_dir = coef_dir[0] * dx + coef_dir[1] * dy;
        const int slot = j * 4 + i;
        out[slot] +=
            pt.w * (coef_tr * dx + dot_dir * pt.n0) - pt.w * lt0 * N;
        out[16 + slot] +=
            pt.w * (coef_tr * dy + dot_dir * pt.n1) - pt.w * lt1 * N;
      }
  }
}

Eigen::SparseMatrix<double> EnergyAssembler::quadratic_model_matrix() const {
  const auto& tab = space_->quadrature();
  const int n = space_->dof_count();
  const int S = space_->scalar_count();
  const auto& mask = space_->clamp_mask();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(size_t(tab.interior_blocks() + tab.boundary_blocks()) * 1024);

  // dof index and gradient/Hessian samples of the 32 local basis functions
  struct Local {
    int dof;
    double dx, dy, dxx, dxy, dyy;
  };
  std::array<Local, 32> loc;
  Eigen::Matrix<double, 32, 32> local;

  // One local matrix per cell: the points of a block share their dofs.
  for (int blk = 0; blk < tab.interior_blocks(); ++blk) {
    local.setZero();
    for (int k = blk * tab.interior_block; k < (blk + 1) * tab.interior_block;
         ++k) {
      const auto& pt = tab.interior[k];
      int cnt = 0;
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
          const int sidx = space_->scalar_index(pt.ix0 + i, pt.iy0 + j);
          const double dx = pt.dnx[i] * pt.ny[j];
          const double dy = pt.nx[i] * pt.dny[j];
          const double dxx = pt.d2nx[i] * pt.ny[j];
          const double dxy = pt.dnx[i] * pt.dny[j];
          const double dyy = pt.nx[i] * pt.d2ny[j];
          loc[cnt++] = {sidx, dx, dy, dxx, dxy, dyy};
          loc[cnt++] = {S + sidx, dx, dy, dxx, dxy, dyy};
        }
      for (int a = 0; a < 32; ++a) {
        const int ca = a % 2;  // component of entry a
        const double da[2] = {loc[a].dx, loc[a].dy};
        for (int b = 0; b < 32; ++b) {
          const int cb = b % 2;
          const double db[2] = {loc[b].dx, loc[b].dy};
          const double dot = da[0] * db[0] + da[1] * db[1];
          double val = mat_.lambda * da[ca] * db[cb] +
                       mat_.mu * ((ca == cb ? dot : 0.0) + da[cb] * db[ca]);
          if (ca == cb)
            val += 2.0 * mat_.kappa *
                   (loc[a].dxx * loc[b].dxx + 2.0 * loc[a].dxy * loc[b].dxy +
                    loc[a].dyy * loc[b].dyy);
          local(a, b) += pt.w * val;
        }
      }
    }
    for (int a = 0; a < 32; ++a) {
      if (mask[loc[a].dof]) continue;
      for (int b = 0; b < 32; ++b) {
        if (mask[loc[b].dof]) continue;
        if (local(a, b) != 0.0)
          trips.emplace_back(loc[a].dof, loc[b].dof, local(a, b));
      }
    }
  }

  // Local surface forms (exact for q = 2; families G and I).
  if (mat_.q == 2.0 && mat_.gamma > 0.0 && tag_.family != Family::F) {
    for (const auto& pt : tab.boundary) {
      const double n0 = pt.n0, n1 = pt.n1;
      int cnt = 0;
      std::array<Local, 32> bl;
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
          const int sidx = space_->scalar_index(pt.ix0 + i, pt.iy0 + j);
          const double dx = pt.dnx[i] * pt.ny[j];
          const double dy = pt.nx[i] * pt.dny[j];
          bl[cnt++] = {sidx, dx, dy, 0, 0, 0};
          bl[cnt++] = {S + sidx, dx, dy, 0, 0, 0};
        }
      for (int a = 0; a < 32; ++a) {
        if (mask[bl[a].dof]) continue;
        const int ca = a % 2;
        const double da[2] = {bl[a].dx, bl[a].dy};
        for (int b = 0; b < 32; ++b) {
          if (mask[bl[b].dof]) continue;
          const int cb = b % 2;
          const double db[2] = {bl[b].dx, bl[b].dy};
          double val = 0.0;
          if (tag_.family == Family::G) {
            const double ga =
                da[ca] - (ca == 0 ? n0 : n1) * (da[0] * n0 + da[1] * n1);
            const double gb =
                db[cb] - (cb == 0 ? n0 : n1) * (db[0] * n0 + db[1] * n1);
            val = 2.0 * mat_.gamma * ga * gb;
          } else {  // Family::I
            const double na = ca == 0 ? n0 : n1;
            const double nb = cb == 0 ? n0 : n1;
            // dr_u . dr_v with dr = D_c n - n_c D
            val = 2.0 * mat_.gamma *
                  (da[ca] * db[cb] - da[ca] * nb * (db[0] * n0 + db[1] * n1) -
                   db[cb] * na * (da[0] * n0 + da[1] * n1) +
                   na * nb * (da[0] * db[0] + da[1] * db[1]));
          }
          if (val != 0.0)
            trips.emplace_back(bl[a].dof, bl[b].dof, pt.w * val);
        }
      }
    }
  }

  for (int k = 0; k < n; ++k)
    if (mask[k]) trips.emplace_back(k, k, 1.0);

  Eigen::SparseMatrix<double> mat(n, n);
  mat.setFromTriplets(trips.begin(), trips.end());
  return mat;
}

void EnergyAssembler::gradient(const Eigen::VectorXd& coeffs,
                               Eigen::VectorXd& grad) {
  const auto& tab = space_->quadrature();
  const int nki = tab.interior_blocks(), nkb = tab.boundary_blocks();

  // First pass fixes the global quantities the chain rule needs: for the
  // family-F term its accumulated boundary integral, for the limit-traction
  // load its maximizing rotation.
  double surf_acc = 0.0;
  if (tag_.family == Family::F || tag_.regime == Regime::limit_traction) {
    std::vector<BlockPartial> parts(nki + nkb);
    run_blocks(nki + nkb, threads_, [&](int i) {
      parts[i] = i < nki ? interior_block(coeffs, i)
                         : boundary_block(coeffs, i - nki);
    });
    const BlockPartial sum = pairwise_reduce(
        parts, [](const BlockPartial& x, const BlockPartial& y) {
          BlockPartial r;
          r.bulk = x.bulk + y.bulk;
          r.hyper = x.hyper + y.hyper;
          r.load_v = x.load_v + y.load_v;
          r.load_vperp = x.load_vperp + y.load_vperp;
          r.surf = x.surf + y.surf;
          r.surf_acc = x.surf_acc + y.surf_acc;
          return r;
        });
    surf_acc = sum.surf_acc;
    finalize(sum);  // sets maximizers_
  } else {
    maximizers_.clear();
  }

  block_scratch_.assign(size_t(nki + nkb) * 32, 0.0);
  std::vector<long> kink_per_block(nkb, 0);
  run_blocks(nki + nkb, threads_, [&](int i) {
    if (i < nki)
      gradient_interior_block(coeffs, i, block_scratch_.data() + size_t(i) * 32);
    else
      gradient_boundary_block(coeffs, i - nki, surf_acc,
                              block_scratch_.data() + size_t(i) * 32,
                              &kink_per_block[i - nki]);
  });
  kink_count_ = 0;
  for (long c : kink_per_block) kink_count_ += c;

  // Sequential scatter in fixed block order keeps the result independent of
  // the thread count.
  grad.setZero(space_->dof_count());
  const int S = space_->scalar_count();
  auto scatter = [&](const double* blkdata, int ix0, int iy0) {
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const int sidx = space_->scalar_index(ix0 + i, iy0 + j);
        grad[sidx] += blkdata[j * 4 + i];
        grad[S + sidx] += blkdata[16 + j * 4 + i];
      }
  };
  for (int blk = 0; blk < nki; ++blk) {
    const auto& pt = tab.interior[size_t(blk) * tab.interior_block];
    scatter(block_scratch_.data() + size_t(blk) * 32, pt.ix0, pt.iy0);
  }
  for (int blk = 0; blk < nkb; ++blk) {
    const auto& pt = tab.boundary[size_t(blk) * tab.boundary_block];
    scatter(block_scratch_.data() + size_t(nki + blk) * 32, pt.ix0, pt.iy0);
  }

  const auto& mask = space_->clamp_mask();
  for (int k = 0; k < space_->dof_count(); ++k)
    if (mask[k]) grad[k] = 0.0;
}

}  // namespace elcap
