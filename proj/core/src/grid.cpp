#include "elcap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "elcap/errors.hpp"

namespace elcap {

namespace {

constexpr int kDeg = 3;  // cubic splines throughout

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 1.0, dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      double p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * xi * p1 - j * p2) / (j + 1);
      }
      dp = n * (xi * p0 - p1) / (xi * xi - 1.0);
      const double dx = p0 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[n - 1 - i] = xi;
    x[i] = -xi;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
}

// Values and derivatives (orders 0..nders) of the deg+1 B-splines that do
// not vanish on the knot span [U[span], U[span+1]). Triangular-table scheme.
void ders_basis_funs(int span, double u, int nders,
                     const std::vector<double>& U, double ders[3][kDeg + 1]) {
  double ndu[kDeg + 1][kDeg + 1];
  double a[2][kDeg + 1];
  double left[kDeg + 1], right[kDeg + 1];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= kDeg; ++j) {
    left[j] = u - U[span + 1 - j];
    right[j] = U[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= kDeg; ++j) ders[0][j] = ndu[j][kDeg];
  for (int r = 0; r <= kDeg; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nders; ++k) {
      double dd = 0.0;
      const int rk = r - k, pk = kDeg - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        dd = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : kDeg - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        dd += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        dd += a[s2][k] * ndu[r][pk];
      }
      ders[k][r] = dd;
      std::swap(s1, s2);
    }
  }
  double rr = kDeg;
  for (int k = 1; k <= nders; ++k) {
    for (int j = 0; j <= kDeg; ++j) ders[k][j] *= rr;
    rr *= kDeg - k;
  }
}

std::vector<double> open_knots(int cells, double length) {
  std::vector<double> t(cells + 2 * kDeg + 1);
  const double h = length / cells;
  for (int i = 0; i < int(t.size()); ++i) {
    if (i <= kDeg)
      t[i] = 0.0;
    else if (i >= cells + kDeg)
      t[i] = length;
    else
      t[i] = (i - kDeg) * h;
  }
  return t;
}

int find_cell(double x, int cells, double length) {
  const double h = length / cells;
  return std::clamp(int(x / h), 0, cells - 1);
}

int basis_at(double x, int cells, double length, const std::vector<double>& U,
             double* n, double* dn, double* d2n) {
  const int cell = find_cell(x, cells, length);
  double ders[3][kDeg + 1];
  ders_basis_funs(cell + kDeg, x, 2, U, ders);
  for (int j = 0; j <= kDeg; ++j) {
    n[j] = ders[0][j];
    if (dn) dn[j] = ders[1][j];
    if (d2n) d2n[j] = ders[2][j];
  }
  return cell;  // first active basis index along the axis
}

}  // namespace

SplineSpace::SplineSpace(const GridConfig& cfg) : cfg_(cfg) {
  std::ostringstream err;
  if (!(cfg.lx > 0.0) || !(cfg.ly > 0.0))
    err << "grid: domain lengths must be positive (lx = " << cfg.lx
        << ", ly = " << cfg.ly << ")";
  else if (cfg.nx < 4 || cfg.ny < 4)
    err << "grid: at least 4 cells per axis required (nx = " << cfg.nx
        << ", ny = " << cfg.ny << ")";
  else if (cfg.quad_order < 4)
    err << "grid: quad_order must be >= 4 (got " << cfg.quad_order << ")";
  if (!err.str().empty()) throw ConfigError(err.str());

  knots_x_ = open_knots(cfg.nx, cfg.lx);
  knots_y_ = open_knots(cfg.ny, cfg.ly);

  greville_x_.resize(basis_x());
  for (int j = 0; j < basis_x(); ++j)
    greville_x_[j] = (knots_x_[j + 1] + knots_x_[j + 2] + knots_x_[j + 3]) / 3.0;
  greville_y_.resize(basis_y());
  for (int j = 0; j < basis_y(); ++j)
    greville_y_[j] = (knots_y_[j + 1] + knots_y_[j + 2] + knots_y_[j + 3]) / 3.0;

  clamp_.assign(dof_count(), 0);
  for (int iy = 0; iy < basis_y(); ++iy)
    for (int ix = 0; ix < basis_x(); ++ix)
      if (clamped(ix, iy))
        for (int comp = 0; comp < 2; ++comp) clamp_[dof_index(comp, ix, iy)] = 1;

  build_table();
}

bool SplineSpace::has_dirichlet() const {
  return cfg_.dirichlet[0] || cfg_.dirichlet[1] || cfg_.dirichlet[2] ||
         cfg_.dirichlet[3];
}

bool SplineSpace::clamped(int ix, int iy) const {
  if (dirichlet(Edge::left) && ix <= 1) return true;
  if (dirichlet(Edge::right) && ix >= basis_x() - 2) return true;
  if (dirichlet(Edge::bottom) && iy <= 1) return true;
  if (dirichlet(Edge::top) && iy >= basis_y() - 2) return true;
  return false;
}

int SplineSpace::basis_x_at(double x, double* n, double* dn, double* d2n) const {
  return basis_at(x, cfg_.nx, cfg_.lx, knots_x_, n, dn, d2n);
}

int SplineSpace::basis_y_at(double y, double* n, double* dn, double* d2n) const {
  return basis_at(y, cfg_.ny, cfg_.ly, knots_y_, n, dn, d2n);
}

void SplineSpace::build_table() {
  const int q = cfg_.quad_order;
  std::vector<double> gx, gw;
  gauss_legendre(q, gx, gw);
  const double hx = cfg_.lx / cfg_.nx, hy = cfg_.ly / cfg_.ny;

  table_.interior_block = q * q;
  table_.interior.reserve(size_t(cfg_.nx) * cfg_.ny * q * q);
  for (int cy = 0; cy < cfg_.ny; ++cy)
    for (int cx = 0; cx < cfg_.nx; ++cx)
      for (int b = 0; b < q; ++b)
        for (int a = 0; a < q; ++a) {
          InteriorPoint pt;
          pt.x0 = (cx + 0.5 * (gx[a] + 1.0)) * hx;
          pt.x1 = (cy + 0.5 * (gx[b] + 1.0)) * hy;
          pt.w = gw[a] * gw[b] * 0.25 * hx * hy;
          pt.ix0 = basis_x_at(pt.x0, pt.nx.data(), pt.dnx.data(), pt.d2nx.data());
          pt.iy0 = basis_y_at(pt.x1, pt.ny.data(), pt.dny.data(), pt.d2ny.data());
          table_.interior.push_back(pt);
          table_.interior_measure += pt.w;
        }

  // Edge order fixed: left, right, bottom, top; one block per edge cell.
  table_.boundary_block = q;
  auto add_edge_point = [&](Edge e, double x, double y, double w, double n0,
                            double n1) {
    BoundaryPoint pt;
    pt.x0 = x;
    pt.x1 = y;
    pt.w = w;
    pt.n0 = n0;
    pt.n1 = n1;
    pt.edge = e;
    pt.ix0 = basis_x_at(x, pt.nx.data(), pt.dnx.data(), nullptr);
    pt.iy0 = basis_y_at(y, pt.ny.data(), pt.dny.data(), nullptr);
    table_.boundary.push_back(pt);
    table_.boundary_measure += w;
  };
  for (int cy = 0; cy < cfg_.ny; ++cy)
    for (int a = 0; a < q; ++a)
      add_edge_point(Edge::left, 0.0, (cy + 0.5 * (gx[a] + 1.0)) * hy,
                     gw[a] * 0.5 * hy, -1.0, 0.0);
  for (int cy = 0; cy < cfg_.ny; ++cy)
    for (int a = 0; a < q; ++a)
      add_edge_point(Edge::right, cfg_.lx, (cy + 0.5 * (gx[a] + 1.0)) * hy,
                     gw[a] * 0.5 * hy, 1.0, 0.0);
  for (int cx = 0; cx < cfg_.nx; ++cx)
    for (int a = 0; a < q; ++a)
      add_edge_point(Edge::bottom, (cx + 0.5 * (gx[a] + 1.0)) * hx, 0.0,
                     gw[a] * 0.5 * hx, 0.0, -1.0);
  for (int cx = 0; cx < cfg_.nx; ++cx)
    for (int a = 0; a < q; ++a)
      add_edge_point(Edge::top, (cx + 0.5 * (gx[a] + 1.0)) * hx, cfg_.ly,
                     gw[a] * 0.5 * hx, 0.0, 1.0);
}

DisplacementField zero_field(const SplineSpace& s) {
  DisplacementField f;
  f.space = &s;
  f.coeffs = Eigen::VectorXd::Zero(s.dof_count());
  return f;
}

void eval_field(const SplineSpace& s, const Eigen::VectorXd& coeffs,
                const InteriorPoint& pt, Vec& v, Mat& g, Tensor3& b) {
  const int S = s.scalar_count();
  v = Vec::Zero(2);
  g = Mat::Zero(2, 2);
  b = Tensor3(2);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) {
      const int sidx = s.scalar_index(pt.ix0 + i, pt.iy0 + j);
      const double N = pt.nx[i] * pt.ny[j];
      const double Dx = pt.dnx[i] * pt.ny[j];
      const double Dy = pt.nx[i] * pt.dny[j];
      const double Dxx = pt.d2nx[i] * pt.ny[j];
      const double Dxy = pt.dnx[i] * pt.dny[j];
      const double Dyy = pt.nx[i] * pt.d2ny[j];
      for (int c = 0; c < 2; ++c) {
        const double cf = coeffs[c * S + sidx];
        v[c] += cf * N;
        g(c, 0) += cf * Dx;
        g(c, 1) += cf * Dy;
        b(c, 0, 0) += cf * Dxx;
        b(c, 0, 1) += cf * Dxy;
        b(c, 1, 0) += cf * Dxy;
        b(c, 1, 1) += cf * Dyy;
      }
    }
}

void eval_field(const SplineSpace& s, const Eigen::VectorXd& coeffs,
                const BoundaryPoint& pt, Vec& v, Mat& g) {
  const int S = s.scalar_count();
  v = Vec::Zero(2);
  g = Mat::Zero(2, 2);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) {
      const int sidx = s.scalar_index(pt.ix0 + i, pt.iy0 + j);
      const double N = pt.nx[i] * pt.ny[j];
      const double Dx = pt.dnx[i] * pt.ny[j];
      const double Dy = pt.nx[i] * pt.dny[j];
      for (int c = 0; c < 2; ++c) {
        const double cf = coeffs[c * S + sidx];
        v[c] += cf * N;
        g(c, 0) += cf * Dx;
        g(c, 1) += cf * Dy;
      }
    }
}

void eval_field_at(const DisplacementField& f, double x, double y, Vec& v,
                   Mat& g, Tensor3& b) {
  const SplineSpace& s = *f.space;
  InteriorPoint pt;
  pt.x0 = x;
  pt.x1 = y;
  pt.w = 0.0;
  pt.ix0 = s.basis_x_at(x, pt.nx.data(), pt.dnx.data(), pt.d2nx.data());
  pt.iy0 = s.basis_y_at(y, pt.ny.data(), pt.dny.data(), pt.d2ny.data());
  eval_field(f, pt, v, g, b);
}

void apply_dirichlet(DisplacementField& f) {
  const SplineSpace& s = *f.space;
  const auto& mask = s.clamp_mask();
  for (int k = 0; k < s.dof_count(); ++k)
    if (mask[k]) f.coeffs[k] = 0.0;
}

NormReport norms(const DisplacementField& f, double p) {
  const auto& tab = f.space->quadrature();
  double v2 = 0.0, g2 = 0.0, vp = 0.0, gp = 0.0, bp = 0.0;
  Vec v;
  Mat g;
  Tensor3 b;
  for (const auto& pt : tab.interior) {
    eval_field(f, pt, v, g, b);
    const double nv2 = v.squaredNorm(), ng2 = g.squaredNorm(),
                 nb2 = b.squared_norm();
    v2 += pt.w * nv2;
    g2 += pt.w * ng2;
    vp += pt.w * std::pow(nv2, 0.5 * p);
    gp += pt.w * std::pow(ng2, 0.5 * p);
    bp += pt.w * std::pow(nb2, 0.5 * p);
  }
  NormReport r;
  r.l2 = std::sqrt(v2);
  r.h1_semi = std::sqrt(g2);
  r.w2p_semi = std::pow(bp, 1.0 / p);
  r.w2p_full = std::pow(vp + gp + bp, 1.0 / p);
  return r;
}

namespace {

// L^2-least-squares coefficients of the rigid (or translation) part of f:
// modes r1 = e1, r2 = e2, r3 = (-x2, x1).
Eigen::Vector3d rigid_projection(const DisplacementField& f, RigidModes modes) {
  const auto& tab = f.space->quadrature();
  const int k = modes == RigidModes::full ? 3 : 2;
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  Vec v;
  Mat g;
  Tensor3 b;
  for (const auto& pt : tab.interior) {
    eval_field(f, pt, v, g, b);
    const double r3[2] = {-pt.x1, pt.x0};
    const double modes_at[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {r3[0], r3[1]}};
    for (int i = 0; i < k; ++i) {
      rhs[i] += pt.w * (modes_at[i][0] * v[0] + modes_at[i][1] * v[1]);
      for (int j = 0; j < k; ++j)
        gram(i, j) += pt.w * (modes_at[i][0] * modes_at[j][0] +
                              modes_at[i][1] * modes_at[j][1]);
    }
  }
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  c.head(k) = gram.topLeftCorner(k, k).ldlt().solve(rhs.head(k));
  return c;
}

}  // namespace

void project_out_rigid(DisplacementField& f, RigidModes modes) {
  const Eigen::Vector3d c = rigid_projection(f, modes);
  Vec a(2);
  a << c[0], c[1];
  Mat w = Mat::Zero(2, 2);
  w(0, 1) = -c[2];
  w(1, 0) = c[2];
  DisplacementField rigid = interpolate_affine(*f.space, a, w);
  f.coeffs -= rigid.coeffs;
}

double quotient_distance(const DisplacementField& f,
                         const DisplacementField& g, double p,
                         RigidModes modes) {
  DisplacementField h;
  h.space = f.space;
  h.coeffs = f.coeffs - g.coeffs;
  project_out_rigid(h, modes);
  return norms(h, p).w2p_full;
}

DisplacementField interpolate(
    const SplineSpace& s,
    const std::function<std::array<double, 2>(double, double)>& fn) {
  const int bx = s.basis_x(), by = s.basis_y();
  Eigen::MatrixXd ax = Eigen::MatrixXd::Zero(bx, bx);
  Eigen::MatrixXd ay = Eigen::MatrixXd::Zero(by, by);
  double n[4], dn[4], d2n[4];
  for (int r = 0; r < bx; ++r) {
    const int i0 = s.basis_x_at(s.greville_x(r), n, dn, d2n);
    for (int j = 0; j < 4; ++j) ax(r, i0 + j) = n[j];
  }
  for (int r = 0; r < by; ++r) {
    const int i0 = s.basis_y_at(s.greville_y(r), n, dn, d2n);
    for (int j = 0; j < 4; ++j) ay(r, i0 + j) = n[j];
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lux(ax), luy(ay);

  DisplacementField f = zero_field(s);
  Eigen::MatrixXd vals(by, bx);
  for (int comp = 0; comp < 2; ++comp) {
    for (int iy = 0; iy < by; ++iy)
      for (int ix = 0; ix < bx; ++ix)
        vals(iy, ix) = fn(s.greville_x(ix), s.greville_y(iy))[comp];
    // Coefficients solve  Ay C Ax^T = V.
    Eigen::MatrixXd t = luy.solve(vals);
    Eigen::MatrixXd c = lux.solve(t.transpose()).transpose();
    for (int iy = 0; iy < by; ++iy)
      for (int ix = 0; ix < bx; ++ix)
        f.coeffs[s.dof_index(comp, ix, iy)] = c(iy, ix);
  }
  return f;
}

DisplacementField interpolate_affine(const SplineSpace& s, const Vec& c,
                                     const Mat& g) {
  // B-splines reproduce affine functions with coefficients equal to the
  // function values at the Greville abscissae.
  DisplacementField f = zero_field(s);
  for (int comp = 0; comp < 2; ++comp)
    for (int iy = 0; iy < s.basis_y(); ++iy)
      for (int ix = 0; ix < s.basis_x(); ++ix)
        f.coeffs[s.dof_index(comp, ix, iy)] =
            c[comp] + g(comp, 0) * s.greville_x(ix) + g(comp, 1) * s.greville_y(iy);
  return f;
}

}  // namespace elcap
