#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "elcap/tensor.hpp"

namespace elcap {

enum class Edge : int { left = 0, right = 1, bottom = 2, top = 3 };

inline const char* edge_name(Edge e) {
  switch (e) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
  }
  return "?";
}

struct GridConfig {
  double lx = 1.0, ly = 1.0;          ///< rectangle [0,lx] x [0,ly]
  int nx = 12, ny = 12;               ///< cells per axis, >= 4
  int quad_order = 4;                 ///< Gauss points per cell per axis, >= 4
  std::array<bool, 4> dirichlet = {false, false, false, false};  ///< Gamma
};

/// One interior Gauss point with the per-axis samples of the 4x4 active
/// cubic B-splines (value, first, second derivative). Scalar basis (a,b) of
/// the active block has value nx[a]*ny[b], and so on by the product rule.
struct InteriorPoint {
  double x0, x1;
  double w;
  int ix0, iy0;  ///< first active basis index per axis
  std::array<double, 4> nx, dnx, d2nx;
  std::array<double, 4> ny, dny, d2ny;
};

/// One boundary Gauss point (open Gauss points per edge cell, so corners are
/// never sampled and the outward normal is edge-constant).
struct BoundaryPoint {
  double x0, x1;
  double w;
  double n0, n1;  ///< outward unit normal
  Edge edge;
  int ix0, iy0;
  std::array<double, 4> nx, dnx;
  std::array<double, 4> ny, dny;
};

/// Quadrature tables grouped in fixed blocks (one block per cell, one per
/// boundary edge cell). The block layout is the unit of the deterministic
/// parallel reduction used by assembly.
struct QuadTable {
  std::vector<InteriorPoint> interior;
  std::vector<BoundaryPoint> boundary;
  int interior_block = 0;  ///< points per interior block (quad_order^2)
  int boundary_block = 0;  ///< points per boundary block (quad_order)
  double interior_measure = 0.0;  ///< sum of interior weights (= |Omega|)
  double boundary_measure = 0.0;  ///< sum of boundary weights (= |dOmega|)

  int interior_blocks() const { return int(interior.size()) / interior_block; }
  int boundary_blocks() const { return int(boundary.size()) / boundary_block; }
};

/// Tensor-product cubic B-spline space on a rectangle, C^2 across cell
/// boundaries (open knot vectors, n+3 scalar basis functions per axis).
/// Immutable after construction; shareable across threads.
class SplineSpace {
 public:
  explicit SplineSpace(const GridConfig& cfg);

  const GridConfig& config() const { return cfg_; }
  double lx() const { return cfg_.lx; }
  double ly() const { return cfg_.ly; }
  int cells_x() const { return cfg_.nx; }
  int cells_y() const { return cfg_.ny; }
  int basis_x() const { return cfg_.nx + 3; }
  int basis_y() const { return cfg_.ny + 3; }
  int scalar_count() const { return basis_x() * basis_y(); }
  int dof_count() const { return 2 * scalar_count(); }

  bool dirichlet(Edge e) const { return cfg_.dirichlet[int(e)]; }
  bool has_dirichlet() const;

  int scalar_index(int ix, int iy) const { return iy * basis_x() + ix; }
  int dof_index(int comp, int ix, int iy) const {
    return comp * scalar_count() + scalar_index(ix, iy);
  }

  /// True for coefficients in the two outermost layers along a Dirichlet
  /// edge (the layers that pin both the trace and the gradient trace).
  bool clamped(int ix, int iy) const;
  /// Per-dof clamp mask, size dof_count().
  const std::vector<char>& clamp_mask() const { return clamp_; }

  double greville_x(int ix) const { return greville_x_[ix]; }
  double greville_y(int iy) const { return greville_y_[iy]; }

  /// Values and first two derivatives of the 4 cubic splines active at x;
  /// returns the first active basis index along the axis.
  int basis_x_at(double x, double* n, double* dn, double* d2n) const;
  int basis_y_at(double y, double* n, double* dn, double* d2n) const;

  const QuadTable& quadrature() const { return table_; }

 private:
  GridConfig cfg_;
  std::vector<double> knots_x_, knots_y_;
  std::vector<double> greville_x_, greville_y_;
  std::vector<char> clamp_;
  QuadTable table_;

  void build_table();
};

/// Coefficient array over a SplineSpace representing a displacement field.
/// Layout: coeffs[comp * scalar_count + iy * basis_x + ix].
struct DisplacementField {
  const SplineSpace* space = nullptr;  ///< non-owning; space outlives fields
  Eigen::VectorXd coeffs;
};

DisplacementField zero_field(const SplineSpace& s);

/// Value, gradient and Hessian at an interior quadrature point.
void eval_field(const SplineSpace& s, const Eigen::VectorXd& coeffs,
                const InteriorPoint& pt, Vec& v, Mat& g, Tensor3& b);
inline void eval_field(const DisplacementField& f, const InteriorPoint& pt,
                       Vec& v, Mat& g, Tensor3& b) {
  eval_field(*f.space, f.coeffs, pt, v, g, b);
}

/// Value and gradient at a boundary quadrature point.
void eval_field(const SplineSpace& s, const Eigen::VectorXd& coeffs,
                const BoundaryPoint& pt, Vec& v, Mat& g);
inline void eval_field(const DisplacementField& f, const BoundaryPoint& pt,
                       Vec& v, Mat& g) {
  eval_field(*f.space, f.coeffs, pt, v, g);
}

/// Evaluation at an arbitrary point of the closed rectangle (probes, tests).
void eval_field_at(const DisplacementField& f, double x, double y, Vec& v,
                   Mat& g, Tensor3& b);

/// Zeroes the two outermost coefficient layers along every Dirichlet edge,
/// so v = 0 and grad v = 0 on Gamma exactly. Linear idempotent projection.
void apply_dirichlet(DisplacementField& f);

struct NormReport {
  double l2 = 0.0;        ///< ||v||_L2
  double h1_semi = 0.0;   ///< ||grad v||_L2
  double w2p_semi = 0.0;  ///< ||grad^2 v||_Lp
  double w2p_full = 0.0;  ///< (||v||_p^p + ||grad v||_p^p + ||grad^2 v||_p^p)^(1/p)
};

/// Discrete Sobolev-type surrogate norms by quadrature.
NormReport norms(const DisplacementField& f, double p = 2.0);

enum class RigidModes {
  translations,        ///< quotient by constants only
  full                 ///< quotient by a + W x, W skew
};

/// W^{2,p}-surrogate distance between fields modulo infinitesimal rigid
/// motions; the optimal rigid field is the L^2-least-squares projection.
double quotient_distance(const DisplacementField& f,
                         const DisplacementField& g, double p = 2.0,
                         RigidModes modes = RigidModes::full);

/// L^2-orthogonal removal of the rigid (or translation) part of f.
void project_out_rigid(DisplacementField& f,
                       RigidModes modes = RigidModes::full);

/// Interpolation on the Greville tensor grid (exact for polynomials of
/// coordinate degree <= 3).
DisplacementField interpolate(
    const SplineSpace& s,
    const std::function<std::array<double, 2>(double, double)>& fn);

/// Exact coefficients of the affine field c + G x.
DisplacementField interpolate_affine(const SplineSpace& s, const Vec& c,
                                     const Mat& g);

}  // namespace elcap
