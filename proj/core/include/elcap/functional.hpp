#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "elcap/grid.hpp"
#include "elcap/material.hpp"

namespace elcap {

enum class Family : int { G = 0, F = 1, I = 2 };
enum class Regime : int { nonlinear = 0, linearized = 1, limit_traction = 2 };

const char* family_name(Family f);
const char* regime_name(Regime r);
Family family_from_string(const std::string& s);

/// Energy family/regime selector. The (I, limit_traction) pair is invalid:
/// the surface live load keeps the plain linearized functional as its limit.
struct VariantTag {
  Family family = Family::G;
  Regime regime = Regime::linearized;
  void validate() const;
};

/// Affine scalar expression c0 + c1*x1 + c2*x2 (the load grammar).
struct AffineExpr {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double operator()(double x0, double x1) const {
    return c0 + c1 * x0 + c2 * x1;
  }
  bool operator==(const AffineExpr&) const = default;
};

/// Result of the d=2 rotation-compatibility scan of an equilibrated load:
/// g(theta) = L(R_theta x - x) = (cos theta - 1) a + sin(theta) b_perp must
/// be <= 0 for all theta; s0_angles lists the zeros of g (the admissible
/// rotations of the limit traction functional).
struct CompatReport {
  bool compatible = false;
  bool full_circle = false;  ///< g identically zero: all of SO(2) admissible
  std::vector<double> s0_angles;
  double a = 0.0;       ///< L(x)
  double b_perp = 0.0;  ///< L(x_perp), x_perp = (-x2, x1)
  double max_g = 0.0;
  double tol = 0.0;
  std::string describe() const;
};

/// Body-force and boundary-traction samples aligned with a space's
/// quadrature tables, defining the linear load functional
/// L(v) = int_Omega b.v dx + int_dOmega t.v dS.
struct LoadSpec {
  std::vector<std::array<double, 2>> body;      ///< per interior point
  std::vector<std::array<double, 2>> traction;  ///< per boundary point
  bool equilibrated = false;
  std::optional<CompatReport> compat;
};

/// Samples the affine expressions at the quadrature points of s. Edges
/// without a traction entry get zero traction.
LoadSpec build_load(const SplineSpace& s,
                    const std::array<AffineExpr, 2>& body,
                    const std::array<std::optional<std::array<AffineExpr, 2>>, 4>&
                        traction_per_edge);

double load_value(const SplineSpace& s, const LoadSpec& load,
                  const DisplacementField& f);

/// Subtracts from the body force the affine field rho0 + Wc x (small Gram
/// solve over the rigid modes) so that L vanishes on every infinitesimal
/// rigid displacement; traction samples are untouched.
LoadSpec equilibrate(const SplineSpace& s, LoadSpec load);

/// d=2 scan; requires an equilibrated load. Classification tolerance is
/// 1e-12 times the load scale max(|a|, |b_perp|, 1).
CompatReport compatibility_scan(const SplineSpace& s, const LoadSpec& load);

struct EnergyBreakdown {
  double bulk = 0.0;
  double hyper = 0.0;
  double load = 0.0;     ///< the value L(v) (or max over the admissible
                         ///  rotations); it enters total with a minus sign
  double surface = 0.0;
  double total = 0.0;    ///< bulk + hyper - load + surface
};

/// Assembles the selected functional and its exact coefficient gradient.
///
/// Quadrature work is split into fixed blocks (one per cell / edge cell);
/// blocks may be evaluated by several threads, but partial results are
/// combined by a fixed-order pairwise tree so results are bitwise
/// deterministic and independent of the thread count.
class EnergyAssembler {
 public:
  EnergyAssembler(const SplineSpace& s, const MaterialSpec& m, LoadSpec load,
                  VariantTag tag, double eps, int threads = 1);

  EnergyBreakdown energy(const Eigen::VectorXd& coeffs);
  double total(const Eigen::VectorXd& coeffs);
  void gradient(const Eigen::VectorXd& coeffs, Eigen::VectorXd& grad);

  const VariantTag& tag() const { return tag_; }
  double eps() const { return eps_; }
  const SplineSpace& space() const { return *space_; }
  const LoadSpec& load() const { return load_; }

  /// Rotation angles attaining the limit-traction load maximum in the last
  /// energy() call (all maximizers within 1e-10; the first one is used).
  const std::vector<double>& load_maximizers() const { return maximizers_; }

  /// Boundary quadrature points whose surface integrand sat within 1e-14 of
  /// a nondifferentiable kink during the last gradient() call (subgradient 0
  /// was selected there).
  long kink_count() const { return kink_count_; }

  /// Sparse symmetric matrix of the quadratic model underlying the
  /// linearized energy (bulk form, second-gradient form weighted as if
  /// p = 2, and the local surface forms for q = 2). Clamped rows/columns
  /// are identity. Used as a fixed preconditioner for the minimizer; it is
  /// exact for the linearized families G and I with p = q = 2.
  Eigen::SparseMatrix<double> quadratic_model_matrix() const;

 private:
  struct BlockPartial {
    double bulk = 0.0, hyper = 0.0;
    double load_v = 0.0, load_vperp = 0.0;
    double surf = 0.0;         // local surface sum
    double surf_acc = 0.0;     // global surface accumulator (families F)
  };

  BlockPartial interior_block(const Eigen::VectorXd& coeffs, int blk) const;
  BlockPartial boundary_block(const Eigen::VectorXd& coeffs, int blk) const;
  EnergyBreakdown finalize(const BlockPartial& sum);

  void gradient_interior_block(const Eigen::VectorXd& coeffs, int blk,
                               double* out) const;
  void gradient_boundary_block(const Eigen::VectorXd& coeffs, int blk,
                               double surf_acc, double* out, long* kinks) const;

  const SplineSpace* space_;
  MaterialSpec mat_;
  LoadSpec load_;
  VariantTag tag_;
  double eps_;
  int threads_;
  double perimeter_;  ///< boundary measure reduced by the same block tree
  std::vector<double> block_scratch_;
  std::vector<double> maximizers_;
  long kink_count_ = 0;
};

}  // namespace elcap
