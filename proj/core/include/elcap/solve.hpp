#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "elcap/grid.hpp"
#include "elcap/tensor.hpp"

namespace elcap {

struct SolveOptions {
  int max_iter = 2000;
  double tol_grad = 1e-9;    ///< infinity norm of the reduced gradient
  double tol_step = 1e-12;   ///< relative energy decrease stall
  int memory = 10;           ///< L-BFGS history length
  double armijo_c = 1e-4;
  double backtrack = 0.5;    ///< in (0,1)
  int threads = 1;           ///< assembly threads (used by the drivers)
  void validate() const;
};

enum class Termination { grad, step, max_iter, linesearch };
const char* termination_name(Termination t);

struct SolveReport {
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<double> energy_history;  ///< nonincreasing, one entry per accepted iterate
  Termination reason = Termination::max_iter;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
using ApplyInverse = std::function<void(Eigen::VectorXd&)>;

/// Fixed SPD quadratic-model preconditioner: a sparse Cholesky factorization
/// applied as the initial inverse Hessian of the quasi-Newton iteration. A
/// small Tikhonov shift keeps traction problems (rigid-mode kernel)
/// factorizable without disturbing the physical modes.
class ModelPreconditioner {
 public:
  explicit ModelPreconditioner(const Eigen::SparseMatrix<double>& k,
                               double shift_rel = 1e-6);
  void operator()(Eigen::VectorXd& v) const;
  ApplyInverse fn() const {
    return [this](Eigen::VectorXd& v) { (*this)(v); };
  }

 private:
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

/// Limited-memory quasi-Newton descent with Armijo backtracking. Entries
/// flagged in `clamp` never move (their gradient and search-direction
/// components are forced to zero). `h0_inverse`, when given, is applied as
/// the initial inverse Hessian of the two-loop recursion.
std::pair<Eigen::VectorXd, SolveReport> minimize(
    Eigen::VectorXd x0, const Objective& obj, const GradientFn& grad,
    const SolveOptions& opts, const std::vector<char>* clamp = nullptr,
    const ApplyInverse& h0_inverse = {});

/// Max over `probes` random coefficients of the relative error between the
/// analytic gradient and central finite differences (step 1e-6 (1+|x_i|)).
double fd_check(const Eigen::VectorXd& x, const Objective& obj,
                const GradientFn& grad, int probes = 20,
                std::uint64_t seed = 0x5eedULL);

/// Polar factor of the mean deformation gradient (1/|Omega|) int (I + eps
/// grad v); the rotation nearest to the deformed state in the mean.
Mat extract_rotation(const DisplacementField& v, double eps);

/// u(x) = R^T v(x) + (R^T x - x)/eps, computed exactly at coefficient level
/// (the affine part is reproduced through the Greville abscissae).
DisplacementField corrected_displacement(const DisplacementField& v,
                                         const Mat& r, double eps);

}  // namespace elcap
