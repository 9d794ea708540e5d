#pragma once

#include <Eigen/Dense>

#include <array>
#include <cassert>

namespace elcap {

// Small dense kernel for spatial dimension d in {2,3}. Fixed 3x3 capacity
// with runtime dimension, so everything lives on the stack.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::AutoAlign, 3, 3>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::AutoAlign, 3, 1>;

/// Third-order tensor B(i,j,k), d x d x d. Field evaluation produces tensors
/// symmetric in (j,k): B(i,.,.) is the Hessian of component i.
class Tensor3 {
 public:
  Tensor3() : d_(0) { e_.fill(0.0); }
  explicit Tensor3(int d) : d_(d) {
    assert(d == 2 || d == 3);
    e_.fill(0.0);
  }

  int dim() const { return d_; }

  double& operator()(int i, int j, int k) { return e_[(i * d_ + j) * d_ + k]; }
  double operator()(int i, int j, int k) const {
    return e_[(i * d_ + j) * d_ + k];
  }

  void set_zero() { e_.fill(0.0); }

  double squared_norm() const {
    double s = 0.0;
    const int n = d_ * d_ * d_;
    for (int i = 0; i < n; ++i) s += e_[i] * e_[i];
    return s;
  }
  double norm() const;

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator*=(double t);
  friend Tensor3 operator*(double t, Tensor3 b) { return b *= t; }

  /// Frame action (R B)(i,m,n) = R(i,k) B(k,m,n).
  friend Tensor3 rotate(const Mat& r, const Tensor3& b);

 private:
  std::array<double, 27> e_;
  int d_;
};

Mat identity(int d);
Vec zero_vec(int d);

/// 2-D rotation by angle theta.
Mat rotation2(double theta);

/// Rotation angle of a 2x2 rotation matrix, in (-pi, pi].
double rotation_angle(const Mat& r);

double det(const Mat& f);

/// Cofactor matrix by minors, valid for singular F: F (cof F)^T = det(F) I.
Mat cofactor(const Mat& f);

/// Linearized cofactor tr(G) I - G^T, the first-order term of cof(I + G).
/// Exact in d=2: cofactor(I + G) = I + lin_cof(G).
Mat lin_cof(const Mat& g);

/// |cof(F) n| for unit n: the deformed surface-area density.
double normal_density(const Mat& f, const Vec& n);

/// Nearest rotation: the R in SO(d) maximizing tr(R^T M). Closed form for
/// d=2; SVD with det-sign correction for d=3. Requires det M > 0.
Mat polar_rotation(const Mat& m);

Mat sym(const Mat& g);
Mat skew(const Mat& g);

}  // namespace elcap
