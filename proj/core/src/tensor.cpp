#include "elcap/tensor.hpp"

#include <Eigen/SVD>

#include <cmath>

#include "elcap/errors.hpp"

namespace elcap {

double Tensor3::norm() const { return std::sqrt(squared_norm()); }

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  assert(d_ == o.d_);
  const int n = d_ * d_ * d_;
  for (int i = 0; i < n; ++i) e_[i] += o.e_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double t) {
  const int n = d_ * d_ * d_;
  for (int i = 0; i < n; ++i) e_[i] *= t;
  return *this;
}

Tensor3 rotate(const Mat& r, const Tensor3& b) {
  const int d = b.dim();
  Tensor3 out(d);
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += r(i, k) * b(k, m, n);
        out(i, m, n) = s;
      }
  return out;
}

Mat identity(int d) { return Mat::Identity(d, d); }

Vec zero_vec(int d) { return Vec::Zero(d); }

Mat rotation2(double theta) {
  Mat r(2, 2);
  const double c = std::cos(theta), s = std::sin(theta);
  r << c, -s, s, c;
  return r;
}

double rotation_angle(const Mat& r) {
  assert(r.rows() == 2);
  return std::atan2(r(1, 0), r(0, 0));
}

double det(const Mat& f) {
  if (f.rows() == 2) return f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0);
  return f(0, 0) * (f(1, 1) * f(2, 2) - f(1, 2) * f(2, 1)) -
         f(0, 1) * (f(1, 0) * f(2, 2) - f(1, 2) * f(2, 0)) +
         f(0, 2) * (f(1, 0) * f(2, 1) - f(1, 1) * f(2, 0));
}

Mat cofactor(const Mat& f) {
  const int d = int(f.rows());
  Mat c(d, d);
  if (d == 2) {
    c << f(1, 1), -f(1, 0), -f(0, 1), f(0, 0);
    return c;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      // Cyclic index choice absorbs the (-1)^(i+j) sign.
      c(i, j) = f(i1, j1) * f(i2, j2) - f(i1, j2) * f(i2, j1);
    }
  return c;
}

Mat lin_cof(const Mat& g) {
  const int d = int(g.rows());
  return g.trace() * Mat::Identity(d, d) - g.transpose();
}

double normal_density(const Mat& f, const Vec& n) {
  return (cofactor(f) * n).norm();
}

Mat polar_rotation(const Mat& m) {
  if (!(det(m) > 0.0))
    throw SolverError("polar_rotation: input has non-positive determinant");
  if (m.rows() == 2)
    return rotation2(std::atan2(m(1, 0) - m(0, 1), m(0, 0) + m(1, 1)));
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      Eigen::Matrix3d(m), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d s(1.0, 1.0, (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0);
  return Mat(u * s.asDiagonal() * v.transpose());
}

Mat sym(const Mat& g) { return 0.5 * (g + g.transpose()); }

Mat skew(const Mat& g) { return 0.5 * (g - g.transpose()); }

}  // namespace elcap
