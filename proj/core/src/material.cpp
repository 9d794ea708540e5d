#include "elcap/material.hpp"

#include <cmath>
#include <sstream>

#include "elcap/errors.hpp"

namespace elcap {

void MaterialSpec::validate() const {
  std::ostringstream err;
  if (dim != 2 && dim != 3)
    err << "material.dim must be 2 or 3 (got " << dim << ")";
  else if (!(mu > 0.0))
    err << "material.mu must be > 0 (got " << mu << ")";
  else if (!(lambda >= 0.0))
    err << "material.lambda must be >= 0 (got " << lambda << ")";
  else if (!(kappa > 0.0))
    err << "material.kappa must be > 0 (got " << kappa << ")";
  else if (!(gamma >= 0.0))
    err << "material.gamma must be >= 0 (got " << gamma << ")";
  else if (!(p > 1.0))
    err << "material.p must be > 1 (got " << p << ")";
  else if (!(q >= 1.0))
    err << "material.q must be >= 1 (got " << q << ")";
  else if (p < dim * q / (q + 1.0))
    err << "material: p >= dim*q/(q+1) is required (got p = " << p << " < "
        << dim * q / (q + 1.0) << " with dim = " << dim << ", q = " << q
        << ")";
  if (!err.str().empty()) throw ConfigError(err.str());
}

double w_bulk(const Mat& f, const MaterialSpec& m) {
  const int d = int(f.rows());
  const Mat a = f.transpose() * f - Mat::Identity(d, d);
  return m.lambda / 8.0 * a.trace() * a.trace() +
         m.mu / 4.0 * a.squaredNorm();
}

Mat dw_bulk(const Mat& f, const MaterialSpec& m) {
  const int d = int(f.rows());
  const Mat e = 0.5 * (f.transpose() * f - Mat::Identity(d, d));
  return f * (m.lambda * e.trace() * Mat::Identity(d, d) + 2.0 * m.mu * e);
}

double quad_form(const Mat& e, const MaterialSpec& m) {
  if ((e - e.transpose()).lpNorm<Eigen::Infinity>() >
      1e-12 * (1.0 + e.lpNorm<Eigen::Infinity>()))
    throw ConfigError("quad_form: strain argument must be symmetric");
  return m.lambda / 2.0 * e.trace() * e.trace() + m.mu * e.squaredNorm();
}

double h_energy(const Tensor3& b, const MaterialSpec& m) {
  return m.kappa * std::pow(b.squared_norm(), 0.5 * m.p);
}

Tensor3 dh_energy(const Tensor3& b, const MaterialSpec& m) {
  const double n2 = b.squared_norm();
  Tensor3 out(b.dim());
  if (n2 == 0.0) return out;  // subgradient 0 at the origin
  const double c = m.kappa * m.p * std::pow(n2, 0.5 * m.p - 1.0);
  out = b;
  out *= c;
  return out;
}

}  // namespace elcap
