#include <doctest.h>

#include "elcap/errors.hpp"
#include "elcap/tensor.hpp"
#include "testutil.hpp"

using namespace elcap;
using namespace elcap::testing;

TEST_CASE("cofactor of identity and rotations") {
  for (int d : {2, 3}) {
    CHECK((cofactor(Mat::Identity(d, d)) - Mat::Identity(d, d)).norm() == 0.0);
  }
  Rng rng(1);
  for (int d : {2, 3}) {
    const Mat r = random_rotation(rng, d);
    CHECK((cofactor(r) - r).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cofactor worked 2x2 example") {
  Mat f(2, 2);
  f << 1, 2, 3, 4;
  Mat expect(2, 2);
  expect << 4, -3, -2, 1;
  CHECK((cofactor(f) - expect).norm() == 0.0);
  CHECK(det(f) == -2.0);
  const Mat identity_check = f * cofactor(f).transpose();
  CHECK((identity_check - det(f) * Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("cofactor identity F cof(F)^T = det(F) I on random matrices") {
  Rng rng(2);
  for (int d : {2, 3})
    for (int t = 0; t < 1000; ++t) {
      const Mat f = random_matrix(rng, d, -2.0, 2.0);
      const Mat lhs = f * cofactor(f).transpose() - det(f) * Mat::Identity(d, d);
      CHECK(lhs.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("cofactor rotation equivariance") {
  Rng rng(3);
  for (int d : {2, 3})
    for (int t = 0; t < 200; ++t) {
      const Mat f = random_matrix(rng, d, -2.0, 2.0);
      const Mat r = random_rotation(rng, d);
      CHECK((cofactor(r * f) - r * cofactor(f)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("lin_cof basics") {
  CHECK((lin_cof(Mat::Identity(2, 2)) - Mat::Identity(2, 2)).norm() == 0.0);

  Mat g(2, 2);
  g << 1, 2, 3, 4;
  Mat expect(2, 2);
  expect << 4, -3, -2, 1;
  CHECK((lin_cof(g) - expect).norm() == 0.0);
  // d=2: the cofactor is affine in the gradient.
  CHECK((cofactor(Mat::Identity(2, 2) + g) - Mat::Identity(2, 2) - lin_cof(g))
            .norm() == 0.0);

  Rng rng(4);
  for (int d : {2, 3}) {
    const Mat w = skew(random_matrix(rng, d));
    CHECK((lin_cof(w) - w).cwiseAbs().maxCoeff() < 1e-15);
    const Vec n = random_unit(rng, d);
    CHECK(std::abs(n.dot(lin_cof(w) * n)) < 1e-15);
  }
}

TEST_CASE("d=2 exactness of the cofactor linearization") {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const Mat g = random_matrix(rng, 2, -3.0, 3.0);
    CHECK((cofactor(Mat::Identity(2, 2) + g) - Mat::Identity(2, 2) - lin_cof(g))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
  }
}

TEST_CASE("normal_density") {
  Rng rng(6);
  for (int d : {2, 3}) {
    const Vec n = random_unit(rng, d);
    CHECK(normal_density(Mat::Identity(d, d), n) == doctest::Approx(1.0).epsilon(1e-14));
    const Mat r = random_rotation(rng, d);
    CHECK(normal_density(r, n) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Vec n = random_unit(rng, 2);
  CHECK(normal_density(2.0 * Mat::Identity(2, 2), n) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("cofactor expansion has a quadratic remainder") {
  // r(eps) = |density(I+eps F, n) - 1 - eps n.lin_cof(F) n| must shrink by
  // about 4x when eps halves. Fixed sample: in d=3 a rare draw can nearly
  // cancel the quadratic coefficient and let cubic terms spoil the ratio.
  Rng rng(7);
  for (int d : {2, 3})
    for (int t = 0; t < 20; ++t) {
      Mat f = random_matrix(rng, d);
      if (f.norm() > 1.0) f /= f.norm();
      const Vec n = random_unit(rng, d);
      const auto remainder = [&](double e) {
        return std::abs(normal_density(Mat::Identity(d, d) + e * f, n) - 1.0 -
                        e * n.dot(lin_cof(f) * n));
      };
      for (double e : {1e-1, 5e-2, 2.5e-2}) {
        const double r1 = remainder(e);
        if (r1 <= 1e-13) continue;
        const double ratio = remainder(e / 2) / r1;
        CHECK(ratio >= 0.15);
        CHECK(ratio <= 0.4);
      }
    }
}

TEST_CASE("polar_rotation") {
  CHECK((polar_rotation(Mat::Identity(2, 2)) - Mat::Identity(2, 2)).norm() <
        1e-15);
  const Mat r = rotation2(0.3);
  CHECK((polar_rotation(r) - r).cwiseAbs().maxCoeff() < 1e-14);

  Mat d2(2, 2);
  d2 << 2.0, 0.0, 0.0, 0.5;
  CHECK((polar_rotation(Mat(r * d2)) - r).cwiseAbs().maxCoeff() < 1e-12);

  Mat singular(2, 2);
  singular << 1, 0, 0, 0;
  CHECK_THROWS_AS(polar_rotation(singular), SolverError);
  Mat reflected(2, 2);
  reflected << -1, 0, 0, 1;
  CHECK_THROWS_AS(polar_rotation(reflected), SolverError);
}

TEST_CASE("polar_rotation output lies on SO(d)") {
  Rng rng(8);
  for (int d : {2, 3})
    for (int t = 0; t < 200; ++t) {
      Vec sigma(d);
      for (int i = 0; i < d; ++i) sigma[i] = rng.uniform(0.3, 2.5);
      const Mat m = with_singular_values(rng, sigma);
      const Mat r = polar_rotation(m);
      CHECK((r.transpose() * r - Mat::Identity(d, d)).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK(std::abs(det(r) - 1.0) < 1e-12);
      // Among rotations, r maximizes tr(R^T m): compare against a few others.
      const double best = (r.transpose() * m).trace();
      for (int k = 0; k < 5; ++k) {
        const Mat other = random_rotation(rng, d);
        CHECK((other.transpose() * m).trace() <= best + 1e-10);
      }
    }
}

TEST_CASE("sym skew det") {
  Rng rng(9);
  const Mat g = random_matrix(rng, 3);
  CHECK((sym(g) + skew(g) - g).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(sym(skew(g)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(det(Mat(1.1 * Mat::Identity(2, 2))) == doctest::Approx(1.21).epsilon(1e-14));
}

TEST_CASE("Tensor3 rotation preserves the norm") {
  Rng rng(10);
  for (int d : {2, 3}) {
    const Tensor3 b = random_tensor3(rng, d);
    const Mat r = random_rotation(rng, d);
    CHECK(rotate(r, b).norm() == doctest::Approx(b.norm()).epsilon(1e-13));
  }
}
