#include "stride/rotation.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace stride {
namespace {

TEST(SixD, IdentityDecodes) {
  Rotation6D r;
  r << 1, 0, 0, 0, 1, 0;
  EXPECT_TRUE(sixd_to_matrix(r).isApprox(Mat3::Identity(), 0.0));
}

TEST(SixD, QuarterTurnAboutVertical) {
  Rotation6D r;
  r << 0, 0, -1, 0, 1, 0;
  // Axis-angle oracle: +90 degrees about +Y.
  const Mat3 expected = Eigen::AngleAxisd(kPi / 2, Vec3::UnitY()).toRotationMatrix();
  EXPECT_LT((sixd_to_matrix(r) - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((rot_y(kPi / 2) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SixD, GramSchmidtRemovesSharedComponent) {
  Rotation6D r;
  r << 1, 0, 0, 1, 1, 0;
  EXPECT_LT((sixd_to_matrix(r) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SixD, DegenerateInputsThrow) {
  Rotation6D parallel;
  parallel << 1, 2, 3, 2, 4, 6;
  EXPECT_THROW(sixd_to_matrix(parallel), DegenerateRotation);
  Rotation6D zero;
  zero << 0, 0, 0, 0, 1, 0;
  EXPECT_THROW(sixd_to_matrix(zero), DegenerateRotation);
}

TEST(SixD, EncodeIdentity) {
  Rotation6D expected;
  expected << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(matrix_to_sixd(Mat3::Identity()), expected);
}

TEST(SixD, ReflectionRejected) {
  Mat3 reflect = Mat3::Identity();
  reflect(0, 0) = -1;
  EXPECT_THROW(matrix_to_sixd(reflect), NotARotation);
  EXPECT_THROW(matrix_to_sixd(2.0 * Mat3::Identity()), NotARotation);
}

TEST(SixD, RoundTripRandomRotations) {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Mat3 R = testing::random_rotation(rng);
    worst = std::max(worst, (sixd_to_matrix(matrix_to_sixd(R)) - R).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SixD, DecodeIsProperRotationForArbitraryInput) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Rotation6D r;
    for (int i = 0; i < 6; ++i) r[i] = n(rng);
    EXPECT_TRUE(is_rotation(sixd_to_matrix(r), 1e-10));
  }
}

TEST(SixD, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Rotation6D r;
    for (int i = 0; i < 6; ++i) r[i] = n(rng);
    Mat3 weights;
    for (int i = 0; i < 9; ++i) weights(i) = n(rng);
    const Rotation6D analytic = sixd_to_matrix_backward(r, weights);
    for (int i = 0; i < 6; ++i) {
      const double h = 1e-6;
      Rotation6D rp = r, rm = r;
      rp[i] += h;
      rm[i] -= h;
      const double fd =
          ((sixd_to_matrix(rp).cwiseProduct(weights)).sum() - (sixd_to_matrix(rm).cwiseProduct(weights)).sum()) /
          (2 * h);
      EXPECT_NEAR(analytic[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Yaw, HeadingAndWrap) {
  EXPECT_NEAR(heading_yaw(rot_y(0.7)), 0.7, 1e-12);
  EXPECT_NEAR(wrap_angle(0.3 + 2 * kPi), 0.3, 1e-12);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
  const Vec2 f = facing_from_yaw(kPi / 2);
  EXPECT_NEAR(f.x(), 1.0, 1e-12);
  EXPECT_NEAR(yaw_from_facing(f), kPi / 2, 1e-12);
}

}  // namespace
}  // namespace stride
