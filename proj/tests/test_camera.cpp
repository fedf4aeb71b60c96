#include <gtest/gtest.h>

#include "cubify/camera.hpp"
#include "cubify/error.hpp"
#include "support.hpp"

using namespace cubify;
using test::uniform;

TEST(Project, PrincipalRay) {
  const CameraFramed cam = test::pinhole(640, 480);
  const auto px = project(cam, Vec3d(0, 0, 2));
  ASSERT_TRUE(px);
  EXPECT_EQ(*px, Vec2d(320, 240));
}

TEST(Project, Pinhole) {
  const CameraFramed cam = test::pinhole(640, 480, 500);
  const auto px = project(cam, Vec3d(0.4, 0, 2));
  ASSERT_TRUE(px);
  EXPECT_NEAR(px->x(), 420, 1e-12);
  EXPECT_NEAR(px->y(), 240, 1e-12);
}

TEST(Project, RadialK1) {
  CameraFramed cam = test::pinhole(640, 480, 500);
  cam.distortion.k1 = 0.1;
  const auto px = project(cam, Vec3d(0.4, 0, 2));
  ASSERT_TRUE(px);
  EXPECT_NEAR(px->x(), 420.4, 1e-9);
  EXPECT_NEAR(px->y(), 240, 1e-12);
}

TEST(Project, BehindCamera) {
  const CameraFramed cam = test::pinhole();
  EXPECT_FALSE(project(cam, Vec3d(0, 0, -1)));
  EXPECT_FALSE(project(cam, Vec3d(0.1, 0, 0)));
}

TEST(Project, ZeroDistortionIsPinhole) {
  std::mt19937_64 rng(10);
  const CameraFramed cam = test::pinhole();
  for (int i = 0; i < 1000; ++i) {
    const Vec3d p(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 0.1, 10));
    const Vec2d px = *project(cam, p);
    ASSERT_NEAR(px.x(), 500 * p.x() / p.z() + 320, 1e-12 * std::max(1.0, std::abs(px.x())));
    ASSERT_NEAR(px.y(), 500 * p.y() / p.z() + 240, 1e-12 * std::max(1.0, std::abs(px.y())));
  }
}

TEST(Undistort, Examples) {
  CameraFramed cam = test::pinhole(640, 480, 500);
  EXPECT_EQ(undistort(cam, Vec2d(320, 240)), Vec2d(0, 0));
  const Vec2d n = undistort(cam, Vec2d(420, 240));
  EXPECT_NEAR(n.x(), 0.2, 1e-15);
  cam.distortion.k1 = 0.1;
  const Vec2d d = undistort(cam, Vec2d(420.4, 240));
  EXPECT_NEAR(d.x(), 0.2, 1e-8);
  EXPECT_NEAR(d.y(), 0.0, 1e-8);
  EXPECT_EQ(undistort(cam, Vec2d(320, 240)), Vec2d(0, 0));
}

TEST(Undistort, NonConvergenceThrows) {
  CameraFramed cam = test::pinhole(640, 480, 50);
  cam.distortion.k1 = -3.0;  // folds over well inside the image: no preimage
  EXPECT_THROW(undistort(cam, Vec2d(630, 470)), NumericError);
  cam = test::pinhole(640, 480, 480);
  cam.distortion = {-0.135, -0.017, -0.0007, 0, 0};  // phone-like, solved at the corners
  for (const Vec2d c : {Vec2d(0, 0), Vec2d(640, 480)}) {
    const Vec2d n = undistort(cam, c);
    EXPECT_LT((*project(cam, Vec3d(n.x(), n.y(), 1)) - c).norm(), 1e-6);
  }
}

TEST(Backproject, Examples) {
  const CameraFramed cam = test::pinhole(640, 480, 500);
  EXPECT_EQ(backproject(cam, Vec2d(320, 240), 2.0), Vec3d(0, 0, 2));
  const Vec3d p = backproject(cam, Vec2d(420, 240), 2.0);
  EXPECT_NEAR((p - Vec3d(0.4, 0, 2)).norm(), 0, 1e-14);
  EXPECT_THROW(backproject(cam, Vec2d(1, 1), 0.0), ValidationError);
  EXPECT_THROW(backproject(cam, Vec2d(1, 1), -1.0), ValidationError);
}

TEST(Backproject, RoundTripDistorted) {
  std::mt19937_64 rng(11);
  for (const CameraFramed& cam : {test::pinhole(), test::distorted()}) {
    for (int i = 0; i < 1000; ++i) {
      const Vec2d px(uniform(rng, 0, 640), uniform(rng, 0, 480));
      const double z = uniform(rng, 0.3, 10);
      const Vec3d p = backproject(cam, px, z);
      ASSERT_NEAR(p.z(), z, 1e-15);
      const Vec2d back = *project(cam, p);
      ASSERT_LT((back - px).norm(), 1e-6);
    }
  }
}

TEST(Validate, Camera) {
  CameraFramed cam = test::pinhole();
  EXPECT_NO_THROW(validate(cam));
  cam.near = 5;
  cam.far = 1;
  EXPECT_THROW(validate(cam), ValidationError);
  cam = test::pinhole();
  cam.intrinsics.fx = 0;
  EXPECT_THROW(validate(cam), ValidationError);
  cam = test::pinhole();
  cam.intrinsics.cx = 700;
  EXPECT_THROW(validate(cam), ValidationError);
  cam = test::pinhole();
  cam.distortion.k2 = std::numeric_limits<double>::infinity();
  EXPECT_THROW(validate(cam), ValidationError);
}

TEST(CameraFrame, MissingGravityThrows) {
  CameraFramed cam = test::pinhole();
  cam.gravity_to_camera.reset();
  EXPECT_THROW(cam.camera_to_gravity(), ValidationError);
}

TEST(Frustum, Examples) {
  const CameraFramed cam = test::pinhole();
  const Frustum<double> f = build_frustum(cam);
  for (const auto& pl : f.planes) EXPECT_NEAR(pl.normal.norm(), 1.0, 1e-12);
  const double mid = (cam.near + cam.far) / 2;
  EXPECT_TRUE(f.contains(Vec3d(0, 0, mid)));
  EXPECT_FALSE(f.contains(Vec3d(0, 0, 2 * cam.far)));
  EXPECT_FALSE(f.contains(backproject(cam, Vec2d(640 + 50, 240), mid)));
}

TEST(Frustum, ContainsEveryInImagePixel) {
  std::mt19937_64 rng(12);
  for (const CameraFramed& cam : {test::pinhole(), test::distorted()}) {
    const Frustum<double> f = build_frustum(cam);
    for (int i = 0; i < 5000; ++i) {
      const Vec2d px(uniform(rng, 0, 640), uniform(rng, 0, 480));
      const Vec3d p = backproject(cam, px, uniform(rng, cam.near, cam.far));
      ASSERT_TRUE(f.contains(p, 1e-9)) << px.transpose();
    }
    // image corners exactly
    for (double u : {0.0, 640.0})
      for (double v : {0.0, 480.0}) ASSERT_TRUE(f.contains(backproject(cam, Vec2d(u, v), 1.0), 1e-9));
  }
}

TEST(FrustumCull, Examples) {
  const CameraFramed cam = test::pinhole();
  const Frustum<double> f = build_frustum(cam);
  Box3d b;
  b.center = {0, 0, 2.5};
  EXPECT_TRUE(frustum_cull(f, b));
  b.center = {0, 0, -3};
  EXPECT_FALSE(frustum_cull(f, b));
  b.center = {0, 0, cam.near};  // straddles the near plane
  EXPECT_TRUE(frustum_cull(f, b));
  b.center = {0, 0, 20};
  EXPECT_FALSE(frustum_cull(f, b));
}

TEST(FrustumCull, NoFalseRejection) {
  std::mt19937_64 rng(13);
  for (const CameraFramed& cam : {test::pinhole(), test::distorted()}) {
    const Frustum<double> f = build_frustum(cam);
    int visible = 0;
    for (int i = 0; i < 5000; ++i) {
      Box3d b = test::random_box(rng, 4);
      b.center.z() += 2;
      const Corners<double> c = box_corners(b);
      bool any_visible = false;
      for (int k = 0; k < 8 && !any_visible; ++k) {
        const Vec3d p = c.col(k);
        if (p.z() <= cam.near || p.z() >= cam.far) continue;
        const auto px = project(cam, p);
        // only trust the projection where the distortion is monotone
        const Vec2d n(p.x() / p.z(), p.y() / p.z());
        if (n.norm() > 1.0) continue;
        any_visible = px && px->x() >= 0 && px->x() < 640 && px->y() >= 0 && px->y() < 480;
      }
      if (!any_visible) continue;
      ++visible;
      ASSERT_TRUE(frustum_cull(f, b));
    }
    EXPECT_GT(visible, 500);
  }
}

TEST(Intrinsics, Rescaled) {
  const Intrinsicsd k{500, 500, 320, 240, 640, 480};
  const Intrinsicsd r = k.rescaled(320, 240);
  EXPECT_EQ(r.fx, 250);
  EXPECT_EQ(r.cx, 160);
  EXPECT_EQ(r.width, 320);
}
