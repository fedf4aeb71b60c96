#include <gtest/gtest.h>

#include "cubify/metrics.hpp"
#include "support.hpp"

using namespace cubify;
using test::uniform;

namespace {

Polygon2d unit_square() { return {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}; }

const double kOctagon = 2 * (std::sqrt(2.0) - 1);

}  // namespace

TEST(ConvexClip, SelfIntersection) {
  const Polygon2d sq = unit_square();
  EXPECT_NEAR(polygon_area(convex_clip(sq, sq)), 1.0, 1e-12);
}

TEST(ConvexClip, Disjoint) {
  Polygon2d far = unit_square();
  for (auto& p : far) p.x() += 3;
  EXPECT_TRUE(convex_clip(unit_square(), far).empty());
}

TEST(ConvexClip, RotatedSquareOctagon) {
  const Polygon2d sq = unit_square();
  const Polygon2d rot = footprint(GravityBoxd{{0, 0, 0}, {1, 1, 1}, M_PI / 4});
  const Polygon2d oct = convex_clip(sq, rot);
  EXPECT_EQ(oct.size(), 8u);
  EXPECT_NEAR(polygon_area(oct), kOctagon, 1e-12);
}

TEST(ConvexClip, AreaMatchesMonteCarlo) {
  std::mt19937_64 rng(20);
  for (int i = 0; i < 50; ++i) {
    GravityBoxd a = test::random_gravity_box(rng, 0.6), b = test::random_gravity_box(rng, 0.6);
    const Polygon2d pa = footprint(a), pb = footprint(b);
    const double area = polygon_area(convex_clip(pa, pb));
    EXPECT_LE(area, std::min(polygon_area(pa), polygon_area(pb)) + 1e-12);
    // both boxes given identical height and base so the volume overlap is the footprint overlap
    a.center.z() = b.center.z() = 0;
    a.dims.z() = b.dims.z() = 1;
    const auto mc = iou_monte_carlo_detail(to_box3(a), to_box3(b), 200000, 100 + i);
    const double inter_mc = double(mc.in_intersection) / double(mc.in_union) *
                            (box_volume(a) + box_volume(b)) / (1 + mc.iou);
    const double p = mc.iou, n = double(mc.in_union);
    const double sigma_area = std::sqrt(std::max(p * (1 - p), 1e-12) / n) *
                              (box_volume(a) + box_volume(b)) / std::pow(1 + p, 2);
    EXPECT_NEAR(area, inter_mc, 4 * sigma_area + 1e-9) << i;
  }
}

TEST(IouGravity, ClosedForms) {
  const GravityBoxd a{{0, 0, 0}, {1, 1, 1}, 0};
  EXPECT_EQ(iou_gravity(a, a), 1.0);
  const GravityBoxd b{{0.5, 0, 0}, {1, 1, 1}, 0};
  EXPECT_NEAR(iou_gravity(a, b), 1.0 / 3, 1e-12);
  const GravityBoxd c{{0, 0, 0}, {1, 1, 1}, M_PI / 4};
  EXPECT_NEAR(iou_gravity(a, c), kOctagon / (2 - kOctagon), 1e-12);
  EXPECT_NEAR(iou_gravity(a, c), 0.7071067, 1e-6);
}

TEST(IouGravity, VerticalGapIsZero) {
  const GravityBoxd a{{0, 0, 0}, {1, 1, 1}, 0};
  const GravityBoxd b{{0, 0, 1.0 + 1e-9}, {1, 1, 1}, 0};
  EXPECT_EQ(iou_gravity(a, b), 0.0);
  EXPECT_EQ(iou_gravity(a, GravityBoxd{{5, 0, 0}, {1, 1, 1}, 0}), 0.0);
}

TEST(IouGravity, SymmetricAndInvariant) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 2000; ++i) {
    const GravityBoxd a = test::random_gravity_box(rng), b = test::random_gravity_box(rng);
    const double ab = iou_gravity(a, b);
    ASSERT_EQ(ab, iou_gravity(b, a));
    ASSERT_GE(ab, 0);
    ASSERT_LE(ab, 1);
    ASSERT_EQ(iou_gravity(a, a), 1.0);

    const Vec3d shift(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3));
    const double yaw = uniform(rng, -M_PI, M_PI);
    const Mat3d r = rotation_z(yaw);
    auto move = [&](GravityBoxd g) {
      g.center = r * g.center + shift;
      g.yaw = normalize_angle(g.yaw + yaw);
      return g;
    };
    ASSERT_NEAR(iou_gravity(move(a), move(b)), ab, 1e-9);
  }
}

TEST(IouGravity, DegenerateBoxes) {
  const GravityBoxd flat{{0, 0, 0}, {1, 1, 0}, 0};
  const GravityBoxd cube{{0, 0, 0}, {1, 1, 1}, 0};
  EXPECT_EQ(iou_gravity(flat, cube), 0.0);
  EXPECT_EQ(iou_gravity(flat, flat), 1.0);
  const GravityBoxd other_flat{{3, 0, 0}, {1, 1, 0}, 0};
  EXPECT_EQ(iou_gravity(flat, other_flat), 0.0);
}

TEST(IouMonteCarlo, Examples) {
  const Box3d a;
  EXPECT_EQ(iou_monte_carlo(a, a, 10000, 1), 1.0);
  Box3d far;
  far.center = {5, 0, 0};
  EXPECT_EQ(iou_monte_carlo(a, far, 10000, 1), 0.0);
  Box3d b;
  b.center = {0.5, 0, 0};
  EXPECT_EQ(iou_monte_carlo(a, b, 20000, 7), iou_monte_carlo(a, b, 20000, 7));
  EXPECT_NEAR(iou_monte_carlo(a, b, 200000, 7), 1.0 / 3, 0.005);
}

TEST(IouMonteCarlo, AgreesWithExactOnSmallCorpus) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 30; ++i) {
    GravityBoxd a = test::random_gravity_box(rng, 0.7), b = test::random_gravity_box(rng, 0.7);
    const double exact = iou_gravity(a, b);
    const auto mc = iou_monte_carlo_detail(to_box3(a), to_box3(b), 100000, i);
    EXPECT_NEAR(mc.iou, exact, 5 * mc.sigma() + 1e-12) << i;
  }
}

TEST(Chamfer, Examples) {
  const Box3d a;
  EXPECT_EQ(chamfer_corner_distance(a, a), 0.0);
  Box3d b;
  b.center = {0.1, 0, 0};
  EXPECT_NEAR(chamfer_corner_distance(a, b), 0.2, 1e-12);
  const GravityBoxd g{{0, 0, 0}, {1, 2, 3}, 0.3};
  EXPECT_EQ(chamfer_corner_distance(g, g), 0.0);
}

TEST(Chamfer, SymmetricAndRigidInvariant) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const Box3d a = test::random_box(rng), b = test::random_box(rng);
    const double d = chamfer_corner_distance(a, b);
    ASSERT_EQ(d, chamfer_corner_distance(b, a));
    ASSERT_GT(d, 0);
    const RigidTransformd t{test::random_rotation(rng), Vec3d(uniform(rng, -9, 9), 1, 2)};
    ASSERT_NEAR(chamfer_corner_distance(transform_box(a, t), transform_box(b, t)), d, 1e-9);
  }
}

TEST(Chamfer, ZeroOnlyForEqualCornerSets) {
  // A cube rotated by 90 degrees has the same corner set.
  Box3d a, b;
  b.rotation = rotation_z(M_PI / 2);
  EXPECT_LT(chamfer_corner_distance(a, b), 1e-15);
  b.dims = {1, 1, 1.001};
  EXPECT_GT(chamfer_corner_distance(a, b), 0);
}
