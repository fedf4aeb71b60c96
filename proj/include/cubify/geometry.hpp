#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cubify/error.hpp"

namespace cubify {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
// One corner per column, see box_corners for the ordering.
template <typename Scalar>
using Corners = Eigen::Matrix<Scalar, 3, 8>;

enum class FrameTag { kWorld, kCamera, kGravity };

inline constexpr double kRotationTolerance = 1e-6;

template <typename Scalar>
bool is_rotation(const Mat3<Scalar>& m, Scalar tol = Scalar(kRotationTolerance)) {
  if (!m.allFinite()) return false;
  const Mat3<Scalar> gram = m.transpose() * m;
  return (gram - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - Scalar(1)) <= tol;
}

template <typename Scalar>
Mat3<Scalar> rotation_z(Scalar yaw) {
  return Eigen::AngleAxis<Scalar>(yaw, Vec3<Scalar>::UnitZ()).toRotationMatrix();
}

// Intrinsic Z(yaw) * Y(pitch) * X(roll). The only Euler convention in the
// toolkit; used when reading or writing orientation as angles.
template <typename Scalar>
Mat3<Scalar> rotation_from_euler(Scalar yaw, Scalar pitch, Scalar roll) {
  return (Eigen::AngleAxis<Scalar>(yaw, Vec3<Scalar>::UnitZ()) *
          Eigen::AngleAxis<Scalar>(pitch, Vec3<Scalar>::UnitY()) *
          Eigen::AngleAxis<Scalar>(roll, Vec3<Scalar>::UnitX()))
      .toRotationMatrix();
}

// Wraps an angle into [-pi, pi).
template <typename Scalar>
Scalar normalize_angle(Scalar a) {
  const Scalar two_pi = Scalar(2 * M_PI);
  a = std::fmod(a + Scalar(M_PI), two_pi);
  if (a < 0) a += two_pi;
  a -= Scalar(M_PI);
  return a >= Scalar(M_PI) ? a - two_pi : a;
}

template <typename Scalar>
struct RigidTransform {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  Vec3<Scalar> operator()(const Vec3<Scalar>& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }
};

// 9-DOF oriented box. `rotation` maps box-local axes into the parent frame;
// dims are full edge lengths (length along local x, width y, height z).
template <typename Scalar>
struct Box3 {
  Vec3<Scalar> center = Vec3<Scalar>::Zero();
  Vec3<Scalar> dims = Vec3<Scalar>::Ones();
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  FrameTag frame = FrameTag::kWorld;
};

// 7-DOF box in a gravity-aligned frame (z opposes gravity); yaw about +z.
template <typename Scalar>
struct GravityBox {
  Vec3<Scalar> center = Vec3<Scalar>::Zero();
  Vec3<Scalar> dims = Vec3<Scalar>::Ones();
  Scalar yaw = 0;
};

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using RigidTransformd = RigidTransform<double>;
using Box3d = Box3<double>;
using GravityBoxd = GravityBox<double>;

template <typename Scalar>
void validate(const Box3<Scalar>& box) {
  if (!box.center.allFinite()) throw ValidationError("box center is not finite");
  if (!box.dims.allFinite() || (box.dims.array() <= 0).any())
    throw ValidationError("box dims must be strictly positive");
  if (!is_rotation(box.rotation)) throw ValidationError("box rotation is not orthonormal with det +1");
}

template <typename Scalar>
void validate(const GravityBox<Scalar>& box) {
  if (!box.center.allFinite()) throw ValidationError("box center is not finite");
  if (!box.dims.allFinite() || (box.dims.array() <= 0).any())
    throw ValidationError("box dims must be strictly positive");
  if (!std::isfinite(box.yaw)) throw ValidationError("box yaw is not finite");
}

template <typename Scalar>
Box3<Scalar> to_box3(const GravityBox<Scalar>& g) {
  return {g.center, g.dims, rotation_z(g.yaw), FrameTag::kGravity};
}

// Unit-cube corner signs. Corner i has x sign from bit 0, y from bit 1,
// z from bit 2 (bit set means +).
template <typename Scalar>
Corners<Scalar> unit_corner_signs() {
  Corners<Scalar> s;
  for (int i = 0; i < 8; ++i) {
    s.col(i) << ((i & 1) ? 1 : -1), ((i & 2) ? 1 : -1), ((i & 4) ? 1 : -1);
  }
  return s;
}

template <typename Scalar>
Corners<Scalar> box_corners(const Box3<Scalar>& box) {
  const Vec3<Scalar> half = box.dims / Scalar(2);
  Corners<Scalar> local = unit_corner_signs<Scalar>().array().colwise() * half.array();
  return (box.rotation * local).colwise() + box.center;
}

template <typename Scalar>
Corners<Scalar> box_corners(const GravityBox<Scalar>& box) {
  return box_corners(to_box3(box));
}

template <typename Scalar>
Box3<Scalar> transform_box(const Box3<Scalar>& box, const RigidTransform<Scalar>& rt,
                           FrameTag target) {
  return {rt(box.center), box.dims, rt.rotation * box.rotation, target};
}

template <typename Scalar>
Box3<Scalar> transform_box(const Box3<Scalar>& box, const RigidTransform<Scalar>& rt) {
  return transform_box(box, rt, box.frame);
}

template <typename Scalar>
Scalar box_volume(const Box3<Scalar>& box) {
  return box.dims.prod();
}

template <typename Scalar>
Scalar box_volume(const GravityBox<Scalar>& box) {
  return box.dims.prod();
}

// Point containment with an absolute inflation on every face.
template <typename Scalar>
bool box_contains(const Box3<Scalar>& box, const Vec3<Scalar>& p, Scalar inflate = 0) {
  const Vec3<Scalar> local = box.rotation.transpose() * (p - box.center);
  return (local.cwiseAbs().array() <= (box.dims / Scalar(2)).array() + inflate).all();
}

template <typename Scalar>
struct RaySegment {
  Scalar t_near;
  Scalar t_far;
};

// Slab test in the box frame. The returned interval is clipped to t >= 0, so a
// ray starting inside the box reports t_near = 0.
template <typename Scalar>
std::optional<RaySegment<Scalar>> ray_box_segment(const Vec3<Scalar>& origin,
                                                  const Vec3<Scalar>& dir,
                                                  const Box3<Scalar>& box) {
  const Vec3<Scalar> o = box.rotation.transpose() * (origin - box.center);
  const Vec3<Scalar> d = box.rotation.transpose() * dir;
  const Vec3<Scalar> half = box.dims / Scalar(2);
  Scalar t0 = 0;
  Scalar t1 = std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d[k] == Scalar(0)) {
      if (std::abs(o[k]) > half[k]) return std::nullopt;
      continue;
    }
    const Scalar inv = Scalar(1) / d[k];
    Scalar ta = (-half[k] - o[k]) * inv;
    Scalar tb = (half[k] - o[k]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return RaySegment<Scalar>{t0, t1};
}

}  // namespace cubify
