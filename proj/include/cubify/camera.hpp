#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "cubify/geometry.hpp"

namespace cubify {

// Pixel coordinates are continuous: pixel (i, j) covers [i, i+1) x [j, j+1)
// and its center sits at (i + 0.5, j + 0.5).
template <typename Scalar>
struct Intrinsics {
  Scalar fx = 1, fy = 1;
  Scalar cx = 0, cy = 0;
  int width = 0, height = 0;

  // Same camera sampled on a width x height grid covering the same image.
  Intrinsics rescaled(int w, int h) const {
    const Scalar sx = Scalar(w) / Scalar(width);
    const Scalar sy = Scalar(h) / Scalar(height);
    return {fx * sx, fy * sy, cx * sx, cy * sy, w, h};
  }
};

// Brown-Conrady radial (k1, k2, k3) and tangential (p1, p2) terms acting on
// normalized image coordinates.
template <typename Scalar>
struct Distortion {
  Scalar k1 = 0, k2 = 0, k3 = 0;
  Scalar p1 = 0, p2 = 0;

  bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0 && p1 == 0 && p2 == 0; }

  Vec2<Scalar> apply(const Vec2<Scalar>& n) const {
    const Scalar x = n.x(), y = n.y();
    const Scalar r2 = x * x + y * y;
    const Scalar radial = 1 + r2 * (k1 + r2 * (k2 + r2 * k3));
    return {x * radial + 2 * p1 * x * y + p2 * (r2 + 2 * x * x),
            y * radial + p1 * (r2 + 2 * y * y) + 2 * p2 * x * y};
  }
};

template <typename Scalar>
struct CameraFrame {
  Intrinsics<Scalar> intrinsics;
  Distortion<Scalar> distortion;
  RigidTransform<Scalar> world_to_camera;
  std::optional<Mat3<Scalar>> gravity_to_camera;
  Scalar near = Scalar(0.1);
  Scalar far = Scalar(5.0);

  CameraFrame rescaled(int w, int h) const {
    CameraFrame out = *this;
    out.intrinsics = intrinsics.rescaled(w, h);
    return out;
  }

  // Rotation from camera coordinates into the gravity-aligned frame.
  Mat3<Scalar> camera_to_gravity() const {
    if (!gravity_to_camera) throw ValidationError("camera frame has no gravity rotation");
    return gravity_to_camera->transpose();
  }
};

using Intrinsicsd = Intrinsics<double>;
using Distortiond = Distortion<double>;
using CameraFramed = CameraFrame<double>;

template <typename Scalar>
void validate(const CameraFrame<Scalar>& cam) {
  const auto& k = cam.intrinsics;
  if (!(k.fx > 0 && k.fy > 0)) throw ValidationError("intrinsics: focal lengths must be positive");
  if (k.width <= 0 || k.height <= 0) throw ValidationError("intrinsics: image size must be positive");
  if (!(k.cx > 0 && k.cx < k.width && k.cy > 0 && k.cy < k.height))
    throw ValidationError("intrinsics: principal point outside the image");
  const auto& d = cam.distortion;
  if (!std::isfinite(d.k1) || !std::isfinite(d.k2) || !std::isfinite(d.k3) ||
      !std::isfinite(d.p1) || !std::isfinite(d.p2))
    throw ValidationError("distortion coefficients must be finite");
  if (!is_rotation(cam.world_to_camera.rotation) || !cam.world_to_camera.translation.allFinite())
    throw ValidationError("world_to_camera is not a rigid transform");
  if (cam.gravity_to_camera && !is_rotation(*cam.gravity_to_camera))
    throw ValidationError("gravity_to_camera is not a rotation");
  if (!(cam.near > 0 && cam.near < cam.far)) throw ValidationError("require 0 < near < far");
}

template <typename Scalar>
std::optional<Vec2<Scalar>> project(const CameraFrame<Scalar>& cam, const Vec3<Scalar>& p) {
  if (!(p.z() > 0)) return std::nullopt;
  const Vec2<Scalar> d = cam.distortion.apply(Vec2<Scalar>(p.x() / p.z(), p.y() / p.z()));
  const auto& k = cam.intrinsics;
  return Vec2<Scalar>(k.fx * d.x() + k.cx, k.fy * d.y() + k.cy);
}

inline constexpr int kUndistortMaxIterations = 20;
inline constexpr double kUndistortTolerance = 1e-10;

// Pixel to normalized coordinates, inverting the distortion by Newton
// iteration on the distortion map. Throws NumericError if the iteration has not
// settled to kUndistortTolerance after kUndistortMaxIterations steps, or settles
// beyond the point where the radial distortion stops increasing.
template <typename Scalar>
Vec2<Scalar> undistort(const CameraFrame<Scalar>& cam, const Vec2<Scalar>& pixel) {
  const auto& k = cam.intrinsics;
  const Vec2<Scalar> target((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy);
  const auto& d = cam.distortion;
  if (d.is_zero()) return target;

  Vec2<Scalar> n = target;
  for (int it = 0; it < kUndistortMaxIterations; ++it) {
    const Scalar x = n.x(), y = n.y();
    const Scalar r2 = x * x + y * y;
    const Scalar radial = 1 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
    const Scalar g = d.k1 + r2 * (2 * d.k2 + 3 * r2 * d.k3);  // d radial / d r2
    const Vec2<Scalar> f(x * radial + 2 * d.p1 * x * y + d.p2 * (r2 + 2 * x * x) - target.x(),
                         y * radial + d.p1 * (r2 + 2 * y * y) + 2 * d.p2 * x * y - target.y());
    const Scalar cross = 2 * x * y * g + 2 * d.p1 * x + 2 * d.p2 * y;
    Eigen::Matrix<Scalar, 2, 2> jac;
    jac << radial + 2 * x * x * g + 2 * d.p1 * y + 6 * d.p2 * x, cross,
           cross, radial + 2 * y * y * g + 6 * d.p1 * y + 2 * d.p2 * x;
    const Vec2<Scalar> step = jac.inverse() * f;
    n -= step;
    if (!n.allFinite()) break;
    if (step.template lpNorm<Eigen::Infinity>() < Scalar(kUndistortTolerance)) {
      // a root past the fold of the radial polynomial is not the physical ray
      const Scalar s2 = n.squaredNorm();
      const Scalar rad = 1 + s2 * (d.k1 + s2 * (d.k2 + s2 * d.k3));
      if (rad > 0 && rad + 2 * s2 * (d.k1 + s2 * (2 * d.k2 + 3 * s2 * d.k3)) > 0) return n;
      break;
    }
  }
  throw NumericError("undistortion did not converge");
}

template <typename Scalar>
Vec3<Scalar> backproject(const CameraFrame<Scalar>& cam, const Vec2<Scalar>& pixel, Scalar z) {
  if (!(z > 0)) throw ValidationError("backproject requires positive depth");
  const Vec2<Scalar> n = undistort(cam, pixel);
  return {n.x() * z, n.y() * z, z};
}

// Half-space normal . p + offset >= 0.
template <typename Scalar>
struct Plane {
  Vec3<Scalar> normal;
  Scalar offset;

  Scalar signed_distance(const Vec3<Scalar>& p) const { return normal.dot(p) + offset; }
};

// Camera-frame viewing volume: near, far, left, right, top, bottom.
template <typename Scalar>
struct Frustum {
  std::array<Plane<Scalar>, 6> planes;

  bool contains(const Vec3<Scalar>& p, Scalar tol = 0) const {
    for (const auto& pl : planes)
      if (pl.signed_distance(p) < -tol) return false;
    return true;
  }
};

// Normalized-coordinate extent of the image after undistortion. The image
// region maps to a topological disk, so its extremes lie on the border; with
// distortion the border is curved and the four corner rays alone would not
// bound it, hence every border sample is visited.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> normalized_image_bounds(const CameraFrame<Scalar>& cam) {
  const int w = cam.intrinsics.width, h = cam.intrinsics.height;
  Vec2<Scalar> lo = Vec2<Scalar>::Constant(std::numeric_limits<Scalar>::infinity());
  Vec2<Scalar> hi = -lo;
  auto visit = [&](Scalar u, Scalar v) {
    const Vec2<Scalar> n = undistort(cam, Vec2<Scalar>(u, v));
    lo = lo.cwiseMin(n);
    hi = hi.cwiseMax(n);
  };
  if (cam.distortion.is_zero()) {
    visit(0, 0);
    visit(Scalar(w), Scalar(h));
  } else {
    for (int u = 0; u <= w; ++u) {
      visit(Scalar(u), 0);
      visit(Scalar(u), Scalar(h));
    }
    for (int v = 0; v <= h; ++v) {
      visit(0, Scalar(v));
      visit(Scalar(w), Scalar(v));
    }
  }
  Eigen::Matrix<Scalar, 2, 2> out;
  out.col(0) = lo;
  out.col(1) = hi;
  return out;
}

template <typename Scalar>
Frustum<Scalar> build_frustum(const CameraFrame<Scalar>& cam) {
  const auto b = normalized_image_bounds(cam);
  const Scalar pad = Scalar(1e-9);
  const Scalar x_lo = b(0, 0) - pad, x_hi = b(0, 1) + pad;
  const Scalar y_lo = b(1, 0) - pad, y_hi = b(1, 1) + pad;
  auto side = [](Scalar a, Scalar bb, Scalar c) {
    Vec3<Scalar> n(a, bb, c);
    return Plane<Scalar>{n.normalized(), 0};
  };
  Frustum<Scalar> f;
  f.planes[0] = {Vec3<Scalar>::UnitZ(), -cam.near};
  f.planes[1] = {-Vec3<Scalar>::UnitZ(), cam.far};
  f.planes[2] = side(1, 0, -x_lo);   // x >= x_lo z
  f.planes[3] = side(-1, 0, x_hi);   // x <= x_hi z
  f.planes[4] = side(0, 1, -y_lo);   // y >= y_lo z
  f.planes[5] = side(0, -1, y_hi);   // y <= y_hi z
  return f;
}

// Conservative: rejects only when all corners lie strictly outside one plane.
template <typename Scalar>
bool frustum_cull(const Frustum<Scalar>& frustum, const Box3<Scalar>& box) {
  const Corners<Scalar> c = box_corners(box);
  for (const auto& pl : frustum.planes) {
    bool all_out = true;
    for (int i = 0; i < 8 && all_out; ++i) all_out = pl.signed_distance(c.col(i)) < 0;
    if (all_out) return false;
  }
  return true;
}

}  // namespace cubify
