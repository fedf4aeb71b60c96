#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cubify/geometry.hpp"

namespace cubify {

// Andrew's monotone chain. Counter-clockwise, no repeated or collinear points.
template <typename Scalar>
std::vector<Vec2<Scalar>> convex_hull(std::vector<Vec2<Scalar>> pts, Scalar eps = Scalar(1e-12)) {
  std::sort(pts.begin(), pts.end(), [](const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (pts.size() < 3) return pts;
  auto cross = [](const Vec2<Scalar>& o, const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Vec2<Scalar>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= eps) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= eps) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

template <typename Scalar>
struct OrientedRect {
  Vec2<Scalar> center;
  Scalar length;  // along `angle`
  Scalar width;
  Scalar angle;
};

// Minimum-area enclosing rectangle of a convex CCW polygon by rotating
// calipers. One rectangle side is always flush with a hull edge; the three
// remaining support points only ever advance, so the sweep is linear.
template <typename Scalar>
OrientedRect<Scalar> min_area_rect(const std::vector<Vec2<Scalar>>& hull) {
  const std::size_t m = hull.size();
  if (m < 3) throw NumericError("enclosing rectangle needs a hull with at least 3 vertices");
  auto at = [&](std::size_t i) -> const Vec2<Scalar>& { return hull[i % m]; };

  OrientedRect<Scalar> best{};
  Scalar best_area = std::numeric_limits<Scalar>::infinity();
  std::size_t j = 1, k = 1, l = 1;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2<Scalar> e = (at(i + 1) - at(i)).normalized();
    const Vec2<Scalar> n(-e.y(), e.x());  // interior side of a CCW edge

    j = std::max(j, i + 1);
    while (j < i + m && at(j + 1).dot(e) > at(j).dot(e)) ++j;
    k = std::max(k, j);
    while (k < i + m && at(k + 1).dot(n) > at(k).dot(n)) ++k;
    l = std::max(l, k);
    while (l < i + m && at(l + 1).dot(e) < at(l).dot(e)) ++l;

    const Scalar s_lo = at(l).dot(e), s_hi = at(j).dot(e);
    const Scalar t_lo = at(i).dot(n), t_hi = at(k).dot(n);
    const Scalar area = (s_hi - s_lo) * (t_hi - t_lo);
    if (area < best_area) {
      best_area = area;
      best.center = e * ((s_lo + s_hi) / 2) + n * ((t_lo + t_hi) / 2);
      best.length = s_hi - s_lo;
      best.width = t_hi - t_lo;
      best.angle = std::atan2(e.y(), e.x());
    }
  }
  return best;
}

// Minimum-volume yaw-only box containing all eight corners of `box`.
// `to_gravity` maps the box's parent frame into a gravity-aligned frame whose
// +z opposes gravity. Height comes from the corner extent along z; since it
// does not depend on yaw, minimum footprint area gives minimum volume.
template <typename Scalar>
GravityBox<Scalar> enclosing_gravity_box(const Box3<Scalar>& box, const Mat3<Scalar>& to_gravity) {
  const Corners<Scalar> c = to_gravity * box_corners(box);
  std::vector<Vec2<Scalar>> footprint;
  footprint.reserve(8);
  for (int i = 0; i < 8; ++i) footprint.emplace_back(c(0, i), c(1, i));

  const Scalar scale = c.cwiseAbs().maxCoeff() + box.dims.maxCoeff();
  const auto hull = convex_hull(footprint, Scalar(1e-14) * scale * scale);
  if (hull.size() < 3) throw NumericError("degenerate box footprint in gravity plane");
  const auto rect = min_area_rect(hull);
  if (!(rect.length * rect.width > Scalar(0)))
    throw NumericError("degenerate box footprint in gravity plane");

  const Scalar z_lo = c.row(2).minCoeff();
  const Scalar z_hi = c.row(2).maxCoeff();
  GravityBox<Scalar> out;
  out.center << rect.center.x(), rect.center.y(), (z_lo + z_hi) / 2;
  out.dims << rect.length, rect.width, z_hi - z_lo;
  // A quarter turn with length and width swapped is the same box; report
  // yaw in [-pi/4, pi/4) so near-ties between caliper edges agree.
  Scalar yaw = normalize_angle(rect.angle);
  while (yaw >= Scalar(M_PI / 4)) {
    yaw -= Scalar(M_PI / 2);
    std::swap(out.dims.x(), out.dims.y());
  }
  while (yaw < Scalar(-M_PI / 4)) {
    yaw += Scalar(M_PI / 2);
    std::swap(out.dims.x(), out.dims.y());
  }
  out.yaw = yaw;
  return out;
}

}  // namespace cubify
