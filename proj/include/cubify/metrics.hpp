#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "cubify/geometry.hpp"

namespace cubify {

// Counter-clockwise vertex loop in the gravity plane.
template <typename Scalar>
using Polygon2 = std::vector<Vec2<Scalar>>;
using Polygon2d = Polygon2<double>;

template <typename Scalar>
Scalar polygon_area(const Polygon2<Scalar>& poly) {
  Scalar twice = 0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    twice += a.x() * b.y() - a.y() * b.x();
  }
  return twice / 2;
}

// Footprint of a gravity box, counter-clockwise.
template <typename Scalar>
Polygon2<Scalar> footprint(const GravityBox<Scalar>& box) {
  const Scalar c = std::cos(box.yaw), s = std::sin(box.yaw);
  const Vec2<Scalar> ax(c * box.dims.x() / 2, s * box.dims.x() / 2);
  const Vec2<Scalar> ay(-s * box.dims.y() / 2, c * box.dims.y() / 2);
  const Vec2<Scalar> ctr = box.center.template head<2>();
  return {ctr - ax - ay, ctr + ax - ay, ctr + ax + ay, ctr - ax + ay};
}

// Sutherland-Hodgman: clips `subject` against each edge of the convex,
// counter-clockwise `clip`. Returns an empty polygon when they are disjoint.
template <typename Scalar>
Polygon2<Scalar> convex_clip(const Polygon2<Scalar>& subject, const Polygon2<Scalar>& clip) {
  Polygon2<Scalar> out = subject;
  for (std::size_t i = 0, n = clip.size(); i < n && !out.empty(); ++i) {
    const Vec2<Scalar> a = clip[i];
    const Vec2<Scalar> edge = clip[(i + 1) % n] - a;
    auto side = [&](const Vec2<Scalar>& p) {
      const Vec2<Scalar> r = p - a;
      return edge.x() * r.y() - edge.y() * r.x();
    };
    Polygon2<Scalar> in;
    in.swap(out);
    for (std::size_t j = 0, m = in.size(); j < m; ++j) {
      const Vec2<Scalar>& cur = in[j];
      const Vec2<Scalar>& nxt = in[(j + 1) % m];
      const Scalar sc = side(cur), sn = side(nxt);
      if (sc >= 0) out.push_back(cur);
      if ((sc >= 0) != (sn >= 0)) {
        const Scalar t = sc / (sc - sn);
        out.push_back(cur + t * (nxt - cur));
      }
    }
  }
  if (out.size() < 3) out.clear();
  return out;
}

inline constexpr double kDegenerateVolume = 1e-12;

template <typename Scalar>
Scalar intersection_volume(const GravityBox<Scalar>& a, const GravityBox<Scalar>& b) {
  const Scalar z_lo = std::max(a.center.z() - a.dims.z() / 2, b.center.z() - b.dims.z() / 2);
  const Scalar z_hi = std::min(a.center.z() + a.dims.z() / 2, b.center.z() + b.dims.z() / 2);
  if (!(z_hi > z_lo)) return 0;
  const auto overlap = convex_clip(footprint(a), footprint(b));
  return std::max(Scalar(0), polygon_area(overlap)) * (z_hi - z_lo);
}

// Exact IoU of two yaw-only boxes in the same frame.
template <typename Scalar>
Scalar iou_gravity(const GravityBox<Scalar>& a, const GravityBox<Scalar>& b) {
  if (a.center == b.center && a.dims == b.dims && a.yaw == b.yaw) return Scalar(1);
  const Scalar va = box_volume(a), vb = box_volume(b);
  const bool da = va <= Scalar(kDegenerateVolume), db = vb <= Scalar(kDegenerateVolume);
  if (da || db) {
    const bool same = da && db && a.center.isApprox(b.center) && a.dims.isApprox(b.dims);
    return same ? Scalar(1) : Scalar(0);
  }
  // Overlap is symmetric in theory but clipping is not bitwise symmetric;
  // order the operands so iou(a, b) == iou(b, a) exactly.
  const bool swap = std::tie(vb, b.center.x(), b.center.y(), b.yaw) <
                    std::tie(va, a.center.x(), a.center.y(), a.yaw);
  const Scalar inter = swap ? intersection_volume(b, a) : intersection_volume(a, b);
  const Scalar iou = inter / (va + vb - inter);
  return std::clamp(iou, Scalar(0), Scalar(1));
}

template <typename Scalar>
struct MonteCarloIou {
  Scalar iou = 0;
  std::uint64_t in_union = 0;
  std::uint64_t in_intersection = 0;

  // Binomial standard error of iou given the union count.
  Scalar sigma() const {
    if (in_union == 0) return 0;
    return std::sqrt(iou * (1 - iou) / Scalar(in_union));
  }
};

// Rejection-samples the joint axis-aligned bounding volume of two 9-DOF
// boxes. Deterministic for a fixed seed.
template <typename Scalar>
MonteCarloIou<Scalar> iou_monte_carlo_detail(const Box3<Scalar>& a, const Box3<Scalar>& b,
                                             std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("iou_monte_carlo needs at least one sample");
  const Corners<Scalar> ca = box_corners(a), cb = box_corners(b);
  const Vec3<Scalar> lo = ca.rowwise().minCoeff().cwiseMin(cb.rowwise().minCoeff());
  const Vec3<Scalar> hi = ca.rowwise().maxCoeff().cwiseMax(cb.rowwise().maxCoeff());
  const Mat3<Scalar> ra = a.rotation.transpose(), rb = b.rotation.transpose();
  const Vec3<Scalar> ha = a.dims / 2, hb = b.dims / 2;

  const Vec3<Scalar> span = hi - lo;
  auto inside = [](const Mat3<Scalar>& r, const Vec3<Scalar>& d, const Vec3<Scalar>& h) {
    // branch-free: the outcome is a coin flip for the predictor
    bool in = true;
    for (int k = 0; k < 3; ++k) in &= std::abs(r(k, 0) * d.x() + r(k, 1) * d.y() + r(k, 2) * d.z()) <= h(k);
    return in;
  };
  std::mt19937_64 rng(seed);
  constexpr Scalar kScale = Scalar(0x1.0p-42);  // two draws give three 42-bit coordinates
  MonteCarloIou<Scalar> r;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const std::uint64_t u = rng(), v = rng();
    const Scalar x = Scalar(u >> 22) * kScale;
    const Scalar y = Scalar(v >> 22) * kScale;
    const Scalar z = Scalar(((u & 0x3fffff) << 20) | (v & 0xfffff)) * kScale;
    const Vec3<Scalar> p(lo.x() + span.x() * x, lo.y() + span.y() * y, lo.z() + span.z() * z);
    const bool in_a = inside(ra, p - a.center, ha);
    const bool in_b = inside(rb, p - b.center, hb);
    r.in_union += in_a | in_b;
    r.in_intersection += in_a & in_b;
  }
  r.iou = r.in_union ? Scalar(r.in_intersection) / Scalar(r.in_union) : Scalar(0);
  return r;
}

template <typename Scalar>
Scalar iou_monte_carlo(const Box3<Scalar>& a, const Box3<Scalar>& b, std::uint64_t samples,
                       std::uint64_t seed) {
  return iou_monte_carlo_detail(a, b, samples, seed).iou;
}

// Mean nearest-corner distance from a to b plus the same from b to a.
template <typename Scalar>
Scalar chamfer_corner_distance(const Corners<Scalar>& a, const Corners<Scalar>& b) {
  auto one_way = [](const Corners<Scalar>& from, const Corners<Scalar>& to) {
    Scalar sum = 0;
    for (int i = 0; i < 8; ++i) sum += (to.colwise() - from.col(i)).colwise().norm().minCoeff();
    return sum / 8;
  };
  return one_way(a, b) + one_way(b, a);
}

template <typename Box>
auto chamfer_corner_distance(const Box& a, const Box& b) {
  return chamfer_corner_distance(box_corners(a), box_corners(b));
}

}  // namespace cubify
