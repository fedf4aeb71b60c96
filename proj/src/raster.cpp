#include "cubify/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cubify/error.hpp"

namespace cubify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fraction of the normalized image extent kept around the image when clipping
// triangles. Geometry further out cannot reach the image but could fold back
// through the distortion polynomial.
constexpr double kClipMargin = 0.15;

struct ScreenVertex {
  double u, v, inv_z;
};

using ClipPolygon = std::vector<Vec3d>;

void clip_polygon(ClipPolygon& poly, const Plane<double>& plane, ClipPolygon& scratch) {
  scratch.clear();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec3d& a = poly[i];
    const Vec3d& b = poly[(i + 1) % n];
    const double da = plane.signed_distance(a), db = plane.signed_distance(b);
    if (da >= 0) scratch.push_back(a);
    if ((da >= 0) != (db >= 0)) scratch.push_back(a + (da / (da - db)) * (b - a));
  }
  poly.swap(scratch);
}

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Pixels exactly on an edge belong to the triangle only for top and left
// edges, so shared edges are filled once.
bool top_left(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.u - a.u, dy = b.v - a.v;
  return dy < 0 || (dy == 0 && dx > 0);
}

void fill_triangle(ScreenVertex a, ScreenVertex b, ScreenVertex c, InstanceRender& out) {
  double area = edge(a.u, a.v, b.u, b.v, c.u, c.v);
  if (!(std::abs(area) > 0) || !std::isfinite(area)) return;
  if (area < 0) {
    std::swap(b, c);
    area = -area;
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.u, b.u, c.u}) - 0.5)));
  const int x1 = std::min(out.width - 1, static_cast<int>(std::ceil(std::max({a.u, b.u, c.u}) - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.v, b.v, c.v}) - 0.5)));
  const int y1 = std::min(out.height - 1, static_cast<int>(std::ceil(std::max({a.v, b.v, c.v}) - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  const bool tl_bc = top_left(b, c), tl_ca = top_left(c, a), tl_ab = top_left(a, b);
  const double inv_area = 1.0 / area;
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double w0 = edge(b.u, b.v, c.u, c.v, px, py);
      const double w1 = edge(c.u, c.v, a.u, a.v, px, py);
      const double w2 = edge(a.u, a.v, b.u, b.v, px, py);
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      if ((w0 == 0 && !tl_bc) || (w1 == 0 && !tl_ca) || (w2 == 0 && !tl_ab)) continue;
      const double inv_z = (w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z) * inv_area;
      const double z = 1.0 / inv_z;
      double& d = out.depth(y, x);
      if (z < d) {
        d = z;
        out.mask(y, x) = true;
        out.x0 = std::min(out.x0, x);
        out.x1 = std::max(out.x1, x);
        out.y0 = std::min(out.y0, y);
        out.y1 = std::max(out.y1, y);
      }
    }
  }
}

}  // namespace

std::vector<Triangle> tessellate_box(const Box3d& box, int subdivisions) {
  if (subdivisions < 1) throw ValidationError("tessellate_box: subdivisions must be >= 1");
  const int s = subdivisions;
  const Vec3d half = box.dims / 2;
  // Local coordinate of grid line i along axis k, shared by every face.
  auto coord = [&](int k, int i) { return half[k] * (2.0 * i / s - 1.0); };

  std::vector<Triangle> tris;
  tris.reserve(12 * s * s);
  for (int axis = 0; axis < 3; ++axis) {
    const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      auto vertex = [&](int i, int j) {
        Vec3d local;
        local[axis] = side ? half[axis] : -half[axis];
        local[ua] = coord(ua, i);
        local[va] = coord(va, j);
        return Vec3d(box.rotation * local + box.center);
      };
      for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
          const Vec3d p00 = vertex(i, j), p10 = vertex(i + 1, j);
          const Vec3d p01 = vertex(i, j + 1), p11 = vertex(i + 1, j + 1);
          tris.push_back({p00, p10, p11});
          tris.push_back({p00, p11, p01});
        }
      }
    }
  }
  return tris;
}

RasterTarget::RasterTarget(const CameraFramed& camera, int width, int height)
    : camera_(camera.rescaled(width, height)) {
  if (width <= 0 || height <= 0) throw ValidationError("render resolution must be positive");
  const auto b = normalized_image_bounds(camera_);
  const double mx = kClipMargin * (b(0, 1) - b(0, 0));
  const double my = kClipMargin * (b(1, 1) - b(1, 0));
  auto side = [](double a, double bb, double c) {
    return Plane<double>{Vec3d(a, bb, c).normalized(), 0.0};
  };
  clip_planes_[0] = {Vec3d::UnitZ(), -camera_.near};
  clip_planes_[1] = side(1, 0, -(b(0, 0) - mx));
  clip_planes_[2] = side(-1, 0, b(0, 1) + mx);
  clip_planes_[3] = side(0, 1, -(b(1, 0) - my));
  clip_planes_[4] = side(0, -1, b(1, 1) + my);
}

InstanceRender RasterTarget::rasterize(const Box3d& box, int subdivisions,
                                       std::size_t box_id) const {
  InstanceRender out;
  out.width = width();
  out.height = height();
  out.box_id = box_id;
  out.mask = Mask::Constant(out.height, out.width, false);
  out.depth = DepthImage::Constant(out.height, out.width, kInf);
  out.x0 = out.width;
  out.y0 = out.height;

  const Corners<double> corners = box_corners(box);
  if ((corners.row(2).array() <= camera_.near).all()) return out;

  const auto& k = camera_.intrinsics;
  const auto& dist = camera_.distortion;
  auto to_screen = [&](const Vec3d& p) {
    const Vec2d d = dist.apply(Vec2d(p.x() / p.z(), p.y() / p.z()));
    return ScreenVertex{k.fx * d.x() + k.cx, k.fy * d.y() + k.cy, 1.0 / p.z()};
  };

  // With every corner past the near plane nothing is clipped open, and faces
  // turned away from the camera lie behind the front ones.
  const bool closed = (corners.row(2).array() > camera_.near).all();
  std::array<bool, 6> facing{};
  for (int f = 0; f < 6; ++f) {  // same order as tessellate_box: axis, then side
    const Vec3d n = box.rotation.col(f / 2) * (f % 2 ? 1.0 : -1.0);
    facing[f] = !closed || n.dot(box.center + n * (box.dims[f / 2] / 2)) < 0;
  }

  // clipping leaves triangles of a box wholly inside the clip volume untouched
  bool inside_all = true;
  for (const auto& plane : clip_planes_)
    for (int i = 0; i < 8; ++i) inside_all = inside_all && plane.signed_distance(corners.col(i)) >= 0;

  const std::vector<Triangle> tris = tessellate_box(box, subdivisions);
  const std::size_t per_face = tris.size() / 6;
  ClipPolygon poly, scratch;
  std::vector<ScreenVertex> screen;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (!facing[t / per_face]) continue;
    const Triangle& tri = tris[t];
    poly.assign(tri.begin(), tri.end());
    for (const auto& plane : clip_planes_) {
      if (inside_all) break;
      clip_polygon(poly, plane, scratch);
      if (poly.size() < 3) break;
    }
    if (poly.size() < 3) continue;
    screen.clear();
    for (const Vec3d& p : poly) screen.push_back(to_screen(p));
    for (std::size_t i = 1; i + 1 < screen.size(); ++i)
      fill_triangle(screen[0], screen[i], screen[i + 1], out);
  }
  return out;
}

InstanceRender rasterize_box(const CameraFramed& camera, const Box3d& box, int width, int height,
                             int subdivisions, std::size_t box_id) {
  return RasterTarget(camera, width, height).rasterize(box, subdivisions, box_id);
}

std::vector<Mask> composite_visibility(std::span<const InstanceRender> renders) {
  std::vector<Mask> out;
  if (renders.empty()) return out;
  const int w = renders.front().width, h = renders.front().height;
  for (const auto& r : renders) {
    if (r.width != w || r.height != h || r.mask.rows() != h || r.mask.cols() != w)
      throw ValidationError("composite_visibility: renders have different resolutions");
    out.push_back(Mask::Constant(h, w, false));
  }
  // render by render, so each mask is read sequentially
  const std::size_t none = renders.size();
  std::vector<std::size_t> best(std::size_t(w) * h, none);
  for (std::size_t i = 0; i < renders.size(); ++i) {
    const InstanceRender& r = renders[i];
    const int x0 = std::max(0, r.x0), x1 = std::min(w - 1, r.x1);
    for (int y = std::max(0, r.y0); y <= std::min(h - 1, r.y1); ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (!r.mask(y, x)) continue;
        std::size_t& b = best[std::size_t(y) * w + x];
        if (b != none) {
          const double di = r.depth(y, x), db = renders[b].depth(y, x);
          if (!(di < db || (di == db && r.box_id < renders[b].box_id))) continue;
        }
        b = i;
      }
    }
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (const std::size_t b = best[std::size_t(y) * w + x]; b != none) out[b](y, x) = true;
  return out;
}

}  // namespace cubify
