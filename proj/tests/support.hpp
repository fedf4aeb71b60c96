#pragma once

#include <cmath>
#include <random>

#include "cubify/camera.hpp"
#include "cubify/geometry.hpp"

namespace cubify::test {

inline CameraFramed pinhole(int w = 640, int h = 480, double f = 500) {
  CameraFramed cam;
  cam.intrinsics = {f, f, w / 2.0, h / 2.0, w, h};
  cam.gravity_to_camera = Mat3d::Identity();
  return cam;
}

// Moderate barrel distortion, typical of a phone wide camera.
inline CameraFramed distorted(int w = 640, int h = 480, double f = 500) {
  CameraFramed cam = pinhole(w, h, f);
  cam.distortion = {-0.12, 0.05, -0.01, 0.001, -0.0015};
  return cam;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Mat3d random_rotation(std::mt19937_64& rng) {
  return rotation_from_euler(uniform(rng, -M_PI, M_PI), uniform(rng, -M_PI / 2, M_PI / 2),
                             uniform(rng, -M_PI, M_PI));
}

inline Box3d random_box(std::mt19937_64& rng, double spread = 2.0) {
  Box3d b;
  b.center = Vec3d(uniform(rng, -spread, spread), uniform(rng, -spread, spread),
                   uniform(rng, -spread, spread));
  b.dims = Vec3d(uniform(rng, 0.1, 2), uniform(rng, 0.1, 2), uniform(rng, 0.1, 2));
  b.rotation = random_rotation(rng);
  return b;
}

inline GravityBoxd random_gravity_box(std::mt19937_64& rng, double spread = 1.0) {
  GravityBoxd b;
  b.center = Vec3d(uniform(rng, -spread, spread), uniform(rng, -spread, spread),
                   uniform(rng, -spread / 2, spread / 2));
  b.dims = Vec3d(uniform(rng, 0.2, 2), uniform(rng, 0.2, 2), uniform(rng, 0.2, 2));
  b.yaw = uniform(rng, -M_PI, M_PI);
  return b;
}

// Camera looking along world +z from the origin, gravity along camera +y.
inline Mat3d camera_gravity() {
  Mat3d g;  // gravity-frame axes expressed in camera coordinates, as columns
  g << 1, 0, 0,
       0, 0, -1,
       0, 1, 0;
  return g;
}

}  // namespace cubify::test
