#pragma once

// Shared test helpers: seeded random SPD tensors, rotations, and frames.

#include <random>

#include "eitws/tensor.hpp"

namespace eitws::testing {

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  Vec3 axis;
  do {
    axis = {unit(rng), unit(rng), unit(rng)};
  } while (norm(axis) < 1e-3);
  return rotation_about_axis(axis, angle(rng));
}

// Random SPD tensor with eigenvalues drawn from [lo, hi].
inline SpdTensor3 random_spd(std::mt19937_64& rng, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> eig(lo, hi);
  const Mat3 r = random_rotation(rng);
  const double d[3] = {eig(rng), eig(rng), eig(rng)};
  std::array<double, 6> e{};
  auto entry = [&](int i, int j) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += r(i, k) * d[k] * r(j, k);
    return s;
  };
  e = {entry(0, 0), entry(0, 1), entry(0, 2), entry(1, 1), entry(1, 2), entry(2, 2)};
  return SpdTensor3(e);
}

// Synthetic admissible probe frame with the stated slopes; the normals are
// consistent with the recovery construction in the local frame.
inline ProbeFrame synthetic_frame(double alpha, double beta, double delta,
                                  const Mat3& axes = Mat3::identity()) {
  ProbeFrame f;
  f.alpha = alpha;
  f.beta = beta;
  f.delta = delta;
  f.axes = axes;
  f.p1 = {0, 0, 0};
  f.p2 = axes * Vec3{0, 0.1, 0};
  f.p3 = axes * Vec3{0.1, 0, 0};
  const double n2 = std::sqrt(1.0 + alpha * alpha);
  const double n3 = std::sqrt(1.0 + beta * beta + delta * delta);
  f.nu1 = axes * Vec3{0, 0, -1};
  f.nu2 = axes * Vec3{0, alpha / n2, -1.0 / n2};
  f.nu3 = axes * Vec3{delta / n3, beta / n3, -1.0 / n3};
  return f;
}

}  // namespace eitws::testing
