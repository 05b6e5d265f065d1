#include "eitws/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace eitws {

namespace {
constexpr double kOrthoTol = 1e-12;
}

Mat3 rotation_about_axis(const Vec3& axis, double angle) {
  const Vec3 u = normalized(axis);
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Mat3 r;
  r.a = {c + t * u.x * u.x,       t * u.x * u.y - s * u.z, t * u.x * u.z + s * u.y,
         t * u.x * u.y + s * u.z, c + t * u.y * u.y,       t * u.y * u.z - s * u.x,
         t * u.x * u.z - s * u.y, t * u.y * u.z + s * u.x, c + t * u.z * u.z};
  return r;
}

bool is_spd(const std::array<double, 6>& e) {
  const double a11 = e[0], a12 = e[1], a13 = e[2], a22 = e[3], a23 = e[4], a33 = e[5];
  if (!(a11 > 0.0)) return false;
  const double m2 = a11 * a22 - a12 * a12;
  if (!(m2 > 0.0)) return false;
  const double d = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                   a13 * (a12 * a23 - a22 * a13);
  return d > 0.0 && std::isfinite(d);
}

SpdTensor3::SpdTensor3(const std::array<double, 6>& entries) : e_(entries) {
  if (!is_spd(e_)) throw DomainError("tensors", "matrix is not symmetric positive definite");
}

SpdTensor3 spd_from_entries_unchecked(const std::array<double, 6>& entries) {
  return SpdTensor3(entries, SpdTensor3::unchecked_tag{});
}

double SpdTensor3::det() const {
  const double a11 = e_[0], a12 = e_[1], a13 = e_[2], a22 = e_[3], a23 = e_[4], a33 = e_[5];
  return a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
         a13 * (a12 * a23 - a22 * a13);
}

SpdTensor3 SpdTensor3::adjugate_unchecked() const {
  const double a11 = e_[0], a12 = e_[1], a13 = e_[2], a22 = e_[3], a23 = e_[4], a33 = e_[5];
  return spd_from_entries_unchecked({a22 * a33 - a23 * a23, a13 * a23 - a12 * a33,
                                     a12 * a23 - a13 * a22, a11 * a33 - a13 * a13,
                                     a12 * a13 - a11 * a23, a11 * a22 - a12 * a12});
}

std::array<double, 3> SpdTensor3::eigenvalues() const {
  // Trigonometric solution of the characteristic cubic for a symmetric 3x3.
  const double a11 = e_[0], a12 = e_[1], a13 = e_[2], a22 = e_[3], a23 = e_[4], a33 = e_[5];
  const double p1 = a12 * a12 + a13 * a13 + a23 * a23;
  if (p1 == 0.0) {
    std::array<double, 3> d = {a11, a22, a33};
    std::sort(d.begin(), d.end());
    return d;
  }
  const double q = trace() / 3.0;
  const double p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) +
                    2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  // B = (A - q I)/p ; r = det(B)/2 in [-1, 1] up to rounding.
  const double b11 = (a11 - q) / p, b22 = (a22 - q) / p, b33 = (a33 - q) / p;
  const double b12 = a12 / p, b13 = a13 / p, b23 = a23 / p;
  double r = 0.5 * (b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) +
                    b13 * (b12 * b23 - b22 * b13));
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double l_max = q + 2.0 * p * std::cos(phi);
  const double l_min = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  const double l_mid = 3.0 * q - l_max - l_min;
  return {l_min, l_mid, l_max};
}

Vec3 SpdTensor3::principal_axis() const {
  const double lambda = eigenvalues()[2];
  // Rows of (A - lambda I); the eigenvector is orthogonal to all of them,
  // so a cross product of the two most independent rows recovers it.
  const Vec3 r0{e_[0] - lambda, e_[1], e_[2]};
  const Vec3 r1{e_[1], e_[3] - lambda, e_[4]};
  const Vec3 r2{e_[2], e_[4], e_[5] - lambda};
  const Vec3 c01 = cross(r0, r1), c02 = cross(r0, r2), c12 = cross(r1, r2);
  const double n01 = dot(c01, c01), n02 = dot(c02, c02), n12 = dot(c12, c12);
  Vec3 best = c01;
  double best_n = n01;
  if (n02 > best_n) {
    best = c02;
    best_n = n02;
  }
  if (n12 > best_n) {
    best = c12;
    best_n = n12;
  }
  if (best_n == 0.0) return {1, 0, 0};  // isotropic: any direction
  return normalized(best);
}

SpdTensor3 SpdTensor3::congruence(const Mat3& r) const {
  // Compute R * A * R^T.
  Mat3 full;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) full(i, j) = (*this)(i, j);
  const Mat3 m = r * full * r.transposed();
  return spd_from_entries_unchecked(
      {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(0, 2) + m(2, 0)), m(1, 1),
       0.5 * (m(1, 2) + m(2, 1)), m(2, 2)});
}

double SpdTensor3::frobenius() const {
  return std::sqrt(e_[0] * e_[0] + e_[3] * e_[3] + e_[5] * e_[5] +
                   2.0 * (e_[1] * e_[1] + e_[2] * e_[2] + e_[4] * e_[4]));
}

double frobenius_distance(const SpdTensor3& a, const SpdTensor3& b) {
  std::array<double, 6> d;
  for (int i = 0; i < 6; ++i) d[i] = a.entries()[i] - b.entries()[i];
  return std::sqrt(d[0] * d[0] + d[3] * d[3] + d[5] * d[5] +
                   2.0 * (d[1] * d[1] + d[2] * d[2] + d[4] * d[4]));
}

SpdTensor3 metric_from_conductivity(const SpdTensor3& gamma) {
  if (!is_spd(gamma.entries())) throw DomainError("tensors", "conductivity is not SPD");
  // (det A) A^{-1} is exactly the adjugate; no divisions needed.
  return SpdTensor3(gamma.adjugate_unchecked().entries());
}

SpdTensor3 conductivity_from_metric(const SpdTensor3& metric) {
  if (!is_spd(metric.entries())) throw DomainError("tensors", "metric is not SPD");
  const double scale = 1.0 / std::sqrt(metric.det());
  const SpdTensor3 adj = metric.adjugate_unchecked();
  std::array<double, 6> e;
  for (int i = 0; i < 6; ++i) e[i] = scale * adj.entries()[i];
  return SpdTensor3(e);
}

bool ellipticity_check(const SpdTensor3& gamma, double lambda0) {
  if (!(lambda0 > 0.0 && lambda0 <= 1.0))
    throw DomainError("tensors", "ellipticity constant must lie in (0, 1]");
  const auto ev = gamma.eigenvalues();
  return ev[0] >= lambda0 && ev[2] <= 1.0 / lambda0;
}

SymMat2 restriction_entries(const SpdTensor3& g, const Vec3& v1, const Vec3& v2) {
  return {g.quad(v1), g.bilinear(v1, v2), g.quad(v2)};
}

SymMat2 tangential_restriction(const SpdTensor3& g, const Vec3& v1, const Vec3& v2) {
  if (std::abs(dot(v1, v1) - 1.0) > kOrthoTol || std::abs(dot(v2, v2) - 1.0) > kOrthoTol ||
      std::abs(dot(v1, v2)) > kOrthoTol)
    throw DomainError("tensors", "tangent basis is not orthonormal");
  return restriction_entries(g, v1, v2);
}

std::array<std::array<Vec3, 2>, 3> probe_bases_local(const ProbeFrame& frame) {
  const double a = frame.alpha, b = frame.beta, d = frame.delta;
  const double na = std::sqrt(1.0 + a * a);
  const double nb = std::sqrt(1.0 + b * b);
  const double nd = std::sqrt(1.0 + d * d);
  const Vec3 e1{1, 0, 0}, e2{0, 1, 0};
  return {{{e1, e2},
           {e1, Vec3{0, 1.0 / na, a / na}},
           {Vec3{1.0 / nd, 0, d / nd}, Vec3{0, 1.0 / nb, b / nb}}}};
}

double RecoveryDiagnostics::max_residual() const {
  return std::max({std::abs(residual_g2_11), std::abs(residual_g3_22), std::abs(residual_g3_12)});
}

SpdTensor3 recover_full_metric(const SymMat2& g1, const SymMat2& g2, const SymMat2& g3,
                               const ProbeFrame& frame, const FrameThresholds& thresholds,
                               RecoveryDiagnostics* diagnostics) {
  const double a = frame.alpha, b = frame.beta, d = frame.delta;
  if (std::abs(a) < thresholds.alpha_min || std::abs(d) < thresholds.delta_min)
    throw DomainError("tensors", "degenerate frame: |alpha| or |delta| below threshold");

  const double m11 = g1.a11;
  const double m12 = g1.a12;
  const double m22 = g1.a22;
  const double m13 = (std::sqrt(1.0 + a * a) * g2.a12 - m12) / a;
  const double m33 = ((1.0 + d * d) * g3.a11 - m11 - 2.0 * d * m13) / (d * d);
  const double m23 = ((1.0 + a * a) * g2.a22 - m22 - a * a * m33) / (2.0 * a);

  const std::array<double, 6> entries = {m11, m12, m13, m22, m23, m33};
  if (diagnostics) {
    // The construction never consumes (g2)_11, (g3)_22, (g3)_12; their misfit
    // against the recovered tensor signals noisy or inconsistent inputs.
    const double nb2 = 1.0 + b * b, nd2 = 1.0 + d * d;
    const double pred_g2_11 = m11;
    const double pred_g3_22 = (m22 + 2.0 * b * m23 + b * b * m33) / nb2;
    const double pred_g3_12 = (m12 + b * m13 + d * m23 + d * b * m33) / std::sqrt(nd2 * nb2);
    diagnostics->residual_g2_11 = g2.a11 - pred_g2_11;
    diagnostics->residual_g3_22 = g3.a22 - pred_g3_22;
    diagnostics->residual_g3_12 = g3.a12 - pred_g3_12;
  }
  if (!is_spd(entries))
    throw ReconstructError("tensors", "recovery failed: assembled metric is not SPD");
  return SpdTensor3(entries);
}

std::ostream& operator<<(std::ostream& os, const SpdTensor3& t) {
  const auto& e = t.entries();
  os << "[" << e[0] << ", " << e[1] << ", " << e[2] << "; " << e[1] << ", " << e[3] << ", " << e[4]
     << "; " << e[2] << ", " << e[4] << ", " << e[5] << "]";
  return os;
}

}  // namespace eitws
