#pragma once

// Exact algebra layer: SPD 3x3 tensors, the conductivity<->metric transforms,
// tangential restrictions to boundary tangent planes, and the six-entry
// metric recovery from three probe points.

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>

#include "eitws/errors.hpp"

namespace eitws {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

// Dense 3x3 matrix, row major. Used for rotations and frame changes.
struct Mat3 {
  std::array<double, 9> a{};

  double& operator()(int i, int j) { return a[3 * i + j]; }
  double operator()(int i, int j) const { return a[3 * i + j]; }

  static Mat3 identity() {
    Mat3 m;
    m.a = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return m;
  }
  static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    Mat3 m;
    m.a = {c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z};
    return m;
  }

  Vec3 col(int j) const { return {a[j], a[3 + j], a[6 + j]}; }
  Mat3 transposed() const {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = (*this)(j, i);
    return m;
  }

  Vec3 operator*(const Vec3& v) const {
    return {a[0] * v.x + a[1] * v.y + a[2] * v.z, a[3] * v.x + a[4] * v.y + a[5] * v.z,
            a[6] * v.x + a[7] * v.y + a[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        m(i, j) = s;
      }
    return m;
  }
};

// Rotation by angle (radians) about a (not necessarily unit) axis.
Mat3 rotation_about_axis(const Vec3& axis, double angle);

// Symmetric 2x2 matrix; the tangential restriction of a metric.
struct SymMat2 {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  double det() const { return a11 * a22 - a12 * a12; }
  bool spd() const { return a11 > 0.0 && det() > 0.0; }
};

// Symmetric positive-definite 3x3 tensor stored as six entries
// (a11, a12, a13, a22, a23, a33). Carries conductivities and metrics.
class SpdTensor3 {
 public:
  SpdTensor3() : e_{1, 0, 0, 1, 0, 1} {}  // identity

  // Throws DomainError unless the entries form an SPD matrix.
  explicit SpdTensor3(const std::array<double, 6>& entries);
  SpdTensor3(double a11, double a12, double a13, double a22, double a23, double a33)
      : SpdTensor3(std::array<double, 6>{a11, a12, a13, a22, a23, a33}) {}

  static SpdTensor3 identity() { return SpdTensor3(); }
  static SpdTensor3 diagonal(double d1, double d2, double d3) { return {d1, 0, 0, d2, 0, d3}; }
  static SpdTensor3 scaled_identity(double s) { return diagonal(s, s, s); }

  const std::array<double, 6>& entries() const { return e_; }

  double operator()(int i, int j) const {
    static constexpr int idx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return e_[idx[i][j]];
  }

  Vec3 apply(const Vec3& v) const {
    return {e_[0] * v.x + e_[1] * v.y + e_[2] * v.z, e_[1] * v.x + e_[3] * v.y + e_[4] * v.z,
            e_[2] * v.x + e_[4] * v.y + e_[5] * v.z};
  }

  // Quadratic form  A v . v
  double quad(const Vec3& v) const { return dot(apply(v), v); }
  // Bilinear form  A v . w
  double bilinear(const Vec3& v, const Vec3& w) const { return dot(apply(v), w); }

  double trace() const { return e_[0] + e_[3] + e_[5]; }
  double det() const;

  // Adjugate; for a 3x3 this equals det(A) * A^{-1}.
  SpdTensor3 adjugate_unchecked() const;

  // Eigenvalues in ascending order (closed-form trigonometric solver).
  std::array<double, 3> eigenvalues() const;

  // Unit eigenvector for the largest eigenvalue.
  Vec3 principal_axis() const;

  // Congruence transform R * A * R^T (frame change for a metric whose
  // coordinates are expressed in the frame with axes = columns of R^T).
  SpdTensor3 congruence(const Mat3& r) const;

  double frobenius() const;

 private:
  struct unchecked_tag {};
  SpdTensor3(const std::array<double, 6>& entries, unchecked_tag) : e_(entries) {}

  std::array<double, 6> e_;

  friend SpdTensor3 spd_from_entries_unchecked(const std::array<double, 6>&);
};

// Internal: bypass the SPD construction check (used where SPD-ness is
// re-verified by the caller, e.g. recovery paths that must report a
// recovery-failed error instead of a constructor failure).
SpdTensor3 spd_from_entries_unchecked(const std::array<double, 6>& entries);

double frobenius_distance(const SpdTensor3& a, const SpdTensor3& b);

// Is the candidate symmetric matrix SPD? (Sylvester minors, strict.)
bool is_spd(const std::array<double, 6>& entries);

// g = (det gamma) * gamma^{-1}. Maps a conductivity to its metric.
SpdTensor3 metric_from_conductivity(const SpdTensor3& gamma);

// gamma = (det g)^{1/2} * g^{-1}. Inverse of metric_from_conductivity in 3D.
SpdTensor3 conductivity_from_metric(const SpdTensor3& metric);

// True iff every eigenvalue of gamma lies in [lambda0, 1/lambda0].
// Requires 0 < lambda0 <= 1.
bool ellipticity_check(const SpdTensor3& gamma, double lambda0);

// Entries g v_i . v_j for a pair of unit vectors. No orthogonality
// requirement; used to evaluate restrictions in the slanted probe bases.
SymMat2 restriction_entries(const SpdTensor3& g, const Vec3& v1, const Vec3& v2);

// The 2x2 tangential restriction (g v_i . v_j) for an orthonormal pair.
// Throws DomainError if the basis is not orthonormal (tolerance 1e-12).
SymMat2 tangential_restriction(const SpdTensor3& g, const Vec3& v1, const Vec3& v2);

// Tangential metric at a boundary point: orthonormal tangent basis plus the
// restricted 2x2 metric.
struct TangentialMetric {
  Vec3 base_point;
  Vec3 basis1, basis2;  // orthonormal tangent vectors
  SymMat2 g_tilde;
};

// Probe triple on a nonflat boundary portion. The slopes alpha, beta, delta
// are read off the outward normals expressed in the local frame of p1, where
// nu(p1) = -e3:
//   alpha = -nu2(p2)/nu3(p2), delta = -nu1(p3)/nu3(p3), beta = -nu2(p3)/nu3(p3).
struct ProbeFrame {
  Vec3 p1, p2, p3;
  Mat3 axes = Mat3::identity();  // columns: local e1, e2, e3 in global coordinates
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  double delta_p2_residual = 0.0;  // |delta(p2)|, should be ~0 by selection
  Vec3 nu1, nu2, nu3;              // outward unit normals at p1, p2, p3 (global)

  Vec3 to_global(const Vec3& local) const { return axes * local; }
  Vec3 to_local(const Vec3& global) const { return axes.transposed() * global; }
};

struct FrameThresholds {
  double alpha_min = 0.05;
  double delta_min = 0.05;
};

// The probe bases of the recovery construction, in local-frame coordinates:
//   V1 = [e1, e2]
//   V2 = [e1, (e2 + alpha e3)/sqrt(1+alpha^2)]
//   V3 = [(e1 + delta e3)/sqrt(1+delta^2), (e2 + beta e3)/sqrt(1+beta^2)]
std::array<std::array<Vec3, 2>, 3> probe_bases_local(const ProbeFrame& frame);

// Residuals of the redundant restriction entries that the recovery does not
// consume, checked against the recovered tensor: (g2)_11, (g3)_22, (g3)_12.
struct RecoveryDiagnostics {
  double residual_g2_11 = 0.0;
  double residual_g3_22 = 0.0;
  double residual_g3_12 = 0.0;
  double max_residual() const;
};

// Recover the full 3x3 metric (in the local frame of the probe triple) from
// the three restricted 2x2 matrices measured with the probe bases:
//   (g)_11, (g)_12, (g)_22      read from g1,
//   (g)_13 = (sqrt(1+a^2) (g2)_12 - (g)_12) / a,
//   (g)_33 = ((1+d^2) (g3)_11 - (g)_11 - 2 d (g)_13) / d^2,
//   (g)_23 = ((1+a^2) (g2)_22 - (g)_22 - a^2 (g)_33) / (2 a).
// Throws DomainError when |alpha| or |delta| is below the threshold and
// ReconstructError when the assembled matrix is not SPD.
SpdTensor3 recover_full_metric(const SymMat2& g1, const SymMat2& g2, const SymMat2& g3,
                               const ProbeFrame& frame, const FrameThresholds& thresholds = {},
                               RecoveryDiagnostics* diagnostics = nullptr);

std::ostream& operator<<(std::ostream& os, const SpdTensor3& t);

}  // namespace eitws
