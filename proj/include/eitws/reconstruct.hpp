#pragma once

// End-to-end boundary determination: kernel probing around three boundary
// points, 1/r fits for the tangential metrics, the six-entry metric
// recovery, and the conductivity transform; plus the inner-NtD oracle for
// the inclusion and a distinguishability experiment.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "eitws/ntd.hpp"

namespace eitws {

struct RaySamples {
  std::vector<double> radii;   // realized tangential radii
  std::vector<double> values;  // kernel values
  std::vector<Vec3> points;    // realized sample points
};

// Batched access to boundary values of the Neumann kernel N(., y).
class KernelSource {
 public:
  virtual ~KernelSource() = default;
  // Samples along the ray y + r * direction (projected to the boundary for
  // mesh-backed sources); nu is the outward unit normal at y.
  virtual RaySamples sample_ray(const Vec3& y, const Vec3& nu, const Vec3& direction,
                                std::span<const double> radii) = 0;
};

// Exact closed-form source: bypass mode isolating the algebra from FEM error.
class HalfSpaceKernelSource final : public KernelSource {
 public:
  explicit HalfSpaceKernelSource(const SpdTensor3& gamma)
      : metric_(metric_from_conductivity(gamma)) {}

  RaySamples sample_ray(const Vec3& y, const Vec3& nu, const Vec3& direction,
                        std::span<const double> radii) override;

  // Optional additive contamination b * |ln r| with per-sample sign noise,
  // for robustness experiments against the logarithmic remainder.
  void set_log_contamination(double amplitude, unsigned seed);

 private:
  SpdTensor3 metric_;
  double contamination_ = 0.0;
  unsigned contamination_seed_ = 0;
};

// FEM-backed source: one linearized solve with a mollified delta per probe
// point (cached), traced at the projected sample points.
class FemKernelSource final : public KernelSource {
 public:
  FemKernelSource(const TetMesh& mesh, Coefficients coeffs, std::vector<double> q, double eps,
                  SolverOptions opts = {});

  RaySamples sample_ray(const Vec3& y, const Vec3& nu, const Vec3& direction,
                        std::span<const double> radii) override;

  double epsilon() const { return eps_; }

 private:
  const std::vector<double>& solve_for(const Vec3& y);

  const TetMesh& mesh_;
  Coefficients coeffs_;
  std::vector<double> q_;
  double eps_;
  SolverOptions opts_;
  std::vector<std::pair<Vec3, std::vector<double>>> cache_;
};

struct FitResult {
  double c = 0.0;            // 1/r coefficient of the selected model
  double c_plain = 0.0;      // pure c/r fit, reported alongside
  double log_coeff = 0.0;    // b of the nuisance model
  double intercept = 0.0;    // a of the nuisance model
  double rms_residual = 0.0; // of the selected model, relative to the data scale
};

struct ExtractionOptions {
  bool log_nuisance = true;  // fit N ~ c/r + b ln(1/r) + a instead of c/r
};

// Least-squares fit of kernel samples against 1/r (plus the optional
// logarithmic nuisance). Throws ReconstructError when the fitted c is
// nonpositive or non-finite.
FitResult fit_inverse_radius(std::span<const double> radii, std::span<const double> values,
                             const ExtractionOptions& opts = {});

struct DirectionSamples {
  Vec3 direction;  // unit tangent, global coordinates
  std::vector<double> radii;
  std::vector<double> values;
};

// Restriction entries in the (v1, v2) basis from quadratic-form values
// q(v1), q(v2), q(mid) with mid = (v1+v2)/|v1+v2| and c12 = v1 . v2:
//   g12 = (q(mid) (2 + 2 c12) - q(v1) - q(v2)) / 2.
SymMat2 restriction_from_quadratic_forms(double q1, double q2, double qmid, double v1_dot_v2);

// Lemma-style tangential-metric extraction at a boundary point: the three
// direction samples must cover e1, e2 and their normalized bisector
// (orthonormal e1, e2). q(xi) = (2 pi c_xi)^{-2}.
TangentialMetric extract_tangential_metric(const Vec3& base_point, const Vec3& e1, const Vec3& e2,
                                           const DirectionSamples& along_e1,
                                           const DirectionSamples& along_e2,
                                           const DirectionSamples& along_bisector,
                                           const ExtractionOptions& opts = {});

struct ProbeOptions {
  std::vector<double> radii;    // explicit ladder; empty = derive from the mesh
  int ladder_count = 4;
  double ladder_ratio = 2.0;    // dyadic by default
  double top_fraction = 0.125;  // ladder top = fraction of the patch diameter
  double min_spacings = 6.0;    // ladder floor in local boundary spacings
  double max_patch_fraction = 0.45;  // ladder top cap
  double eps_factor = 0.25;     // mollifier radius = factor * smallest radius
  ExtractionOptions extraction;
  FrameThresholds thresholds;
  SolverOptions solver;
};

// Geometric ladder within [max(floor, design bottom), top], compressed when
// the resolution floor is active. Throws when no usable ladder exists.
std::vector<double> make_radii_ladder(const TetMesh& mesh, int patch_tag, const Vec3& center,
                                      const ProbeOptions& opts);

struct DirectionFitInfo {
  int probe_point = 0;  // 0, 1, 2
  Vec3 direction;
  FitResult fit;
  double q = 0.0;  // (2 pi c)^{-2}
};

struct ReconstructionReport {
  SpdTensor3 recovered_tensor;
  std::array<SymMat2, 3> tangential_restrictions{};  // in the probe bases
  ProbeFrame frame;
  std::vector<double> radii;
  double epsilon = 0.0;
  std::vector<DirectionFitInfo> fits;
  RecoveryDiagnostics algebra_residuals;
  double max_fit_residual = 0.0;
  std::optional<double> rel_frobenius_error;
  std::optional<double> principal_axis_angle_deg;
};

// Step-1 orchestration: probe the kernel at P1, P2, P3 with the recovery
// bases, fit the tangential data, recover the metric, return the
// conductivity in global coordinates. Stage failures are rethrown as
// ReconstructError tagged with the failing stage. opts.radii must be set.
SpdTensor3 recover_boundary_tensor(KernelSource& kernel, const ProbeFrame& frame,
                                   const ProbeOptions& opts,
                                   ReconstructionReport* report = nullptr);

// Convenience: FEM-backed recovery on a mesh patch; builds the ladder, the
// background q = 3 alpha u0^2 from a nonlinear solve with g0, the frame, and
// the probes.
SpdTensor3 recover_boundary_tensor_fem(const TetMesh& mesh, const Coefficients& coeffs,
                                       const NeumannData& g0, int patch_tag,
                                       const Vec3& seed_point, const ProbeFrameOptions& frame_opts,
                                       ProbeOptions opts, ReconstructionReport* report = nullptr);

// Linear NtD map of the inclusion domain, computed directly from the known
// coefficients as a synthetic oracle: extract D, restrict q = 3 alpha u0^2
// from the parent background solve, assemble the NtD on the inclusion mesh.
NtdMatrix inner_ntd_matrix(const TetMesh& parent, const Coefficients& coeffs,
                           const NeumannData& g0, const SolverOptions& opts = {},
                           int threads = 1);

struct InclusionRecoveryOptions {
  ProbeOptions probe;
  ProbeFrameOptions frame;
  std::optional<Vec3> seed_point;  // default: topmost point of the interface
};

// Step-4: run the boundary determination against the inner NtD oracle on the
// inclusion interface; returns the gamma_1 estimate.
SpdTensor3 recover_inclusion_tensor(const TetMesh& parent, const Coefficients& coeffs,
                                    const NeumannData& g0,
                                    const InclusionRecoveryOptions& opts = {},
                                    ReconstructionReport* report = nullptr);

struct GapReport {
  std::vector<double> gaps_ab;  // |N_A(g) - N_B(g)| / |N_A(g)| per current
  std::vector<double> gaps_ba;  // same normalized by |N_B(g)|
  double max_gap_ab = 0.0;
  double max_gap_ba = 0.0;
  // |u0_A - u0_B| in L2(Omega \ D) for the constant background current.
  double background_mismatch_outside = 0.0;
};

// Empirical converse of the uniqueness statement: different coefficients
// should produce visibly different boundary data.
GapReport distinguishability(const TetMesh& mesh, const Coefficients& coeffs_a,
                             const Coefficients& coeffs_b,
                             const std::vector<NeumannData>& currents,
                             const SolverOptions& opts = {});

double relative_frobenius_error(const SpdTensor3& estimate, const SpdTensor3& truth);
double principal_axis_angle_deg(const SpdTensor3& estimate, const SpdTensor3& truth);

}  // namespace eitws
