#pragma once

// Tetrahedral meshes with a tagged interior inclusion, boundary facet
// patches with outward normals, and probe-frame selection on nonflat
// boundary portions.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eitws/tensor.hpp"

namespace eitws {

enum class Region : std::uint8_t { OutsideD = 0, InsideD = 1 };

struct BoundaryFacet {
  std::array<int, 3> v;  // vertex indices, oriented so the normal points outward
  int patch = 0;
  Vec3 normal;  // unit outward normal
  int adjacent_tet = -1;
};

// Box / cubed-sphere patch tags, one per axis-aligned face of the reference cube.
namespace patch {
constexpr int xmin = 0, xmax = 1, ymin = 2, ymax = 3, zmin = 4, zmax = 5;
constexpr int inclusion_boundary = 6;  // the single patch of an extracted inclusion mesh
std::string name(int tag);
int from_name(const std::string& name);
}  // namespace patch

class TetMesh {
 public:
  TetMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
          std::vector<Region> regions, std::vector<BoundaryFacet> facets);

  // Builds facets and regions (all OutsideD) from connectivity: boundary
  // facets are the tet faces owned by exactly one tet.
  static TetMesh from_cells(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
                            std::vector<Region> regions = {});

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_tets() const { return static_cast<int>(tets_.size()); }
  int num_boundary_facets() const { return static_cast<int>(facets_.size()); }
  int num_boundary_vertices() const { return static_cast<int>(boundary_vertices_.size()); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 4>>& tets() const { return tets_; }
  const std::vector<Region>& regions() const { return regions_; }
  const std::vector<BoundaryFacet>& boundary_facets() const { return facets_; }

  const Vec3& vertex(int i) const { return vertices_[i]; }
  const std::array<int, 4>& tet(int t) const { return tets_[t]; }
  Region region(int t) const { return regions_[t]; }

  // Boundary vertex numbering: boundary_vertices()[b] is the mesh vertex of
  // boundary index b; boundary_index(v) is -1 for interior vertices.
  const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
  int boundary_index(int vertex) const { return vertex_to_boundary_[vertex]; }

  double tet_volume(int t) const;
  Vec3 tet_centroid(int t) const;
  double total_volume() const;
  double region_volume(Region r) const;
  double facet_area(int f) const;
  Vec3 facet_centroid(int f) const;

  bool has_inclusion() const;

  // Longest edge over boundary facets whose centroid lies within `radius` of
  // `center`; falls back to the global boundary maximum if none are near.
  double local_boundary_spacing(const Vec3& center, double radius) const;
  double max_boundary_edge() const;

  std::vector<int> facets_on_patch(int patch_tag) const;

 private:
  void finalize();

  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 4>> tets_;
  std::vector<Region> regions_;
  std::vector<BoundaryFacet> facets_;
  std::vector<int> boundary_vertices_;
  std::vector<int> vertex_to_boundary_;
};

struct Ellipsoid {
  Vec3 center;
  std::array<double, 3> semi_axes{1, 1, 1};
  Mat3 rotation = Mat3::identity();  // columns: ellipsoid axes in global coordinates

  bool contains(const Vec3& p) const;
  Vec3 outward_normal_at(const Vec3& p) const;  // of the level set through p
};

// Structured box mesh on [0, extent] with n cells per axis, each split into
// six tets; six boundary patches tagged by face. Requires n >= 2.
TetMesh build_box_mesh(const std::array<double, 3>& extent, int n);

// Ball mesh via the spherified-cube map: the uniform grid on [-1,1]^3 is sent
// radially so that every sup-norm shell lands on a sphere. `refinement` r
// gives 2r cells per axis, so boundary vertices sit exactly at `radius`.
TetMesh build_ball_mesh(double radius, int refinement);

// Tags tets whose centroid lies inside the ellipsoid as InsideD. Errors if no
// tet is tagged (empty D) or a tagged tet touches the outer boundary.
TetMesh tag_inclusion(const TetMesh& mesh, const Ellipsoid& shape);

// The InsideD tets as a standalone mesh; its boundary facets cover the
// inclusion interface with outward (from D) normals and a single patch tag.
// Vertex coordinates are preserved exactly. Also returns the map from
// sub-mesh vertices to parent vertices when requested.
TetMesh extract_inclusion_mesh(const TetMesh& mesh, std::vector<int>* vertex_map = nullptr);

// Closest point on the boundary triangulation, with its facet and barycentric
// coordinates (for P1 trace evaluation).
struct SurfacePoint {
  int facet = -1;
  Vec3 point;
  std::array<double, 3> bary{};
};
SurfacePoint project_to_boundary(const TetMesh& mesh, const Vec3& p);

struct ProbeFrameOptions {
  double search_radius = 0.5;      // candidate facets within this distance of p1
  double alpha_min = 0.05;
  double delta_min = 0.05;
  double delta_p2_ratio = 0.02;    // admissible P2 needs |delta| <= ratio * |alpha|
  double flatness_angle = 1e-3;    // radians; below: patch counts as flat
  double smoothness_cap = 0.7854;  // skip candidates tilted more than this (45 deg)
};

// Picks P1 = patch facet centroid nearest the seed, builds the local frame
// with nu(P1) = -e3, and searches the smooth neighborhood for P2 (largest
// |alpha| with |delta| ~ 0) and P3 (largest |delta|).
ProbeFrame select_probe_frame(const TetMesh& mesh, int patch_tag, const Vec3& seed_point,
                              const ProbeFrameOptions& options = {});

}  // namespace eitws
