#include "eitws/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace eitws {

namespace patch {

std::string name(int tag) {
  switch (tag) {
    case xmin: return "xmin";
    case xmax: return "xmax";
    case ymin: return "ymin";
    case ymax: return "ymax";
    case zmin: return "zmin";
    case zmax: return "zmax";
    case inclusion_boundary: return "inclusion";
    default: return "patch" + std::to_string(tag);
  }
}

int from_name(const std::string& n) {
  for (int t = 0; t <= inclusion_boundary; ++t)
    if (name(t) == n) return t;
  throw DomainError("mesh", "unknown patch name: " + n);
}

}  // namespace patch

namespace {

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(b - a, cross(c - a, d - a)) / 6.0;
}

std::array<int, 3> sorted_face(int a, int b, int c) {
  std::array<int, 3> f = {a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

// Faces of a tet, each oriented so its normal points out of the tet.
constexpr int kTetFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

}  // namespace

TetMesh::TetMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
                 std::vector<Region> regions, std::vector<BoundaryFacet> facets)
    : vertices_(std::move(vertices)),
      tets_(std::move(tets)),
      regions_(std::move(regions)),
      facets_(std::move(facets)) {
  if (regions_.empty()) regions_.assign(tets_.size(), Region::OutsideD);
  if (regions_.size() != tets_.size())
    throw DomainError("mesh", "region tag count does not match tet count");
  finalize();
}

TetMesh TetMesh::from_cells(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
                            std::vector<Region> regions) {
  // Count face occurrences; boundary faces appear exactly once.
  std::map<std::array<int, 3>, std::pair<int, int>> face_owner;  // face -> (tet, local face)
  for (int t = 0; t < static_cast<int>(tets.size()); ++t) {
    for (int f = 0; f < 4; ++f) {
      auto key = sorted_face(tets[t][kTetFaces[f][0]], tets[t][kTetFaces[f][1]],
                             tets[t][kTetFaces[f][2]]);
      auto [it, inserted] = face_owner.emplace(key, std::make_pair(t, f));
      if (!inserted) it->second.first = -1;  // interior face, seen twice
    }
  }
  std::vector<BoundaryFacet> facets;
  for (const auto& [key, owner] : face_owner) {
    if (owner.first < 0) continue;
    const auto& tet = tets[owner.first];
    BoundaryFacet bf;
    bf.v = {tet[kTetFaces[owner.second][0]], tet[kTetFaces[owner.second][1]],
            tet[kTetFaces[owner.second][2]]};
    bf.adjacent_tet = owner.first;
    bf.patch = 0;
    facets.push_back(bf);
  }
  return TetMesh(std::move(vertices), std::move(tets), std::move(regions), std::move(facets));
}

void TetMesh::finalize() {
  for (int t = 0; t < num_tets(); ++t) {
    if (tet_volume(t) <= 0.0)
      throw DomainError("mesh", "tet " + std::to_string(t) + " has non-positive volume");
  }
  for (auto& f : facets_) {
    const Vec3 a = vertices_[f.v[0]], b = vertices_[f.v[1]], c = vertices_[f.v[2]];
    Vec3 n = cross(b - a, c - a);
    const double len = norm(n);
    if (len <= 0.0) throw DomainError("mesh", "degenerate boundary facet");
    n = n / len;
    if (f.adjacent_tet >= 0) {
      const Vec3 toward = (a + b + c) / 3.0 - tet_centroid(f.adjacent_tet);
      if (dot(n, toward) < 0.0) {
        std::swap(f.v[1], f.v[2]);
        n = n * -1.0;
      }
    }
    f.normal = n;
  }
  vertex_to_boundary_.assign(vertices_.size(), -1);
  for (const auto& f : facets_)
    for (int v : f.v) vertex_to_boundary_[v] = 0;
  for (int v = 0; v < num_vertices(); ++v) {
    if (vertex_to_boundary_[v] == 0) {
      vertex_to_boundary_[v] = static_cast<int>(boundary_vertices_.size());
      boundary_vertices_.push_back(v);
    }
  }
}

double TetMesh::tet_volume(int t) const {
  const auto& k = tets_[t];
  return signed_volume(vertices_[k[0]], vertices_[k[1]], vertices_[k[2]], vertices_[k[3]]);
}

Vec3 TetMesh::tet_centroid(int t) const {
  const auto& k = tets_[t];
  return (vertices_[k[0]] + vertices_[k[1]] + vertices_[k[2]] + vertices_[k[3]]) / 4.0;
}

double TetMesh::total_volume() const {
  double v = 0.0;
  for (int t = 0; t < num_tets(); ++t) v += tet_volume(t);
  return v;
}

double TetMesh::region_volume(Region r) const {
  double v = 0.0;
  for (int t = 0; t < num_tets(); ++t)
    if (regions_[t] == r) v += tet_volume(t);
  return v;
}

double TetMesh::facet_area(int f) const {
  const auto& bf = facets_[f];
  const Vec3 a = vertices_[bf.v[0]], b = vertices_[bf.v[1]], c = vertices_[bf.v[2]];
  return 0.5 * norm(cross(b - a, c - a));
}

Vec3 TetMesh::facet_centroid(int f) const {
  const auto& bf = facets_[f];
  return (vertices_[bf.v[0]] + vertices_[bf.v[1]] + vertices_[bf.v[2]]) / 3.0;
}

bool TetMesh::has_inclusion() const {
  return std::any_of(regions_.begin(), regions_.end(),
                     [](Region r) { return r == Region::InsideD; });
}

double TetMesh::max_boundary_edge() const {
  double h = 0.0;
  for (const auto& f : facets_) {
    for (int e = 0; e < 3; ++e)
      h = std::max(h, norm(vertices_[f.v[e]] - vertices_[f.v[(e + 1) % 3]]));
  }
  return h;
}

double TetMesh::local_boundary_spacing(const Vec3& center, double radius) const {
  double h = 0.0;
  for (int f = 0; f < num_boundary_facets(); ++f) {
    if (norm(facet_centroid(f) - center) > radius) continue;
    const auto& bf = facets_[f];
    for (int e = 0; e < 3; ++e)
      h = std::max(h, norm(vertices_[bf.v[e]] - vertices_[bf.v[(e + 1) % 3]]));
  }
  return h > 0.0 ? h : max_boundary_edge();
}

std::vector<int> TetMesh::facets_on_patch(int patch_tag) const {
  std::vector<int> out;
  for (int f = 0; f < num_boundary_facets(); ++f)
    if (facets_[f].patch == patch_tag) out.push_back(f);
  return out;
}

bool Ellipsoid::contains(const Vec3& p) const {
  const Vec3 local = rotation.transposed() * (p - center);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (local[i] / semi_axes[i]) * (local[i] / semi_axes[i]);
  return s <= 1.0;
}

Vec3 Ellipsoid::outward_normal_at(const Vec3& p) const {
  const Vec3 local = rotation.transposed() * (p - center);
  Vec3 grad_local{local.x / (semi_axes[0] * semi_axes[0]),
                  local.y / (semi_axes[1] * semi_axes[1]),
                  local.z / (semi_axes[2] * semi_axes[2])};
  return normalized(rotation * grad_local);
}

namespace {

// Kuhn split of a hexahedral cell into six positively oriented tets, given
// the eight corner indices c[dz][dy][dx].
void append_cell_tets(const int c[2][2][2], std::vector<std::array<int, 4>>& tets) {
  const int v000 = c[0][0][0], v100 = c[0][0][1], v010 = c[0][1][0], v110 = c[0][1][1];
  const int v001 = c[1][0][0], v101 = c[1][0][1], v011 = c[1][1][0], v111 = c[1][1][1];
  tets.push_back({v000, v100, v110, v111});
  tets.push_back({v000, v110, v010, v111});
  tets.push_back({v000, v010, v011, v111});
  tets.push_back({v000, v011, v001, v111});
  tets.push_back({v000, v001, v101, v111});
  tets.push_back({v000, v101, v100, v111});
}

int face_patch_of(const Vec3& c, const std::array<double, 3>& extent) {
  const double tol = 1e-9 * std::max({extent[0], extent[1], extent[2]});
  if (std::abs(c.x) < tol) return patch::xmin;
  if (std::abs(c.x - extent[0]) < tol) return patch::xmax;
  if (std::abs(c.y) < tol) return patch::ymin;
  if (std::abs(c.y - extent[1]) < tol) return patch::ymax;
  if (std::abs(c.z) < tol) return patch::zmin;
  return patch::zmax;
}

}  // namespace

TetMesh build_box_mesh(const std::array<double, 3>& extent, int n) {
  if (n < 2) throw DomainError("mesh", "box mesh needs at least 2 subdivisions per axis");
  for (double e : extent)
    if (!(e > 0.0)) throw DomainError("mesh", "box extent must be positive");

  const int m = n + 1;
  auto vid = [m](int i, int j, int k) { return (k * m + j) * m + i; };
  std::vector<Vec3> vertices(static_cast<std::size_t>(m) * m * m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        vertices[vid(i, j, k)] = {extent[0] * i / n, extent[1] * j / n, extent[2] * k / n};

  std::vector<std::array<int, 4>> tets;
  tets.reserve(static_cast<std::size_t>(n) * n * n * 6);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        int c[2][2][2];
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) c[dz][dy][dx] = vid(i + dx, j + dy, k + dz);
        append_cell_tets(c, tets);
      }

  TetMesh mesh = TetMesh::from_cells(std::move(vertices), std::move(tets));
  std::vector<BoundaryFacet> facets = mesh.boundary_facets();
  for (auto& f : facets) {
    const Vec3 c = (mesh.vertex(f.v[0]) + mesh.vertex(f.v[1]) + mesh.vertex(f.v[2])) / 3.0;
    f.patch = face_patch_of(c, extent);
  }
  return TetMesh(mesh.vertices(), mesh.tets(), mesh.regions(), std::move(facets));
}

TetMesh build_ball_mesh(double radius, int refinement) {
  if (refinement < 1) throw DomainError("mesh", "ball mesh needs refinement >= 1");
  if (!(radius > 0.0)) throw DomainError("mesh", "ball radius must be positive");

  const int n = 2 * refinement;  // cells per axis; even so the center is a grid point
  const int m = n + 1;
  auto vid = [m](int i, int j, int k) { return (k * m + j) * m + i; };
  std::vector<Vec3> vertices(static_cast<std::size_t>(m) * m * m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const Vec3 p{-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n, -1.0 + 2.0 * k / n};
        const double t = std::max({std::abs(p.x), std::abs(p.y), std::abs(p.z)});
        Vec3 x{0, 0, 0};
        if (t > 0.0) x = p * (radius * t / norm(p));
        vertices[vid(i, j, k)] = x;
      }

  std::vector<std::array<int, 4>> tets;
  tets.reserve(static_cast<std::size_t>(n) * n * n * 6);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        int c[2][2][2];
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) c[dz][dy][dx] = vid(i + dx, j + dy, k + dz);
        append_cell_tets(c, tets);
      }

  TetMesh mesh = TetMesh::from_cells(std::move(vertices), std::move(tets));
  // Tag each boundary facet by the cube face its pre-image lies on: the
  // dominant coordinate of the centroid direction.
  std::vector<BoundaryFacet> facets = mesh.boundary_facets();
  for (auto& f : facets) {
    const Vec3 c = (mesh.vertex(f.v[0]) + mesh.vertex(f.v[1]) + mesh.vertex(f.v[2])) / 3.0;
    const double ax = std::abs(c.x), ay = std::abs(c.y), az = std::abs(c.z);
    if (ax >= ay && ax >= az)
      f.patch = c.x < 0 ? patch::xmin : patch::xmax;
    else if (ay >= ax && ay >= az)
      f.patch = c.y < 0 ? patch::ymin : patch::ymax;
    else
      f.patch = c.z < 0 ? patch::zmin : patch::zmax;
  }
  return TetMesh(mesh.vertices(), mesh.tets(), mesh.regions(), std::move(facets));
}

TetMesh tag_inclusion(const TetMesh& mesh, const Ellipsoid& shape) {
  std::vector<Region> regions(mesh.num_tets(), Region::OutsideD);
  int tagged = 0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    if (shape.contains(mesh.tet_centroid(t))) {
      regions[t] = Region::InsideD;
      ++tagged;
    }
  }
  if (tagged == 0) throw DomainError("mesh", "inclusion is empty: no tet centroid inside shape");
  for (const auto& f : mesh.boundary_facets()) {
    if (regions[f.adjacent_tet] == Region::InsideD)
      throw DomainError("mesh", "inclusion is not strictly interior: tagged tet touches boundary");
  }
  return TetMesh(mesh.vertices(), mesh.tets(), std::move(regions), mesh.boundary_facets());
}

TetMesh extract_inclusion_mesh(const TetMesh& mesh, std::vector<int>* vertex_map) {
  if (!mesh.has_inclusion()) throw DomainError("mesh", "no inclusion to extract");

  std::vector<int> new_index(mesh.num_vertices(), -1);
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<int> to_parent;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    if (mesh.region(t) != Region::InsideD) continue;
    std::array<int, 4> k = mesh.tet(t);
    for (int& v : k) {
      if (new_index[v] < 0) {
        new_index[v] = static_cast<int>(vertices.size());
        vertices.push_back(mesh.vertex(v));
        to_parent.push_back(v);
      }
      v = new_index[v];
    }
    tets.push_back(k);
  }
  if (vertex_map) *vertex_map = std::move(to_parent);

  TetMesh sub = TetMesh::from_cells(std::move(vertices), std::move(tets));
  std::vector<BoundaryFacet> facets = sub.boundary_facets();
  for (auto& f : facets) f.patch = patch::inclusion_boundary;
  return TetMesh(sub.vertices(), sub.tets(), sub.regions(), std::move(facets));
}

namespace {

// Closest point of a triangle to p, returned in barycentric coordinates.
// Standard region-by-region closest-point test.
std::array<double, 3> closest_point_bary(const Vec3& a, const Vec3& b, const Vec3& c,
                                         const Vec3& p) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {1, 0, 0};
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return {0, 1, 0};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {1 - v, v, 0};
  }
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return {0, 0, 1};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {1 - w, 0, w};
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0, 1 - w, w};
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return {1 - v - w, v, w};
}

}  // namespace

SurfacePoint project_to_boundary(const TetMesh& mesh, const Vec3& p) {
  SurfacePoint best;
  double best_d2 = std::numeric_limits<double>::max();
  for (int f = 0; f < mesh.num_boundary_facets(); ++f) {
    const auto& bf = mesh.boundary_facets()[f];
    const Vec3 a = mesh.vertex(bf.v[0]), b = mesh.vertex(bf.v[1]), c = mesh.vertex(bf.v[2]);
    const auto bary = closest_point_bary(a, b, c, p);
    const Vec3 q = a * bary[0] + b * bary[1] + c * bary[2];
    const double d2 = dot(q - p, q - p);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {f, q, bary};
    }
  }
  return best;
}

ProbeFrame select_probe_frame(const TetMesh& mesh, int patch_tag, const Vec3& seed_point,
                              const ProbeFrameOptions& options) {
  const std::vector<int> patch_facets = mesh.facets_on_patch(patch_tag);
  if (patch_facets.empty()) throw DomainError("mesh", "patch has no facets");

  // P1: patch facet centroid nearest the seed.
  int f1 = patch_facets.front();
  double best = std::numeric_limits<double>::max();
  for (int f : patch_facets) {
    const double d = norm(mesh.facet_centroid(f) - seed_point);
    if (d < best) {
      best = d;
      f1 = f;
    }
  }
  const Vec3 p1 = mesh.facet_centroid(f1);
  const Vec3 nu1 = mesh.boundary_facets()[f1].normal;

  // Local frame: e3 = inward normal at P1 (so nu(P1) = -e3); e1, e2 by
  // Gram-Schmidt against the global axis least aligned with e3.
  const Vec3 t3 = nu1 * -1.0;
  int least = 0;
  double least_dot = std::abs(t3.x);
  if (std::abs(t3.y) < least_dot) { least = 1; least_dot = std::abs(t3.y); }
  if (std::abs(t3.z) < least_dot) { least = 2; }
  Vec3 axis{0, 0, 0};
  axis[least] = 1.0;
  const Vec3 t1 = normalized(axis - t3 * dot(axis, t3));
  const Vec3 t2 = cross(t3, t1);
  const Mat3 axes = Mat3::from_columns(t1, t2, t3);

  // Candidates: patch facets inside the search radius whose normals stay
  // within the smoothness cap of nu(P1). Sharp-edged surfaces (e.g. voxel
  // boxes) lose their tilted outliers here, so a face of such a body is
  // reported as flat rather than as a failed search.
  struct Candidate {
    int facet;
    Vec3 centroid;
    Vec3 nu;       // global
    double alpha;  // -nu2/nu3 in the local frame
    double delta;  // -nu1/nu3 in the local frame
    double tilt;
  };
  std::vector<Candidate> candidates;
  double max_tilt = 0.0;
  for (int f : patch_facets) {
    const Vec3 c = mesh.facet_centroid(f);
    if (norm(c - p1) > options.search_radius) continue;
    const Vec3 nu = mesh.boundary_facets()[f].normal;
    const double cosang = std::clamp(dot(nu, nu1), -1.0, 1.0);
    const double tilt = std::acos(cosang);
    if (tilt > options.smoothness_cap) continue;
    const Vec3 nu_loc = axes.transposed() * nu;
    if (std::abs(nu_loc.z) < 1e-12) continue;
    candidates.push_back({f, c, nu, -nu_loc.y / nu_loc.z, -nu_loc.x / nu_loc.z, tilt});
    max_tilt = std::max(max_tilt, tilt);
  }
  if (max_tilt <= options.flatness_angle)
    throw DomainError("mesh",
                      "nonflat assumption violated: facet normals near the seed are parallel");

  const Candidate* best2 = nullptr;
  const Candidate* best3 = nullptr;
  for (const auto& c : candidates) {
    if (std::abs(c.alpha) >= options.alpha_min &&
        std::abs(c.delta) <= options.delta_p2_ratio * std::abs(c.alpha)) {
      if (!best2 || std::abs(c.alpha) > std::abs(best2->alpha)) best2 = &c;
    }
    if (std::abs(c.delta) >= options.delta_min) {
      if (!best3 || std::abs(c.delta) > std::abs(best3->delta)) best3 = &c;
    }
  }
  if (!best2 || !best3)
    throw DomainError("mesh", "probe frame search failed: no admissible P2/P3 within radius");

  ProbeFrame frame;
  frame.p1 = p1;
  frame.p2 = best2->centroid;
  frame.p3 = best3->centroid;
  frame.axes = axes;
  frame.alpha = best2->alpha;
  frame.delta = best3->delta;
  frame.beta = best3->alpha;  // -nu2(P3)/nu3(P3)
  frame.delta_p2_residual = std::abs(best2->delta);
  frame.nu1 = nu1;
  frame.nu2 = best2->nu;
  frame.nu3 = best3->nu;
  return frame;
}

}  // namespace eitws
