#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "eitws/mesh.hpp"

using namespace eitws;

TEST_CASE("box mesh counts, volume, normals") {
  const TetMesh mesh = build_box_mesh({1, 1, 1}, 2);
  CHECK(mesh.num_tets() == 48);
  CHECK(mesh.num_boundary_facets() == 48);
  CHECK(mesh.total_volume() == doctest::Approx(1.0).epsilon(1e-12));

  for (int f = 0; f < mesh.num_boundary_facets(); ++f) {
    const Vec3 n = mesh.boundary_facets()[f].normal;
    CHECK(norm(n) == doctest::Approx(1.0).epsilon(1e-12));
    // outward: points away from the adjacent tet
    const int t = mesh.boundary_facets()[f].adjacent_tet;
    CHECK(dot(n, mesh.facet_centroid(f) - mesh.tet_centroid(t)) > 0.0);
  }
  CHECK_THROWS_AS(build_box_mesh({1, 1, 1}, 1), DomainError);
}

TEST_CASE("box mesh anisotropic extent") {
  const TetMesh mesh = build_box_mesh({2, 1, 0.5}, 4);
  CHECK(mesh.total_volume() == doctest::Approx(1.0).epsilon(1e-12));
  // six patches, each covering one face area
  double area_xmin = 0.0;
  for (int f : mesh.facets_on_patch(patch::xmin)) area_xmin += mesh.facet_area(f);
  CHECK(area_xmin == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("closed surface: facet area-weighted normals sum to zero") {
  for (const TetMesh& mesh : {build_box_mesh({1, 1, 1}, 3), build_ball_mesh(1.0, 3)}) {
    Vec3 total{0, 0, 0};
    for (int f = 0; f < mesh.num_boundary_facets(); ++f)
      total += mesh.boundary_facets()[f].normal * mesh.facet_area(f);
    CHECK(norm(total) <= 1e-10);
  }
}

TEST_CASE("ball mesh volume converges and boundary lies on the sphere") {
  const TetMesh coarse = build_ball_mesh(1.0, 3);
  const double exact = 4.0 / 3.0 * M_PI;
  const double err3 = std::abs(coarse.total_volume() - exact) / exact;
  CHECK(err3 < 0.05);

  const TetMesh finer = build_ball_mesh(1.0, 4);
  const double err4 = std::abs(finer.total_volume() - exact) / exact;
  CHECK(err4 < err3);

  for (int b = 0; b < coarse.num_boundary_vertices(); ++b) {
    const Vec3 v = coarse.vertex(coarse.boundary_vertices()[b]);
    CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(build_ball_mesh(1.0, 0), DomainError);
}

TEST_CASE("ball mesh respects the radius parameter") {
  const TetMesh mesh = build_ball_mesh(2.5, 2);
  for (int b = 0; b < mesh.num_boundary_vertices(); ++b)
    CHECK(norm(mesh.vertex(mesh.boundary_vertices()[b])) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("tag_inclusion: centered sphere in the unit box") {
  const TetMesh mesh = build_box_mesh({1, 1, 1}, 8);
  Ellipsoid ball;
  ball.center = {0.5, 0.5, 0.5};
  ball.semi_axes = {0.25, 0.25, 0.25};
  const TetMesh tagged = tag_inclusion(mesh, ball);

  const double exact = 4.0 / 3.0 * M_PI * std::pow(0.25, 3);
  const double vol = tagged.region_volume(Region::InsideD);
  CHECK(std::abs(vol - exact) / exact < 0.2);

  // interiority: no tagged tet owns a boundary facet
  for (const auto& f : tagged.boundary_facets())
    CHECK(tagged.region(f.adjacent_tet) == Region::OutsideD);

  // region volumes partition the total
  CHECK(tagged.region_volume(Region::InsideD) + tagged.region_volume(Region::OutsideD) ==
        doctest::Approx(tagged.total_volume()).epsilon(1e-12));
}

TEST_CASE("tag_inclusion error cases") {
  const TetMesh mesh = build_box_mesh({1, 1, 1}, 4);
  Ellipsoid tiny;
  tiny.center = {0.5 + 0.02, 0.5, 0.5};  // between centroids
  tiny.semi_axes = {1e-4, 1e-4, 1e-4};
  CHECK_THROWS_AS(tag_inclusion(mesh, tiny), DomainError);

  Ellipsoid touching;
  touching.center = {0.5, 0.5, 0.5};
  touching.semi_axes = {0.49, 0.49, 0.49};
  CHECK_THROWS_AS(tag_inclusion(mesh, touching), DomainError);
}

TEST_CASE("extract_inclusion_mesh volumes, coordinates, interface") {
  const TetMesh mesh = build_box_mesh({1, 1, 1}, 8);
  Ellipsoid ball;
  ball.center = {0.5, 0.5, 0.5};
  ball.semi_axes = {0.3, 0.3, 0.3};
  const TetMesh tagged = tag_inclusion(mesh, ball);

  std::vector<int> vmap;
  const TetMesh sub = extract_inclusion_mesh(tagged, &vmap);
  CHECK(sub.total_volume() ==
        doctest::Approx(tagged.region_volume(Region::InsideD)).epsilon(1e-12));
  CHECK(sub.total_volume() + tagged.region_volume(Region::OutsideD) ==
        doctest::Approx(tagged.total_volume()).epsilon(1e-12));

  // vertex coordinates preserved exactly
  for (int i = 0; i < sub.num_vertices(); ++i) {
    const Vec3 a = sub.vertex(i);
    const Vec3 b = tagged.vertex(vmap[i]);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
  }

  // every interface facet is adjacent to exactly one OutsideD tet in the parent
  std::set<std::array<int, 3>> parent_faces_of_outside;
  constexpr int faces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  for (int t = 0; t < tagged.num_tets(); ++t) {
    if (tagged.region(t) != Region::OutsideD) continue;
    for (const auto& fc : faces) {
      std::array<int, 3> key = {tagged.tet(t)[fc[0]], tagged.tet(t)[fc[1]], tagged.tet(t)[fc[2]]};
      std::sort(key.begin(), key.end());
      parent_faces_of_outside.insert(key);
    }
  }
  for (const auto& f : sub.boundary_facets()) {
    std::array<int, 3> key = {vmap[f.v[0]], vmap[f.v[1]], vmap[f.v[2]]};
    std::sort(key.begin(), key.end());
    CHECK(parent_faces_of_outside.count(key) == 1);
  }

  CHECK_THROWS_AS(extract_inclusion_mesh(mesh), DomainError);
}

TEST_CASE("extracted sphere interface normals roughly match the analytic field") {
  const TetMesh mesh = build_box_mesh({1, 1, 1}, 10);
  Ellipsoid ball;
  ball.center = {0.5, 0.5, 0.5};
  ball.semi_axes = {0.3, 0.3, 0.3};
  const TetMesh sub = extract_inclusion_mesh(tag_inclusion(mesh, ball));
  // The centroid-tagged interface is a staircase, so individual facet normals
  // swing hard (re-entrant corners even tilt locally inward); the
  // area-weighted mean deviation is the meaningful measure.
  double weighted_angle = 0.0, total_area = 0.0;
  for (int f = 0; f < sub.num_boundary_facets(); ++f) {
    const Vec3 n = sub.boundary_facets()[f].normal;
    const Vec3 exact = ball.outward_normal_at(sub.facet_centroid(f));
    const double angle = std::acos(std::clamp(dot(n, exact), -1.0, 1.0));
    const double area = sub.facet_area(f);
    weighted_angle += angle * area;
    total_area += area;
  }
  CHECK(weighted_angle / total_area < 30.0 * M_PI / 180.0);
}

TEST_CASE("select_probe_frame rejects flat patches") {
  const TetMesh mesh = build_box_mesh({1, 1, 1}, 6);
  CHECK_THROWS_WITH_AS(select_probe_frame(mesh, patch::zmax, {0.5, 0.5, 1.0}),
                       doctest::Contains("nonflat"), DomainError);
}

TEST_CASE("select_probe_frame on the unit sphere near the north pole") {
  const TetMesh mesh = build_ball_mesh(1.0, 8);
  ProbeFrameOptions opts;
  opts.search_radius = 0.5;
  const ProbeFrame frame = select_probe_frame(mesh, patch::zmax, {0, 0, 1}, opts);

  CHECK(std::abs(frame.alpha) >= 0.05);
  CHECK(std::abs(frame.delta) >= 0.05);
  CHECK(frame.delta_p2_residual <= 0.02 * std::abs(frame.alpha));

  // alpha is exactly the slope of the reported facet normal in the local frame
  const Vec3 nu2_local = frame.to_local(frame.nu2);
  CHECK(frame.alpha == -nu2_local.y / nu2_local.z);
  const Vec3 nu3_local = frame.to_local(frame.nu3);
  CHECK(frame.delta == -nu3_local.x / nu3_local.z);
  CHECK(frame.beta == -nu3_local.y / nu3_local.z);

  // local frame: orthonormal, nu(P1) = -e3
  const Vec3 t1 = frame.axes.col(0), t2 = frame.axes.col(1), t3 = frame.axes.col(2);
  CHECK(std::abs(dot(t1, t2)) <= 1e-12);
  CHECK(std::abs(dot(t1, t3)) <= 1e-12);
  CHECK(norm(t1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(norm(cross(t3, frame.nu1 * -1.0)) <= 1e-12);
}

TEST_CASE("probe frame search fails when the slope thresholds are unreachable") {
  const TetMesh mesh = build_ball_mesh(1.0, 8);
  ProbeFrameOptions opts;
  opts.search_radius = 0.3;  // nonflat, but normals only tilt ~0.3 rad here
  opts.alpha_min = 0.8;
  opts.delta_min = 0.8;
  CHECK_THROWS_WITH_AS(select_probe_frame(mesh, patch::zmax, {0, 0, 1}, opts),
                       doctest::Contains("search failed"), DomainError);
}

TEST_CASE("project_to_boundary lands on the surface") {
  const TetMesh mesh = build_box_mesh({1, 1, 1}, 4);
  const SurfacePoint sp = project_to_boundary(mesh, {0.3, 0.4, 1.3});
  CHECK(sp.point.z == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.point.x == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(sp.point.y == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(mesh.boundary_facets()[sp.facet].patch == patch::zmax);
}
