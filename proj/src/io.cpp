#include "eitws/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace eitws {

using nlohmann::json;

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DomainError("io", "cannot open " + path + " for writing");
  out << j.dump(1);
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("io", "cannot open " + path + " for reading");
  json j;
  in >> j;
  return j;
}

}  // namespace

void save_mesh_json(const TetMesh& mesh, const std::string& path) {
  json j;
  j["format"] = "eitws-mesh";
  j["version"] = 1;
  json verts = json::array();
  for (const Vec3& v : mesh.vertices()) verts.push_back(vec_to_json(v));
  j["vertices"] = std::move(verts);
  json tets = json::array();
  for (const auto& t : mesh.tets()) tets.push_back(json::array({t[0], t[1], t[2], t[3]}));
  j["tets"] = std::move(tets);
  json regions = json::array();
  for (Region r : mesh.regions()) regions.push_back(static_cast<int>(r));
  j["region_tags"] = std::move(regions);
  json facets = json::array();
  for (const auto& f : mesh.boundary_facets()) {
    facets.push_back(json{{"v", json::array({f.v[0], f.v[1], f.v[2]})}, {"patch", f.patch}});
  }
  j["boundary_facets"] = std::move(facets);
  write_file(path, j);
}

TetMesh load_mesh_json(const std::string& path) {
  const json j = read_file(path);
  if (j.value("format", "") != "eitws-mesh")
    throw DomainError("io", "not an eitws mesh file: " + path);
  std::vector<Vec3> vertices;
  for (const auto& v : j.at("vertices"))
    vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
  std::vector<std::array<int, 4>> tets;
  for (const auto& t : j.at("tets"))
    tets.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>(), t.at(3).get<int>()});
  std::vector<Region> regions;
  for (const auto& r : j.at("region_tags")) regions.push_back(static_cast<Region>(r.get<int>()));

  TetMesh base = TetMesh::from_cells(std::move(vertices), std::move(tets), std::move(regions));
  // Reapply the stored patch tags by facet key.
  std::map<std::array<int, 3>, int> patch_of;
  for (const auto& f : j.at("boundary_facets")) {
    std::array<int, 3> key = {f.at("v").at(0).get<int>(), f.at("v").at(1).get<int>(),
                              f.at("v").at(2).get<int>()};
    std::sort(key.begin(), key.end());
    patch_of[key] = f.at("patch").get<int>();
  }
  std::vector<BoundaryFacet> facets = base.boundary_facets();
  for (auto& f : facets) {
    std::array<int, 3> key = {f.v[0], f.v[1], f.v[2]};
    std::sort(key.begin(), key.end());
    const auto it = patch_of.find(key);
    if (it != patch_of.end()) f.patch = it->second;
  }
  return TetMesh(base.vertices(), base.tets(), base.regions(), std::move(facets));
}

TetMesh load_mesh_msh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("io", "cannot open " + path + " for reading");
  std::string line;
  std::map<long, int> node_index;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<Region> regions;
  struct Tri {
    std::array<int, 3> v;
    int patch;
  };
  std::vector<Tri> tris;

  while (std::getline(in, line)) {
    if (line.rfind("$MeshFormat", 0) == 0) {
      std::getline(in, line);
      std::istringstream fmt(line);
      double version = 0.0;
      fmt >> version;
      if (version < 2.0 || version >= 3.0)
        throw DomainError("io", "unsupported MSH version (need ASCII 2.x)");
      std::getline(in, line);  // $EndMeshFormat
    } else if (line.rfind("$Nodes", 0) == 0) {
      std::getline(in, line);
      const long count = std::stol(line);
      for (long i = 0; i < count; ++i) {
        std::getline(in, line);
        std::istringstream row(line);
        long id;
        double x, y, z;
        row >> id >> x >> y >> z;
        node_index[id] = static_cast<int>(vertices.size());
        vertices.push_back({x, y, z});
      }
    } else if (line.rfind("$Elements", 0) == 0) {
      std::getline(in, line);
      const long count = std::stol(line);
      for (long i = 0; i < count; ++i) {
        std::getline(in, line);
        std::istringstream row(line);
        long id, type, ntags;
        row >> id >> type >> ntags;
        long physical = 0, ignored;
        for (long t = 0; t < ntags; ++t) {
          if (t == 0)
            row >> physical;
          else
            row >> ignored;
        }
        if (type == 4) {
          long a, b, c, d;
          row >> a >> b >> c >> d;
          tets.push_back({node_index.at(a), node_index.at(b), node_index.at(c), node_index.at(d)});
          regions.push_back(physical == 2 ? Region::InsideD : Region::OutsideD);
        } else if (type == 2) {
          long a, b, c;
          row >> a >> b >> c;
          tris.push_back({{node_index.at(a), node_index.at(b), node_index.at(c)},
                          static_cast<int>(physical)});
        }
        // other element types are outside the subset and skipped
      }
    }
  }
  if (tets.empty()) throw DomainError("io", "MSH file contains no tetrahedra");

  // Fix inverted tets from arbitrary generator orderings.
  for (auto& t : tets) {
    const Vec3 a = vertices[t[0]], b = vertices[t[1]], c = vertices[t[2]], d = vertices[t[3]];
    if (dot(b - a, cross(c - a, d - a)) < 0.0) std::swap(t[2], t[3]);
  }

  TetMesh base = TetMesh::from_cells(std::move(vertices), std::move(tets), std::move(regions));
  std::map<std::array<int, 3>, int> patch_of;
  for (const auto& t : tris) {
    std::array<int, 3> key = t.v;
    std::sort(key.begin(), key.end());
    patch_of[key] = t.patch;
  }
  std::vector<BoundaryFacet> facets = base.boundary_facets();
  for (auto& f : facets) {
    std::array<int, 3> key = {f.v[0], f.v[1], f.v[2]};
    std::sort(key.begin(), key.end());
    const auto it = patch_of.find(key);
    if (it != patch_of.end()) f.patch = it->second;
  }
  return TetMesh(base.vertices(), base.tets(), base.regions(), std::move(facets));
}

void save_solution_csv(const TetMesh& mesh, const FemSolution& sol, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("io", "cannot open " + path + " for writing");
  out << "vertex,x,y,z,value\n";
  out.precision(17);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3& v = mesh.vertex(i);
    out << i << "," << v.x << "," << v.y << "," << v.z << "," << sol.nodal_values[i] << "\n";
  }
}

void save_solution_json(const FemSolution& sol, const std::string& path) {
  json j;
  j["norms"] = {{"l2", sol.norms.l2},     {"h1_semi", sol.norms.h1_semi},
                {"h1", sol.norms.h1},     {"l4", sol.norms.l4},
                {"linf", sol.norms.linf}, {"min", sol.norms.min_value}};
  j["stats"] = {{"newton_iterations", sol.stats.newton_iterations},
                {"picard_iterations", sol.stats.picard_iterations},
                {"linear_iterations", sol.stats.linear_iterations},
                {"final_residual", sol.stats.final_residual},
                {"residual_history", sol.stats.residual_history},
                {"energy_history", sol.stats.energy_history}};
  write_file(path, j);
}

void save_ntd_json(const NtdMatrix& ntd, const std::string& path) {
  json j;
  j["format"] = "eitws-ntd";
  j["dimension"] = ntd.dim;
  j["boundary_vertex_index"] = ntd.boundary_vertex_index;
  j["values_row_major"] = ntd.values;
  write_file(path, j);
}

NtdMatrix load_ntd_json(const std::string& path) {
  const json j = read_file(path);
  if (j.value("format", "") != "eitws-ntd") throw DomainError("io", "not an NtD file: " + path);
  NtdMatrix ntd;
  ntd.dim = j.at("dimension").get<int>();
  ntd.boundary_vertex_index = j.at("boundary_vertex_index").get<std::vector<int>>();
  ntd.values = j.at("values_row_major").get<std::vector<double>>();
  if (static_cast<int>(ntd.values.size()) != ntd.dim * ntd.dim)
    throw DomainError("io", "NtD value count does not match dimension");
  return ntd;
}

void save_ntd_csv(const NtdMatrix& ntd, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("io", "cannot open " + path + " for writing");
  out.precision(17);
  for (int i = 0; i < ntd.dim; ++i) {
    for (int j = 0; j < ntd.dim; ++j) out << ntd.at(i, j) << (j + 1 < ntd.dim ? "," : "");
    out << "\n";
  }
}

void save_probe_csv(const KernelProbe& probe, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("io", "cannot open " + path + " for writing");
  out << "r,dir_x,dir_y,dir_z,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < probe.points.size(); ++i) {
    const Vec3 d = probe.points[i] - probe.source_point;
    const double r = norm(d);
    const Vec3 u = r > 0 ? d / r : Vec3{0, 0, 0};
    out << r << "," << u.x << "," << u.y << "," << u.z << "," << probe.values[i] << "\n";
  }
}

void save_frechet_csv(const FrechetReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("io", "cannot open " + path + " for writing");
  out << "tau,error,ratio_to_previous\n";
  out.precision(17);
  for (std::size_t i = 0; i < report.taus.size(); ++i) {
    out << report.taus[i] << "," << report.errors[i] << ",";
    if (i > 0) out << report.ratios[i - 1];
    out << "\n";
  }
}

std::string tensor_to_json_string(const SpdTensor3& t) {
  const auto& e = t.entries();
  return json::array({e[0], e[1], e[2], e[3], e[4], e[5]}).dump();
}

}  // namespace eitws
