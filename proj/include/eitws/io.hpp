#pragma once

// File formats: the self-describing JSON mesh container, a Gmsh MSH ASCII
// v2.2 import subset, CSV/JSON exports for solutions, NtD matrices, kernel
// probes, and reports. Tensors serialize everywhere as the flat six-entry
// array (a11, a12, a13, a22, a23, a33).

#include <string>

#include "eitws/ntd.hpp"
#include "eitws/reconstruct.hpp"

namespace eitws {

// --- mesh ---------------------------------------------------------------
// Round trip through the JSON container is bit-identical on vertex
// coordinates and connectivity (normals are recomputed on import).
void save_mesh_json(const TetMesh& mesh, const std::string& path);
TetMesh load_mesh_json(const std::string& path);

// Gmsh MSH ASCII v2.2 subset: nodes, 4-node tets (physical 1 = outside,
// 2 = inclusion) and 3-node boundary triangles whose physical tag is the
// patch id.
TetMesh load_mesh_msh(const std::string& path);

// --- solutions ------------------------------------------------------------
void save_solution_csv(const TetMesh& mesh, const FemSolution& sol, const std::string& path);
void save_solution_json(const FemSolution& sol, const std::string& path);

// --- NtD ------------------------------------------------------------------
void save_ntd_json(const NtdMatrix& ntd, const std::string& path);
NtdMatrix load_ntd_json(const std::string& path);
void save_ntd_csv(const NtdMatrix& ntd, const std::string& path);

// --- probes and reports -----------------------------------------------------
void save_probe_csv(const KernelProbe& probe, const std::string& path);
void save_frechet_csv(const FrechetReport& report, const std::string& path);

std::string tensor_to_json_string(const SpdTensor3& t);

}  // namespace eitws
