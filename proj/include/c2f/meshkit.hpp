#pragma once
#include <string>
#include <vector>

#include "c2f/sparse.hpp"

namespace c2f::meshkit {

// Triangle mesh; vertices C x 3 row-major, faces F x 3 vertex indices.
// Construction rejects out-of-range and degenerate (repeated-index) faces.
// Vertices left unreferenced by every face are tolerated (decimation can
// strand them) and reported by isolated_vertices().
struct Mesh {
  std::vector<double> vertices;
  std::vector<i64> faces;

  static Mesh create(std::vector<double> vertices, std::vector<i64> faces);

  i64 vertex_count() const { return static_cast<i64>(vertices.size()) / 3; }
  i64 face_count() const { return static_cast<i64>(faces.size()) / 3; }
  double vx(i64 v, int k) const { return vertices[v * 3 + k]; }
  i64 fv(i64 f, int k) const { return faces[f * 3 + k]; }

  std::vector<i64> isolated_vertices() const;
  // Edge -> number of incident faces; empty when the mesh is edge-manifold
  // and closed (every edge in exactly two faces).
  bool is_closed_2manifold() const;
};

// A: binary symmetric vertex adjacency (shared face edge), zero diagonal.
SparsePtr build_adjacency(const std::vector<i64>& faces, i64 vertex_count);

// A_tilde = D^{-1/2} (A + I) D^{-1/2}, D = degree of A + I.
SparsePtr normalize_adjacency(const SparseMatrix& A);

// Linear operator mapping V to its Laplacian coordinates:
// delta v_i = v_i - mean of neighbors; rows of isolated vertices reduce to
// the identity so the operator stays total.
SparsePtr laplacian_operator(const SparseMatrix& A);

// delta coordinates of V (C x 3) under adjacency A.
std::vector<double> laplacian_coords(const std::vector<double>& V,
                                     const SparseMatrix& A);

struct DecimateResult {
  SparsePtr q_down;        // k x l one-hot vertex selector
  Mesh coarse;             // re-indexed surviving mesh
  std::vector<i64> kept;   // surviving fine-vertex ids, ascending
};

// Greedy quadric-error pair contraction down to target_vertex_count.
// Collapses keep one endpoint in place (subset selection); ties break on the
// lowest (min, max, kept) vertex index tuple so rebuilt hierarchies are
// reproducible.
DecimateResult decimate(const Mesh& mesh, i64 target_vertex_count);

// Q_u: kept vertices map to themselves; removed vertices get clamped
// barycentric weights of the nearest coarse face in the template embedding.
SparsePtr upsample_transform(const DecimateResult& dec, const Mesh& fine);

struct MeshLevel {
  Mesh mesh;
  SparsePtr adjacency;
  SparsePtr norm_adjacency;
  SparsePtr laplacian;
  SparsePtr down;  // to next coarser level; null on the last level
  SparsePtr up;    // from next coarser level; null on the last level
};

struct MeshHierarchy {
  std::vector<MeshLevel> levels;

  static MeshHierarchy build(const Mesh& mesh, int level_count,
                             i64 downsample_factor);
  // Binary cache (magic C2FH); see save/load for the exact layout.
  void save(const std::string& path) const;
  static MeshHierarchy load(const std::string& path);
};

Mesh load_obj(const std::string& path);
void save_obj(const Mesh& mesh, const std::string& path);

// Deterministic test geometry.
Mesh make_uv_sphere(i64 rows, i64 cols, double radius);

}  // namespace c2f::meshkit
