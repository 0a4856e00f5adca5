#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "c2f/meshkit.hpp"

namespace c2f::meshkit {

Mesh Mesh::create(std::vector<double> vertices, std::vector<i64> faces) {
  require(vertices.size() % 3 == 0, "mesh: vertex array not a multiple of 3");
  require(faces.size() % 3 == 0, "mesh: face array not a multiple of 3");
  const i64 c = static_cast<i64>(vertices.size()) / 3;
  for (size_t i = 0; i < faces.size(); i += 3) {
    const i64 a = faces[i], b = faces[i + 1], d = faces[i + 2];
    require(a >= 0 && a < c && b >= 0 && b < c && d >= 0 && d < c,
            "mesh: face index out of range at face " + std::to_string(i / 3));
    require(a != b && b != d && a != d,
            "mesh: degenerate face at " + std::to_string(i / 3));
  }
  Mesh m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  return m;
}

std::vector<i64> Mesh::isolated_vertices() const {
  std::vector<bool> used(vertex_count(), false);
  for (i64 idx : faces) used[idx] = true;
  std::vector<i64> out;
  for (i64 v = 0; v < vertex_count(); ++v)
    if (!used[v]) out.push_back(v);
  return out;
}

bool Mesh::is_closed_2manifold() const {
  std::map<std::pair<i64, i64>, int> edge_faces;
  for (i64 f = 0; f < face_count(); ++f)
    for (int k = 0; k < 3; ++k) {
      i64 a = fv(f, k), b = fv(f, (k + 1) % 3);
      if (a > b) std::swap(a, b);
      edge_faces[{a, b}]++;
    }
  for (const auto& [e, n] : edge_faces)
    if (n != 2) return false;
  return true;
}

SparsePtr build_adjacency(const std::vector<i64>& faces, i64 vertex_count) {
  require(faces.size() % 3 == 0, "adjacency: face array not a multiple of 3");
  std::vector<std::pair<i64, i64>> edges;
  edges.reserve(faces.size() * 2);
  for (size_t i = 0; i < faces.size(); i += 3) {
    const i64 f[3] = {faces[i], faces[i + 1], faces[i + 2]};
    for (int k = 0; k < 3; ++k) {
      const i64 a = f[k], b = f[(k + 1) % 3];
      require(a >= 0 && a < vertex_count && b >= 0 && b < vertex_count,
              "adjacency: face index out of range");
      require(a != b, "adjacency: degenerate face");
      edges.emplace_back(a, b);
      edges.emplace_back(b, a);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<SparseMatrix::Triplet> trips;
  trips.reserve(edges.size());
  for (auto [a, b] : edges) trips.emplace_back(a, b, 1.0);
  return std::make_shared<const SparseMatrix>(
      SparseMatrix::from_triplets(vertex_count, vertex_count, std::move(trips)));
}

SparsePtr normalize_adjacency(const SparseMatrix& A) {
  require(A.rows == A.cols, "normalize_adjacency: square matrix required");
  const i64 c = A.rows;
  // degree of A + I; the self loop keeps every degree positive
  std::vector<double> deg(c, 1.0);
  for (i64 r = 0; r < c; ++r) deg[r] += static_cast<double>(A.rowptr[r + 1] - A.rowptr[r]);
  std::vector<SparseMatrix::Triplet> trips;
  trips.reserve(A.nnz() + c);
  for (i64 r = 0; r < c; ++r) {
    trips.emplace_back(r, r, 1.0 / deg[r]);
    for (i64 p = A.rowptr[r]; p < A.rowptr[r + 1]; ++p) {
      const i64 cc = A.col[p];
      trips.emplace_back(r, cc, A.val[p] / std::sqrt(deg[r] * deg[cc]));
    }
  }
  return std::make_shared<const SparseMatrix>(
      SparseMatrix::from_triplets(c, c, std::move(trips)));
}

SparsePtr laplacian_operator(const SparseMatrix& A) {
  require(A.rows == A.cols, "laplacian_operator: square matrix required");
  const i64 c = A.rows;
  std::vector<SparseMatrix::Triplet> trips;
  trips.reserve(A.nnz() + c);
  for (i64 r = 0; r < c; ++r) {
    trips.emplace_back(r, r, 1.0);
    const i64 d = A.rowptr[r + 1] - A.rowptr[r];
    if (d == 0) continue;  // isolated vertex: delta v = v
    const double w = -1.0 / static_cast<double>(d);
    for (i64 p = A.rowptr[r]; p < A.rowptr[r + 1]; ++p)
      trips.emplace_back(r, A.col[p], w);
  }
  return std::make_shared<const SparseMatrix>(
      SparseMatrix::from_triplets(c, c, std::move(trips)));
}

std::vector<double> laplacian_coords(const std::vector<double>& V,
                                     const SparseMatrix& A) {
  require(static_cast<i64>(V.size()) == A.rows * 3,
          "laplacian_coords: V must be C x 3 for the given adjacency");
  const SparsePtr op = laplacian_operator(A);
  std::vector<double> out(V.size());
  op->matmul(V.data(), 3, out.data(), false);
  return out;
}

Mesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OBJ: " + path);
  std::vector<double> verts;
  std::vector<i64> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw IoError(path + ":" + std::to_string(lineno) + ": bad vertex");
      verts.insert(verts.end(), {x, y, z});
    } else if (tag == "f") {
      std::vector<i64> idx;
      std::string tok;
      while (ss >> tok) {
        // accept i, i/t, i/t/n, i//n forms; only the vertex index is used
        const size_t slash = tok.find('/');
        if (slash != std::string::npos) tok = tok.substr(0, slash);
        i64 v = 0;
        try {
          v = std::stoll(tok);
        } catch (const std::exception&) {
          throw IoError(path + ":" + std::to_string(lineno) + ": bad face index");
        }
        require(v >= 1, "OBJ: only positive 1-based indices are supported");
        idx.push_back(v - 1);
      }
      if (idx.size() != 3)
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": only triangle faces are supported");
      faces.insert(faces.end(), idx.begin(), idx.end());
    }
    // other directives (vn, vt, o, g, usemtl, ...) are ignored
  }
  Mesh m = Mesh::create(std::move(verts), std::move(faces));
  if (!m.isolated_vertices().empty())
    throw IoError(path + ": mesh has vertices referenced by no face");
  return m;
}

void save_obj(const Mesh& mesh, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open OBJ for writing: " + path);
  for (i64 v = 0; v < mesh.vertex_count(); ++v)
    std::fprintf(f, "v %.17g %.17g %.17g\n", mesh.vx(v, 0), mesh.vx(v, 1),
                 mesh.vx(v, 2));
  for (i64 t = 0; t < mesh.face_count(); ++t)
    std::fprintf(f, "f %lld %lld %lld\n",
                 static_cast<long long>(mesh.fv(t, 0) + 1),
                 static_cast<long long>(mesh.fv(t, 1) + 1),
                 static_cast<long long>(mesh.fv(t, 2) + 1));
  if (std::fclose(f) != 0) throw IoError("close failed: " + path);
}

Mesh make_uv_sphere(i64 rows, i64 cols, double radius) {
  require(rows >= 2 && cols >= 3, "uv sphere: need rows >= 2, cols >= 3");
  const double pi = 3.14159265358979323846;
  std::vector<double> verts;
  // interior grid rows (poles added last)
  for (i64 r = 0; r < rows; ++r) {
    const double phi = pi * static_cast<double>(r + 1) / static_cast<double>(rows + 1);
    for (i64 cidx = 0; cidx < cols; ++cidx) {
      const double th = 2.0 * pi * static_cast<double>(cidx) / static_cast<double>(cols);
      verts.insert(verts.end(), {radius * std::sin(phi) * std::cos(th),
                                 radius * std::cos(phi),
                                 radius * std::sin(phi) * std::sin(th)});
    }
  }
  const i64 top = rows * cols;
  const i64 bottom = top + 1;
  verts.insert(verts.end(), {0.0, radius, 0.0});
  verts.insert(verts.end(), {0.0, -radius, 0.0});

  std::vector<i64> faces;
  auto vid = [cols](i64 r, i64 cidx) { return r * cols + (cidx % cols); };
  for (i64 cidx = 0; cidx < cols; ++cidx) {
    faces.insert(faces.end(), {top, vid(0, cidx + 1), vid(0, cidx)});
    faces.insert(faces.end(), {bottom, vid(rows - 1, cidx), vid(rows - 1, cidx + 1)});
  }
  for (i64 r = 0; r + 1 < rows; ++r)
    for (i64 cidx = 0; cidx < cols; ++cidx) {
      faces.insert(faces.end(), {vid(r, cidx), vid(r, cidx + 1), vid(r + 1, cidx)});
      faces.insert(faces.end(), {vid(r, cidx + 1), vid(r + 1, cidx + 1), vid(r + 1, cidx)});
    }
  return Mesh::create(std::move(verts), std::move(faces));
}

}  // namespace c2f::meshkit
