#include "c2f/binio.hpp"
#include "c2f/meshkit.hpp"

namespace c2f::meshkit {

static const char kMagic[4] = {'C', '2', 'F', 'H'};
static constexpr u64 kVersion = 1;

MeshHierarchy MeshHierarchy::build(const Mesh& mesh, int level_count,
                                   i64 downsample_factor) {
  require(level_count >= 1, "hierarchy: need at least one level");
  require(downsample_factor >= 2, "hierarchy: factor must be >= 2");
  MeshHierarchy h;
  Mesh current = mesh;
  for (int l = 0; l < level_count; ++l) {
    MeshLevel level;
    level.mesh = current;
    level.adjacency = build_adjacency(current.faces, current.vertex_count());
    level.norm_adjacency = normalize_adjacency(*level.adjacency);
    level.laplacian = laplacian_operator(*level.adjacency);
    if (l + 1 < level_count) {
      const i64 c = current.vertex_count();
      const i64 target =
          std::max<i64>(3, (c + downsample_factor - 1) / downsample_factor);
      DecimateResult dec = decimate(current, target);
      level.down = dec.q_down;
      level.up = upsample_transform(dec, current);
      current = dec.coarse;
    }
    h.levels.push_back(std::move(level));
  }
  return h;
}

static void write_sparse(BinWriter& w, const SparseMatrix& s) {
  w.u64v(static_cast<u64>(s.rows));
  w.u64v(static_cast<u64>(s.cols));
  w.u64v(static_cast<u64>(s.nnz()));
  std::vector<i64> rows;
  rows.reserve(s.nnz());
  for (i64 r = 0; r < s.rows; ++r)
    for (i64 p = s.rowptr[r]; p < s.rowptr[r + 1]; ++p) rows.push_back(r);
  w.i64s(rows);
  w.i64s(s.col);
  w.f64s(s.val);
}

static SparsePtr read_sparse(BinReader& r) {
  const i64 rows = static_cast<i64>(r.u64v());
  const i64 cols = static_cast<i64>(r.u64v());
  const u64 nnz = r.u64v();
  const std::vector<i64> ri = r.i64s(nnz);
  const std::vector<i64> ci = r.i64s(nnz);
  const std::vector<double> vi = r.f64s(nnz);
  std::vector<SparseMatrix::Triplet> trips;
  trips.reserve(nnz);
  for (u64 i = 0; i < nnz; ++i) trips.emplace_back(ri[i], ci[i], vi[i]);
  return std::make_shared<const SparseMatrix>(
      SparseMatrix::from_triplets(rows, cols, std::move(trips)));
}

// Layout: magic, version, level count; per level vertex/face arrays; per
// level the normalized adjacency triplets; per non-final level Q_d and Q_u
// triplets. Triplets are (row, col, value) arrays sorted by (row, col);
// integers u64/i64, reals f64, all little-endian.
void MeshHierarchy::save(const std::string& path) const {
  BinWriter w(path);
  w.magic(kMagic);
  w.u64v(kVersion);
  w.u64v(levels.size());
  for (const MeshLevel& l : levels) {
    w.u64v(static_cast<u64>(l.mesh.vertex_count()));
    w.u64v(static_cast<u64>(l.mesh.face_count()));
    w.f64s(l.mesh.vertices);
    w.i64s(l.mesh.faces);
  }
  for (const MeshLevel& l : levels) write_sparse(w, *l.norm_adjacency);
  for (size_t i = 0; i + 1 < levels.size(); ++i) {
    write_sparse(w, *levels[i].down);
    write_sparse(w, *levels[i].up);
  }
  w.close();
}

MeshHierarchy MeshHierarchy::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kMagic);
  const u64 version = r.u64v();
  if (version != kVersion)
    throw IoError(path + ": unsupported hierarchy version " +
                  std::to_string(version));
  const u64 nlevels = r.u64v();
  if (nlevels == 0 || nlevels > 64)
    throw IoError(path + ": implausible level count");
  MeshHierarchy h;
  for (u64 i = 0; i < nlevels; ++i) {
    const u64 c = r.u64v();
    const u64 f = r.u64v();
    std::vector<double> verts = r.f64s(c * 3);
    std::vector<i64> faces = r.i64s(f * 3);
    MeshLevel level;
    level.mesh = Mesh::create(std::move(verts), std::move(faces));
    level.adjacency =
        build_adjacency(level.mesh.faces, level.mesh.vertex_count());
    level.laplacian = laplacian_operator(*level.adjacency);
    h.levels.push_back(std::move(level));
  }
  for (u64 i = 0; i < nlevels; ++i) {
    h.levels[i].norm_adjacency = read_sparse(r);
    if (h.levels[i].norm_adjacency->rows != h.levels[i].mesh.vertex_count())
      throw IoError(path + ": adjacency size mismatch at level " +
                    std::to_string(i));
  }
  for (u64 i = 0; i + 1 < nlevels; ++i) {
    h.levels[i].down = read_sparse(r);
    h.levels[i].up = read_sparse(r);
    const i64 fine = h.levels[i].mesh.vertex_count();
    const i64 coarse = h.levels[i + 1].mesh.vertex_count();
    if (h.levels[i].down->rows != coarse || h.levels[i].down->cols != fine ||
        h.levels[i].up->rows != fine || h.levels[i].up->cols != coarse)
      throw IoError(path + ": transform size mismatch at level " +
                    std::to_string(i));
  }
  return h;
}

}  // namespace c2f::meshkit
