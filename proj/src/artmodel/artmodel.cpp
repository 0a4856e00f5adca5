#include "c2f/artmodel.hpp"

#include <cmath>
#include <cstring>

#include "c2f/binio.hpp"

namespace c2f::artmodel {

namespace {

// Dense lower Cholesky; throws when the matrix is not positive definite.
std::vector<double> cholesky_lower(const std::vector<double>& a, i64 n,
                                   const char* what) {
  std::vector<double> l(n * n, 0.0);
  for (i64 i = 0; i < n; ++i) {
    for (i64 j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (i64 k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        require(s > 0.0, std::string(what) +
                             ": covariance is not positive definite");
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return l;
}

void check_symmetric(const std::vector<double>& a, i64 n, const char* what) {
  for (i64 i = 0; i < n; ++i)
    for (i64 j = i + 1; j < n; ++j)
      require(std::abs(a[i * n + j] - a[j * n + i]) <= 1e-12,
              std::string(what) + ": covariance is not symmetric");
}

void check_rows_sum_one(const std::vector<double>& w, i64 rows, i64 cols,
                        const char* what) {
  for (i64 r = 0; r < rows; ++r) {
    double s = 0.0;
    for (i64 c = 0; c < cols; ++c) {
      require(w[r * cols + c] >= -1e-12,
              std::string(what) + ": negative weight");
      s += w[r * cols + c];
    }
    require(std::abs(s - 1.0) <= 1e-9,
            std::string(what) + ": row " + std::to_string(r) +
                " sums to " + std::to_string(s));
  }
}

}  // namespace

void ArticulatedModel::finalize() {
  const i64 c = vertex_count, n = joint_count, b = shape_dims;
  require(c > 0 && n > 0 && b >= 0, "model: empty dimensions");
  require(static_cast<i64>(template_vertices.size()) == c * 3,
          "model: template size mismatch");
  require(static_cast<i64>(shape_basis.size()) == b * c * 3,
          "model: shape basis size mismatch");
  require(static_cast<i64>(parent.size()) == n, "model: tree size mismatch");
  require(parent[0] == -1, "model: root parent must be -1");
  for (i64 j = 1; j < n; ++j)
    require(parent[j] >= 0 && parent[j] < j,
            "model: parents must precede children");
  require(static_cast<i64>(skin_weights.size()) == c * n,
          "model: skin weight size mismatch");
  require(static_cast<i64>(joint_regressor.size()) == n * c,
          "model: regressor size mismatch");
  check_rows_sum_one(skin_weights, c, n, "skin weights");
  check_rows_sum_one(joint_regressor, n, c, "joint regressor");

  require(static_cast<i64>(shape_prior_mean.size()) == b &&
              static_cast<i64>(shape_prior_cov.size()) == b * b,
          "model: shape prior size mismatch");
  require(static_cast<i64>(pose_prior_mean.size()) == 3 * n &&
              static_cast<i64>(pose_prior_cov.size()) == 9 * n * n,
          "model: pose prior size mismatch");
  require(static_cast<i64>(pose_min.size()) == 3 * n &&
              static_cast<i64>(pose_max.size()) == 3 * n,
          "model: pose limit size mismatch");
  for (i64 i = 0; i < 3 * n; ++i)
    require(pose_min[i] <= pose_max[i], "model: pose_min > pose_max");
  for (double v : template_vertices)
    require(std::isfinite(v), "model: non-finite template");
  require(faces.size() % 3 == 0, "model: face array not a multiple of 3");
  for (i64 idx : faces)
    require(idx >= 0 && idx < c, "model: face index out of range");

  check_symmetric(shape_prior_cov, b, "shape prior");
  check_symmetric(pose_prior_cov, 3 * n, "pose prior");
  shape_prior_chol =
      Tensor::from({b, b}, cholesky_lower(shape_prior_cov, b, "shape prior"));
  pose_prior_chol = Tensor::from(
      {3 * n, 3 * n}, cholesky_lower(pose_prior_cov, 3 * n, "pose prior"));
}

void rodrigues(const double v[3], double R[9]) {
  const double th2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  const double th = std::sqrt(th2);
  if (th < 1e-8) {
    // R = I + [v]x + [v]x^2 / 2
    R[0] = 1.0 - 0.5 * (v[1] * v[1] + v[2] * v[2]);
    R[1] = -v[2] + 0.5 * v[0] * v[1];
    R[2] = v[1] + 0.5 * v[0] * v[2];
    R[3] = v[2] + 0.5 * v[0] * v[1];
    R[4] = 1.0 - 0.5 * (v[0] * v[0] + v[2] * v[2]);
    R[5] = -v[0] + 0.5 * v[1] * v[2];
    R[6] = -v[1] + 0.5 * v[0] * v[2];
    R[7] = v[0] + 0.5 * v[1] * v[2];
    R[8] = 1.0 - 0.5 * (v[0] * v[0] + v[1] * v[1]);
    return;
  }
  const double c = std::cos(th), s = std::sin(th);
  const double t = 1.0 - c;
  const double x = v[0] / th, y = v[1] / th, z = v[2] / th;
  R[0] = c + x * x * t;
  R[1] = x * y * t - z * s;
  R[2] = x * z * t + y * s;
  R[3] = x * y * t + z * s;
  R[4] = c + y * y * t;
  R[5] = y * z * t - x * s;
  R[6] = x * z * t - y * s;
  R[7] = y * z * t + x * s;
  R[8] = c + z * z * t;
}

namespace {

inline void cross3(const double a[3], const double b[3], double out[3]) {
  out[0] = a[1] * b[2] - a[2] * b[1];
  out[1] = a[2] * b[0] - a[0] * b[2];
  out[2] = a[0] * b[1] - a[1] * b[0];
}

// d(R)/d(v_k) for one axis-angle vector (Gallego & Yezzi form); dR is 9
// doubles per k. Falls back to the generator [e_k]x near zero.
void rodrigues_jacobian(const double v[3], const double R[9], double dR[3][9]) {
  const double th2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  if (th2 < 1e-16) {
    for (int k = 0; k < 3; ++k) {
      double e[3] = {0, 0, 0};
      e[k] = 1.0;
      // [e_k]x
      const double gen[9] = {0,     -e[2], e[1],  e[2], 0,
                             -e[0], -e[1], e[0],  0};
      std::memcpy(dR[k], gen, sizeof gen);
    }
    return;
  }
  for (int k = 0; k < 3; ++k) {
    double e[3] = {0, 0, 0};
    e[k] = 1.0;
    // u = v x (I - R) e_k
    double ime[3];
    for (int i = 0; i < 3; ++i)
      ime[i] = e[i] - (R[i * 3 + 0] * e[0] + R[i * 3 + 1] * e[1] +
                       R[i * 3 + 2] * e[2]);
    double u[3];
    cross3(v, ime, u);
    // S = (v_k [v]x + [u]x) / th2
    const double a = v[k];
    double S[9] = {0,          -a * v[2] - u[2], a * v[1] + u[1],
                   a * v[2] + u[2], 0,           -a * v[0] - u[0],
                   -a * v[1] - u[1], a * v[0] + u[0], 0};
    for (double& s : S) s /= th2;
    // dR = S * R
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        dR[k][i * 3 + j] = S[i * 3 + 0] * R[0 * 3 + j] +
                           S[i * 3 + 1] * R[1 * 3 + j] +
                           S[i * 3 + 2] * R[2 * 3 + j];
  }
}

}  // namespace

Tensor rodrigues_op(const Tensor& theta) {
  require(theta.ndim() == 2 && theta.dim(1) == 3,
          "rodrigues_op: theta must be [N,3]");
  const i64 n = theta.dim(0);
  std::vector<double> out(n * 9);
  for (i64 j = 0; j < n; ++j) rodrigues(theta.data() + j * 3, out.data() + j * 9);
  Tensor r = Tensor::from({n, 9}, std::move(out));
  if (Tape* t = ops::result_tape({&theta})) {
    const int id = t->record(n * 9, {theta.node()}, [n, theta, r](Tape::Grads& g) {
      if (double* gt = g.in(0)) {
        for (i64 j = 0; j < n; ++j) {
          double dR[3][9];
          rodrigues_jacobian(theta.data() + j * 3, r.data() + j * 9, dR);
          for (int k = 0; k < 3; ++k) {
            double acc = 0.0;
            for (int idx = 0; idx < 9; ++idx)
              acc += g.out()[j * 9 + idx] * dR[k][idx];
            gt[j * 3 + k] += acc;
          }
        }
      }
    });
    r = r.tracked_as(t, id);
  }
  return r;
}

Tensor rest_joints(const ArticulatedModel& m, const Tensor& beta) {
  require(beta.size() == m.shape_dims, "rest_joints: beta size mismatch");
  const Tensor basis =
      Tensor::from({m.shape_dims, m.vertex_count * 3}, m.shape_basis);
  const Tensor beta_row = ops::reshape(beta, {1, m.shape_dims});
  const Tensor offset =
      ops::reshape(ops::matmul(beta_row, basis), {m.vertex_count, 3});
  const Tensor shaped = ops::add(m.template_tensor(), offset);
  const Tensor w = Tensor::from({m.joint_count, m.vertex_count},
                                m.joint_regressor);
  return ops::matmul(w, shaped);
}

Tensor forward(const ArticulatedModel& m, const Tensor& beta,
               const Tensor& theta, const Tensor& gamma) {
  require(beta.size() == m.shape_dims, "forward: beta size mismatch");
  require(theta.ndim() == 2 && theta.dim(0) == m.joint_count &&
              theta.dim(1) == 3,
          "forward: theta must be [N,3]");
  require(gamma.size() == 3, "forward: gamma must have 3 entries");
  const i64 c = m.vertex_count, n = m.joint_count;

  // PCA-shaped template.
  const Tensor basis = Tensor::from({m.shape_dims, c * 3}, m.shape_basis);
  const Tensor beta_row = ops::reshape(beta, {1, m.shape_dims});
  const Tensor offset = ops::reshape(ops::matmul(beta_row, basis), {c, 3});
  const Tensor shaped = ops::add(m.template_tensor(), offset);

  const Tensor w_reg = Tensor::from({n, c}, m.joint_regressor);
  const Tensor j_rest = ops::matmul(w_reg, shaped);  // N x 3

  const Tensor rots = rodrigues_op(theta);  // N x 9

  // World transforms T_j(x) = R_j^w x + t_j^w composed down the tree, each
  // joint rotating about its rest position.
  std::vector<Tensor> rot_w(n), trans_w(n);
  for (i64 j = 0; j < n; ++j) {
    const Tensor r_local = ops::reshape(ops::slice(rots, 0, j, 1), {3, 3});
    const Tensor j_row = ops::slice(j_rest, 0, j, 1);  // [1,3]
    // j_j - R_j j_j
    const Tensor pivot =
        ops::sub(j_row, ops::matmul(j_row, ops::transpose(r_local)));
    if (m.parent[j] < 0) {
      rot_w[j] = r_local;
      trans_w[j] = pivot;
    } else {
      const i64 p = m.parent[j];
      rot_w[j] = ops::matmul(rot_w[p], r_local);
      trans_w[j] = ops::add(ops::matmul(pivot, ops::transpose(rot_w[p])),
                            trans_w[p]);
    }
  }

  // Linear blend skinning.
  Tensor skinned;
  for (i64 j = 0; j < n; ++j) {
    const Tensor xj = ops::add_rowvec(
        ops::matmul(shaped, ops::transpose(rot_w[j])),
        ops::reshape(trans_w[j], {3}));
    std::vector<double> wcol(c);
    for (i64 v = 0; v < c; ++v) wcol[v] = m.skin_weights[v * n + j];
    const Tensor weighted = ops::mul_colvec(xj, Tensor::from({c}, wcol));
    skinned = j == 0 ? weighted : ops::add(skinned, weighted);
  }
  return ops::add_rowvec(skinned, gamma);
}

Tensor regress_joints(const ArticulatedModel& m, const Tensor& v) {
  require(v.ndim() == 2 && v.dim(0) == m.vertex_count && v.dim(1) == 3,
          "regress_joints: V must be C x 3");
  const Tensor w =
      Tensor::from({m.joint_count, m.vertex_count}, m.joint_regressor);
  return ops::matmul(w, v);
}

static const char kMagic[4] = {'C', '2', 'F', 'M'};
static constexpr u64 kVersion = 1;

// Layout: magic, version, C, N, B, F; then template, shape basis, tree,
// skin weights, regressor, shape prior (mean, cov), pose prior (mean, cov),
// limits (min, max), faces. Arrays carry a length prefix.
void save_model(const ArticulatedModel& m, const std::string& path) {
  BinWriter w(path);
  w.magic(kMagic);
  w.u64v(kVersion);
  w.u64v(static_cast<u64>(m.vertex_count));
  w.u64v(static_cast<u64>(m.joint_count));
  w.u64v(static_cast<u64>(m.shape_dims));
  w.u64v(m.faces.size() / 3);
  w.f64s(m.template_vertices);
  w.f64s(m.shape_basis);
  w.i64s(m.parent);
  w.f64s(m.skin_weights);
  w.f64s(m.joint_regressor);
  w.f64s(m.shape_prior_mean);
  w.f64s(m.shape_prior_cov);
  w.f64s(m.pose_prior_mean);
  w.f64s(m.pose_prior_cov);
  w.f64s(m.pose_min);
  w.f64s(m.pose_max);
  w.i64s(m.faces);
  w.close();
}

ArticulatedModel load_model(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kMagic);
  const u64 version = r.u64v();
  if (version != kVersion)
    throw IoError(path + ": unsupported model version " +
                  std::to_string(version));
  ArticulatedModel m;
  m.vertex_count = static_cast<i64>(r.u64v());
  m.joint_count = static_cast<i64>(r.u64v());
  m.shape_dims = static_cast<i64>(r.u64v());
  const u64 f = r.u64v();
  if (m.vertex_count <= 0 || m.vertex_count > (1 << 24) ||
      m.joint_count <= 0 || m.joint_count > 4096 || m.shape_dims < 0 ||
      m.shape_dims > 4096)
    throw IoError(path + ": implausible model header");
  const i64 c = m.vertex_count, n = m.joint_count, b = m.shape_dims;
  m.template_vertices = r.f64s(c * 3);
  m.shape_basis = r.f64s(b * c * 3);
  m.parent = r.i64s(n);
  m.skin_weights = r.f64s(c * n);
  m.joint_regressor = r.f64s(n * c);
  m.shape_prior_mean = r.f64s(b);
  m.shape_prior_cov = r.f64s(b * b);
  m.pose_prior_mean = r.f64s(3 * n);
  m.pose_prior_cov = r.f64s(9 * n * n);
  m.pose_min = r.f64s(3 * n);
  m.pose_max = r.f64s(3 * n);
  m.faces = r.i64s(f * 3);
  try {
    m.finalize();
  } catch (const ArgumentError& e) {
    throw IoError(path + ": invalid model: " + e.what());
  }
  return m;
}

}  // namespace c2f::artmodel
