#include <cmath>

#include "c2f/artmodel.hpp"
#include "c2f/meshkit.hpp"
#include "c2f/rng.hpp"

namespace c2f::artmodel {

namespace {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

double dist_point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const double abx = b.x - a.x, aby = b.y - a.y, abz = b.z - a.z;
  const double apx = p.x - a.x, apy = p.y - a.y, apz = p.z - a.z;
  const double len2 = abx * abx + aby * aby + abz * abz;
  double t = len2 > 0 ? (apx * abx + apy * aby + apz * abz) / len2 : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  const double dx = apx - t * abx, dy = apy - t * aby, dz = apz - t * abz;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

constexpr double kLegAnchorX = 0.52;
constexpr double kLegAnchorZ = 0.26;

}  // namespace

ArticulatedModel make_toy_model(const ToySpec& spec, u64 seed) {
  require(spec.shape_dims >= 1 && spec.shape_dims <= 4,
          "toy model: shape_dims must be in 1..4");
  require(spec.target_vertex_count >= 50, "toy model: too few vertices");

  // uv-sphere resolution hitting roughly the requested vertex count with a
  // 5:6 row/column aspect.
  const i64 c_grid = spec.target_vertex_count - 2;
  i64 rows = std::max<i64>(
      4, static_cast<i64>(std::lround(std::sqrt(c_grid / 1.2))));
  i64 cols = std::max<i64>(6, (c_grid + rows / 2) / rows);
  meshkit::Mesh sphere = meshkit::make_uv_sphere(rows, cols, 1.0);
  const i64 c = sphere.vertex_count();
  const i64 n = 9;

  // Sculpt the quadruped: ellipsoid body with legs pulled down toward four
  // anchors, raised head at +x, short tail at -x.
  const double ax[4] = {kLegAnchorX, kLegAnchorX, -kLegAnchorX, -kLegAnchorX};
  const double az[4] = {kLegAnchorZ, -kLegAnchorZ, kLegAnchorZ, -kLegAnchorZ};
  std::vector<double> tmpl(c * 3);
  Rng rng(seed);
  for (i64 v = 0; v < c; ++v) {
    const double px = sphere.vx(v, 0), py = sphere.vx(v, 1),
                 pz = sphere.vx(v, 2);
    double qx = 1.15 * px, qy = 0.62 * py, qz = 0.50 * pz;

    const double down = std::max(0.0, -py);  // bottom hemisphere mask
    for (int leg = 0; leg < 4; ++leg) {
      const double r2 = (qx - ax[leg]) * (qx - ax[leg]) +
                        (qz - az[leg]) * (qz - az[leg]);
      const double g = std::exp(-r2 / (2.0 * 0.13 * 0.13));
      qy -= 0.85 * g * down;
      qx += 0.45 * g * down * (ax[leg] - qx);
      qz += 0.45 * g * down * (az[leg] - qz);
    }
    if (px > 0.55) {
      const double h = (px - 0.55) / 0.45;
      qx += 0.35 * h * h;
      qy += 0.42 * h * h;
    }
    if (px < -0.75) {
      const double t = (-px - 0.75) / 0.25;
      qx -= 0.30 * t * t;
      qy += 0.22 * t * t;
    }
    // tiny jitter breaks exact symmetry so decimation orderings are generic
    tmpl[v * 3 + 0] = qx + 1e-3 * rng.normal();
    tmpl[v * 3 + 1] = qy + 1e-3 * rng.normal();
    tmpl[v * 3 + 2] = qz + 1e-3 * rng.normal();
  }

  // Kinematic tree: root, spine, neck, head, tail, then front/back legs.
  const Vec3 pivot[9] = {
      {-0.15, 0.02, 0.0},                       // 0 root (pelvis)
      {0.10, 0.05, 0.0},                        // 1 spine/chest
      {0.50, 0.15, 0.0},                        // 2 neck
      {0.68, 0.32, 0.0},                        // 3 head
      {-0.72, 0.15, 0.0},                       // 4 tail
      {kLegAnchorX, -0.25, kLegAnchorZ},        // 5 front-left hip
      {kLegAnchorX, -0.25, -kLegAnchorZ},       // 6 front-right hip
      {-kLegAnchorX, -0.25, kLegAnchorZ},       // 7 back-left hip
      {-kLegAnchorX, -0.25, -kLegAnchorZ},      // 8 back-right hip
  };
  const Vec3 tip[9] = {
      {0.10, 0.02, 0.0},
      {0.50, 0.10, 0.0},
      {0.68, 0.30, 0.0},
      {0.98, 0.58, 0.0},
      {-1.02, 0.38, 0.0},
      {kLegAnchorX, -1.05, kLegAnchorZ},
      {kLegAnchorX, -1.05, -kLegAnchorZ},
      {-kLegAnchorX, -1.05, kLegAnchorZ},
      {-kLegAnchorX, -1.05, -kLegAnchorZ},
  };
  const std::vector<i64> parent = {-1, 0, 1, 2, 0, 1, 1, 0, 0};

  // Smooth bone-distance skin weights (rows normalized).
  const double sigma_skin = 0.22;
  std::vector<double> weights(c * n);
  for (i64 v = 0; v < c; ++v) {
    const Vec3 p{tmpl[v * 3], tmpl[v * 3 + 1], tmpl[v * 3 + 2]};
    double s = 0.0;
    for (i64 j = 0; j < n; ++j) {
      const double d = dist_point_segment(p, pivot[j], tip[j]);
      const double w = std::exp(-d * d / (2.0 * sigma_skin * sigma_skin));
      weights[v * n + j] = w;
      s += w;
    }
    for (i64 j = 0; j < n; ++j) weights[v * n + j] /= s;
  }

  // Joint regressor: Gaussian over surface vertices around each pivot.
  const double sigma_reg = 0.18;
  std::vector<double> regressor(n * c);
  for (i64 j = 0; j < n; ++j) {
    double s = 0.0;
    for (i64 v = 0; v < c; ++v) {
      const double dx = tmpl[v * 3] - pivot[j].x;
      const double dy = tmpl[v * 3 + 1] - pivot[j].y;
      const double dz = tmpl[v * 3 + 2] - pivot[j].z;
      const double w =
          std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * sigma_reg * sigma_reg));
      regressor[j * c + v] = w;
      s += w;
    }
    for (i64 v = 0; v < c; ++v) regressor[j * c + v] /= s;
  }

  // Summed leg weight, used by the leg-length shape direction.
  std::vector<double> leg_mask(c);
  for (i64 v = 0; v < c; ++v)
    leg_mask[v] = weights[v * n + 5] + weights[v * n + 6] +
                  weights[v * n + 7] + weights[v * n + 8];

  const i64 b = spec.shape_dims;
  std::vector<double> basis(b * c * 3, 0.0);
  for (i64 v = 0; v < c; ++v) {
    const double qx = tmpl[v * 3], qy = tmpl[v * 3 + 1], qz = tmpl[v * 3 + 2];
    // 0: body length, 1: girth, 2: leg length, 3: head size
    basis[0 * c * 3 + v * 3 + 0] = 0.16 * qx;
    if (b > 1) {
      basis[1 * c * 3 + v * 3 + 1] = 0.08 * qy;
      basis[1 * c * 3 + v * 3 + 2] = 0.12 * qz;
    }
    if (b > 2) basis[2 * c * 3 + v * 3 + 1] = -0.12 * leg_mask[v];
    if (b > 3) {
      const double dx = qx - pivot[2].x, dy = qy - pivot[2].y,
                   dz = qz - pivot[2].z;
      const double hm = std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * 0.3 * 0.3));
      basis[3 * c * 3 + v * 3 + 0] = 0.12 * hm * dx;
      basis[3 * c * 3 + v * 3 + 1] = 0.12 * hm * dy;
      basis[3 * c * 3 + v * 3 + 2] = 0.12 * hm * dz;
    }
  }

  ArticulatedModel m;
  m.vertex_count = c;
  m.joint_count = n;
  m.shape_dims = b;
  m.template_vertices = std::move(tmpl);
  m.shape_basis = std::move(basis);
  m.parent = parent;
  m.skin_weights = std::move(weights);
  m.joint_regressor = std::move(regressor);
  m.shape_prior_mean.assign(b, 0.0);
  m.shape_prior_cov.assign(b * b, 0.0);
  for (i64 i = 0; i < b; ++i)
    m.shape_prior_cov[i * b + i] = spec.sigma_shape * spec.sigma_shape;
  m.pose_prior_mean.assign(3 * n, 0.0);
  m.pose_prior_cov.assign(9 * n * n, 0.0);
  for (i64 i = 0; i < 3 * n; ++i)
    m.pose_prior_cov[i * 3 * n + i] = spec.sigma_pose * spec.sigma_pose;
  m.pose_min.assign(3 * n, -spec.joint_limit);
  m.pose_max.assign(3 * n, spec.joint_limit);
  for (int k = 0; k < 3; ++k) {
    m.pose_min[k] = -spec.root_limit;
    m.pose_max[k] = spec.root_limit;
  }
  m.faces = sphere.faces;
  m.finalize();
  return m;
}

}  // namespace c2f::artmodel
