#pragma once
#include <string>
#include <vector>

#include "c2f/ops.hpp"
#include "c2f/tensor.hpp"

namespace c2f::artmodel {

// Parametric articulated body: PCA shape space over a template, kinematic
// tree with axis-angle joint rotations, linear blend skinning, and a joint
// regressor. Priors are Gaussians over shape and pose with box pose limits.
// Immutable once finalized; forward() is pure.
struct ArticulatedModel {
  i64 vertex_count = 0;  // C
  i64 joint_count = 0;   // N
  i64 shape_dims = 0;    // B

  std::vector<double> template_vertices;  // C x 3
  std::vector<double> shape_basis;        // B x 3C
  std::vector<i64> parent;                // N; parent[0] = -1, parents precede
  std::vector<double> skin_weights;       // C x N, rows sum to 1
  std::vector<double> joint_regressor;    // N x C, rows sum to 1
  std::vector<double> shape_prior_mean;   // B
  std::vector<double> shape_prior_cov;    // B x B, SPD
  std::vector<double> pose_prior_mean;    // 3N
  std::vector<double> pose_prior_cov;     // 3N x 3N, SPD
  std::vector<double> pose_min;           // 3N
  std::vector<double> pose_max;           // 3N
  std::vector<i64> faces;                 // F x 3 mesh topology

  // Lower Cholesky factors of the prior covariances, computed by finalize().
  Tensor shape_prior_chol;
  Tensor pose_prior_chol;

  // Validates every structural invariant (weight row sums, SPD priors,
  // ordered limits, tree ordering) and precomputes the Cholesky factors.
  void finalize();

  Tensor template_tensor() const {
    return Tensor::from({vertex_count, 3}, template_vertices);
  }
};

// 3x3 rotation from an axis-angle vector; second-order Taylor below 1e-8.
void rodrigues(const double v[3], double R[9]);

// Batched differentiable Rodrigues: theta [N,3] -> [N,9] row-major rotations.
Tensor rodrigues_op(const Tensor& theta);

// V = M(beta, theta, gamma): PCA-shaped template, joint transforms composed
// down the kinematic tree (rotating about each joint's rest position), linear
// blend skinning, then the global translation added to every vertex.
// All inputs may be tracked; the result participates in the tape.
Tensor forward(const ArticulatedModel& m, const Tensor& beta,
               const Tensor& theta, const Tensor& gamma);

// J_3D = W x V.
Tensor regress_joints(const ArticulatedModel& m, const Tensor& V);

// Rest joints of the shaped (unposed) template.
Tensor rest_joints(const ArticulatedModel& m, const Tensor& beta);

struct ToySpec {
  i64 target_vertex_count = 482;  // realized as a uv-sphere, so approximate
  i64 shape_dims = 4;             // 1..4 analytic displacement fields
  double sigma_shape = 1.0;
  double sigma_pose = 0.4;        // radians
  double root_limit = 0.35;       // |axis-angle| box per root coordinate
  double joint_limit = 0.5;       // per non-root coordinate
};

// Deterministic quadruped stand-in: a sculpted closed sphere (ellipsoid body,
// four legs, head, tail) with 9 joints, smooth distance-based skin weights
// and isotropic Gaussian priors.
ArticulatedModel make_toy_model(const ToySpec& spec, u64 seed);

// Single binary container (magic C2FM); bit-exact round trip.
void save_model(const ArticulatedModel& m, const std::string& path);
ArticulatedModel load_model(const std::string& path);

}  // namespace c2f::artmodel
