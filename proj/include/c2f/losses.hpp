#pragma once
#include "c2f/artmodel.hpp"
#include "c2f/camrender.hpp"
#include "c2f/config.hpp"
#include "c2f/datagen.hpp"
#include "c2f/sparse.hpp"
#include "c2f/tensor.hpp"

namespace c2f::losses {

struct LossWeights {
  double kp1 = 1.0;
  double silh1 = 5.0;
  double beta = 1e-3;
  double theta = 1e-3;
  double lim = 1e-2;
  double kp2 = 1.0;
  double silh2 = 5.0;
  double lap = 10.0;
  double tversky_alpha = 0.7;  // false-positive weight
  double tversky_beta = 0.3;   // false-negative weight

  void validate() const;
  static LossWeights from_config(const Config& cfg);
};

// Mean over visible joints of the squared pixel distance between the
// projected 3-d joints and the annotations. Zero visible joints yields a
// constant 0 and sets *no_visible.
Tensor keypoint_loss(const std::vector<double>& kp_gt,
                     const std::vector<double>& visibility, const Tensor& j3d,
                     const Tensor& focal, const camrender::Camera& cam,
                     bool* no_visible = nullptr);

// Soft-count Tversky index T = |PG| / (|PG| + a|P\G| + b|G\P|), smoothing
// 1e-8 in numerator and denominator. P is the prediction.
Tensor tversky(const Tensor& pred, const Tensor& gt, double alpha,
               double beta);

// 1 - T(rendered, S): the rendered mask sits in the prediction slot so alpha
// weighs rendered-but-not-annotated (false positive) pixels.
Tensor silhouette_loss(const Tensor& gt_silh, const Tensor& soft_mask,
                       double alpha, double beta);

// (x - mu)^T Sigma^{-1} (x - mu) through the precomputed Cholesky factor.
Tensor mahalanobis_prior(const Tensor& x, const std::vector<double>& mu,
                         const Tensor& chol_lower);

// Squared hinge outside [theta_min, theta_max], zero (with zero gradient)
// strictly inside.
Tensor pose_limit_prior(const Tensor& theta, const std::vector<double>& tmin,
                        const std::vector<double>& tmax);

// sum_i || delta v_i^f - delta v_i^c ||^2 with delta the Laplacian-coordinate
// operator of the fine mesh graph.
Tensor laplacian_loss(const Tensor& v_fine, const Tensor& v_coarse,
                      const SparsePtr& laplacian_op);

struct Stage1Terms {
  Tensor total;
  Tensor kp, silh, beta_prior, theta_prior, limit;
  bool silhouette_active = false;
  bool no_visible_joints = false;
};

struct Stage1Inputs {
  Tensor j3d;    // N x 3 (regressed from the coarse mesh)
  Tensor v_coarse;
  Tensor beta;
  Tensor theta;  // N x 3
  Tensor focal;
};

// Eq-6-style weighted sum; the silhouette term (and the pose limit prior,
// which the schedule activates alongside it) is gated by include_silhouette.
Stage1Terms stage1_loss(const datagen::TrainingSample& sample,
                        const Stage1Inputs& in,
                        const artmodel::ArticulatedModel& model,
                        const camrender::Camera& cam, const LossWeights& w,
                        bool include_silhouette, double sharpness,
                        bool include_limit_prior);

struct Stage2Terms {
  Tensor total;
  Tensor kp, silh, lap;
};

// Keypoint + silhouette on the refined mesh plus the Laplacian regularizer
// against the coarse mesh.
Stage2Terms stage2_loss(const datagen::TrainingSample& sample,
                        const Tensor& v_fine, const Tensor& v_coarse,
                        const artmodel::ArticulatedModel& model,
                        const camrender::Camera& cam,
                        const SparsePtr& laplacian_op, const LossWeights& w,
                        double sharpness, const Tensor& focal);

}  // namespace c2f::losses
