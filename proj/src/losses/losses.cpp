#include "c2f/losses.hpp"

#include <cmath>

#include "c2f/ops.hpp"

namespace c2f::losses {

void LossWeights::validate() const {
  const double all[] = {kp1, silh1, beta, theta, lim, kp2, silh2, lap};
  for (double v : all)
    require(v >= 0.0, "loss weights must be nonnegative");
  require(tversky_alpha > 0.0 && tversky_alpha < 1.0 && tversky_beta > 0.0 &&
              tversky_beta < 1.0,
          "tversky weights must lie in (0,1)");
  require(std::abs(tversky_alpha + tversky_beta - 1.0) <= 1e-12,
          "tversky alpha + beta must equal 1");
}

LossWeights LossWeights::from_config(const Config& cfg) {
  LossWeights w;
  w.kp1 = cfg.get("loss.lambda_kp1", w.kp1);
  w.silh1 = cfg.get("loss.lambda_silh1", w.silh1);
  w.beta = cfg.get("loss.lambda_beta", w.beta);
  w.theta = cfg.get("loss.lambda_theta", w.theta);
  w.lim = cfg.get("loss.lambda_lim", w.lim);
  w.kp2 = cfg.get("loss.lambda_kp2", w.kp2);
  w.silh2 = cfg.get("loss.lambda_silh2", w.silh2);
  w.lap = cfg.get("loss.lambda_lap", w.lap);
  w.tversky_alpha = cfg.get("loss.tversky_alpha", w.tversky_alpha);
  w.tversky_beta = cfg.get("loss.tversky_beta", w.tversky_beta);
  w.validate();
  return w;
}

Tensor keypoint_loss(const std::vector<double>& kp_gt,
                     const std::vector<double>& visibility, const Tensor& j3d,
                     const Tensor& focal, const camrender::Camera& cam,
                     bool* no_visible) {
  const i64 n = j3d.dim(0);
  require(static_cast<i64>(kp_gt.size()) == n * 2 &&
              static_cast<i64>(visibility.size()) == n,
          "keypoint_loss: annotation size mismatch");
  i64 nvis = 0;
  for (double v : visibility) nvis += v != 0.0;
  if (no_visible) *no_visible = nvis == 0;
  if (nvis == 0) return Tensor::scalar(0.0);

  const Tensor proj = camrender::project(j3d, focal, cam);
  const Tensor diff = ops::sub(proj, Tensor::from({n, 2}, kp_gt));
  const Tensor masked =
      ops::mul_colvec(diff, Tensor::from({n}, visibility));
  return ops::scale(ops::sum(ops::power(masked, 2.0)),
                    1.0 / static_cast<double>(nvis));
}

Tensor tversky(const Tensor& pred, const Tensor& gt, double alpha,
               double beta) {
  require(pred.shape() == gt.shape(), "tversky: shape mismatch");
  constexpr double kSmooth = 1e-8;
  const Tensor not_gt = ops::add_scalar(ops::neg(gt), 1.0);
  const Tensor not_pred = ops::add_scalar(ops::neg(pred), 1.0);
  const Tensor tp = ops::sum(ops::mul(pred, gt));
  const Tensor fp = ops::sum(ops::mul(pred, not_gt));
  const Tensor fn = ops::sum(ops::mul(not_pred, gt));
  const Tensor num = ops::add_scalar(tp, kSmooth);
  const Tensor den = ops::add_scalar(
      ops::add(tp, ops::add(ops::scale(fp, alpha), ops::scale(fn, beta))),
      kSmooth);
  return ops::mul(num, ops::power(den, -1.0));
}

Tensor silhouette_loss(const Tensor& gt_silh, const Tensor& soft_mask,
                       double alpha, double beta) {
  return ops::add_scalar(ops::neg(tversky(soft_mask, gt_silh, alpha, beta)),
                         1.0);
}

Tensor mahalanobis_prior(const Tensor& x, const std::vector<double>& mu,
                         const Tensor& chol_lower) {
  const i64 n = x.size();
  require(static_cast<i64>(mu.size()) == n, "mahalanobis: mean size mismatch");
  const Tensor flat = ops::reshape(x, {n});
  const Tensor centered = ops::sub(flat, Tensor::from({n}, mu));
  const Tensor y = ops::trisolve_lower(chol_lower, centered);
  return ops::sum(ops::power(y, 2.0));
}

Tensor pose_limit_prior(const Tensor& theta, const std::vector<double>& tmin,
                        const std::vector<double>& tmax) {
  const i64 n = theta.size();
  require(static_cast<i64>(tmin.size()) == n &&
              static_cast<i64>(tmax.size()) == n,
          "pose_limit_prior: limit size mismatch");
  const Tensor flat = ops::reshape(theta, {n});
  const Tensor over = ops::relu(ops::sub(flat, Tensor::from({n}, tmax)));
  const Tensor under = ops::relu(ops::sub(Tensor::from({n}, tmin), flat));
  return ops::add(ops::sum(ops::power(over, 2.0)),
                  ops::sum(ops::power(under, 2.0)));
}

Tensor laplacian_loss(const Tensor& v_fine, const Tensor& v_coarse,
                      const SparsePtr& laplacian_op) {
  require(v_fine.shape() == v_coarse.shape(), "laplacian_loss: shape mismatch");
  const Tensor df = ops::sparse_dense_matmul(laplacian_op, v_fine);
  const Tensor dc = ops::sparse_dense_matmul(laplacian_op, v_coarse);
  return ops::sum(ops::power(ops::sub(df, dc), 2.0));
}

Stage1Terms stage1_loss(const datagen::TrainingSample& sample,
                        const Stage1Inputs& in,
                        const artmodel::ArticulatedModel& model,
                        const camrender::Camera& cam, const LossWeights& w,
                        bool include_silhouette, double sharpness,
                        bool include_limit_prior) {
  Stage1Terms out;
  out.silhouette_active = include_silhouette;
  out.kp = keypoint_loss(sample.keypoints, sample.visibility, in.j3d, in.focal,
                         cam, &out.no_visible_joints);
  out.beta_prior =
      mahalanobis_prior(in.beta, model.shape_prior_mean, model.shape_prior_chol);
  out.theta_prior =
      mahalanobis_prior(in.theta, model.pose_prior_mean, model.pose_prior_chol);
  out.limit = pose_limit_prior(in.theta, model.pose_min, model.pose_max);

  Tensor total = ops::add(
      ops::scale(out.kp, w.kp1),
      ops::add(ops::scale(out.beta_prior, w.beta),
               ops::scale(out.theta_prior, w.theta)));
  if (include_limit_prior) total = ops::add(total, ops::scale(out.limit, w.lim));
  if (include_silhouette) {
    const Tensor soft = camrender::rasterize_soft(in.v_coarse, model.faces,
                                                  in.focal, cam, sharpness);
    out.silh = silhouette_loss(sample.silhouette_tensor(), soft,
                               w.tversky_alpha, w.tversky_beta);
    total = ops::add(total, ops::scale(out.silh, w.silh1));
  } else {
    out.silh = Tensor::scalar(0.0);
  }
  out.total = total;
  return out;
}

Stage2Terms stage2_loss(const datagen::TrainingSample& sample,
                        const Tensor& v_fine, const Tensor& v_coarse,
                        const artmodel::ArticulatedModel& model,
                        const camrender::Camera& cam,
                        const SparsePtr& laplacian_op, const LossWeights& w,
                        double sharpness, const Tensor& focal) {
  Stage2Terms out;
  const Tensor j3d = artmodel::regress_joints(model, v_fine);
  out.kp = keypoint_loss(sample.keypoints, sample.visibility, j3d, focal, cam);
  const Tensor soft =
      camrender::rasterize_soft(v_fine, model.faces, focal, cam, sharpness);
  out.silh = silhouette_loss(sample.silhouette_tensor(), soft, w.tversky_alpha,
                             w.tversky_beta);
  out.lap = laplacian_loss(v_fine, v_coarse, laplacian_op);
  out.total = ops::add(
      ops::scale(out.kp, w.kp2),
      ops::add(ops::scale(out.silh, w.silh2), ops::scale(out.lap, w.lap)));
  return out;
}

}  // namespace c2f::losses
