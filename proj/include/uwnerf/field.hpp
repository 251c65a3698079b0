#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "uwnerf/geometry.hpp"
#include "uwnerf/image.hpp"
#include "uwnerf/imgform.hpp"
#include "uwnerf/render.hpp"
#include "uwnerf/synth.hpp"

namespace uwnerf::field {

// encode(v) = [v, sin(2^0 pi v), cos(2^0 pi v), ..., sin(2^{L-1} pi v),
// cos(2^{L-1} pi v)] applied per coordinate. Columns are samples.
Eigen::MatrixXd encode(const Eigen::MatrixXd& v, int num_freqs);

struct ArchitectureConfig {
  int pos_freqs = 10;
  int dir_freqs = 4;
  int hidden_layers = 4;
  int hidden_width = 128;
  int color_hidden = 64;
  double pos_scale = 0.25;  // world positions are scaled before encoding

  int pos_dim() const { return 3 * (2 * pos_freqs + 1); }
  int dir_dim() const { return 3 * (2 * dir_freqs + 1); }
  void validate() const;
};

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

// Layer order: trunk 0..hidden_layers-1 (softplus), sigma head (softplus),
// color hidden on [trunk_out, encoded_dir] (softplus), color out (sigmoid).
struct MlpParams {
  ArchitectureConfig arch;
  std::vector<Layer> layers;

  Layer& trunk(int i) { return layers[static_cast<size_t>(i)]; }
  const Layer& trunk(int i) const { return layers[static_cast<size_t>(i)]; }
  Layer& sigma_head() { return layers[static_cast<size_t>(arch.hidden_layers)]; }
  const Layer& sigma_head() const { return layers[static_cast<size_t>(arch.hidden_layers)]; }
  Layer& color_hidden() { return layers[static_cast<size_t>(arch.hidden_layers) + 1]; }
  const Layer& color_hidden() const {
    return layers[static_cast<size_t>(arch.hidden_layers) + 1];
  }
  Layer& color_out() { return layers[static_cast<size_t>(arch.hidden_layers) + 2]; }
  const Layer& color_out() const {
    return layers[static_cast<size_t>(arch.hidden_layers) + 2];
  }
  size_t parameter_count() const;
};

// Kaiming-style uniform init scaled by fan-in; biases zero.
MlpParams init_params(const ArchitectureConfig& arch, std::mt19937_64& rng);

struct ForwardCache {
  Eigen::MatrixXd enc_pos, enc_dir;
  std::vector<Eigen::MatrixXd> trunk_z, trunk_a;
  Eigen::MatrixXd sigma_z;            // 1 x n
  Eigen::MatrixXd color_hidden_z, color_hidden_a;
  Eigen::MatrixXd color_z;            // 3 x n
  Eigen::MatrixXd color;              // 3 x n, sigmoid outputs
  Eigen::VectorXd sigma;              // n, softplus outputs
};

// Batched forward; columns are samples. Throws on shape mismatch.
void mlp_forward(const MlpParams& params, const Eigen::MatrixXd& enc_pos,
                 const Eigen::MatrixXd& enc_dir, ForwardCache* cache);

// Single-sample convenience on raw (unencoded, unscaled) inputs.
render::FieldSample mlp_query(const MlpParams& params, const Eigen::Vector3d& position,
                              const Eigen::Vector3d& direction);

struct Gradients {
  std::vector<Layer> layers;  // same shapes as MlpParams::layers
  void accumulate(const Gradients& other);
  void scale(double s);
};

Gradients zero_gradients(const MlpParams& params);

// d(loss)/d(parameters) given d(loss)/d(sigma) per sample and d(loss)/d(color)
// per sample column. Requires the cache of the matching forward pass.
Gradients mlp_backward(const MlpParams& params, const ForwardCache& cache,
                       const Eigen::VectorXd& dsigma, const Eigen::MatrixXd& dcolor);

// RadianceField adapter over MlpParams for the generic renderer.
class MlpField : public render::RadianceField {
 public:
  explicit MlpField(const MlpParams& params) : params_(params) {}
  render::FieldSample query(const Eigen::Vector3d& p,
                            const Eigen::Vector3d& d) const override {
    return mlp_query(params_, p, d);
  }

 private:
  const MlpParams& params_;
};

// Mean over rays of coarse_weight * |target - coarse|^2 + |target - fine|^2
// (channel-summed squared error).
double color_loss(const std::vector<Eigen::Vector3d>& coarse_pred,
                  const std::vector<Eigen::Vector3d>& fine_pred,
                  const std::vector<Eigen::Vector3d>& targets, double coarse_weight);

enum class LossMode { kUnderwaterMse, kHisteqMse, kJoint };

std::string loss_mode_name(LossMode mode);
LossMode loss_mode_from_name(const std::string& name);

struct TrainConfig {
  ArchitectureConfig arch;
  int iterations = 5000;
  int batch_rays = 32;
  double lr_initial = 5e-4;
  double lr_final = 5e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double coarse_weight = 0.1;     // weighting of the coarse term in the color loss
  double sinkhorn_alpha = 0.5;    // weight of the Sinkhorn term in the log
  std::uint64_t seed = 0;
  LossMode mode = LossMode::kJoint;
  int coarse_samples = 32;
  int fine_samples = 32;
  int refit_every = 500;          // water refit cadence in joint mode
  int refit_pixels = 256;
  int refit_max_evaluations = 240;
  double refit_marginal_tol = 1e-4;
  double refit_reg_lambda = 100.0;
  std::vector<int> holdout;       // frame indices excluded from training
  std::string diagnostic_checkpoint;  // written before aborting on bad loss

  // Called after every iteration with (iteration, color loss). Not part of the
  // serialized configuration.
  std::function<void(int, double)> progress;

  void validate() const;
};

// TrainConfig (architecture included) serialized as a JSON object string, for
// embedding in reports.
std::string train_config_json(const TrainConfig& config);

// Log-linear decay: lr(0) = lr_initial, lr(iterations) = lr_final.
double lr_schedule(const TrainConfig& config, int iteration);

// One ray batch with frozen sample boundaries; the unit the loss/gradient
// evaluation operates on. Boundaries are treated as constants.
struct FixedBatch {
  std::vector<geometry::Ray> rays;
  std::vector<std::vector<double>> coarse_bounds;
  std::vector<std::vector<double>> fine_bounds;
  std::vector<Eigen::Vector3d> targets;
};

struct BatchEval {
  double loss = 0;
  std::vector<Eigen::Vector3d> coarse_colors, fine_colors;
  std::vector<double> fine_depths;
};

// Loss (and, when grads != nullptr, parameter gradients) for a fixed batch.
BatchEval batch_loss(const MlpParams& params, const FixedBatch& batch,
                     double coarse_weight, Gradients* grads);

struct TrainingLog {
  std::vector<double> color_loss;        // one entry per iteration
  std::vector<int> refit_iterations;     // iteration index of each water refit
  std::vector<double> refit_loss;        // Sinkhorn loss after each refit
};

struct TrainResult {
  MlpParams params;
  bool has_water = false;
  imgform::WaterParams water;
  TrainingLog log;
  std::string rng_state;  // post-training generator state
};

TrainResult train(const synth::PosedDataset& dataset, const TrainConfig& config);

struct RaysRender {
  std::vector<Eigen::Vector3d> colors;
  std::vector<double> depths;
  std::vector<double> opacities;
};

// Deterministic two-pass evaluation render of arbitrary rays (uniform coarse
// boundaries, centered importance strata).
RaysRender render_rays(const MlpParams& params, const std::vector<geometry::Ray>& rays,
                       int coarse_samples, int fine_samples);

struct ViewRender {
  Image color;    // 3-channel
  Image range;    // 1-channel expected termination range
  Image opacity;  // 1-channel accumulated weight
};

// Deterministic evaluation render: uniform coarse boundaries and centered
// importance strata (no RNG).
ViewRender render_view(const MlpParams& params, const geometry::CameraIntrinsics& intrinsics,
                       const geometry::Pose& pose, double t_near, double t_far,
                       int coarse_samples, int fine_samples);

struct Checkpoint {
  MlpParams params;
  bool has_water = false;
  imgform::WaterParams water;
  TrainConfig train_config;
  std::string rng_state;
  geometry::CameraIntrinsics intrinsics;
  std::vector<geometry::Pose> poses;
  std::vector<std::string> stems;  // frame names matching poses; may be empty
  double t_near = 0.05;
  double t_far = 8.0;
};

// Single JSON document; doubles survive the round trip bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace uwnerf::field
