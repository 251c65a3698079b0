#include "uwnerf/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "uwnerf/restore.hpp"

namespace uwnerf::field {
namespace {

constexpr double kPi = 3.14159265358979323846;

double softplus(double x) {
  if (x > 30) return x;
  if (x < -30) return std::exp(x);
  return std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd map_softplus(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double x) { return softplus(x); });
}

Eigen::MatrixXd map_logistic(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double x) { return logistic(x); });
}

}  // namespace

Eigen::MatrixXd encode(const Eigen::MatrixXd& v, int num_freqs) {
  if (v.rows() != 3) throw std::invalid_argument("encode: input must be 3 x n");
  const Eigen::Index n = v.cols();
  Eigen::MatrixXd out(3 * (2 * num_freqs + 1), n);
  out.topRows(3) = v;
  double freq = kPi;
  for (int l = 0; l < num_freqs; ++l, freq *= 2.0) {
    out.middleRows(3 + 6 * l, 3) = (freq * v).array().sin().matrix();
    out.middleRows(6 + 6 * l, 3) = (freq * v).array().cos().matrix();
  }
  return out;
}

void ArchitectureConfig::validate() const {
  if (pos_freqs < 1 || dir_freqs < 1 || hidden_layers < 1 || hidden_width < 1 ||
      color_hidden < 1 || !(pos_scale > 0)) {
    throw std::invalid_argument("ArchitectureConfig: all sizes must be positive");
  }
}

size_t MlpParams::parameter_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += static_cast<size_t>(l.w.size()) + l.b.size();
  return n;
}

MlpParams init_params(const ArchitectureConfig& arch, std::mt19937_64& rng) {
  arch.validate();
  MlpParams params;
  params.arch = arch;
  const auto make_layer = [&](int out, int in) {
    Layer l;
    l.w.resize(out, in);
    l.b = Eigen::VectorXd::Zero(out);
    const double s = std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> uni(-s, s);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) l.w(r, c) = uni(rng);
    }
    return l;
  };
  params.layers.push_back(make_layer(arch.hidden_width, arch.pos_dim()));
  for (int i = 1; i < arch.hidden_layers; ++i) {
    params.layers.push_back(make_layer(arch.hidden_width, arch.hidden_width));
  }
  params.layers.push_back(make_layer(1, arch.hidden_width));
  params.layers.push_back(make_layer(arch.color_hidden, arch.hidden_width + arch.dir_dim()));
  params.layers.push_back(make_layer(3, arch.color_hidden));
  return params;
}

void mlp_forward(const MlpParams& params, const Eigen::MatrixXd& enc_pos,
                 const Eigen::MatrixXd& enc_dir, ForwardCache* cache) {
  const ArchitectureConfig& arch = params.arch;
  if (params.layers.size() != static_cast<size_t>(arch.hidden_layers) + 3) {
    throw std::invalid_argument("mlp_forward: layer count does not match architecture");
  }
  if (enc_pos.rows() != arch.pos_dim() || enc_dir.rows() != arch.dir_dim() ||
      enc_pos.cols() != enc_dir.cols()) {
    throw std::invalid_argument("mlp_forward: encoding shape mismatch");
  }
  cache->enc_pos = enc_pos;
  cache->enc_dir = enc_dir;
  cache->trunk_z.resize(static_cast<size_t>(arch.hidden_layers));
  cache->trunk_a.resize(static_cast<size_t>(arch.hidden_layers));
  const Eigen::MatrixXd* prev = &cache->enc_pos;
  for (int i = 0; i < arch.hidden_layers; ++i) {
    const Layer& l = params.trunk(i);
    if (l.w.cols() != prev->rows()) {
      throw std::invalid_argument("mlp_forward: trunk layer shape mismatch");
    }
    auto& z = cache->trunk_z[static_cast<size_t>(i)];
    z.noalias() = l.w * (*prev);
    z.colwise() += l.b;
    cache->trunk_a[static_cast<size_t>(i)] = map_softplus(z);
    prev = &cache->trunk_a[static_cast<size_t>(i)];
  }
  const Eigen::MatrixXd& trunk_out = *prev;

  cache->sigma_z.noalias() = params.sigma_head().w * trunk_out;
  cache->sigma_z.colwise() += params.sigma_head().b;
  cache->sigma = map_softplus(cache->sigma_z).row(0).transpose();

  Eigen::MatrixXd joint(trunk_out.rows() + enc_dir.rows(), enc_dir.cols());
  joint.topRows(trunk_out.rows()) = trunk_out;
  joint.bottomRows(enc_dir.rows()) = enc_dir;
  cache->color_hidden_z.noalias() = params.color_hidden().w * joint;
  cache->color_hidden_z.colwise() += params.color_hidden().b;
  cache->color_hidden_a = map_softplus(cache->color_hidden_z);

  cache->color_z.noalias() = params.color_out().w * cache->color_hidden_a;
  cache->color_z.colwise() += params.color_out().b;
  cache->color = map_logistic(cache->color_z);
}

render::FieldSample mlp_query(const MlpParams& params, const Eigen::Vector3d& position,
                              const Eigen::Vector3d& direction) {
  ForwardCache cache;
  const Eigen::MatrixXd pos = position * params.arch.pos_scale;
  mlp_forward(params, encode(pos, params.arch.pos_freqs),
              encode(direction, params.arch.dir_freqs), &cache);
  render::FieldSample out;
  out.sigma = cache.sigma[0];
  out.color = cache.color.col(0);
  return out;
}

void Gradients::accumulate(const Gradients& other) {
  for (size_t i = 0; i < layers.size(); ++i) {
    layers[i].w += other.layers[i].w;
    layers[i].b += other.layers[i].b;
  }
}

void Gradients::scale(double s) {
  for (auto& l : layers) {
    l.w *= s;
    l.b *= s;
  }
}

Gradients zero_gradients(const MlpParams& params) {
  Gradients g;
  for (const auto& l : params.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()),
                        Eigen::VectorXd::Zero(l.b.size())});
  }
  return g;
}

Gradients mlp_backward(const MlpParams& params, const ForwardCache& cache,
                       const Eigen::VectorXd& dsigma, const Eigen::MatrixXd& dcolor) {
  const ArchitectureConfig& arch = params.arch;
  const Eigen::Index n = cache.enc_pos.cols();
  if (dsigma.size() != n || dcolor.rows() != 3 || dcolor.cols() != n) {
    throw std::invalid_argument("mlp_backward: gradient shape mismatch");
  }
  Gradients grads = zero_gradients(params);
  const Eigen::MatrixXd& trunk_out =
      cache.trunk_a[static_cast<size_t>(arch.hidden_layers) - 1];

  // Color head: sigmoid then the softplus hidden layer over [trunk, dir].
  const Eigen::MatrixXd dz_color =
      dcolor.cwiseProduct(cache.color).cwiseProduct(
          (1.0 - cache.color.array()).matrix());
  grads.layers[static_cast<size_t>(arch.hidden_layers) + 2].w.noalias() =
      dz_color * cache.color_hidden_a.transpose();
  grads.layers[static_cast<size_t>(arch.hidden_layers) + 2].b = dz_color.rowwise().sum();

  const Eigen::MatrixXd dh = params.color_out().w.transpose() * dz_color;
  const Eigen::MatrixXd dz_hidden = dh.cwiseProduct(map_logistic(cache.color_hidden_z));
  Eigen::MatrixXd joint(trunk_out.rows() + cache.enc_dir.rows(), n);
  joint.topRows(trunk_out.rows()) = trunk_out;
  joint.bottomRows(cache.enc_dir.rows()) = cache.enc_dir;
  grads.layers[static_cast<size_t>(arch.hidden_layers) + 1].w.noalias() =
      dz_hidden * joint.transpose();
  grads.layers[static_cast<size_t>(arch.hidden_layers) + 1].b = dz_hidden.rowwise().sum();

  // Density head: softplus.
  const Eigen::MatrixXd dz_sigma =
      dsigma.transpose().cwiseProduct(map_logistic(cache.sigma_z).row(0));
  grads.layers[static_cast<size_t>(arch.hidden_layers)].w.noalias() =
      dz_sigma * trunk_out.transpose();
  grads.layers[static_cast<size_t>(arch.hidden_layers)].b = dz_sigma.rowwise().sum();

  Eigen::MatrixXd da =
      params.sigma_head().w.transpose() * dz_sigma +
      params.color_hidden().w.leftCols(trunk_out.rows()).transpose() * dz_hidden;

  for (int i = arch.hidden_layers - 1; i >= 0; --i) {
    const Eigen::MatrixXd dz =
        da.cwiseProduct(map_logistic(cache.trunk_z[static_cast<size_t>(i)]));
    const Eigen::MatrixXd& prev =
        i == 0 ? cache.enc_pos : cache.trunk_a[static_cast<size_t>(i) - 1];
    grads.layers[static_cast<size_t>(i)].w.noalias() = dz * prev.transpose();
    grads.layers[static_cast<size_t>(i)].b = dz.rowwise().sum();
    if (i > 0) da = params.trunk(i).w.transpose() * dz;
  }
  return grads;
}

double color_loss(const std::vector<Eigen::Vector3d>& coarse_pred,
                  const std::vector<Eigen::Vector3d>& fine_pred,
                  const std::vector<Eigen::Vector3d>& targets, double coarse_weight) {
  if (coarse_pred.size() != targets.size() || fine_pred.size() != targets.size()) {
    throw std::invalid_argument("color_loss: batch size mismatch");
  }
  if (targets.empty()) throw std::invalid_argument("color_loss: empty batch");
  double loss = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    loss += coarse_weight * (targets[i] - coarse_pred[i]).squaredNorm() +
            (targets[i] - fine_pred[i]).squaredNorm();
  }
  return loss / static_cast<double>(targets.size());
}

namespace {

// One rendering pass over a ray batch with fixed boundaries.
struct PassData {
  ForwardCache cache;
  std::vector<size_t> offset;      // per-ray start into flattened samples
  std::vector<double> dt;          // interval lengths
  std::vector<double> mid;         // interval midpoints
  std::vector<double> weight;      // w_k
  std::vector<double> te;          // T_k * exp(-sigma_k dt_k)
  std::vector<Eigen::Vector3d> ray_color;
  std::vector<double> ray_depth;
  std::vector<double> ray_opacity;
};

PassData forward_pass(const MlpParams& params, const std::vector<geometry::Ray>& rays,
                      const std::vector<std::vector<double>>& bounds) {
  if (rays.size() != bounds.size()) {
    throw std::invalid_argument("forward_pass: rays/bounds size mismatch");
  }
  PassData pass;
  pass.offset.resize(rays.size() + 1, 0);
  for (size_t r = 0; r < rays.size(); ++r) {
    if (bounds[r].size() < 2) {
      throw std::invalid_argument("forward_pass: need at least 2 boundaries per ray");
    }
    pass.offset[r + 1] = pass.offset[r] + bounds[r].size() - 1;
  }
  const size_t total = pass.offset.back();
  Eigen::MatrixXd pos(3, static_cast<Eigen::Index>(total));
  Eigen::MatrixXd dir(3, static_cast<Eigen::Index>(total));
  pass.dt.resize(total);
  pass.mid.resize(total);
  for (size_t r = 0; r < rays.size(); ++r) {
    const auto& b = bounds[r];
    for (size_t k = 0; k + 1 < b.size(); ++k) {
      if (!(b[k + 1] > b[k])) {
        throw std::invalid_argument("forward_pass: boundaries must be strictly increasing");
      }
      const size_t idx = pass.offset[r] + k;
      pass.dt[idx] = b[k + 1] - b[k];
      pass.mid[idx] = 0.5 * (b[k] + b[k + 1]);
      pos.col(static_cast<Eigen::Index>(idx)) = rays[r].at(pass.mid[idx]);
      dir.col(static_cast<Eigen::Index>(idx)) = rays[r].direction;
    }
  }
  mlp_forward(params, encode(pos * params.arch.pos_scale, params.arch.pos_freqs),
              encode(dir, params.arch.dir_freqs), &pass.cache);

  pass.weight.resize(total);
  pass.te.resize(total);
  pass.ray_color.assign(rays.size(), Eigen::Vector3d::Zero());
  pass.ray_depth.assign(rays.size(), 0.0);
  pass.ray_opacity.assign(rays.size(), 0.0);
  for (size_t r = 0; r < rays.size(); ++r) {
    double log_t = 0;
    for (size_t k = pass.offset[r]; k < pass.offset[r + 1]; ++k) {
      const double sigma = pass.cache.sigma[static_cast<Eigen::Index>(k)];
      const double trans = std::exp(log_t);
      const double decay = std::exp(-sigma * pass.dt[k]);
      pass.te[k] = trans * decay;
      pass.weight[k] = trans * (1.0 - decay);
      const Eigen::Vector3d c = pass.cache.color.col(static_cast<Eigen::Index>(k));
      pass.ray_color[r] += pass.weight[k] * c;
      pass.ray_depth[r] += pass.weight[k] * pass.mid[k];
      pass.ray_opacity[r] += pass.weight[k];
      log_t -= sigma * pass.dt[k];
    }
  }
  return pass;
}

void backward_pass(const MlpParams& params, const PassData& pass,
                   const std::vector<Eigen::Vector3d>& dray_color, Gradients* grads) {
  const size_t total = pass.dt.size();
  Eigen::VectorXd dsigma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  Eigen::MatrixXd dcolor = Eigen::MatrixXd::Zero(3, static_cast<Eigen::Index>(total));
  for (size_t r = 0; r + 1 < pass.offset.size(); ++r) {
    const Eigen::Vector3d& g = dray_color[r];
    double suffix = 0;  // sum over later samples of w_j * (c_j . g)
    for (size_t k = pass.offset[r + 1]; k-- > pass.offset[r];) {
      const Eigen::Vector3d c = pass.cache.color.col(static_cast<Eigen::Index>(k));
      const double cg = c.dot(g);
      dsigma[static_cast<Eigen::Index>(k)] = pass.dt[k] * (pass.te[k] * cg - suffix);
      dcolor.col(static_cast<Eigen::Index>(k)) = pass.weight[k] * g;
      suffix += pass.weight[k] * cg;
    }
  }
  grads->accumulate(mlp_backward(params, pass.cache, dsigma, dcolor));
}

double loss_from_passes(const MlpParams& params, const PassData& coarse,
                        const PassData& fine, const std::vector<Eigen::Vector3d>& targets,
                        double coarse_weight, Gradients* grads) {
  const double loss = color_loss(coarse.ray_color, fine.ray_color, targets, coarse_weight);
  if (grads) {
    const double inv_n = 1.0 / static_cast<double>(targets.size());
    std::vector<Eigen::Vector3d> dc(targets.size()), df(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) {
      dc[i] = 2.0 * coarse_weight * inv_n * (coarse.ray_color[i] - targets[i]);
      df[i] = 2.0 * inv_n * (fine.ray_color[i] - targets[i]);
    }
    backward_pass(params, coarse, dc, grads);
    backward_pass(params, fine, df, grads);
  }
  return loss;
}

}  // namespace

BatchEval batch_loss(const MlpParams& params, const FixedBatch& batch,
                     double coarse_weight, Gradients* grads) {
  if (batch.rays.size() != batch.targets.size() ||
      batch.rays.size() != batch.coarse_bounds.size() ||
      batch.rays.size() != batch.fine_bounds.size()) {
    throw std::invalid_argument("batch_loss: inconsistent batch");
  }
  const PassData coarse = forward_pass(params, batch.rays, batch.coarse_bounds);
  const PassData fine = forward_pass(params, batch.rays, batch.fine_bounds);
  BatchEval eval;
  eval.loss = loss_from_passes(params, coarse, fine, batch.targets, coarse_weight, grads);
  eval.coarse_colors = coarse.ray_color;
  eval.fine_colors = fine.ray_color;
  eval.fine_depths = fine.ray_depth;
  return eval;
}

std::string loss_mode_name(LossMode mode) {
  switch (mode) {
    case LossMode::kUnderwaterMse: return "underwater";
    case LossMode::kHisteqMse: return "histeq";
    case LossMode::kJoint: return "joint";
  }
  throw std::logic_error("loss_mode_name: unknown mode");
}

LossMode loss_mode_from_name(const std::string& name) {
  if (name == "underwater" || name == "underwater_mse") return LossMode::kUnderwaterMse;
  if (name == "histeq" || name == "histeq_mse") return LossMode::kHisteqMse;
  if (name == "joint") return LossMode::kJoint;
  throw std::invalid_argument("unknown loss mode '" + name + "'");
}

void TrainConfig::validate() const {
  arch.validate();
  if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
  if (batch_rays < 1) throw std::invalid_argument("TrainConfig: batch_rays must be >= 1");
  if (!(lr_final <= lr_initial) || !(lr_final > 0)) {
    throw std::invalid_argument("TrainConfig: need 0 < lr_final <= lr_initial");
  }
  if (coarse_samples < 2 || fine_samples < 0) {
    throw std::invalid_argument("TrainConfig: bad sample counts");
  }
  if (refit_every < 1 || refit_pixels < 64) {
    throw std::invalid_argument("TrainConfig: bad refit settings");
  }
}

double lr_schedule(const TrainConfig& config, int iteration) {
  const double frac =
      std::clamp(static_cast<double>(iteration) / config.iterations, 0.0, 1.0);
  return config.lr_initial * std::pow(config.lr_final / config.lr_initial, frac);
}

namespace {

struct AdamState {
  std::vector<Layer> m, v;
};

AdamState zero_adam(const MlpParams& params) {
  AdamState s;
  for (const auto& l : params.layers) {
    s.m.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()),
                   Eigen::VectorXd::Zero(l.b.size())});
    s.v.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()),
                   Eigen::VectorXd::Zero(l.b.size())});
  }
  return s;
}

void adam_step(MlpParams* params, AdamState* state, const Gradients& grads,
               const TrainConfig& cfg, int t, double lr) {
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (size_t i = 0; i < params->layers.size(); ++i) {
    auto& m = state->m[i];
    auto& v = state->v[i];
    const auto& g = grads.layers[i];
    m.w = cfg.adam_beta1 * m.w + (1 - cfg.adam_beta1) * g.w;
    m.b = cfg.adam_beta1 * m.b + (1 - cfg.adam_beta1) * g.b;
    v.w = cfg.adam_beta2 * v.w + (1 - cfg.adam_beta2) * g.w.cwiseAbs2();
    v.b = cfg.adam_beta2 * v.b + (1 - cfg.adam_beta2) * g.b.cwiseAbs2();
    params->layers[i].w.array() -=
        lr * (m.w.array() / c1) / ((v.w.array() / c2).sqrt() + cfg.adam_eps);
    params->layers[i].b.array() -=
        lr * (m.b.array() / c1) / ((v.b.array() / c2).sqrt() + cfg.adam_eps);
  }
}

render::SampleSet as_sample_set(const std::vector<double>& bounds, const double* weights,
                                size_t offset, size_t count) {
  render::SampleSet set;
  set.boundaries = bounds;
  set.weights.assign(weights + offset, weights + offset + count);
  return set;
}

}  // namespace

TrainResult train(const synth::PosedDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.frames.size() < 2) {
    throw std::invalid_argument("train: dataset needs at least 2 posed images");
  }
  std::vector<int> train_frames;
  for (int i = 0; i < static_cast<int>(dataset.frames.size()); ++i) {
    if (std::find(config.holdout.begin(), config.holdout.end(), i) ==
        config.holdout.end()) {
      train_frames.push_back(i);
    }
  }
  if (train_frames.empty()) throw std::invalid_argument("train: every frame is held out");
  for (int h : config.holdout) {
    if (h < 0 || h >= static_cast<int>(dataset.frames.size())) {
      throw std::invalid_argument("train: holdout index out of range");
    }
  }

  // Target pixels per mode; equalized variants are computed here if absent.
  std::vector<const Image*> targets(dataset.frames.size());
  std::vector<Image> computed_histeq;
  if (config.mode == LossMode::kHisteqMse) {
    computed_histeq.resize(dataset.frames.size());
    for (size_t i = 0; i < dataset.frames.size(); ++i) {
      if (!dataset.has_histeq) {
        computed_histeq[i] = restore::histogram_equalize(dataset.frames[i].water);
      }
      targets[i] = dataset.has_histeq ? &dataset.frames[i].histeq : &computed_histeq[i];
    }
  } else {
    for (size_t i = 0; i < dataset.frames.size(); ++i) targets[i] = &dataset.frames[i].water;
  }

  std::mt19937_64 rng(config.seed);
  TrainResult result;
  result.params = init_params(config.arch, rng);
  AdamState adam = zero_adam(result.params);

  // Fixed equalized reference distribution for the water refits.
  sinkhorn::DiscreteDistribution reference;
  if (config.mode == LossMode::kJoint) {
    std::vector<Image> pool;
    for (int f : train_frames) {
      pool.push_back(dataset.has_histeq
                         ? dataset.frames[static_cast<size_t>(f)].histeq
                         : restore::histogram_equalize(
                               dataset.frames[static_cast<size_t>(f)].water));
    }
    reference = restore::pool_pixels(pool, static_cast<size_t>(config.refit_pixels), rng);
  }

  std::uniform_int_distribution<int> frame_dist(0, static_cast<int>(train_frames.size()) - 1);
  std::uniform_int_distribution<int> x_dist(0, dataset.intrinsics.width - 1);
  std::uniform_int_distribution<int> y_dist(0, dataset.intrinsics.height - 1);

  for (int iter = 0; iter < config.iterations; ++iter) {
    std::vector<geometry::Ray> rays(static_cast<size_t>(config.batch_rays));
    std::vector<Eigen::Vector3d> batch_targets(rays.size());
    std::vector<std::vector<double>> coarse_bounds(rays.size());
    for (size_t r = 0; r < rays.size(); ++r) {
      const int f = train_frames[static_cast<size_t>(frame_dist(rng))];
      const int px = x_dist(rng);
      const int py = y_dist(rng);
      rays[r] = geometry::pixel_ray(dataset.intrinsics,
                                    dataset.frames[static_cast<size_t>(f)].pose, px + 0.5,
                                    py + 0.5, dataset.t_near, dataset.t_far);
      batch_targets[r] = targets[static_cast<size_t>(f)]->rgb(px, py);
      coarse_bounds[r] = render::stratified_samples(rays[r], config.coarse_samples, rng);
    }

    const PassData coarse = forward_pass(result.params, rays, coarse_bounds);
    std::vector<std::vector<double>> fine_bounds(rays.size());
    for (size_t r = 0; r < rays.size(); ++r) {
      const render::SampleSet set =
          as_sample_set(coarse_bounds[r], coarse.weight.data(), coarse.offset[r],
                        coarse.offset[r + 1] - coarse.offset[r]);
      fine_bounds[r] = render::importance_samples(set, config.fine_samples, &rng);
    }
    const PassData fine = forward_pass(result.params, rays, fine_bounds);

    Gradients grads = zero_gradients(result.params);
    const double loss = loss_from_passes(result.params, coarse, fine, batch_targets,
                                         config.coarse_weight, &grads);
    if (!std::isfinite(loss)) {
      if (!config.diagnostic_checkpoint.empty()) {
        Checkpoint ckpt;
        ckpt.params = result.params;
        ckpt.train_config = config;
        std::ostringstream ss;
        ss << rng;
        ckpt.rng_state = ss.str();
        ckpt.intrinsics = dataset.intrinsics;
        for (const auto& fr : dataset.frames) ckpt.poses.push_back(fr.pose);
        ckpt.t_near = dataset.t_near;
        ckpt.t_far = dataset.t_far;
        save_checkpoint(ckpt, config.diagnostic_checkpoint);
      }
      throw std::runtime_error("train: non-finite loss at iteration " +
                               std::to_string(iter) +
                               (config.diagnostic_checkpoint.empty()
                                    ? ""
                                    : "; diagnostic checkpoint written to " +
                                          config.diagnostic_checkpoint));
    }
    result.log.color_loss.push_back(loss);
    adam_step(&result.params, &adam, grads, config, iter + 1, lr_schedule(config, iter));
    if (config.progress) config.progress(iter, loss);

    if (config.mode == LossMode::kJoint &&
        ((iter + 1) % config.refit_every == 0 || iter + 1 == config.iterations)) {
      std::vector<geometry::Ray> refit_rays(static_cast<size_t>(config.refit_pixels));
      std::vector<std::vector<double>> refit_bounds(refit_rays.size());
      for (size_t r = 0; r < refit_rays.size(); ++r) {
        const int f = train_frames[static_cast<size_t>(frame_dist(rng))];
        refit_rays[r] = geometry::pixel_ray(
            dataset.intrinsics, dataset.frames[static_cast<size_t>(f)].pose,
            x_dist(rng) + 0.5, y_dist(rng) + 0.5, dataset.t_near, dataset.t_far);
        refit_bounds[r] =
            render::stratified_samples(refit_rays[r], config.coarse_samples, rng, 0.0);
      }
      const PassData rc = forward_pass(result.params, refit_rays, refit_bounds);
      std::vector<std::vector<double>> rf_bounds(refit_rays.size());
      for (size_t r = 0; r < refit_rays.size(); ++r) {
        const render::SampleSet set =
            as_sample_set(refit_bounds[r], rc.weight.data(), rc.offset[r],
                          rc.offset[r + 1] - rc.offset[r]);
        rf_bounds[r] = render::importance_samples(set, config.fine_samples, nullptr);
      }
      const PassData rf = forward_pass(result.params, refit_rays, rf_bounds);

      restore::CorrectionProblem problem;
      problem.colors = rf.ray_color;
      problem.ranges = rf.ray_depth;
      problem.reference = reference;
      problem.sinkhorn.reg_lambda = config.refit_reg_lambda;
      problem.sinkhorn.marginal_tol = config.refit_marginal_tol;
      problem.optimizer.max_evaluations = config.refit_max_evaluations;
      const restore::EstimateResult est = restore::estimate_params(problem);
      result.water = est.params;
      result.has_water = true;
      result.log.refit_iterations.push_back(iter + 1);
      result.log.refit_loss.push_back(est.loss);
    }
  }
  std::ostringstream ss;
  ss << rng;
  result.rng_state = ss.str();
  return result;
}

RaysRender render_rays(const MlpParams& params, const std::vector<geometry::Ray>& rays,
                       int coarse_samples, int fine_samples) {
  RaysRender out;
  out.colors.reserve(rays.size());
  out.depths.reserve(rays.size());
  out.opacities.reserve(rays.size());

  std::mt19937_64 unused_rng(0);
  const size_t chunk = 1024;
  for (size_t start = 0; start < rays.size(); start += chunk) {
    const size_t count = std::min(chunk, rays.size() - start);
    const std::vector<geometry::Ray> part(rays.begin() + static_cast<ptrdiff_t>(start),
                                          rays.begin() + static_cast<ptrdiff_t>(start + count));
    std::vector<std::vector<double>> coarse_bounds(count);
    for (size_t r = 0; r < count; ++r)
      coarse_bounds[r] = render::stratified_samples(part[r], coarse_samples, unused_rng, 0.0);
    const PassData coarse = forward_pass(params, part, coarse_bounds);
    std::vector<std::vector<double>> fine_bounds(count);
    for (size_t r = 0; r < count; ++r) {
      const render::SampleSet set =
          as_sample_set(coarse_bounds[r], coarse.weight.data(), coarse.offset[r],
                        coarse.offset[r + 1] - coarse.offset[r]);
      fine_bounds[r] = render::importance_samples(set, fine_samples, nullptr);
    }
    const PassData fine = forward_pass(params, part, fine_bounds);
    for (size_t r = 0; r < count; ++r) {
      out.colors.push_back(fine.ray_color[r]);
      out.depths.push_back(fine.ray_depth[r]);
      out.opacities.push_back(fine.ray_opacity[r]);
    }
  }
  return out;
}

ViewRender render_view(const MlpParams& params, const geometry::CameraIntrinsics& intrinsics,
                       const geometry::Pose& pose, double t_near, double t_far,
                       int coarse_samples, int fine_samples) {
  intrinsics.validate();
  pose.validate();
  ViewRender out;
  out.color = Image(intrinsics.width, intrinsics.height, 3);
  out.range = Image(intrinsics.width, intrinsics.height, 1);
  out.opacity = Image(intrinsics.width, intrinsics.height, 1);

  std::vector<geometry::Ray> rays;
  rays.reserve(static_cast<size_t>(intrinsics.width) * intrinsics.height);
  for (int py = 0; py < intrinsics.height; ++py)
    for (int px = 0; px < intrinsics.width; ++px)
      rays.push_back(geometry::pixel_ray(intrinsics, pose, px + 0.5, py + 0.5, t_near, t_far));

  const RaysRender shaded = render_rays(params, rays, coarse_samples, fine_samples);
  for (int py = 0; py < intrinsics.height; ++py) {
    for (int px = 0; px < intrinsics.width; ++px) {
      const size_t i = static_cast<size_t>(py) * intrinsics.width + px;
      out.color.set_rgb(px, py, shaded.colors[i]);
      out.range.at(px, py, 0) = shaded.depths[i];
      out.opacity.at(px, py, 0) = shaded.opacities[i];
    }
  }
  return out;
}

namespace {

nlohmann::json arch_to_json(const ArchitectureConfig& arch) {
  return {{"pos_freqs", arch.pos_freqs},   {"dir_freqs", arch.dir_freqs},
          {"hidden_layers", arch.hidden_layers}, {"hidden_width", arch.hidden_width},
          {"color_hidden", arch.color_hidden},   {"pos_scale", arch.pos_scale}};
}

ArchitectureConfig arch_from_json(const nlohmann::json& j) {
  ArchitectureConfig arch;
  arch.pos_freqs = j.at("pos_freqs").get<int>();
  arch.dir_freqs = j.at("dir_freqs").get<int>();
  arch.hidden_layers = j.at("hidden_layers").get<int>();
  arch.hidden_width = j.at("hidden_width").get<int>();
  arch.color_hidden = j.at("color_hidden").get<int>();
  arch.pos_scale = j.at("pos_scale").get<double>();
  return arch;
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"iterations", cfg.iterations},
          {"batch_rays", cfg.batch_rays},
          {"lr_initial", cfg.lr_initial},
          {"lr_final", cfg.lr_final},
          {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2},
          {"adam_eps", cfg.adam_eps},
          {"coarse_weight", cfg.coarse_weight},
          {"sinkhorn_alpha", cfg.sinkhorn_alpha},
          {"seed", cfg.seed},
          {"mode", loss_mode_name(cfg.mode)},
          {"coarse_samples", cfg.coarse_samples},
          {"fine_samples", cfg.fine_samples},
          {"refit_every", cfg.refit_every},
          {"refit_pixels", cfg.refit_pixels},
          {"refit_max_evaluations", cfg.refit_max_evaluations},
          {"refit_marginal_tol", cfg.refit_marginal_tol},
          {"refit_reg_lambda", cfg.refit_reg_lambda},
          {"holdout", cfg.holdout}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.iterations = j.at("iterations").get<int>();
  cfg.batch_rays = j.at("batch_rays").get<int>();
  cfg.lr_initial = j.at("lr_initial").get<double>();
  cfg.lr_final = j.at("lr_final").get<double>();
  cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  cfg.adam_eps = j.at("adam_eps").get<double>();
  cfg.coarse_weight = j.at("coarse_weight").get<double>();
  cfg.sinkhorn_alpha = j.at("sinkhorn_alpha").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.mode = loss_mode_from_name(j.at("mode").get<std::string>());
  cfg.coarse_samples = j.at("coarse_samples").get<int>();
  cfg.fine_samples = j.at("fine_samples").get<int>();
  cfg.refit_every = j.at("refit_every").get<int>();
  cfg.refit_pixels = j.at("refit_pixels").get<int>();
  cfg.refit_max_evaluations = j.at("refit_max_evaluations").get<int>();
  cfg.refit_marginal_tol = j.at("refit_marginal_tol").get<double>();
  cfg.refit_reg_lambda = j.at("refit_reg_lambda").get<double>();
  cfg.holdout = j.at("holdout").get<std::vector<int>>();
  return cfg;
}

}  // namespace

std::string train_config_json(const TrainConfig& config) {
  nlohmann::json j = train_config_to_json(config);
  j["architecture"] = arch_to_json(config.arch);
  return j.dump();
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["architecture"] = arch_to_json(ckpt.params.arch);
  j["layers"] = nlohmann::json::array();
  for (const auto& l : ckpt.params.layers) {
    nlohmann::json jl;
    jl["rows"] = static_cast<int>(l.w.rows());
    jl["cols"] = static_cast<int>(l.w.cols());
    std::vector<double> w;
    w.reserve(static_cast<size_t>(l.w.size()));
    for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) w.push_back(l.w(r, c));
    }
    jl["w"] = std::move(w);
    jl["b"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
    j["layers"].push_back(std::move(jl));
  }
  if (ckpt.has_water) {
    j["water_params"] = {
        {"beta", {ckpt.water.beta.x(), ckpt.water.beta.y(), ckpt.water.beta.z()}},
        {"veiling",
         {ckpt.water.veiling.x(), ckpt.water.veiling.y(), ckpt.water.veiling.z()}}};
  } else {
    j["water_params"] = nullptr;
  }
  j["train_config"] = train_config_to_json(ckpt.train_config);
  j["rng_state"] = ckpt.rng_state;
  nlohmann::json cam;
  cam["intrinsics"] = {{"fx", ckpt.intrinsics.fx}, {"fy", ckpt.intrinsics.fy},
                       {"cx", ckpt.intrinsics.cx}, {"cy", ckpt.intrinsics.cy},
                       {"width", ckpt.intrinsics.width},
                       {"height", ckpt.intrinsics.height}};
  cam["near"] = ckpt.t_near;
  cam["far"] = ckpt.t_far;
  cam["poses"] = nlohmann::json::array();
  for (const auto& p : ckpt.poses) {
    nlohmann::json arr = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) arr.push_back(p.camera_to_world(r, c));
    }
    cam["poses"].push_back(std::move(arr));
  }
  cam["stems"] = ckpt.stems;
  j["camera"] = std::move(cam);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  Checkpoint ckpt;
  try {
    ckpt.params.arch = arch_from_json(j.at("architecture"));
    for (const auto& jl : j.at("layers")) {
      Layer l;
      const int rows = jl.at("rows").get<int>();
      const int cols = jl.at("cols").get<int>();
      const auto w = jl.at("w").get<std::vector<double>>();
      const auto b = jl.at("b").get<std::vector<double>>();
      if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows) {
        throw std::runtime_error("layer size mismatch");
      }
      l.w.resize(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) l.w(r, c) = w[static_cast<size_t>(r) * cols + c];
      }
      l.b = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
      ckpt.params.layers.push_back(std::move(l));
    }
    if (!j.at("water_params").is_null()) {
      const auto& wp = j.at("water_params");
      const auto& beta = wp.at("beta");
      const auto& veil = wp.at("veiling");
      ckpt.water.beta = {beta.at(0).get<double>(), beta.at(1).get<double>(),
                         beta.at(2).get<double>()};
      ckpt.water.veiling = {veil.at(0).get<double>(), veil.at(1).get<double>(),
                            veil.at(2).get<double>()};
      ckpt.has_water = true;
    }
    ckpt.train_config = train_config_from_json(j.at("train_config"));
    ckpt.train_config.arch = ckpt.params.arch;
    ckpt.rng_state = j.at("rng_state").get<std::string>();
    const auto& cam = j.at("camera");
    const auto& ji = cam.at("intrinsics");
    ckpt.intrinsics.fx = ji.at("fx").get<double>();
    ckpt.intrinsics.fy = ji.at("fy").get<double>();
    ckpt.intrinsics.cx = ji.at("cx").get<double>();
    ckpt.intrinsics.cy = ji.at("cy").get<double>();
    ckpt.intrinsics.width = ji.at("width").get<int>();
    ckpt.intrinsics.height = ji.at("height").get<int>();
    ckpt.t_near = cam.at("near").get<double>();
    ckpt.t_far = cam.at("far").get<double>();
    for (const auto& jp : cam.at("poses")) {
      geometry::Pose pose;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          pose.camera_to_world(r, c) = jp.at(static_cast<size_t>(4 * r + c)).get<double>();
        }
      }
      pose.validate();
      ckpt.poses.push_back(pose);
    }
    ckpt.stems = cam.at("stems").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  const size_t expected = static_cast<size_t>(ckpt.params.arch.hidden_layers) + 3;
  if (ckpt.params.layers.size() != expected) {
    throw std::runtime_error(path + ": layer count does not match architecture");
  }
  return ckpt;
}

}  // namespace uwnerf::field
