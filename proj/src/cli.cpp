#include "uwnerf/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwnerf/field.hpp"
#include "uwnerf/geometry.hpp"
#include "uwnerf/image.hpp"
#include "uwnerf/imgform.hpp"
#include "uwnerf/metrics.hpp"
#include "uwnerf/restore.hpp"
#include "uwnerf/sinkhorn.hpp"
#include "uwnerf/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace uwnerf::cli {
namespace {

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void log_info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (g_log_level >= 2) std::cerr << "[debug] " << msg << "\n";
}

Eigen::Vector3d parse_vec3(const std::string& text, const std::string& flag) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.empty()) {
      throw std::runtime_error(flag + ": cannot parse '" + item + "' as a number");
    }
    vals.push_back(v);
  }
  if (vals.size() != 3) throw std::runtime_error(flag + " expects r,g,b");
  return {vals[0], vals[1], vals[2]};
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.empty()) {
      throw std::runtime_error(flag + ": cannot parse '" + item + "' as an integer");
    }
    vals.push_back(v);
  }
  return vals;
}

void parse_size(const std::string& text, int* width, int* height) {
  const size_t x = text.find('x');
  if (x == std::string::npos) throw std::runtime_error("--size expects WxH, got '" + text + "'");
  const std::vector<int> wh = {std::atoi(text.substr(0, x).c_str()),
                               std::atoi(text.substr(x + 1).c_str())};
  if (wh[0] <= 0 || wh[1] <= 0) {
    throw std::runtime_error("--size expects positive WxH, got '" + text + "'");
  }
  *width = wh[0];
  *height = wh[1];
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
  log_debug("wrote " + path);
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

bool path_inside(const std::string& candidate, const std::string& dir) {
  const fs::path c = fs::weakly_canonical(fs::absolute(candidate));
  const fs::path d = fs::weakly_canonical(fs::absolute(dir));
  const auto mis = std::mismatch(d.begin(), d.end(), c.begin(), c.end());
  return mis.first == d.end();
}

// Input directories are read-only for every subcommand.
void ensure_outside(const std::string& out_path, const std::string& in_dir,
                    const std::string& what) {
  if (path_inside(out_path, in_dir)) {
    throw std::runtime_error(what + " '" + out_path + "' lies inside the input directory '" +
                             in_dir + "'");
  }
}

Image load_any_image(const std::string& path) {
  if (fs::path(path).extension() == ".pfm") return load_pfm(path);
  return load_png(path);
}

// Prefer the lossless .pfm twin when both encodings of a frame exist.
Image load_frame_image(const fs::path& dir, const std::string& stem) {
  const fs::path pfm = dir / (stem + ".pfm");
  if (fs::exists(pfm)) return load_pfm(pfm.string());
  const fs::path png = dir / (stem + ".png");
  if (fs::exists(png)) return load_png(png.string());
  throw std::runtime_error("no image named " + stem + ".pfm or " + stem + ".png in " +
                           dir.string());
}

void check_known_keys(const json& section, const std::set<std::string>& known,
                      const std::string& where) {
  for (const auto& [key, value] : section.items()) {
    (void)value;
    if (!known.count(key)) throw std::runtime_error(where + ": unknown key '" + key + "'");
  }
}

void apply_train_section(const json& sec, field::TrainConfig* cfg) {
  check_known_keys(sec,
                   {"iterations", "batch_rays", "lr_initial", "lr_final", "adam_beta1",
                    "adam_beta2", "adam_eps", "coarse_weight", "sinkhorn_alpha", "seed", "mode",
                    "coarse_samples", "fine_samples", "refit_every", "refit_pixels",
                    "refit_max_evaluations", "refit_marginal_tol", "refit_reg_lambda", "holdout"},
                   "config section 'train'");
  if (sec.contains("iterations")) cfg->iterations = sec.at("iterations").get<int>();
  if (sec.contains("batch_rays")) cfg->batch_rays = sec.at("batch_rays").get<int>();
  if (sec.contains("lr_initial")) cfg->lr_initial = sec.at("lr_initial").get<double>();
  if (sec.contains("lr_final")) cfg->lr_final = sec.at("lr_final").get<double>();
  if (sec.contains("adam_beta1")) cfg->adam_beta1 = sec.at("adam_beta1").get<double>();
  if (sec.contains("adam_beta2")) cfg->adam_beta2 = sec.at("adam_beta2").get<double>();
  if (sec.contains("adam_eps")) cfg->adam_eps = sec.at("adam_eps").get<double>();
  if (sec.contains("coarse_weight")) cfg->coarse_weight = sec.at("coarse_weight").get<double>();
  if (sec.contains("sinkhorn_alpha")) cfg->sinkhorn_alpha = sec.at("sinkhorn_alpha").get<double>();
  if (sec.contains("seed")) cfg->seed = sec.at("seed").get<std::uint64_t>();
  if (sec.contains("mode")) cfg->mode = field::loss_mode_from_name(sec.at("mode").get<std::string>());
  if (sec.contains("coarse_samples")) cfg->coarse_samples = sec.at("coarse_samples").get<int>();
  if (sec.contains("fine_samples")) cfg->fine_samples = sec.at("fine_samples").get<int>();
  if (sec.contains("refit_every")) cfg->refit_every = sec.at("refit_every").get<int>();
  if (sec.contains("refit_pixels")) cfg->refit_pixels = sec.at("refit_pixels").get<int>();
  if (sec.contains("refit_max_evaluations")) {
    cfg->refit_max_evaluations = sec.at("refit_max_evaluations").get<int>();
  }
  if (sec.contains("refit_marginal_tol")) {
    cfg->refit_marginal_tol = sec.at("refit_marginal_tol").get<double>();
  }
  if (sec.contains("refit_reg_lambda")) {
    cfg->refit_reg_lambda = sec.at("refit_reg_lambda").get<double>();
  }
  if (sec.contains("holdout")) cfg->holdout = sec.at("holdout").get<std::vector<int>>();
}

void apply_architecture_section(const json& sec, field::ArchitectureConfig* arch) {
  check_known_keys(sec,
                   {"pos_freqs", "dir_freqs", "hidden_layers", "hidden_width", "color_hidden",
                    "pos_scale"},
                   "config section 'architecture'");
  if (sec.contains("pos_freqs")) arch->pos_freqs = sec.at("pos_freqs").get<int>();
  if (sec.contains("dir_freqs")) arch->dir_freqs = sec.at("dir_freqs").get<int>();
  if (sec.contains("hidden_layers")) arch->hidden_layers = sec.at("hidden_layers").get<int>();
  if (sec.contains("hidden_width")) arch->hidden_width = sec.at("hidden_width").get<int>();
  if (sec.contains("color_hidden")) arch->color_hidden = sec.at("color_hidden").get<int>();
  if (sec.contains("pos_scale")) arch->pos_scale = sec.at("pos_scale").get<double>();
}

void apply_synth_section(const json& sec, synth::SceneConfig* cfg) {
  check_known_keys(sec,
                   {"width", "height", "views", "beta", "veiling", "t_near", "t_far",
                    "camera_height", "focal_scale", "seed"},
                   "config section 'synth'");
  if (sec.contains("width")) cfg->width = sec.at("width").get<int>();
  if (sec.contains("height")) cfg->height = sec.at("height").get<int>();
  if (sec.contains("views")) cfg->views = sec.at("views").get<int>();
  if (sec.contains("beta")) {
    const auto b = sec.at("beta").get<std::vector<double>>();
    if (b.size() != 3) throw std::runtime_error("config synth.beta expects 3 values");
    cfg->beta = {b[0], b[1], b[2]};
  }
  if (sec.contains("veiling")) {
    const auto a = sec.at("veiling").get<std::vector<double>>();
    if (a.size() != 3) throw std::runtime_error("config synth.veiling expects 3 values");
    cfg->veiling = {a[0], a[1], a[2]};
  }
  if (sec.contains("t_near")) cfg->t_near = sec.at("t_near").get<double>();
  if (sec.contains("t_far")) cfg->t_far = sec.at("t_far").get<double>();
  if (sec.contains("camera_height")) cfg->camera_height = sec.at("camera_height").get<double>();
  if (sec.contains("focal_scale")) cfg->focal_scale = sec.at("focal_scale").get<double>();
  if (sec.contains("seed")) cfg->seed = sec.at("seed").get<std::uint64_t>();
}

std::string metric_name(sinkhorn::CostMetric metric) {
  return metric == sinkhorn::CostMetric::kSquaredEuclidean ? "squared-euclidean" : "euclidean";
}

void apply_sinkhorn_section(const json& sec, sinkhorn::SinkhornConfig* cfg) {
  check_known_keys(sec, {"reg_lambda", "max_iters", "marginal_tol", "metric", "log_domain"},
                   "config section 'sinkhorn'");
  if (sec.contains("reg_lambda")) cfg->reg_lambda = sec.at("reg_lambda").get<double>();
  if (sec.contains("max_iters")) cfg->max_iters = sec.at("max_iters").get<int>();
  if (sec.contains("marginal_tol")) cfg->marginal_tol = sec.at("marginal_tol").get<double>();
  if (sec.contains("metric")) {
    const std::string name = sec.at("metric").get<std::string>();
    if (name == "squared-euclidean") {
      cfg->metric = sinkhorn::CostMetric::kSquaredEuclidean;
    } else if (name == "euclidean") {
      cfg->metric = sinkhorn::CostMetric::kEuclidean;
    } else {
      throw std::runtime_error("config sinkhorn.metric: unknown metric '" + name + "'");
    }
  }
  if (sec.contains("log_domain")) cfg->log_domain = sec.at("log_domain").get<bool>();
}

json sinkhorn_config_json(const sinkhorn::SinkhornConfig& cfg) {
  return {{"reg_lambda", cfg.reg_lambda},
          {"max_iters", cfg.max_iters},
          {"marginal_tol", cfg.marginal_tol},
          {"metric", metric_name(cfg.metric)},
          {"log_domain", cfg.log_domain}};
}

json water_params_json(const imgform::WaterParams& params) {
  return {{"beta", vec3_json(params.beta)}, {"veiling", vec3_json(params.veiling)}};
}

std::string frame_stem(const field::Checkpoint& ckpt, size_t index) {
  if (index < ckpt.stems.size()) return ckpt.stems[index];
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03zu", index);
  return buf;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out, size, beta, veil;
  int views = 8;
  std::uint64_t seed = 0;
  double t_near = 0.05, t_far = 8.0, camera_height = 3.2, focal_scale = 0.9;
  CLI::Option *size_o = nullptr, *beta_o = nullptr, *veil_o = nullptr, *views_o = nullptr,
              *seed_o = nullptr, *near_o = nullptr, *far_o = nullptr, *camera_o = nullptr,
              *focal_o = nullptr;
};

void setup_synth(CLI::App* sub, SynthArgs* a) {
  sub->add_option("--out", a->out, "Output dataset directory")->required();
  a->views_o = sub->add_option("--views", a->views, "Number of camera views");
  a->size_o = sub->add_option("--size", a->size, "Image size as WxH, e.g. 64x64");
  a->beta_o = sub->add_option("--beta", a->beta, "Attenuation coefficients r,g,b (1/m)");
  a->veil_o = sub->add_option("--veil", a->veil, "Veiling light r,g,b in [0,1]");
  a->seed_o = sub->add_option("--seed", a->seed, "Random seed for the ground-plane texture");
  a->near_o = sub->add_option("--near", a->t_near, "Ray near bound (m)");
  a->far_o = sub->add_option("--far", a->t_far, "Ray far bound (m)");
  a->camera_o = sub->add_option("--camera-height", a->camera_height, "Camera sweep height (m)");
  a->focal_o = sub->add_option("--focal-scale", a->focal_scale, "Focal length as a multiple of width");
}

json scene_config_json(const synth::SceneConfig& cfg) {
  return {{"width", cfg.width},
          {"height", cfg.height},
          {"views", cfg.views},
          {"beta", vec3_json(cfg.beta)},
          {"veiling", vec3_json(cfg.veiling)},
          {"t_near", cfg.t_near},
          {"t_far", cfg.t_far},
          {"camera_height", cfg.camera_height},
          {"focal_scale", cfg.focal_scale},
          {"seed", cfg.seed}};
}

int exec_synth(const SynthArgs& a, const json& file_config) {
  synth::SceneConfig cfg;
  if (file_config.contains("synth")) apply_synth_section(file_config.at("synth"), &cfg);
  if (a.views_o->count()) cfg.views = a.views;
  if (a.size_o->count()) parse_size(a.size, &cfg.width, &cfg.height);
  if (a.beta_o->count()) cfg.beta = parse_vec3(a.beta, "--beta");
  if (a.veil_o->count()) cfg.veiling = parse_vec3(a.veil, "--veil");
  if (a.seed_o->count()) cfg.seed = a.seed;
  if (a.near_o->count()) cfg.t_near = a.t_near;
  if (a.far_o->count()) cfg.t_far = a.t_far;
  if (a.camera_o->count()) cfg.camera_height = a.camera_height;
  if (a.focal_o->count()) cfg.focal_scale = a.focal_scale;
  cfg.validate();

  log_info("generating " + std::to_string(cfg.views) + " views at " +
           std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
  const synth::PosedDataset dataset = synth::generate(cfg);
  synth::save_dataset(dataset, a.out);
  write_json_file({{"command", "synth"}, {"config", scene_config_json(cfg)}},
                  (fs::path(a.out) / "synth.json").string());
  log_info("wrote dataset to " + a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// histeq

struct HisteqArgs {
  std::string in, out;
};

void setup_histeq(CLI::App* sub, HisteqArgs* a) {
  sub->add_option("--in", a->in, "Input image, image directory, or dataset directory")
      ->required();
  sub->add_option("--out", a->out, "Output image or directory")->required();
}

int exec_histeq(const HisteqArgs& a) {
  if (!fs::exists(a.in)) throw std::runtime_error("no such file or directory: " + a.in);

  if (!fs::is_directory(a.in)) {
    if (fs::exists(a.out) && fs::equivalent(a.in, a.out)) {
      throw std::runtime_error("--out must differ from --in");
    }
    const Image eq = restore::histogram_equalize(load_any_image(a.in));
    if (fs::path(a.out).extension() == ".pfm") {
      save_pfm(eq, a.out);
    } else {
      save_png(eq, a.out);
    }
    log_info("equalized " + a.in + " -> " + a.out);
    return 0;
  }

  ensure_outside(a.out, a.in, "--out");
  fs::path src = fs::path(a.in) / "images" / "water";
  if (!fs::is_directory(src)) src = a.in;
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(src)) {
    if (entry.path().extension() == ".png") stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw std::runtime_error("no .png images found in " + src.string());

  fs::create_directories(a.out);
  for (const std::string& stem : stems) {
    const Image eq = restore::histogram_equalize(load_frame_image(src, stem));
    save_png(eq, (fs::path(a.out) / (stem + ".png")).string());
    save_pfm(eq, (fs::path(a.out) / (stem + ".pfm")).string());
  }
  write_json_file({{"command", "histeq"},
                   {"config", {{"in", a.in}, {"out", a.out}}},
                   {"frames", stems}},
                  (fs::path(a.out) / "histeq.json").string());
  log_info("equalized " + std::to_string(stems.size()) + " images into " + a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, out, mode, holdout;
  int iters = 5000, batch_rays = 32, coarse_samples = 32, fine_samples = 32;
  int refit_every = 500, refit_pixels = 256;
  std::uint64_t seed = 0;
  double lr_initial = 5e-4, lr_final = 5e-6, coarse_weight = 0.1;
  int pos_freqs = 10, dir_freqs = 4, hidden_layers = 4, hidden_width = 128, color_hidden = 64;
  CLI::Option *mode_o = nullptr, *iters_o = nullptr, *batch_o = nullptr, *coarse_o = nullptr,
              *fine_o = nullptr, *refit_every_o = nullptr, *refit_pixels_o = nullptr,
              *seed_o = nullptr, *lr_i_o = nullptr, *lr_f_o = nullptr, *cw_o = nullptr,
              *holdout_o = nullptr, *posf_o = nullptr, *dirf_o = nullptr, *hl_o = nullptr,
              *hw_o = nullptr, *ch_o = nullptr;
};

void setup_train(CLI::App* sub, TrainArgs* a) {
  sub->add_option("--data", a->data, "Posed dataset directory")->required();
  sub->add_option("--out", a->out, "Output checkpoint path")->required();
  a->mode_o = sub->add_option("--mode", a->mode, "Loss mode: underwater|histeq|joint")
                  ->check(CLI::IsMember({"underwater", "histeq", "joint"}));
  a->iters_o = sub->add_option("--iters", a->iters, "Training iterations");
  a->seed_o = sub->add_option("--seed", a->seed, "Random seed");
  a->batch_o = sub->add_option("--batch-rays", a->batch_rays, "Rays per batch");
  a->coarse_o = sub->add_option("--coarse-samples", a->coarse_samples, "Coarse samples per ray");
  a->fine_o = sub->add_option("--fine-samples", a->fine_samples, "Fine samples per ray");
  a->refit_every_o =
      sub->add_option("--refit-every", a->refit_every, "Water refit cadence (joint mode)");
  a->refit_pixels_o =
      sub->add_option("--refit-pixels", a->refit_pixels, "Pixels rendered per water refit");
  a->lr_i_o = sub->add_option("--lr-initial", a->lr_initial, "Initial learning rate");
  a->lr_f_o = sub->add_option("--lr-final", a->lr_final, "Final learning rate");
  a->cw_o = sub->add_option("--coarse-weight", a->coarse_weight, "Coarse term weight");
  a->holdout_o =
      sub->add_option("--holdout", a->holdout, "Comma-separated frame indices to exclude");
  a->posf_o = sub->add_option("--pos-freqs", a->pos_freqs, "Position encoding frequencies");
  a->dirf_o = sub->add_option("--dir-freqs", a->dir_freqs, "Direction encoding frequencies");
  a->hl_o = sub->add_option("--hidden-layers", a->hidden_layers, "Trunk depth");
  a->hw_o = sub->add_option("--hidden-width", a->hidden_width, "Trunk width");
  a->ch_o = sub->add_option("--color-hidden", a->color_hidden, "Color head width");
}

field::TrainConfig train_config_from_args(const TrainArgs& a, const json& file_config) {
  field::TrainConfig cfg;
  if (file_config.contains("architecture")) {
    apply_architecture_section(file_config.at("architecture"), &cfg.arch);
  }
  if (file_config.contains("train")) apply_train_section(file_config.at("train"), &cfg);
  if (a.mode_o->count()) cfg.mode = field::loss_mode_from_name(a.mode);
  if (a.iters_o->count()) cfg.iterations = a.iters;
  if (a.seed_o->count()) cfg.seed = a.seed;
  if (a.batch_o->count()) cfg.batch_rays = a.batch_rays;
  if (a.coarse_o->count()) cfg.coarse_samples = a.coarse_samples;
  if (a.fine_o->count()) cfg.fine_samples = a.fine_samples;
  if (a.refit_every_o->count()) cfg.refit_every = a.refit_every;
  if (a.refit_pixels_o->count()) cfg.refit_pixels = a.refit_pixels;
  if (a.lr_i_o->count()) cfg.lr_initial = a.lr_initial;
  if (a.lr_f_o->count()) cfg.lr_final = a.lr_final;
  if (a.cw_o->count()) cfg.coarse_weight = a.coarse_weight;
  if (a.holdout_o->count()) cfg.holdout = parse_int_list(a.holdout, "--holdout");
  if (a.posf_o->count()) cfg.arch.pos_freqs = a.pos_freqs;
  if (a.dirf_o->count()) cfg.arch.dir_freqs = a.dir_freqs;
  if (a.hl_o->count()) cfg.arch.hidden_layers = a.hidden_layers;
  if (a.hw_o->count()) cfg.arch.hidden_width = a.hidden_width;
  if (a.ch_o->count()) cfg.arch.color_hidden = a.color_hidden;
  return cfg;
}

int exec_train(const TrainArgs& a, const json& file_config) {
  ensure_outside(a.out, a.data, "--out");
  field::TrainConfig cfg = train_config_from_args(a, file_config);
  cfg.validate();

  log_info("loading dataset " + a.data);
  const synth::PosedDataset dataset = synth::load_dataset(a.data);
  const int report_every = std::max(1, cfg.iterations / 10);
  cfg.progress = [&](int iter, double loss) {
    if ((iter + 1) % report_every == 0 || iter + 1 == cfg.iterations) {
      log_info("iter " + std::to_string(iter + 1) + "/" + std::to_string(cfg.iterations) +
               " color_loss=" + std::to_string(loss));
    }
  };

  log_info("training mode=" + field::loss_mode_name(cfg.mode) + " iterations=" +
           std::to_string(cfg.iterations) + " seed=" + std::to_string(cfg.seed));
  const field::TrainResult result = field::train(dataset, cfg);

  field::Checkpoint ckpt;
  ckpt.params = result.params;
  ckpt.has_water = result.has_water;
  ckpt.water = result.water;
  ckpt.train_config = cfg;
  ckpt.rng_state = result.rng_state;
  ckpt.intrinsics = dataset.intrinsics;
  for (const auto& frame : dataset.frames) {
    ckpt.poses.push_back(frame.pose);
    ckpt.stems.push_back(frame.stem);
  }
  ckpt.t_near = dataset.t_near;
  ckpt.t_far = dataset.t_far;
  field::save_checkpoint(ckpt, a.out);

  json log = {{"command", "train"},
              {"data", a.data},
              {"out", a.out},
              {"config", json::parse(field::train_config_json(cfg))},
              {"color_loss", result.log.color_loss},
              {"refit_iterations", result.log.refit_iterations},
              {"refit_loss", result.log.refit_loss},
              {"water_params", result.has_water ? water_params_json(result.water) : json()}};
  write_json_file(log, a.out + ".log.json");

  if (result.has_water) {
    log_info("water estimate beta=[" + std::to_string(result.water.beta.x()) + ", " +
             std::to_string(result.water.beta.y()) + ", " +
             std::to_string(result.water.beta.z()) + "]");
  }
  log_info("wrote checkpoint " + a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// render

struct RenderArgs {
  std::string ckpt, out, pose_index, pose_file;
  bool corrected = false, depth = false;
  int coarse_samples = 0, fine_samples = 0;
  CLI::Option *index_o = nullptr, *pose_o = nullptr, *coarse_o = nullptr, *fine_o = nullptr;
};

void setup_render(CLI::App* sub, RenderArgs* a) {
  sub->add_option("--ckpt", a->ckpt, "Checkpoint path")->required();
  sub->add_option("--out", a->out, "Output directory")->required();
  a->index_o = sub->add_option("--pose-index", a->pose_index,
                               "Dataset pose index to render, or 'all'");
  a->pose_o = sub->add_option("--pose", a->pose_file,
                              "JSON file with a camera_to_world row-major 4x4 matrix");
  sub->add_flag("--corrected", a->corrected,
                "Also write the restored view (needs water parameters in the checkpoint)");
  sub->add_flag("--depth", a->depth, "Also write the expected ray range as .pfm");
  a->coarse_o = sub->add_option("--coarse-samples", a->coarse_samples,
                                "Override the checkpoint's coarse sample count");
  a->fine_o = sub->add_option("--fine-samples", a->fine_samples,
                              "Override the checkpoint's fine sample count");
}

geometry::Pose pose_from_file(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.contains("camera_to_world")) {
    throw std::runtime_error(path + ": missing key 'camera_to_world'");
  }
  const auto vals = j.at("camera_to_world").get<std::vector<double>>();
  if (vals.size() != 16) {
    throw std::runtime_error(path + ": camera_to_world expects 16 numbers");
  }
  geometry::Pose pose;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) pose.camera_to_world(r, c) = vals[static_cast<size_t>(4 * r + c)];
  }
  pose.validate();
  return pose;
}

int exec_render(const RenderArgs& a) {
  if ((a.index_o->count() > 0) == (a.pose_o->count() > 0)) {
    throw std::runtime_error("render needs exactly one of --pose-index or --pose");
  }
  const field::Checkpoint ckpt = field::load_checkpoint(a.ckpt);
  if (a.corrected && !ckpt.has_water) {
    throw std::runtime_error(
        "checkpoint has no water parameters; train with --mode joint or run 'correct' first");
  }
  const int coarse = a.coarse_o->count() ? a.coarse_samples : ckpt.train_config.coarse_samples;
  const int fine = a.fine_o->count() ? a.fine_samples : ckpt.train_config.fine_samples;

  std::vector<std::pair<std::string, geometry::Pose>> views;
  if (a.pose_o->count()) {
    views.emplace_back("pose", pose_from_file(a.pose_file));
  } else if (a.pose_index == "all") {
    for (size_t i = 0; i < ckpt.poses.size(); ++i) {
      views.emplace_back(frame_stem(ckpt, i), ckpt.poses[i]);
    }
  } else {
    size_t pos = 0;
    int index = -1;
    try {
      index = std::stoi(a.pose_index, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != a.pose_index.size() || index < 0 ||
        index >= static_cast<int>(ckpt.poses.size())) {
      throw std::runtime_error("--pose-index expects 'all' or an integer in [0, " +
                               std::to_string(ckpt.poses.size()) + "), got '" + a.pose_index +
                               "'");
    }
    views.emplace_back(frame_stem(ckpt, static_cast<size_t>(index)),
                       ckpt.poses[static_cast<size_t>(index)]);
  }

  fs::create_directories(a.out);
  std::vector<std::string> written;
  for (const auto& [stem, pose] : views) {
    log_info("rendering " + stem);
    const field::ViewRender view = field::render_view(ckpt.params, ckpt.intrinsics, pose,
                                                      ckpt.t_near, ckpt.t_far, coarse, fine);
    save_png(view.color.clamped01(), (fs::path(a.out) / (stem + ".png")).string());
    save_pfm(view.color, (fs::path(a.out) / (stem + ".pfm")).string());
    if (a.depth) save_pfm(view.range, (fs::path(a.out) / (stem + "_depth.pfm")).string());
    if (a.corrected) {
      const Image corrected =
          restore::correct_rendered_view(view.color, view.range.data, ckpt.water);
      save_png(corrected.clamped01(), (fs::path(a.out) / (stem + "_corrected.png")).string());
      save_pfm(corrected, (fs::path(a.out) / (stem + "_corrected.pfm")).string());
    }
    written.push_back(stem);
  }

  write_json_file({{"command", "render"},
                   {"config",
                    {{"ckpt", a.ckpt},
                     {"out", a.out},
                     {"corrected", a.corrected},
                     {"depth", a.depth},
                     {"coarse_samples", coarse},
                     {"fine_samples", fine}}},
                   {"water_params", ckpt.has_water ? water_params_json(ckpt.water) : json()},
                   {"frames", written}},
                  (fs::path(a.out) / "render.json").string());
  log_info("rendered " + std::to_string(written.size()) + " view(s) into " + a.out);
  return 0;
}

// ---------------------------------------------------------------------------
// correct

struct CorrectArgs {
  std::string ckpt, data, out, out_ckpt, reference = "histeq";
  int pixels = 512, max_evals = 400;
  std::uint64_t seed = 0;
};

void setup_correct(CLI::App* sub, CorrectArgs* a) {
  sub->add_option("--ckpt", a->ckpt, "Checkpoint path")->required();
  sub->add_option("--data", a->data, "Posed dataset directory (reference images)")->required();
  sub->add_option("--out", a->out, "Output water-parameter JSON path")->required();
  sub->add_option("--pixels", a->pixels, "Rendered pixel subsample size");
  sub->add_option("--max-evals", a->max_evals, "Optimizer evaluation budget");
  sub->add_option("--seed", a->seed, "Random seed for pixel subsampling");
  sub->add_option("--reference", a->reference, "Reference distribution: histeq|air")
      ->check(CLI::IsMember({"histeq", "air"}));
  sub->add_option("--out-ckpt", a->out_ckpt,
                  "Also write a copy of the checkpoint carrying the new water parameters");
}

int exec_correct(const CorrectArgs& a, const json& file_config) {
  ensure_outside(a.out, a.data, "--out");
  if (!a.out_ckpt.empty()) {
    ensure_outside(a.out_ckpt, a.data, "--out-ckpt");
    if (fs::exists(a.out_ckpt) && fs::exists(a.ckpt) && fs::equivalent(a.out_ckpt, a.ckpt)) {
      throw std::runtime_error("--out-ckpt must differ from --ckpt");
    }
  }
  field::Checkpoint ckpt = field::load_checkpoint(a.ckpt);
  const synth::PosedDataset dataset = synth::load_dataset(a.data);

  std::vector<int> train_frames;
  for (int f = 0; f < static_cast<int>(dataset.frames.size()); ++f) {
    const auto& hold = ckpt.train_config.holdout;
    if (std::find(hold.begin(), hold.end(), f) == hold.end()) train_frames.push_back(f);
  }
  if (train_frames.empty()) throw std::runtime_error("all dataset frames are held out");

  std::vector<Image> reference_images;
  for (int f : train_frames) {
    const auto& frame = dataset.frames[static_cast<size_t>(f)];
    if (a.reference == "air") {
      if (!dataset.has_air) throw std::runtime_error("--reference air needs in-air images");
      reference_images.push_back(frame.air);
    } else {
      reference_images.push_back(dataset.has_histeq ? frame.histeq
                                                    : restore::histogram_equalize(frame.water));
    }
  }

  std::mt19937_64 rng(a.seed);
  restore::CorrectionProblem problem;
  problem.reference =
      restore::pool_pixels(reference_images, static_cast<size_t>(a.pixels), rng);
  if (file_config.contains("sinkhorn")) {
    apply_sinkhorn_section(file_config.at("sinkhorn"), &problem.sinkhorn);
  }
  problem.optimizer.max_evaluations = a.max_evals;

  std::vector<geometry::Ray> rays;
  std::uniform_int_distribution<int> frame_dist(0, static_cast<int>(train_frames.size()) - 1);
  std::uniform_int_distribution<int> x_dist(0, dataset.intrinsics.width - 1);
  std::uniform_int_distribution<int> y_dist(0, dataset.intrinsics.height - 1);
  for (int i = 0; i < a.pixels; ++i) {
    const int f = train_frames[static_cast<size_t>(frame_dist(rng))];
    rays.push_back(geometry::pixel_ray(dataset.intrinsics,
                                       dataset.frames[static_cast<size_t>(f)].pose,
                                       x_dist(rng) + 0.5, y_dist(rng) + 0.5, dataset.t_near,
                                       dataset.t_far));
  }
  log_info("rendering " + std::to_string(rays.size()) + " sample rays");
  const field::RaysRender rendered =
      field::render_rays(ckpt.params, rays, ckpt.train_config.coarse_samples,
                         ckpt.train_config.fine_samples);
  problem.colors = rendered.colors;
  problem.ranges = rendered.depths;

  log_info("estimating water parameters (max " + std::to_string(a.max_evals) + " evaluations)");
  const restore::EstimateResult est = restore::estimate_params(problem);

  json report = {{"command", "correct"},
                 {"beta", vec3_json(est.params.beta)},
                 {"veiling", vec3_json(est.params.veiling)},
                 {"loss", est.loss},
                 {"initial_loss", est.initial_loss},
                 {"improved", est.improved},
                 {"evaluations", est.evaluations},
                 {"config",
                  {{"ckpt", a.ckpt},
                   {"data", a.data},
                   {"pixels", a.pixels},
                   {"max_evals", a.max_evals},
                   {"seed", a.seed},
                   {"reference", a.reference},
                   {"sinkhorn", sinkhorn_config_json(problem.sinkhorn)}}}};
  write_json_file(report, a.out);

  if (!a.out_ckpt.empty()) {
    ckpt.water = est.params;
    ckpt.has_water = true;
    field::save_checkpoint(ckpt, a.out_ckpt);
    log_info("wrote updated checkpoint " + a.out_ckpt);
  }
  log_info("sinkhorn loss " + std::to_string(est.loss) + " (initial " +
           std::to_string(est.initial_loss) + ")");
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalCommonArgs {
  std::string data, render_dir, suffix, kind, out;
  CLI::Option *render_o = nullptr, *kind_o = nullptr;
};

void setup_eval_images(CLI::App* sub, EvalCommonArgs* a) {
  sub->add_option("--data", a->data, "Posed dataset directory")->required();
  a->render_o = sub->add_option("--render", a->render_dir, "Directory of rendered frames");
  sub->add_option("--suffix", a->suffix, "Frame filename suffix, e.g. _corrected");
  a->kind_o = sub->add_option("--kind", a->kind, "Evaluate dataset images: air|water|histeq")
                  ->check(CLI::IsMember({"air", "water", "histeq"}));
  sub->add_option("--out", a->out, "Output report path")->required();
}

// Evaluation frames in dataset order, either re-rendered ones or a dataset
// image kind. Missing frames are an error so region/track indices stay valid.
std::vector<Image> eval_images(const EvalCommonArgs& a, const synth::PosedDataset& dataset,
                               json* source) {
  if ((a.render_o->count() > 0) == (a.kind_o->count() > 0)) {
    throw std::runtime_error("eval needs exactly one of --render or --kind");
  }
  std::vector<Image> images;
  if (a.render_o->count()) {
    for (const auto& frame : dataset.frames) {
      images.push_back(load_frame_image(a.render_dir, frame.stem + a.suffix));
    }
    *source = {{"render", a.render_dir}, {"suffix", a.suffix}};
  } else {
    if (a.kind == "air" && !dataset.has_air) throw std::runtime_error("dataset has no air images");
    if (a.kind == "histeq" && !dataset.has_histeq) {
      throw std::runtime_error("dataset has no histeq images");
    }
    for (const auto& frame : dataset.frames) {
      images.push_back(a.kind == "air" ? frame.air
                                       : a.kind == "water" ? frame.water : frame.histeq);
    }
    *source = {{"kind", a.kind}};
  }
  return images;
}

int exec_eval_color(const EvalCommonArgs& a) {
  const synth::PosedDataset dataset = synth::load_dataset(a.data);
  if (dataset.colorboard.patches.empty()) {
    throw std::runtime_error("dataset " + a.data + " has no colorboard.json");
  }
  json source;
  const std::vector<Image> images = eval_images(a, dataset, &source);
  const metrics::ColorBoardReport report = metrics::colorboard_report(images, dataset.colorboard);

  json patches = json::array();
  for (const auto& p : report.patches) {
    patches.push_back({{"name", p.name}, {"mean_angle_deg", p.mean_angle_deg}});
  }
  write_json_file({{"command", "eval color"},
                   {"config", {{"data", a.data}, {"images", source}}},
                   {"mean_angle_deg", report.mean_angle_deg},
                   {"patches", patches}},
                  a.out);
  log_info("mean angular error " + std::to_string(report.mean_angle_deg) + " deg");
  return 0;
}

int exec_eval_scm(const EvalCommonArgs& a) {
  const synth::PosedDataset dataset = synth::load_dataset(a.data);
  if (dataset.tracks.empty()) throw std::runtime_error("dataset " + a.data + " has no tracks.json");
  json source;
  const std::vector<Image> images = eval_images(a, dataset, &source);
  const metrics::SceneConsistency scm = metrics::scene_consistency(images, dataset.tracks);

  write_json_file({{"command", "eval scm"},
                   {"config", {{"data", a.data}, {"images", source}}},
                   {"scm", {{"r", scm.scm_r}, {"g", scm.scm_g}, {"b", scm.scm_b}}},
                   {"scm_mean", scm.mean()}},
                  a.out);
  log_info("scm mean " + std::to_string(scm.mean()));
  return 0;
}

struct EvalUiqmArgs {
  std::string in, suffix, out;
};

int exec_eval_uiqm(const EvalUiqmArgs& a) {
  std::vector<std::pair<std::string, Image>> images;
  if (fs::is_directory(a.in)) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a.in)) {
      const std::string name = entry.path().filename().string();
      if (entry.path().extension() == ".png" &&
          (a.suffix.empty() ||
           name.size() >= a.suffix.size() + 4 &&
               name.compare(name.size() - 4 - a.suffix.size(), a.suffix.size(), a.suffix) == 0)) {
        names.push_back(name);
      }
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error("no matching .png images in " + a.in);
    for (const auto& name : names) {
      images.emplace_back(name, load_png((fs::path(a.in) / name).string()));
    }
  } else {
    images.emplace_back(fs::path(a.in).filename().string(), load_any_image(a.in));
  }

  json per_image = json::array();
  double mean = 0;
  for (const auto& [name, image] : images) {
    const metrics::UiqmBreakdown b = metrics::uiqm(image);
    per_image.push_back({{"name", name},
                         {"uiqm", b.uiqm},
                         {"uicm", b.uicm},
                         {"uism", b.uism},
                         {"uiconm", b.uiconm}});
    mean += b.uiqm;
  }
  mean /= static_cast<double>(images.size());

  write_json_file({{"command", "eval uiqm"},
                   {"config", {{"in", a.in}, {"suffix", a.suffix}}},
                   {"uiqm_mean", mean},
                   {"images", per_image}},
                  a.out);
  log_info("uiqm mean " + std::to_string(mean));
  return 0;
}

struct EvalDepthArgs {
  std::string data, render_dir, frames, out, ply;
  CLI::Option* frames_o = nullptr;
};

int exec_eval_depth(const EvalDepthArgs& a) {
  const synth::PosedDataset dataset = synth::load_dataset(a.data);
  if (!dataset.has_depth) throw std::runtime_error("dataset " + a.data + " has no depth maps");

  std::vector<int> frames;
  if (a.frames_o->count()) {
    frames = parse_int_list(a.frames, "--frames");
  } else {
    for (int f = 0; f < static_cast<int>(dataset.frames.size()); ++f) {
      if (fs::exists(fs::path(a.render_dir) /
                     (dataset.frames[static_cast<size_t>(f)].stem + "_depth.pfm"))) {
        frames.push_back(f);
      }
    }
    if (frames.empty()) {
      throw std::runtime_error("no <stem>_depth.pfm files in " + a.render_dir +
                               "; render with --depth");
    }
  }

  double depth_min = std::numeric_limits<double>::infinity();
  double depth_max = -depth_min;
  json per_frame = json::array();
  double mean_rmse = 0;
  for (int f : frames) {
    if (f < 0 || f >= static_cast<int>(dataset.frames.size())) {
      throw std::runtime_error("--frames index " + std::to_string(f) + " out of range");
    }
    const auto& frame = dataset.frames[static_cast<size_t>(f)];
    const Image pred_range =
        load_pfm((fs::path(a.render_dir) / (frame.stem + "_depth.pfm")).string());
    const geometry::PointCloud pred =
        geometry::backproject(dataset.intrinsics, frame.pose, pred_range);
    const geometry::PointCloud truth =
        geometry::backproject(dataset.intrinsics, frame.pose, frame.range);
    const geometry::CloudDistance dist = geometry::cloud_distance(pred, truth);
    const double rmse = 0.5 * (dist.rmse_pred_to_truth + dist.rmse_truth_to_pred);
    mean_rmse += rmse;
    for (double r : frame.range.data) {
      depth_min = std::min(depth_min, r);
      depth_max = std::max(depth_max, r);
    }
    per_frame.push_back({{"frame", f},
                         {"stem", frame.stem},
                         {"rmse_pred_to_truth", dist.rmse_pred_to_truth},
                         {"rmse_truth_to_pred", dist.rmse_truth_to_pred},
                         {"rmse", rmse}});
    if (!a.ply.empty()) {
      fs::create_directories(a.ply);
      geometry::save_ply(pred, (fs::path(a.ply) / (frame.stem + "_pred.ply")).string());
      geometry::save_ply(truth, (fs::path(a.ply) / (frame.stem + "_truth.ply")).string());
    }
  }
  mean_rmse /= static_cast<double>(frames.size());
  const double depth_range = depth_max - depth_min;

  write_json_file(
      {{"command", "eval depth"},
       {"config", {{"data", a.data}, {"render", a.render_dir}, {"frames", frames}}},
       {"rmse_mean", mean_rmse},
       {"depth_range", depth_range},
       {"rmse_relative", depth_range > 0 ? mean_rmse / depth_range : 0.0},
       {"frames", per_frame}},
      a.out);
  log_info("depth rmse " + std::to_string(mean_rmse) + " over range " +
           std::to_string(depth_range));
  return 0;
}

struct EvalPsnrArgs {
  std::string a, b, out;
};

int exec_eval_psnr(const EvalPsnrArgs& args) {
  json pairs = json::array();
  double mean = 0;
  int count = 0;
  if (fs::is_directory(args.a) != fs::is_directory(args.b)) {
    throw std::runtime_error("eval psnr: --a and --b must both be files or both directories");
  }
  if (fs::is_directory(args.a)) {
    std::set<std::string> stems_a, stems_b;
    for (const auto& entry : fs::directory_iterator(args.a)) {
      if (entry.path().extension() == ".png" || entry.path().extension() == ".pfm") {
        stems_a.insert(entry.path().stem().string());
      }
    }
    for (const auto& entry : fs::directory_iterator(args.b)) {
      if (entry.path().extension() == ".png" || entry.path().extension() == ".pfm") {
        stems_b.insert(entry.path().stem().string());
      }
    }
    std::vector<std::string> shared;
    std::set_intersection(stems_a.begin(), stems_a.end(), stems_b.begin(), stems_b.end(),
                          std::back_inserter(shared));
    if (shared.empty()) throw std::runtime_error("no image stems shared by --a and --b");
    for (const auto& stem : shared) {
      const Image ia = load_frame_image(args.a, stem);
      const Image ib = load_frame_image(args.b, stem);
      if (ia.channels != 3 || ib.channels != 3) continue;  // skip depth maps
      const double v = metrics::psnr(ia, ib);
      pairs.push_back({{"name", stem}, {"psnr_db", v}});
      mean += v;
      ++count;
    }
    if (count == 0) throw std::runtime_error("no comparable 3-channel image pairs found");
  } else {
    const double v = metrics::psnr(load_any_image(args.a), load_any_image(args.b));
    pairs.push_back({{"name", fs::path(args.a).filename().string()}, {"psnr_db", v}});
    mean += v;
    count = 1;
  }
  mean /= count;

  write_json_file({{"command", "eval psnr"},
                   {"config", {{"a", args.a}, {"b", args.b}}},
                   {"psnr_mean_db", mean},
                   {"pairs", pairs}},
                  args.out);
  log_info("psnr mean " + std::to_string(mean) + " dB");
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Underwater radiance-field pipeline: synthetic data, training, restoration, "
               "and evaluation"};
  app.require_subcommand(1);

  int threads = 1;
  std::string log_level = "info";
  std::string config_path;
  app.add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);
  app.add_option("--log-level", log_level, "Logging: quiet|info|debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  app.add_option("--config", config_path, "JSON config file with sections "
                                          "train/architecture/synth/sinkhorn (flags win)");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic posed dataset");
  setup_synth(synth_cmd, &synth_args);

  HisteqArgs histeq_args;
  CLI::App* histeq_cmd =
      app.add_subcommand("histeq", "Per-channel histogram equalization of images");
  setup_histeq(histeq_cmd, &histeq_args);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit the radiance field to a dataset");
  setup_train(train_cmd, &train_args);

  RenderArgs render_args;
  CLI::App* render_cmd = app.add_subcommand("render", "Render views from a checkpoint");
  setup_render(render_cmd, &render_args);

  CorrectArgs correct_args;
  CLI::App* correct_cmd = app.add_subcommand(
      "correct", "Estimate water parameters for a trained checkpoint via Sinkhorn matching");
  setup_correct(correct_cmd, &correct_args);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Metric reports over images and depth");
  eval_cmd->require_subcommand(1);
  EvalCommonArgs color_args;
  CLI::App* color_cmd =
      eval_cmd->add_subcommand("color", "Colorboard angular error against patch truths");
  setup_eval_images(color_cmd, &color_args);
  EvalCommonArgs scm_args;
  CLI::App* scm_cmd = eval_cmd->add_subcommand("scm", "Scene consistency over pixel tracks");
  setup_eval_images(scm_cmd, &scm_args);
  EvalUiqmArgs uiqm_args;
  CLI::App* uiqm_cmd = eval_cmd->add_subcommand("uiqm", "No-reference underwater image quality");
  uiqm_cmd->add_option("--in", uiqm_args.in, "Image file or directory of .png images")
      ->required();
  uiqm_cmd->add_option("--suffix", uiqm_args.suffix, "Only score names ending in this suffix");
  uiqm_cmd->add_option("--out", uiqm_args.out, "Output report path")->required();
  EvalDepthArgs depth_args;
  CLI::App* depth_cmd =
      eval_cmd->add_subcommand("depth", "Back-projected depth cloud error vs dataset depth");
  depth_cmd->add_option("--data", depth_args.data, "Posed dataset directory")->required();
  depth_cmd->add_option("--render", depth_args.render_dir, "Directory with <stem>_depth.pfm")
      ->required();
  depth_args.frames_o = depth_cmd->add_option(
      "--frames", depth_args.frames, "Comma-separated frame indices (default: all rendered)");
  depth_cmd->add_option("--out", depth_args.out, "Output report path")->required();
  depth_cmd->add_option("--ply", depth_args.ply, "Also dump point clouds into this directory");
  EvalPsnrArgs psnr_args;
  CLI::App* psnr_cmd = eval_cmd->add_subcommand("psnr", "PSNR between images or directories");
  psnr_cmd->add_option("--a", psnr_args.a, "Image or directory")->required();
  psnr_cmd->add_option("--b", psnr_args.b, "Image or directory")->required();
  psnr_cmd->add_option("--out", psnr_args.out, "Output report path")->required();

  for (CLI::App* sub : {synth_cmd, histeq_cmd, train_cmd, render_cmd, correct_cmd, eval_cmd}) {
    sub->fallthrough();
  }
  for (CLI::App* sub : {color_cmd, scm_cmd, uiqm_cmd, depth_cmd, psnr_cmd}) {
    sub->fallthrough();
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  g_log_level = log_level == "quiet" ? 0 : log_level == "debug" ? 2 : 1;
  Eigen::setNbThreads(threads);

  try {
    json file_config = json::object();
    if (!config_path.empty()) {
      file_config = read_json_file(config_path);
      if (!file_config.is_object()) throw std::runtime_error(config_path + ": expected an object");
      check_known_keys(file_config, {"train", "architecture", "synth", "sinkhorn"}, config_path);
    }

    if (synth_cmd->parsed()) return exec_synth(synth_args, file_config);
    if (histeq_cmd->parsed()) return exec_histeq(histeq_args);
    if (train_cmd->parsed()) return exec_train(train_args, file_config);
    if (render_cmd->parsed()) return exec_render(render_args);
    if (correct_cmd->parsed()) return exec_correct(correct_args, file_config);
    if (eval_cmd->parsed()) {
      if (color_cmd->parsed()) return exec_eval_color(color_args);
      if (scm_cmd->parsed()) return exec_eval_scm(scm_args);
      if (uiqm_cmd->parsed()) return exec_eval_uiqm(uiqm_args);
      if (depth_cmd->parsed()) return exec_eval_depth(depth_args);
      if (psnr_cmd->parsed()) return exec_eval_psnr(psnr_args);
    }
    throw std::runtime_error("no subcommand given");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace uwnerf::cli
