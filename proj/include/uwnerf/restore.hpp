#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "uwnerf/image.hpp"
#include "uwnerf/imgform.hpp"
#include "uwnerf/sinkhorn.hpp"

namespace uwnerf::restore {

// Per-channel global histogram equalization: 256-bin empirical CDF mapping.
// Input values must lie in [0,1]; the mapping is monotone non-decreasing.
Image histogram_equalize(const Image& image);

// Same mapping, also exporting the per-channel CDF tables.
Image histogram_equalize(const Image& image, std::array<std::vector<double>, 3>* cdfs);

struct EqualizedReference {
  std::vector<Image> images;                              // H(r) per source image
  std::vector<std::string> source_ids;
  std::vector<std::array<std::vector<double>, 3>> cdfs;   // 256 entries per channel
};

EqualizedReference build_equalized_reference(const std::vector<Image>& images,
                                             const std::vector<std::string>& ids);

// count distinct indices drawn uniformly from [0, total); deterministic.
std::vector<size_t> subsample_indices(size_t total, size_t count, std::mt19937_64& rng);

// Uniform-weight distribution over a pixel subsample pooled from all images.
sinkhorn::DiscreteDistribution pool_pixels(const std::vector<Image>& images, size_t count,
                                           std::mt19937_64& rng);

struct OptimizerConfig {
  enum Method { kNelderMead, kFdDescent };
  Method method = kNelderMead;
  int max_evaluations = 400;
  double beta_max = 5.0;      // box upper bound for each attenuation channel
  double ftol = 1e-9;
  double xtol = 1e-9;
};

struct CorrectionProblem {
  std::vector<Eigen::Vector3d> colors;   // rendered underwater colors C(r)
  std::vector<double> ranges;            // matching ray ranges D(r)
  sinkhorn::DiscreteDistribution reference;  // nu
  sinkhorn::SinkhornConfig sinkhorn;
  OptimizerConfig optimizer;

  void validate() const;  // |colors| = |ranges| >= 64, reference valid
};

// Candidate corrected distribution: imgform.restore applied per pixel with
// uniform weights.
sinkhorn::DiscreteDistribution corrected_distribution(const imgform::WaterParams& params,
                                                      const std::vector<Eigen::Vector3d>& colors,
                                                      const std::vector<double>& ranges);

// Heuristic starting point: beta from a log-linear fit of channel means over
// range quartiles, veiling from the darkest-quartile pixel mean.
imgform::WaterParams initial_guess(const std::vector<Eigen::Vector3d>& colors,
                                   const std::vector<double>& ranges, double beta_max);

struct EstimateResult {
  imgform::WaterParams params;
  double loss = 0;
  double initial_loss = 0;
  std::vector<double> trace;   // incumbent best per evaluation, non-increasing
  bool improved = false;       // best beat the initialization
  int evaluations = 0;
};

// Minimizes sinkhorn loss(corrected_distribution(params), reference) over the
// six scalars, beta in [0, beta_max]^3 and veiling in [0,1]^3. Every candidate
// is projected into the box before evaluation. Deterministic.
EstimateResult estimate_params(const CorrectionProblem& problem);

// Per-pixel restore of a rendered view; output is unclamped (export clamps).
Image correct_rendered_view(const Image& rendered, const std::vector<double>& ranges,
                            const imgform::WaterParams& params,
                            double t_floor = imgform::kDefaultTransmissionFloor);

struct NelderMeadOptions {
  int max_evaluations = 400;
  double ftol = 1e-9;
  double xtol = 1e-9;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0;
  int evaluations = 0;
  std::vector<double> trace;   // incumbent best per evaluation
};

// Standard simplex method (reflect 1, expand 2, contract 0.5, shrink 0.5)
// with candidates clamped into [lower, upper] before every evaluation.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const NelderMeadOptions& options);

}  // namespace uwnerf::restore
