#include "uwnerf/restore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace uwnerf::restore {
namespace {

constexpr int kBins = 256;

int bin_of(double v, const char* what) {
  if (!(v >= -1e-9 && v <= 1 + 1e-9)) {
    throw std::invalid_argument(std::string(what) + ": values must lie in [0,1]");
  }
  return std::clamp(static_cast<int>(v * kBins), 0, kBins - 1);
}

}  // namespace

Image histogram_equalize(const Image& image, std::array<std::vector<double>, 3>* cdfs) {
  if (image.channels != 3) {
    throw std::invalid_argument("histogram_equalize: image must have 3 channels");
  }
  Image out = image;
  const size_t n = static_cast<size_t>(image.width) * image.height;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> cdf(kBins, 0.0);
    for (size_t i = 0; i < n; ++i) {
      cdf[bin_of(image.data[i * 3 + c], "histogram_equalize")] += 1.0;
    }
    double acc = 0;
    for (int b = 0; b < kBins; ++b) {
      acc += cdf[b];
      cdf[b] = acc / static_cast<double>(n);
    }
    for (size_t i = 0; i < n; ++i) {
      out.data[i * 3 + c] = cdf[bin_of(image.data[i * 3 + c], "histogram_equalize")];
    }
    if (cdfs) (*cdfs)[c] = std::move(cdf);
  }
  return out;
}

Image histogram_equalize(const Image& image) { return histogram_equalize(image, nullptr); }

EqualizedReference build_equalized_reference(const std::vector<Image>& images,
                                             const std::vector<std::string>& ids) {
  if (images.empty()) {
    throw std::invalid_argument("build_equalized_reference: no images");
  }
  if (!ids.empty() && ids.size() != images.size()) {
    throw std::invalid_argument("build_equalized_reference: id/image count mismatch");
  }
  EqualizedReference ref;
  ref.images.reserve(images.size());
  ref.cdfs.resize(images.size());
  for (size_t i = 0; i < images.size(); ++i) {
    ref.images.push_back(histogram_equalize(images[i], &ref.cdfs[i]));
    ref.source_ids.push_back(ids.empty() ? "image_" + std::to_string(i) : ids[i]);
  }
  return ref;
}

std::vector<size_t> subsample_indices(size_t total, size_t count, std::mt19937_64& rng) {
  if (count > total) {
    throw std::invalid_argument("subsample_indices: count exceeds population");
  }
  std::vector<size_t> all(total);
  std::iota(all.begin(), all.end(), size_t{0});
  std::vector<size_t> picked;
  picked.reserve(count);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);
  return picked;
}

sinkhorn::DiscreteDistribution pool_pixels(const std::vector<Image>& images, size_t count,
                                           std::mt19937_64& rng) {
  size_t total = 0;
  for (const auto& img : images) {
    if (img.channels != 3) throw std::invalid_argument("pool_pixels: need 3-channel images");
    total += static_cast<size_t>(img.width) * img.height;
  }
  const auto idx = subsample_indices(total, count, rng);
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(count);
  for (size_t flat : idx) {
    size_t k = flat;
    for (const auto& img : images) {
      const size_t n = static_cast<size_t>(img.width) * img.height;
      if (k < n) {
        pts.emplace_back(img.data[k * 3], img.data[k * 3 + 1], img.data[k * 3 + 2]);
        break;
      }
      k -= n;
    }
  }
  return sinkhorn::DiscreteDistribution::uniform(std::move(pts));
}

void CorrectionProblem::validate() const {
  if (colors.size() != ranges.size()) {
    throw std::invalid_argument("CorrectionProblem: colors/ranges size mismatch");
  }
  if (colors.size() < 64) {
    throw std::invalid_argument("CorrectionProblem: subsample must hold at least 64 pixels");
  }
  reference.validate();
  sinkhorn.validate();
  for (double r : ranges) {
    if (!std::isfinite(r) || r < 0) {
      throw std::invalid_argument("CorrectionProblem: ranges must be finite and >= 0");
    }
  }
}

sinkhorn::DiscreteDistribution corrected_distribution(
    const imgform::WaterParams& params, const std::vector<Eigen::Vector3d>& colors,
    const std::vector<double>& ranges) {
  if (colors.size() != ranges.size()) {
    throw std::invalid_argument("corrected_distribution: colors/ranges size mismatch");
  }
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(colors.size());
  for (size_t i = 0; i < colors.size(); ++i) {
    pts.push_back(imgform::restore(colors[i], params, ranges[i]));
  }
  return sinkhorn::DiscreteDistribution::uniform(std::move(pts));
}

imgform::WaterParams initial_guess(const std::vector<Eigen::Vector3d>& colors,
                                   const std::vector<double>& ranges, double beta_max) {
  const size_t n = colors.size();
  if (n == 0 || n != ranges.size()) {
    throw std::invalid_argument("initial_guess: empty or mismatched inputs");
  }
  imgform::WaterParams guess;

  // Veiling: mean color of the darkest quartile (by min channel).
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return colors[a].minCoeff() < colors[b].minCoeff();
  });
  const size_t quart = std::max<size_t>(1, n / 4);
  Eigen::Vector3d dark = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < quart; ++i) dark += colors[order[i]];
  guess.veiling = (dark / static_cast<double>(quart)).cwiseMax(0.0).cwiseMin(1.0);

  // Beta: least-squares slope of log channel mean against mean range over
  // range quartiles.
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return ranges[a] < ranges[b]; });
  const int groups = 4;
  std::vector<double> gr(groups, 0.0);
  std::vector<Eigen::Vector3d> gc(groups, Eigen::Vector3d::Zero());
  std::vector<int> gn(groups, 0);
  for (size_t i = 0; i < n; ++i) {
    const int g = std::min<int>(groups - 1, static_cast<int>(i * groups / n));
    gr[g] += ranges[order[i]];
    gc[g] += colors[order[i]];
    ++gn[g];
  }
  for (int c = 0; c < 3; ++c) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int g = 0; g < groups; ++g) {
      if (gn[g] == 0) continue;
      const double x = gr[g] / gn[g];
      const double y = std::log(std::max(gc[g][c] / gn[g], 1e-6));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++m;
    }
    const double denom = m * sxx - sx * sx;
    const double slope = std::abs(denom) > 1e-12 ? (m * sxy - sx * sy) / denom : 0.0;
    guess.beta[c] = std::clamp(-slope, 0.0, beta_max);
  }
  return guess;
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const NelderMeadOptions& options) {
  const int n = static_cast<int>(x0.size());
  if (steps.size() != n || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("nelder_mead: dimension mismatch");
  }
  const auto project = [&](Eigen::VectorXd v) {
    for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
    return v;
  };

  NelderMeadResult result;
  result.x = project(x0);
  result.value = std::numeric_limits<double>::infinity();

  const auto eval = [&](const Eigen::VectorXd& v) {
    const double f = fn(v);
    ++result.evaluations;
    if (f < result.value) {
      result.value = f;
      result.x = v;
    }
    result.trace.push_back(result.value);
    return f;
  };

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> fs;
  xs.push_back(project(x0));
  fs.push_back(eval(xs[0]));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = xs[0];
    v[i] += steps[i];
    v = project(v);
    if ((v - xs[0]).norm() < 1e-15) {
      v = xs[0];
      v[i] -= steps[i];
      v = project(v);
    }
    xs.push_back(v);
    fs.push_back(eval(v));
  }

  const double rho = 1.0, chi = 2.0, gamma = 0.5, sigma = 0.5;
  std::vector<int> order(xs.size());
  while (result.evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });
    {
      std::vector<Eigen::VectorXd> xs2;
      std::vector<double> fs2;
      for (int i : order) {
        xs2.push_back(xs[i]);
        fs2.push_back(fs[i]);
      }
      xs = std::move(xs2);
      fs = std::move(fs2);
    }
    double xspread = 0;
    for (size_t i = 1; i < xs.size(); ++i) {
      xspread = std::max(xspread, (xs[i] - xs[0]).lpNorm<Eigen::Infinity>());
    }
    if (fs.back() - fs.front() < options.ftol && xspread < options.xtol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[i];
    centroid /= n;

    const Eigen::VectorXd xr = project(centroid + rho * (centroid - xs.back()));
    const double fr = eval(xr);
    if (fr < fs.front()) {
      const Eigen::VectorXd xe = project(centroid + chi * (xr - centroid));
      const double fe = eval(xe);
      if (fe < fr) {
        xs.back() = xe;
        fs.back() = fe;
      } else {
        xs.back() = xr;
        fs.back() = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs.back() = xr;
      fs.back() = fr;
    } else {
      const bool outside = fr < fs.back();
      const Eigen::VectorXd xc = outside ? project(centroid + gamma * (xr - centroid))
                                         : project(centroid - gamma * (centroid - xs.back()));
      const double fc = eval(xc);
      if (fc < std::min(fr, fs.back())) {
        xs.back() = xc;
        fs.back() = fc;
      } else {
        for (size_t i = 1; i < xs.size(); ++i) {
          xs[i] = project(xs[0] + sigma * (xs[i] - xs[0]));
          fs[i] = eval(xs[i]);
          if (result.evaluations >= options.max_evaluations) break;
        }
      }
    }
  }
  return result;
}

namespace {

EstimateResult fd_descent(const std::function<double(const Eigen::VectorXd&)>& fn,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, int max_evaluations) {
  const int n = static_cast<int>(x0.size());
  const auto project = [&](Eigen::VectorXd v) {
    for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
    return v;
  };
  EstimateResult result;
  int evals = 0;
  std::vector<double> trace;
  Eigen::VectorXd x = project(x0);
  const auto eval = [&](const Eigen::VectorXd& v) {
    const double f = fn(v);
    ++evals;
    trace.push_back(trace.empty() ? f : std::min(trace.back(), f));
    return f;
  };
  double fx = eval(x);
  const double h = 1e-4;
  while (evals + 2 * n < max_evaluations) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd hi = x, lo = x;
      hi[i] = std::min(hi[i] + h, upper[i]);
      lo[i] = std::max(lo[i] - h, lower[i]);
      const double span = hi[i] - lo[i];
      g[i] = span > 0 ? (eval(hi) - eval(lo)) / span : 0.0;
    }
    double step = 0.1;
    bool accepted = false;
    for (int k = 0; k < 12 && evals < max_evaluations; ++k, step *= 0.5) {
      const Eigen::VectorXd cand = project(x - step * g);
      const double fc = eval(cand);
      if (fc < fx - 1e-12) {
        x = cand;
        fx = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  result.params.beta = x.head<3>();
  result.params.veiling = x.tail<3>();
  result.loss = fx;
  result.trace = std::move(trace);
  result.evaluations = evals;
  return result;
}

}  // namespace

EstimateResult estimate_params(const CorrectionProblem& problem) {
  problem.validate();
  const auto objective = [&](const Eigen::VectorXd& x) {
    imgform::WaterParams p;
    p.beta = x.head<3>();
    p.veiling = x.tail<3>();
    return sinkhorn::loss(corrected_distribution(p, problem.colors, problem.ranges),
                          problem.reference, problem.sinkhorn);
  };

  const imgform::WaterParams start =
      initial_guess(problem.colors, problem.ranges, problem.optimizer.beta_max);
  Eigen::VectorXd x0(6), lower(6), upper(6), steps(6);
  x0 << start.beta, start.veiling;
  lower.setZero();
  upper << Eigen::Vector3d::Constant(problem.optimizer.beta_max), Eigen::Vector3d::Ones();
  steps << 0.25, 0.25, 0.25, 0.1, 0.1, 0.1;

  EstimateResult result;
  if (problem.optimizer.method == OptimizerConfig::kFdDescent) {
    result = fd_descent(objective, x0, lower, upper, problem.optimizer.max_evaluations);
  } else {
    NelderMeadOptions opts;
    opts.max_evaluations = problem.optimizer.max_evaluations;
    opts.ftol = problem.optimizer.ftol;
    opts.xtol = problem.optimizer.xtol;
    const NelderMeadResult nm = nelder_mead(objective, x0, steps, lower, upper, opts);
    result.params.beta = nm.x.head<3>();
    result.params.veiling = nm.x.tail<3>();
    result.loss = nm.value;
    result.trace = nm.trace;
    result.evaluations = nm.evaluations;
  }
  result.initial_loss = result.trace.empty() ? result.loss : result.trace.front();
  result.improved = result.loss < result.initial_loss - 1e-12;
  if (!result.improved) {
    result.params = start;
    result.loss = result.initial_loss;
  }
  return result;
}

Image correct_rendered_view(const Image& rendered, const std::vector<double>& ranges,
                            const imgform::WaterParams& params, double t_floor) {
  const size_t n = static_cast<size_t>(rendered.width) * rendered.height;
  if (rendered.channels != 3 || ranges.size() != n) {
    throw std::invalid_argument("correct_rendered_view: dimension mismatch");
  }
  Image out = rendered;
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d c(rendered.data[i * 3], rendered.data[i * 3 + 1],
                            rendered.data[i * 3 + 2]);
    const Eigen::Vector3d j = imgform::restore(c, params, ranges[i], t_floor);
    out.data[i * 3] = j.x();
    out.data[i * 3 + 1] = j.y();
    out.data[i * 3 + 2] = j.z();
  }
  return out;
}

}  // namespace uwnerf::restore
