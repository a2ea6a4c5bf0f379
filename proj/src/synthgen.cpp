#include "scenecat/synthgen.hpp"

#include <cmath>
#include <random>

#include "scenecat/error.hpp"

namespace scenecat {

namespace {

// AR(1) coefficient of the raw walk and the low-pass smoothing factor.
constexpr double kWalkPersistence = 0.98;
constexpr double kLowPass = 0.9;

}  // namespace

void SynthConfig::Validate() const {
  if (n_categories < 2) throw InvalidArgument("need at least 2 categories");
  if (n_segments < 2) throw InvalidArgument("need at least 2 segments");
  if (min_frames < 1 || max_frames < min_frames) {
    throw InvalidArgument("segment length range must satisfy 1 <= min <= max");
  }
  if (d_in < n_categories) {
    throw InvalidArgument("d_in must be at least the number of categories");
  }
  if (!(cluster_separation > 0.0) || !std::isfinite(cluster_separation)) {
    throw InvalidArgument("cluster separation must be positive");
  }
  if (!(drift_scale >= 0.0) || !std::isfinite(drift_scale)) {
    throw InvalidArgument("drift scale must be non-negative");
  }
  if (!category_weights.empty()) {
    if (category_weights.size() != n_categories) {
      throw InvalidArgument("need one category weight per category");
    }
    for (double w : category_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw InvalidArgument("category weights must be positive");
      }
    }
  }
}

bool SynthConfig::overlay_enabled() const {
  return overlay_events.value_or(n_categories == 3);
}

std::vector<double> SynthConfig::weights() const {
  if (!category_weights.empty()) return category_weights;
  std::vector<double> w(n_categories);
  for (std::size_t c = 0; c < n_categories; ++c) w[c] = std::ldexp(1.0, -static_cast<int>(c));
  return w;
}

std::string CategoryName(std::size_t category) { return "C" + std::to_string(category); }

std::vector<std::vector<double>> CategoryCenters(const SynthConfig& cfg) {
  cfg.Validate();
  Rng rng(cfg.center_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Orthonormal directions by Gram-Schmidt on Gaussian draws.
  std::vector<std::vector<double>> dirs;
  while (dirs.size() < cfg.n_categories) {
    std::vector<double> v(cfg.d_in);
    for (double& x : v) x = normal(rng);
    for (const auto& u : dirs) {
      double d = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) d += v[i] * u[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * u[i];
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    dirs.push_back(std::move(v));
  }

  // Scaled so that every pair of plain centers is exactly `separation` apart.
  const double s = cfg.cluster_separation;
  std::vector<std::vector<double>> centers(cfg.n_categories,
                                           std::vector<double>(cfg.d_in));
  for (std::size_t c = 0; c < cfg.n_categories; ++c) {
    for (std::size_t i = 0; i < cfg.d_in; ++i) centers[c][i] = s / std::sqrt(2.0) * dirs[c][i];
  }
  if (cfg.overlay_enabled()) {
    // Event category: category 0's scene plus an event vector of length s.
    const std::size_t ev = cfg.n_categories - 1;
    for (std::size_t i = 0; i < cfg.d_in; ++i) {
      centers[ev][i] = centers[0][i] + s * dirs[ev][i];
    }
  }
  return centers;
}

SynthStream Generate(const SynthConfig& cfg) {
  cfg.Validate();
  const auto centers = CategoryCenters(cfg);
  const auto weights = cfg.weights();
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> seg_len(cfg.min_frames, cfg.max_frames);

  SynthStream out;
  std::vector<std::size_t> categories;
  for (std::size_t s = 0; s < cfg.n_segments; ++s) {
    std::vector<double> w = weights;
    if (!categories.empty()) w[categories.back()] = 0.0;
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    categories.push_back(pick(rng));
  }

  // Noise and drift are scaled per dimension so their RMS norms are 1 and
  // drift_scale * separation respectively, independent of d_in.
  const double per_dim = 1.0 / std::sqrt(static_cast<double>(cfg.d_in));
  const double amp = cfg.drift_scale * cfg.cluster_separation * per_dim;
  const double innov = std::sqrt(1.0 - kWalkPersistence * kWalkPersistence);
  std::vector<double> walk(cfg.d_in, 0.0);
  std::vector<double> drift(cfg.d_in, 0.0);
  for (double& x : walk) x = normal(rng);
  drift = walk;

  std::vector<std::vector<double>> frames;
  std::vector<std::string> frame_labels;
  for (std::size_t s = 0; s < cfg.n_segments; ++s) {
    const std::size_t len = seg_len(rng);
    const std::size_t c = categories[s];
    out.anchor_indices.push_back(frames.size());
    out.segment_labels.push_back(CategoryName(c));
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<double> x(cfg.d_in);
      for (std::size_t i = 0; i < cfg.d_in; ++i) {
        walk[i] = kWalkPersistence * walk[i] + innov * normal(rng);
        drift[i] = kLowPass * drift[i] + (1.0 - kLowPass) * walk[i];
        x[i] = centers[c][i] + amp * drift[i] + per_dim * normal(rng);
      }
      frames.push_back(std::move(x));
      frame_labels.push_back(CategoryName(c));
    }
  }
  out.stream = FrameStream(cfg.d_in, std::move(frames));
  out.labels = ReferenceLabels::FromStrings(frame_labels);
  return out;
}

}  // namespace scenecat
