#include "scenecat/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "scenecat/error.hpp"

namespace scenecat {

namespace {

constexpr double kUnitTolerance = 1e-6;
constexpr double kProbSumTolerance = 1e-9;

double Norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Embedding Embedding::Normalize(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("embedding must be non-empty");
  for (double x : values) {
    if (!std::isfinite(x)) throw InvalidArgument("embedding has non-finite entry");
  }
  const double n = Norm(values);
  if (n < 1e-300) throw InvalidArgument("cannot normalize a zero vector");
  for (double& x : values) x /= n;
  return Embedding(std::move(values));
}

Embedding Embedding::FromUnit(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("embedding must be non-empty");
  for (double x : values) {
    if (!std::isfinite(x)) throw InvalidArgument("embedding has non-finite entry");
  }
  if (std::abs(Norm(values) - 1.0) > kUnitTolerance) {
    throw InvalidArgument("embedding is not unit-norm");
  }
  return Embedding(std::move(values));
}

double CosineSim(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument("cosine similarity: dimension mismatch (" +
                          std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()) + ")");
  }
  // Pairwise products are commutative, so sim(a,b) == sim(b,a) exactly.
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return std::clamp(s, -1.0, 1.0);
}

SimilarityHistogram SimilarityHistogram::FromProbs(std::vector<double> probs) {
  if (probs.empty()) throw InvalidArgument("histogram needs at least one bin");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw InvalidArgument("histogram probabilities must be finite and >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw InvalidArgument("histogram probabilities must sum to 1");
  }
  return SimilarityHistogram(std::move(probs));
}

std::size_t SimilarityHistogram::BinOf(double value, std::size_t bins) {
  const double scaled = (value - kLo) / (kHi - kLo) * static_cast<double>(bins);
  if (scaled <= 0.0) return 0;
  const auto idx = static_cast<std::size_t>(scaled);
  return std::min(idx, bins - 1);
}

SimilarityHistogram BuildHistogram(std::span<const double> values,
                                   std::size_t bins) {
  if (bins == 0) throw InvalidArgument("bin count must be positive");
  if (values.empty()) throw InvalidArgument("histogram input is empty");
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    if (!(v >= SimilarityHistogram::kLo - SimilarityHistogram::kRangeTolerance &&
          v <= SimilarityHistogram::kHi + SimilarityHistogram::kRangeTolerance)) {
      throw InvalidArgument("histogram value " + std::to_string(v) +
                            " outside [-1, 1]");
    }
    const double c = std::clamp(v, SimilarityHistogram::kLo, SimilarityHistogram::kHi);
    ++counts[SimilarityHistogram::BinOf(c, bins)];
  }
  std::vector<double> probs(bins);
  const double total = static_cast<double>(values.size());
  for (std::size_t i = 0; i < bins; ++i) {
    probs[i] = static_cast<double>(counts[i]) / total;
  }
  return SimilarityHistogram::FromProbs(std::move(probs));
}

double JsDivergence(const SimilarityHistogram& p, const SimilarityHistogram& q) {
  if (p.bin_count() != q.bin_count()) {
    throw InvalidArgument("JS divergence: bin count mismatch (" +
                          std::to_string(p.bin_count()) + " vs " +
                          std::to_string(q.bin_count()) + ")");
  }
  // Each bin's term is written so that swapping p and q only swaps the
  // operands of commutative + and *, keeping the result bit-identical.
  double acc = 0.0;
  for (std::size_t i = 0; i < p.bin_count(); ++i) {
    const double a = p[i];
    const double b = q[i];
    const double m = 0.5 * (a + b);
    const double ta = a > 0.0 ? a * std::log2(a / m) : 0.0;
    const double tb = b > 0.0 ? b * std::log2(b / m) : 0.0;
    acc += 0.5 * (ta + tb);
  }
  return std::clamp(acc, 0.0, 1.0);
}

namespace {

constexpr double kPcaTolerance = 1e-8;
constexpr int kPcaMaxIterations = 50000;
constexpr std::uint64_t kPcaSeed = 0x5eed;

// Leading eigenpair of a symmetric PSD matrix (row-major, n x n), restricted
// to the orthogonal complement of `exclude` when it is non-empty.
std::pair<double, std::vector<double>> PowerIteration(
    const std::vector<double>& cov, std::size_t n, std::mt19937_64& rng,
    std::span<const double> exclude) {
  auto project_out = [&](std::vector<double>& v) {
    if (exclude.empty()) return;
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d += v[i] * exclude[i];
    for (std::size_t i = 0; i < n; ++i) v[i] -= d * exclude[i];
  };
  auto multiply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += cov[i * n + j] * v[j];
      out[i] = s;
    }
  };

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  project_out(v);
  const double nv = Norm(v);
  for (double& x : v) x /= nv;

  std::vector<double> w(n);
  double rayleigh = 0.0;
  for (int it = 0; it < kPcaMaxIterations; ++it) {
    multiply(v, w);
    project_out(w);
    double next_rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) next_rayleigh += v[i] * w[i];
    const double nw = Norm(w);
    if (nw < 1e-300) return {0.0, std::vector<double>(n, 0.0)};
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = w[i] / nw;
      diff = std::max(diff, std::abs(next - v[i]));
      v[i] = next;
    }
    // Near-degenerate leading pairs rotate slowly; the variance has settled
    // long before the vector does.
    const bool settled = std::abs(next_rayleigh - rayleigh) <= 1e-15 * nw;
    rayleigh = next_rayleigh;
    if (diff < kPcaTolerance || (settled && diff < 1e-5)) break;
  }
  multiply(v, w);
  double lambda = 0.0;
  for (std::size_t i = 0; i < n; ++i) lambda += v[i] * w[i];
  return {lambda, v};
}

}  // namespace

PcaResult Pca2(std::span<const std::vector<double>> rows) {
  if (rows.size() < 3) throw InvalidArgument("PCA needs at least 3 points");
  const std::size_t n = rows.front().size();
  if (n == 0) throw InvalidArgument("PCA points must be non-empty");
  for (const auto& r : rows) {
    if (r.size() != n) throw InvalidArgument("PCA points differ in dimension");
  }
  const double count = static_cast<double>(rows.size());

  std::vector<double> mean(n, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < n; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= count;

  std::vector<std::vector<double>> centered(rows.size(), std::vector<double>(n));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) centered[i][j] = rows[i][j] - mean[j];
  }

  std::vector<double> cov(n * n, 0.0);
  for (const auto& c : centered) {
    for (std::size_t a = 0; a < n; ++a) {
      if (c[a] == 0.0) continue;
      for (std::size_t b = a; b < n; ++b) cov[a * n + b] += c[a] * c[b];
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      cov[a * n + b] /= count;
      cov[b * n + a] = cov[a * n + b];
    }
  }

  // Anything below this is rounding noise relative to the total variance.
  double trace = 0.0;
  for (std::size_t a = 0; a < n; ++a) trace += cov[a * n + a];
  const double floor = std::max(trace, 1e-300) * 1e-14;

  PcaResult result;
  result.coords.assign(rows.size(), Point2{0.0, 0.0});
  std::mt19937_64 rng(kPcaSeed);
  for (std::size_t k = 0; k < 2; ++k) {
    const std::span<const double> exclude =
        k == 0 ? std::span<const double>() : std::span<const double>(result.components[0]);
    auto [lambda, v] = PowerIteration(cov, n, rng, exclude);
    if (lambda <= floor) {
      result.variances[k] = 0.0;
      result.components[k].assign(n, 0.0);
      continue;
    }
    std::size_t arg = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    }
    if (v[arg] < 0.0) {
      for (double& x : v) x = -x;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += centered[i][j] * v[j];
      result.coords[i][k] = s;
    }
    result.variances[k] = lambda;
    result.components[k] = std::move(v);
  }
  return result;
}

PcaResult Pca2(std::span<const Embedding> embeddings) {
  std::vector<std::vector<double>> rows;
  rows.reserve(embeddings.size());
  for (const auto& e : embeddings) {
    rows.emplace_back(e.values().begin(), e.values().end());
  }
  return Pca2(std::span<const std::vector<double>>(rows));
}

}  // namespace scenecat
