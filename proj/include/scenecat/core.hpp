#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace scenecat {

/// Unit-norm embedding vector. Construction always normalizes or validates,
/// so every live Embedding satisfies |z| = 1 within 1e-6 with finite entries.
class Embedding {
 public:
  Embedding() = default;

  /// Scales `values` to unit length. Throws on non-finite entries or a
  /// (near) zero vector.
  static Embedding Normalize(std::vector<double> values);

  /// Wraps values that are already unit-norm; throws if they are not.
  static Embedding FromUnit(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  explicit Embedding(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

double CosineSim(const Embedding& a, const Embedding& b);

/// Probability histogram over [-1, 1] with uniform bins. The last bin is
/// closed on the right so a value of exactly 1.0 lands in bin B-1.
class SimilarityHistogram {
 public:
  static constexpr double kLo = -1.0;
  static constexpr double kHi = 1.0;
  static constexpr double kRangeTolerance = 1e-9;

  SimilarityHistogram() = default;

  /// Takes ownership of an already-normalized probability vector.
  /// Throws if any entry is negative/non-finite or the sum is off by > 1e-9.
  static SimilarityHistogram FromProbs(std::vector<double> probs);

  std::size_t bin_count() const { return probs_.size(); }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  /// Bin index for a value already known to lie in [-1, 1].
  static std::size_t BinOf(double value, std::size_t bins);

  friend bool operator==(const SimilarityHistogram&,
                         const SimilarityHistogram&) = default;

 private:
  explicit SimilarityHistogram(std::vector<double> p) : probs_(std::move(p)) {}
  std::vector<double> probs_;
};

inline constexpr std::size_t kDefaultBins = 64;

SimilarityHistogram BuildHistogram(std::span<const double> values,
                                   std::size_t bins);

/// Base-2 Jensen-Shannon divergence, in [0, 1]. Symmetric bit-for-bit.
double JsDivergence(const SimilarityHistogram& p, const SimilarityHistogram& q);

using Point2 = std::array<double, 2>;

struct PcaResult {
  std::vector<Point2> coords;
  /// Eigenvalues (variance along each component, population normalization).
  std::array<double, 2> variances{};
  /// Unit principal directions; zero vectors when the variance vanishes.
  std::array<std::vector<double>, 2> components;
};

/// Projects mean-centered rows onto their two leading principal components
/// using power iteration with deflation. Rows must share a dimension.
PcaResult Pca2(std::span<const std::vector<double>> rows);
PcaResult Pca2(std::span<const Embedding> embeddings);

}  // namespace scenecat
