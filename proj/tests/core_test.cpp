#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "scenecat/core.hpp"
#include "scenecat/error.hpp"

using namespace scenecat;

namespace {

Embedding Unit(std::vector<double> v) { return Embedding::Normalize(std::move(v)); }

Embedding RandomEmbedding(std::size_t dim, std::mt19937_64& rng) {
  return Embedding::FromUnit(oracle::RandomUnit(dim, rng));
}

}  // namespace

TEST_CASE("embedding construction") {
  const auto e = Unit({3.0, 4.0});
  CHECK(e[0] == doctest::Approx(0.6));
  CHECK(e[1] == doctest::Approx(0.8));
  CHECK_THROWS_AS(Embedding::Normalize({0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(Embedding::Normalize({1.0, NAN}), InvalidArgument);
  CHECK_THROWS_AS(Embedding::FromUnit({1.0, 1.0}), InvalidArgument);
}

TEST_CASE("cosine similarity") {
  std::mt19937_64 rng(1);
  const auto z = RandomEmbedding(128, rng);
  std::vector<double> neg(z.values().begin(), z.values().end());
  for (double& x : neg) x = -x;

  CHECK(CosineSim(z, z) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(CosineSim(z, Embedding::FromUnit(neg)) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(CosineSim(Unit({1, 0, 0}), Unit({0, 1, 0})) == 0.0);
  CHECK_THROWS_AS(CosineSim(Unit({1, 0}), Unit({1, 0, 0})), InvalidArgument);

  for (int t = 0; t < 200; ++t) {
    const auto a = RandomEmbedding(128, rng);
    const auto b = RandomEmbedding(128, rng);
    CHECK(std::abs(CosineSim(a, b) - oracle::Dot(a.values(), b.values())) <= 1e-15);
    CHECK(CosineSim(a, b) == CosineSim(b, a));
  }
}

TEST_CASE("histogram basics") {
  const std::vector<double> ones{1.0, 1.0};
  auto h = BuildHistogram(ones, 2);
  CHECK(h[0] == 0.0);
  CHECK(h[1] == 1.0);

  const std::vector<double> ends{-1.0, 1.0};
  h = BuildHistogram(ends, 2);
  CHECK(h[0] == 0.5);
  CHECK(h[1] == 0.5);

  // Zero is the left edge of the upper half.
  const std::vector<double> zero{0.0};
  CHECK(BuildHistogram(zero, 2)[1] == 1.0);

  const std::vector<double> slightly_out{1.0 + 5e-10, -1.0 - 5e-10};
  h = BuildHistogram(slightly_out, 4);
  CHECK(h[0] == 0.5);
  CHECK(h[3] == 0.5);

  const std::vector<double> empty;
  CHECK_THROWS_AS(BuildHistogram(empty, 4), InvalidArgument);
  const std::vector<double> out{1.01};
  CHECK_THROWS_AS(BuildHistogram(out, 4), InvalidArgument);
  CHECK_THROWS_AS(BuildHistogram(ones, 0), InvalidArgument);
}

TEST_CASE("histogram matches counting oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(1000);
  for (double& v : values) v = u(rng);
  values[0] = 1.0;
  values[1] = -1.0;
  const auto h = BuildHistogram(values, 64);
  const auto expected = oracle::CountHistogram(values, 64);
  for (std::size_t b = 0; b < 64; ++b) CHECK(h[b] == expected[b]);
}

TEST_CASE("histogram properties: normalized and permutation invariant") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<std::size_t> len(1, 300);
    std::uniform_int_distribution<std::size_t> nb(1, 100);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> values(len(rng));
    for (double& v : values) v = u(rng);
    const std::size_t bins = nb(rng);
    const auto h = BuildHistogram(values, bins);
    double sum = 0.0;
    for (double p : h.probs()) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    std::shuffle(values.begin(), values.end(), rng);
    CHECK(BuildHistogram(values, bins) == h);
  }
}

TEST_CASE("js divergence") {
  const auto p = SimilarityHistogram::FromProbs({1.0, 0.0});
  const auto q = SimilarityHistogram::FromProbs({0.0, 1.0});
  CHECK(JsDivergence(p, q) == 1.0);
  CHECK(JsDivergence(p, p) == 0.0);
  CHECK_THROWS_AS(JsDivergence(p, SimilarityHistogram::FromProbs({0.5, 0.25, 0.25})),
                  InvalidArgument);

  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const auto a = oracle::RandomProbs(64, rng);
    const auto b = oracle::RandomProbs(64, rng);
    const auto ha = SimilarityHistogram::FromProbs(a);
    const auto hb = SimilarityHistogram::FromProbs(b);
    const double d = JsDivergence(ha, hb);
    CHECK(std::abs(d - oracle::JsdTwoPass(a, b)) <= 1e-12);
    CHECK(d == JsDivergence(hb, ha));
    CHECK(d > 0.0);
    CHECK(d <= 1.0);
  }
}

TEST_CASE("pca: identical points project to the origin") {
  std::vector<std::vector<double>> rows(5, std::vector<double>{0.3, -0.2, 0.9});
  const auto r = Pca2(std::span<const std::vector<double>>(rows));
  for (const auto& c : r.coords) {
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.0);
  }
}

TEST_CASE("pca: rank-2 data keeps pairwise distances") {
  std::mt19937_64 rng(5);
  const auto u = oracle::RandomUnit(128, rng);
  auto v = oracle::RandomUnit(128, rng);
  const double d = oracle::Dot(u, v);
  double n = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] -= d * u[i];
    n += v[i] * v[i];
  }
  for (double& x : v) x /= std::sqrt(n);

  // Points on the unit circle spanned by u, v, so they are valid embeddings.
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  std::vector<Embedding> pts;
  for (int i = 0; i < 40; ++i) {
    const double a = ang(rng);
    std::vector<double> p(128);
    for (std::size_t k = 0; k < 128; ++k) p[k] = std::cos(a) * u[k] + std::sin(a) * v[k];
    pts.push_back(Embedding::Normalize(p));
  }
  const auto r = Pca2(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double orig = 0.0;
      for (std::size_t k = 0; k < 128; ++k) {
        const double t = pts[i][k] - pts[j][k];
        orig += t * t;
      }
      const double dx = r.coords[i][0] - r.coords[j][0];
      const double dy = r.coords[i][1] - r.coords[j][1];
      CHECK(std::abs(std::sqrt(orig) - std::sqrt(dx * dx + dy * dy)) <= 1e-6);
    }
  }
}

TEST_CASE("pca: variances match a dense eigensolver") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Anisotropic cloud so the leading eigenvalues are well separated.
  std::vector<Embedding> pts;
  for (int i = 0; i < 400; ++i) {
    std::vector<double> p(128);
    for (std::size_t k = 0; k < 128; ++k) p[k] = normal(rng) * (1.0 + 4.0 / (1.0 + k));
    pts.push_back(Embedding::Normalize(p));
  }
  const auto r = Pca2(pts);

  Eigen::MatrixXd x(pts.size(), 128);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t k = 0; k < 128; ++k) x(i, k) = pts[i][k];
  }
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const auto& ev = es.eigenvalues();  // ascending
  const double l1 = ev(127);
  const double l2 = ev(126);

  for (int k = 0; k < 2; ++k) {
    double var = 0.0;
    for (const auto& p : r.coords) var += p[k] * p[k];
    var /= static_cast<double>(r.coords.size());
    CHECK(std::abs(var - (k == 0 ? l1 : l2)) <= 1e-6);
  }
  // Sign convention: the largest-magnitude loading is positive.
  for (int k = 0; k < 2; ++k) {
    const auto& comp = r.components[k];
    const auto it = std::max_element(comp.begin(), comp.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
    CHECK(*it > 0.0);
  }
}

TEST_CASE("pca: needs three points") {
  std::vector<std::vector<double>> rows(2, std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(Pca2(std::span<const std::vector<double>>(rows)), InvalidArgument);
}
