#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scenecat/core.hpp"
#include "scenecat/sampling.hpp"
#include "scenecat/stream.hpp"

namespace scenecat {

/// Two-layer perceptron d_in -> hidden -> embed with a ReLU between the
/// layers and L2 normalization at the output. Weights are row-major
/// (out x in). The same layout doubles as the gradient container.
struct EncoderParams {
  std::size_t d_in = 0;
  std::size_t hidden = 0;
  std::size_t embed = 0;
  std::vector<double> w1;  // hidden x d_in
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // embed x hidden
  std::vector<double> b2;  // embed

  /// Zero-filled parameters of the given shape.
  static EncoderParams Zeros(std::size_t d_in, std::size_t hidden, std::size_t embed);

  std::size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
  /// Flat view in layer order w1, b1, w2, b2.
  double& at(std::size_t i);
  double at(std::size_t i) const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

struct TrainConfig {
  double temperature = 0.07;
  std::size_t n_neg = 16;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::size_t epochs = 30;
  std::uint64_t seed = 42;
  std::size_t delta = kDefaultDelta;
  std::size_t embed_dim = 128;
  std::size_t hidden = 256;

  /// Throws InvalidArgument on a violated invariant.
  void Validate() const;
};

/// Sub-seed offsets applied to TrainConfig::seed.
inline constexpr std::uint64_t kInitSeedOffset = 101;
inline constexpr std::uint64_t kScheduleSeedOffset = 202;

EncoderParams InitParams(std::size_t d_in, std::size_t hidden, std::size_t embed,
                         std::uint64_t seed);

/// Forward pass. A pre-normalization output with norm below 1e-12 maps to
/// the first basis vector.
Embedding Encode(const EncoderParams& params, std::span<const double> x);

/// Embeds every frame; output order matches the stream regardless of threads.
std::vector<Embedding> EncodeAll(const EncoderParams& params,
                                 const FrameStream& stream, std::size_t threads = 1);

double InfoNceLoss(const Embedding& query, const Embedding& positive,
                   std::span<const Embedding> negatives, double temperature);

/// Loss together with its gradient w.r.t. each (unit) embedding argument.
struct InfoNceGrad {
  double loss = 0.0;
  std::vector<double> d_query;
  std::vector<double> d_positive;
  std::vector<std::vector<double>> d_negatives;
};

InfoNceGrad InfoNceWithGrad(const Embedding& query, const Embedding& positive,
                            std::span<const Embedding> negatives, double temperature);

struct LossAndGrad {
  double loss = 0.0;
  EncoderParams grad;
};

/// Exact gradient of InfoNCE(encode(query), encode(positive), encode(negs))
/// w.r.t. all parameters. Gradient flows through every batch member.
LossAndGrad LossGradient(const EncoderParams& params, std::span<const double> query,
                         std::span<const double> positive,
                         std::span<const std::span<const double>> negatives,
                         double temperature);

struct LossRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;  // 1-based
  std::size_t anchor_ordinal = 0;
  double loss = 0.0;
};

struct TrainResult {
  EncoderParams params;
  std::vector<LossRecord> trace;
};

/// SGD with momentum over TrainingSchedule. Deterministic given cfg.seed.
TrainResult Train(const FrameStream& stream, const AnchorSet& anchors,
                  const TrainConfig& cfg);

/// Mean loss per epoch, in epoch order.
std::vector<double> EpochMeanLoss(const std::vector<LossRecord>& trace);

/// Binary model file: "SPENC1", u32 LE d_in/hidden/embed, then f64 LE arrays
/// w1, b1, w2, b2.
void SaveParams(const std::string& path, const EncoderParams& params);
EncoderParams LoadParams(const std::string& path);

void WriteLossCsv(const std::string& path, const std::vector<LossRecord>& trace);

}  // namespace scenecat
