#include "scenecat/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "scenecat/error.hpp"
#include "scenecat/parallel.hpp"

namespace scenecat {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr char kMagic[6] = {'S', 'P', 'E', 'N', 'C', '1'};

struct ForwardCache {
  std::vector<double> pre;     // hidden pre-activation
  std::vector<double> act;     // relu(pre)
  std::vector<double> out;     // final layer output before normalization
  std::vector<double> z;       // normalized output
  double norm = 0.0;
  bool degenerate = false;
};

void CheckInput(const EncoderParams& p, std::span<const double> x) {
  if (x.size() != p.d_in) {
    throw InvalidArgument("encoder input has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(p.d_in));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("encoder input is not finite");
  }
}

ForwardCache Forward(const EncoderParams& p, std::span<const double> x) {
  CheckInput(p, x);
  ForwardCache c;
  c.pre.resize(p.hidden);
  c.act.resize(p.hidden);
  for (std::size_t j = 0; j < p.hidden; ++j) {
    const double* row = &p.w1[j * p.d_in];
    double s = p.b1[j];
    for (std::size_t k = 0; k < p.d_in; ++k) s += row[k] * x[k];
    c.pre[j] = s;
    c.act[j] = s > 0.0 ? s : 0.0;
  }
  c.out.resize(p.embed);
  double sq = 0.0;
  for (std::size_t o = 0; o < p.embed; ++o) {
    const double* row = &p.w2[o * p.hidden];
    double s = p.b2[o];
    for (std::size_t j = 0; j < p.hidden; ++j) s += row[j] * c.act[j];
    c.out[o] = s;
    sq += s * s;
  }
  c.norm = std::sqrt(sq);
  c.z.assign(p.embed, 0.0);
  if (c.norm < kDegenerateNorm) {
    c.degenerate = true;
    c.z[0] = 1.0;
  } else {
    for (std::size_t o = 0; o < p.embed; ++o) c.z[o] = c.out[o] / c.norm;
  }
  return c;
}

// Accumulates d(loss)/d(params) given d(loss)/d(z) for one forward pass.
void Backward(const EncoderParams& p, std::span<const double> x,
              const ForwardCache& c, std::span<const double> dz, EncoderParams& g) {
  if (c.degenerate) return;  // the fallback output is locally constant
  double zdot = 0.0;
  for (std::size_t o = 0; o < p.embed; ++o) zdot += c.z[o] * dz[o];
  std::vector<double> dout(p.embed);
  for (std::size_t o = 0; o < p.embed; ++o) {
    dout[o] = (dz[o] - c.z[o] * zdot) / c.norm;
  }
  std::vector<double> dact(p.hidden, 0.0);
  for (std::size_t o = 0; o < p.embed; ++o) {
    const double d = dout[o];
    g.b2[o] += d;
    double* grow = &g.w2[o * p.hidden];
    const double* wrow = &p.w2[o * p.hidden];
    for (std::size_t j = 0; j < p.hidden; ++j) {
      grow[j] += d * c.act[j];
      dact[j] += wrow[j] * d;
    }
  }
  for (std::size_t j = 0; j < p.hidden; ++j) {
    if (c.pre[j] <= 0.0) continue;
    const double d = dact[j];
    g.b1[j] += d;
    double* grow = &g.w1[j * p.d_in];
    for (std::size_t k = 0; k < p.d_in; ++k) grow[k] += d * x[k];
  }
}

Embedding AsEmbedding(const ForwardCache& c) { return Embedding::FromUnit(c.z); }

void CheckLossArgs(const Embedding& q, const Embedding& pos,
                   std::span<const Embedding> negs, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be positive");
  }
  if (negs.empty()) throw InvalidArgument("InfoNCE needs at least one negative");
  if (pos.dim() != q.dim()) throw InvalidArgument("embedding dimension mismatch");
  for (const auto& n : negs) {
    if (n.dim() != q.dim()) throw InvalidArgument("embedding dimension mismatch");
  }
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Logits s/tau for the positive (index 0) then each negative, and the
// softmax over them. Returns the loss.
double SoftmaxLoss(const Embedding& q, const Embedding& pos,
                   std::span<const Embedding> negs, double temperature,
                   std::vector<double>* probs) {
  std::vector<double> logits;
  logits.reserve(negs.size() + 1);
  logits.push_back(Dot(q.values(), pos.values()) / temperature);
  for (const auto& n : negs) logits.push_back(Dot(q.values(), n.values()) / temperature);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double l : logits) denom += std::exp(l - mx);
  const double loss = mx + std::log(denom) - logits[0];
  if (probs) {
    probs->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      (*probs)[i] = std::exp(logits[i] - mx) / denom;
    }
  }
  return std::max(loss, 0.0);
}

void PutU32(std::ofstream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void PutF64(std::ofstream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t GetU32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError(path, 0, "truncated model header");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double GetF64(std::ifstream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw DataError(path, 0, "truncated model parameters");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

EncoderParams EncoderParams::Zeros(std::size_t d_in, std::size_t hidden,
                                   std::size_t embed) {
  if (d_in == 0 || hidden == 0 || embed == 0) {
    throw InvalidArgument("encoder dimensions must be positive");
  }
  EncoderParams p;
  p.d_in = d_in;
  p.hidden = hidden;
  p.embed = embed;
  p.w1.assign(hidden * d_in, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(embed * hidden, 0.0);
  p.b2.assign(embed, 0.0);
  return p;
}

double& EncoderParams::at(std::size_t i) {
  if (i < w1.size()) return w1[i];
  i -= w1.size();
  if (i < b1.size()) return b1[i];
  i -= b1.size();
  if (i < w2.size()) return w2[i];
  i -= w2.size();
  return b2.at(i);
}

double EncoderParams::at(std::size_t i) const {
  return const_cast<EncoderParams*>(this)->at(i);
}

void TrainConfig::Validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be positive");
  }
  if (n_neg < 1) throw InvalidArgument("n_neg must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw InvalidArgument("momentum must be in [0, 1)");
  }
  if (embed_dim == 0 || hidden == 0) {
    throw InvalidArgument("encoder dimensions must be positive");
  }
}

EncoderParams InitParams(std::size_t d_in, std::size_t hidden, std::size_t embed,
                         std::uint64_t seed) {
  EncoderParams p = EncoderParams::Zeros(d_in, hidden, embed);
  Rng rng(seed);
  std::normal_distribution<double> n1(0.0, 1.0 / std::sqrt(static_cast<double>(d_in)));
  for (double& w : p.w1) w = n1(rng);
  std::normal_distribution<double> n2(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
  for (double& w : p.w2) w = n2(rng);
  return p;
}

Embedding Encode(const EncoderParams& params, std::span<const double> x) {
  return AsEmbedding(Forward(params, x));
}

std::vector<Embedding> EncodeAll(const EncoderParams& params,
                                 const FrameStream& stream, std::size_t threads) {
  std::vector<Embedding> out(stream.size());
  ParallelFor(stream.size(), threads,
              [&](std::size_t i) { out[i] = Encode(params, stream.frame(i)); });
  return out;
}

double InfoNceLoss(const Embedding& query, const Embedding& positive,
                   std::span<const Embedding> negatives, double temperature) {
  CheckLossArgs(query, positive, negatives, temperature);
  return SoftmaxLoss(query, positive, negatives, temperature, nullptr);
}

InfoNceGrad InfoNceWithGrad(const Embedding& query, const Embedding& positive,
                            std::span<const Embedding> negatives, double temperature) {
  CheckLossArgs(query, positive, negatives, temperature);
  std::vector<double> probs;
  InfoNceGrad g;
  g.loss = SoftmaxLoss(query, positive, negatives, temperature, &probs);

  // dL/dlogit_0 = p_0 - 1, dL/dlogit_j = p_j; logit = (z_q . z_x) / tau.
  const std::size_t dim = query.dim();
  const double c0 = (probs[0] - 1.0) / temperature;
  g.d_query.assign(dim, 0.0);
  g.d_positive.assign(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    g.d_query[i] = c0 * positive[i];
    g.d_positive[i] = c0 * query[i];
  }
  g.d_negatives.resize(negatives.size());
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    const double cj = probs[j + 1] / temperature;
    auto& dn = g.d_negatives[j];
    dn.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      dn[i] = cj * query[i];
      g.d_query[i] += cj * negatives[j][i];
    }
  }
  return g;
}

LossAndGrad LossGradient(const EncoderParams& params, std::span<const double> query,
                         std::span<const double> positive,
                         std::span<const std::span<const double>> negatives,
                         double temperature) {
  const ForwardCache cq = Forward(params, query);
  const ForwardCache cp = Forward(params, positive);
  std::vector<ForwardCache> cn;
  cn.reserve(negatives.size());
  std::vector<Embedding> zn;
  zn.reserve(negatives.size());
  for (auto x : negatives) {
    cn.push_back(Forward(params, x));
    zn.push_back(AsEmbedding(cn.back()));
  }
  const InfoNceGrad eg =
      InfoNceWithGrad(AsEmbedding(cq), AsEmbedding(cp), zn, temperature);

  LossAndGrad out;
  out.loss = eg.loss;
  out.grad = EncoderParams::Zeros(params.d_in, params.hidden, params.embed);
  Backward(params, query, cq, eg.d_query, out.grad);
  Backward(params, positive, cp, eg.d_positive, out.grad);
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    Backward(params, negatives[j], cn[j], eg.d_negatives[j], out.grad);
  }
  return out;
}

TrainResult Train(const FrameStream& stream, const AnchorSet& anchors,
                  const TrainConfig& cfg) {
  cfg.Validate();
  if (stream.size() != anchors.stream_length()) {
    throw InvalidArgument("stream has " + std::to_string(stream.size()) +
                          " frames but anchors were validated against " +
                          std::to_string(anchors.stream_length()));
  }
  TrainResult result;
  result.params = InitParams(stream.d_in(), cfg.hidden, cfg.embed_dim,
                             cfg.seed + kInitSeedOffset);
  Rng rng(cfg.seed + kScheduleSeedOffset);
  const auto schedule = TrainingSchedule(anchors, cfg.epochs, cfg.n_neg, rng);

  EncoderParams velocity =
      EncoderParams::Zeros(stream.d_in(), cfg.hidden, cfg.embed_dim);
  EncoderParams& theta = result.params;
  const std::size_t n_params = theta.size();
  result.trace.reserve(schedule.size());

  std::vector<std::span<const double>> negs;
  for (std::size_t step = 0; step < schedule.size(); ++step) {
    const auto& b = schedule[step];
    negs.clear();
    for (std::size_t idx : b.negative_indices) negs.push_back(stream.frame(idx));
    const LossAndGrad lg = LossGradient(theta, stream.frame(b.query_index),
                                        stream.frame(b.positive_index), negs,
                                        cfg.temperature);
    for (std::size_t i = 0; i < n_params; ++i) {
      double& v = velocity.at(i);
      v = cfg.momentum * v + lg.grad.at(i);
      theta.at(i) -= cfg.learning_rate * v;
    }
    result.trace.push_back(
        {step, step / anchors.size() + 1, b.anchor_ordinal, lg.loss});
  }
  return result;
}

std::vector<double> EpochMeanLoss(const std::vector<LossRecord>& trace) {
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (const auto& r : trace) {
    if (r.epoch > sums.size()) {
      sums.resize(r.epoch, 0.0);
      counts.resize(r.epoch, 0);
    }
    sums[r.epoch - 1] += r.loss;
    ++counts[r.epoch - 1];
  }
  for (std::size_t e = 0; e < sums.size(); ++e) {
    if (counts[e]) sums[e] /= static_cast<double>(counts[e]);
  }
  return sums;
}

void SaveParams(const std::string& path, const EncoderParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  out.write(kMagic, sizeof kMagic);
  PutU32(out, static_cast<std::uint32_t>(params.d_in));
  PutU32(out, static_cast<std::uint32_t>(params.hidden));
  PutU32(out, static_cast<std::uint32_t>(params.embed));
  for (std::size_t i = 0; i < params.size(); ++i) PutF64(out, params.at(i));
  if (!out) throw DataError(path, 0, "write failed");
}

EncoderParams LoadParams(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open model file");
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError(path, 0, "not a model file (bad magic)");
  }
  const std::uint32_t d_in = GetU32(in, path);
  const std::uint32_t hidden = GetU32(in, path);
  const std::uint32_t embed = GetU32(in, path);
  if (d_in == 0 || hidden == 0 || embed == 0) {
    throw DataError(path, 0, "model header has a zero dimension");
  }
  EncoderParams p = EncoderParams::Zeros(d_in, hidden, embed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = GetF64(in, path);
    if (!std::isfinite(v)) throw DataError(path, 0, "non-finite parameter");
    p.at(i) = v;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(path, 0, "trailing bytes after parameters");
  }
  return p;
}

void WriteLossCsv(const std::string& path, const std::vector<LossRecord>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  out << "step,epoch,anchor_ordinal,loss\n";
  char buf[32];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%.17g", r.loss);
    out << r.step << ',' << r.epoch << ',' << r.anchor_ordinal << ',' << buf << '\n';
  }
  if (!out) throw DataError(path, 0, "write failed");
}

}  // namespace scenecat
