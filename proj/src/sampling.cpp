#include "scenecat/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

#include "scenecat/error.hpp"

namespace scenecat {

namespace {

constexpr int kPositiveRetries = 8;

std::size_t UniformIn(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

AnchorSet::AnchorSet(std::vector<std::size_t> indices, std::size_t delta,
                     std::size_t stream_length)
    : indices_(std::move(indices)), delta_(delta), stream_length_(stream_length) {
  if (indices_.size() < 2) {
    throw InvalidArgument("anchor set needs at least 2 anchors, got " +
                          std::to_string(indices_.size()));
  }
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const std::size_t k = indices_[i];
    if (k + delta_ >= stream_length_) {
      throw InvalidArgument("anchor " + std::to_string(k) + " with delta " +
                            std::to_string(delta_) +
                            " runs past stream length " +
                            std::to_string(stream_length_));
    }
    if (i + 1 < indices_.size() && k + delta_ >= indices_[i + 1]) {
      throw InvalidArgument("anchor windows overlap or are unordered at " +
                            std::to_string(k) + " -> " +
                            std::to_string(indices_[i + 1]) + " (delta " +
                            std::to_string(delta_) + ")");
    }
  }
}

std::size_t AnchorSet::at_ordinal(std::size_t ordinal) const {
  if (ordinal < 1 || ordinal > indices_.size()) {
    throw InvalidArgument("anchor ordinal " + std::to_string(ordinal) +
                          " outside [1, " + std::to_string(indices_.size()) + "]");
  }
  return indices_[ordinal - 1];
}

ContrastiveBatch DrawBatch(const AnchorSet& anchors, std::size_t ordinal,
                           std::size_t n_neg, Rng& rng) {
  if (n_neg == 0) throw InvalidArgument("need at least one negative");
  const std::size_t k = anchors.at_ordinal(ordinal);
  const std::size_t delta = anchors.delta();

  ContrastiveBatch batch;
  batch.anchor_ordinal = ordinal;
  batch.query_index = UniformIn(k, k + delta, rng);
  batch.positive_index = UniformIn(k, k + delta, rng);
  for (int r = 0; r < kPositiveRetries && delta > 0 &&
                  batch.positive_index == batch.query_index;
       ++r) {
    batch.positive_index = UniformIn(k, k + delta, rng);
  }

  // Window starts of the neighbouring anchors; each window has delta+1 frames.
  std::vector<std::size_t> starts;
  if (ordinal > 1) starts.push_back(anchors.at_ordinal(ordinal - 1));
  if (ordinal < anchors.size()) starts.push_back(anchors.at_ordinal(ordinal + 1));
  const std::size_t width = delta + 1;
  const std::size_t pool = width * starts.size();

  batch.negative_indices.reserve(n_neg);
  for (std::size_t j = 0; j < n_neg; ++j) {
    const std::size_t u = UniformIn(0, pool - 1, rng);
    batch.negative_indices.push_back(starts[u / width] + u % width);
  }
  return batch;
}

std::vector<ContrastiveBatch> TrainingSchedule(const AnchorSet& anchors,
                                               std::size_t epochs,
                                               std::size_t n_neg, Rng& rng) {
  std::vector<ContrastiveBatch> out;
  out.reserve(epochs * anchors.size());
  std::vector<std::size_t> order(anchors.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i + 1;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t ordinal : order) {
      out.push_back(DrawBatch(anchors, ordinal, n_neg, rng));
    }
  }
  return out;
}

std::vector<std::size_t> ParseAnchorIndices(std::istream& in,
                                            const std::string& source) {
  std::vector<std::size_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const char* b = line.data() + first;
    const char* e = line.data() + last + 1;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(b, e, value);
    if (ec != std::errc() || ptr != e) {
      throw DataError(source, lineno,
                      "expected a non-negative integer frame index, got '" +
                          std::string(b, e) + "'");
    }
    if (!out.empty() && value <= out.back()) {
      throw DataError(source, lineno,
                      "anchor indices must be strictly increasing (" +
                          std::to_string(out.back()) + " then " +
                          std::to_string(value) + ")");
    }
    out.push_back(value);
  }
  return out;
}

std::vector<std::size_t> ReadAnchorFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path, 0, "cannot open anchor file");
  return ParseAnchorIndices(in, path);
}

void WriteAnchorFile(const std::string& path,
                     const std::vector<std::size_t>& indices) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  for (std::size_t k : indices) out << k << '\n';
  if (!out) throw DataError(path, 0, "write failed");
}

}  // namespace scenecat
