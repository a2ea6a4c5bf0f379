#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace scenecat {

using Rng = std::mt19937_64;

inline constexpr std::size_t kDefaultDelta = 15;

/// Sparse anchor frames marking changes of scene attribute. Each anchor k
/// owns the neighborhood window [k, k + delta]; windows never overlap and
/// always fit inside the stream.
class AnchorSet {
 public:
  /// Validates: n >= 2, strictly increasing, k_i + delta < k_{i+1},
  /// k_n + delta < stream_length. Throws InvalidArgument otherwise.
  AnchorSet(std::vector<std::size_t> indices, std::size_t delta,
            std::size_t stream_length);

  std::size_t size() const { return indices_.size(); }
  std::size_t delta() const { return delta_; }
  std::size_t stream_length() const { return stream_length_; }
  const std::vector<std::size_t>& indices() const { return indices_; }

  /// Anchor by 1-based ordinal.
  std::size_t at_ordinal(std::size_t ordinal) const;

 private:
  std::vector<std::size_t> indices_;
  std::size_t delta_;
  std::size_t stream_length_;
};

struct ContrastiveBatch {
  std::size_t query_index = 0;
  std::size_t positive_index = 0;
  std::vector<std::size_t> negative_indices;
  std::size_t anchor_ordinal = 0;  // 1-based

  friend bool operator==(const ContrastiveBatch&, const ContrastiveBatch&) = default;
};

/// Draws a query and positive from anchor `ordinal`'s window and `n_neg`
/// negatives (with replacement) from the neighbouring windows. The first and
/// last anchors only have one neighbour, which is then used alone.
ContrastiveBatch DrawBatch(const AnchorSet& anchors, std::size_t ordinal,
                           std::size_t n_neg, Rng& rng);

/// One batch per anchor per epoch, anchor order reshuffled each epoch.
std::vector<ContrastiveBatch> TrainingSchedule(const AnchorSet& anchors,
                                               std::size_t epochs,
                                               std::size_t n_neg, Rng& rng);

/// Anchor file: one non-negative integer per line, strictly increasing.
/// Blank lines are ignored. `source` names the input in diagnostics.
std::vector<std::size_t> ParseAnchorIndices(std::istream& in,
                                            const std::string& source);
std::vector<std::size_t> ReadAnchorFile(const std::string& path);
void WriteAnchorFile(const std::string& path,
                     const std::vector<std::size_t>& indices);

}  // namespace scenecat
