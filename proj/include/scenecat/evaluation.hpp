#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenecat/core.hpp"
#include "scenecat/sampling.hpp"

namespace scenecat {

/// Per-frame category labels; frame_labels index into vocabulary.
struct ReferenceLabels {
  std::vector<std::string> vocabulary;
  std::vector<std::size_t> frame_labels;

  std::size_t size() const { return frame_labels.size(); }
  const std::string& label(std::size_t frame) const {
    return vocabulary[frame_labels.at(frame)];
  }
  std::vector<std::string> AsStrings() const;

  /// Vocabulary sorted lexicographically.
  static ReferenceLabels FromStrings(std::span<const std::string> labels);
};

/// Expands one label per anchor segment [k_i, k_{i+1}) to every frame.
/// Frames before k_1 take the first label; frames from k_n on take the last.
ReferenceLabels SegmentLabels(const AnchorSet& anchors,
                              std::span<const std::string> per_segment);

using Matrix = std::vector<std::vector<double>>;

/// Mean pairwise cosine similarity between the frames of each category pair,
/// rows and columns ordered as labels.vocabulary.
Matrix CategorySimilarityMatrix(std::span<const Embedding> embeddings,
                                const ReferenceLabels& labels);

struct ConfusionReport {
  std::vector<std::string> labels;              // reference vocab, then extras
  std::vector<std::vector<std::size_t>> counts;  // [reference][predicted]
  std::vector<double> per_class_accuracy;        // recall per reference label
  std::vector<std::size_t> per_class_support;
  std::size_t total = 0;
  std::size_t matched = 0;
  double accuracy = 0.0;
};

ConfusionReport ConfusionAndAccuracy(std::span<const std::string> predicted,
                                     const ReferenceLabels& reference);

/// Metrics JSON: confusion matrix, per-class and overall accuracy, TP/FN
/// percentages, and the similarity matrix when supplied.
std::string MetricsJson(const ConfusionReport& report,
                        const std::optional<Matrix>& similarity,
                        const std::vector<std::string>& similarity_labels);

void WriteConfusionCsv(const std::string& path, const ConfusionReport& report);

/// frame,x,y,reference_label
void WritePcaCsv(const std::string& path, std::span<const Point2> coords,
                 const ReferenceLabels& labels);

}  // namespace scenecat
