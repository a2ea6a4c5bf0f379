#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scenecat/evaluation.hpp"
#include "scenecat/sampling.hpp"
#include "scenecat/stream.hpp"

namespace scenecat {

/// Seeded stand-in for a labelled driving video. Frames are
///   category center + smooth drift + isotropic Gaussian noise,
/// organised in segments whose category differs from the previous one.
struct SynthConfig {
  std::size_t n_categories = 3;
  std::size_t min_frames = 60;   // per segment, inclusive
  std::size_t max_frames = 240;  // per segment, inclusive
  std::size_t n_segments = 40;
  std::size_t d_in = 32;
  /// Distance between category centers in units of the RMS noise radius
  /// (the noise vector has expected squared norm 1).
  double cluster_separation = 4.0;
  /// RMS norm of the drift, relative to the separation.
  double drift_scale = 0.1;
  /// Relative frequency of each category when choosing the next segment
  /// (restricted to categories different from the previous one). Empty means
  /// the default geometric weights 1, 1/2, 1/4, ...
  std::vector<double> category_weights;
  /// Last category is generated as an additive event on category 0's center.
  /// Unset means: on for exactly 3 categories.
  std::optional<bool> overlay_events;
  std::uint64_t seed = 42;
  /// Seeds the category centers alone, so streams with different `seed` can
  /// share the same scene geometry.
  std::uint64_t center_seed = 7;

  void Validate() const;
  bool overlay_enabled() const;
  std::vector<double> weights() const;
};

struct SynthStream {
  FrameStream stream;
  std::vector<std::size_t> anchor_indices;  // segment starts, first is 0
  std::vector<std::string> segment_labels;
  ReferenceLabels labels;

  /// Anchors with window delta; valid for delta < shortest segment.
  AnchorSet Anchors(std::size_t delta) const {
    return AnchorSet(anchor_indices, delta, stream.size());
  }
};

std::string CategoryName(std::size_t category);

/// Category centers for the config (depends on center_seed only).
std::vector<std::vector<double>> CategoryCenters(const SynthConfig& cfg);

SynthStream Generate(const SynthConfig& cfg);

}  // namespace scenecat
