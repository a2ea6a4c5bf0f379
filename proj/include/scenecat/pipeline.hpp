#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scenecat/core.hpp"
#include "scenecat/profiler.hpp"
#include "scenecat/stream.hpp"

namespace scenecat {

/// Picks up to `per_category` typical frames for every label, one from each
/// of the first segments carrying it: the frame closest (Euclidean, raw
/// features) to that segment's mean frame.
std::map<std::string, std::vector<std::size_t>> SelectTypicalFrames(
    const FrameStream& stream, std::span<const std::size_t> segment_starts,
    std::span<const std::string> segment_labels, std::size_t per_category);

/// One profile per (category, typical frame) entry, ordered by category name.
std::vector<CategoryProfile> BuildProfiles(
    std::span<const DsDescriptor> all_ds,
    const std::map<std::string, std::size_t>& typical_frame_by_category,
    double sigma);

struct StreamPredictions {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> divergences;  // per frame, per profile
};

StreamPredictions ClassifyAll(std::span<const DsDescriptor> query_ds,
                              std::span<const CategoryProfile> profiles);

/// frame,predicted,div_<category>... with one row per frame.
void WritePredictionsCsv(const std::string& path,
                         std::span<const CategoryProfile> profiles,
                         const StreamPredictions& predictions);

}  // namespace scenecat
