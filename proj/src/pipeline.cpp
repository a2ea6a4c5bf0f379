#include "scenecat/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "scenecat/error.hpp"

namespace scenecat {

std::map<std::string, std::vector<std::size_t>> SelectTypicalFrames(
    const FrameStream& stream, std::span<const std::size_t> segment_starts,
    std::span<const std::string> segment_labels, std::size_t per_category) {
  if (segment_starts.size() != segment_labels.size()) {
    throw InvalidArgument("segment starts and labels differ in length");
  }
  std::map<std::string, std::vector<std::size_t>> out;
  const std::size_t dim = stream.d_in();
  for (std::size_t s = 0; s < segment_starts.size(); ++s) {
    const std::size_t begin = segment_starts[s];
    const std::size_t end =
        s + 1 < segment_starts.size() ? segment_starts[s + 1] : stream.size();
    if (end <= begin || end > stream.size()) {
      throw InvalidArgument("segment " + std::to_string(s) + " is empty or out of range");
    }
    auto& frames = out[segment_labels[s]];
    if (frames.size() >= per_category) continue;

    std::vector<double> mean(dim, 0.0);
    for (std::size_t f = begin; f < end; ++f) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += stream.frame(f)[d];
    }
    for (double& m : mean) m /= static_cast<double>(end - begin);
    std::size_t best = begin;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t f = begin; f < end; ++f) {
      double dist = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double t = stream.frame(f)[d] - mean[d];
        dist += t * t;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = f;
      }
    }
    frames.push_back(best);
  }
  return out;
}

std::vector<CategoryProfile> BuildProfiles(
    std::span<const DsDescriptor> all_ds,
    const std::map<std::string, std::size_t>& typical_frame_by_category,
    double sigma) {
  std::vector<CategoryProfile> out;
  for (const auto& [category, frame] : typical_frame_by_category) {
    if (frame >= all_ds.size()) {
      throw InvalidArgument("typical frame " + std::to_string(frame) + " for '" +
                            category + "' is outside the stream of " +
                            std::to_string(all_ds.size()) + " frames");
    }
    out.push_back(BuildScp(all_ds, all_ds[frame], sigma, category));
  }
  return out;
}

StreamPredictions ClassifyAll(std::span<const DsDescriptor> query_ds,
                              std::span<const CategoryProfile> profiles) {
  StreamPredictions p;
  p.labels.reserve(query_ds.size());
  p.divergences.reserve(query_ds.size());
  for (const auto& q : query_ds) {
    auto c = Classify(q, profiles);
    p.labels.push_back(profiles[c.category_ordinal].category);
    p.divergences.push_back(std::move(c.divergences));
  }
  return p;
}

void WritePredictionsCsv(const std::string& path,
                         std::span<const CategoryProfile> profiles,
                         const StreamPredictions& predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  out << "frame,predicted";
  for (const auto& p : profiles) out << ",div_" << p.category;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < predictions.labels.size(); ++i) {
    out << i << "," << predictions.labels[i];
    for (double d : predictions.divergences[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", d);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw DataError(path, 0, "write failed");
}

}  // namespace scenecat
