#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scenecat/core.hpp"

namespace scenecat {

/// Distribution of similarities between one frame and a reference stream.
struct DsDescriptor {
  std::size_t frame_ref = 0;
  SimilarityHistogram histogram;
};

/// Averaged descriptor of all frames gated near a typical frame.
struct CategoryProfile {
  std::string category;
  SimilarityHistogram histogram;
  double sigma = 0.0;
  std::size_t support_count = 0;
  std::size_t typical_frame = 0;
};

inline constexpr double kDefaultSigma = 0.1;

/// Histogram of cosine similarities between `query` and every reference,
/// the query itself included when it is part of the references.
DsDescriptor ComputeDs(const Embedding& query, std::span<const Embedding> references,
                       std::size_t bins, std::size_t frame_ref = 0);

/// Descriptor of every frame against the full stream; entry i is frame i.
std::vector<DsDescriptor> ComputeAllDs(std::span<const Embedding> stream,
                                       std::size_t bins, std::size_t threads = 1);

/// Descriptors of out-of-stream queries against a fixed reference stream.
std::vector<DsDescriptor> ComputeQueryDs(std::span<const Embedding> queries,
                                         std::span<const Embedding> references,
                                         std::size_t bins, std::size_t threads = 1);

/// Gathers every descriptor with JSD to `typical` strictly below sigma and
/// averages them. Throws if sigma <= 0.
CategoryProfile BuildScp(std::span<const DsDescriptor> all_ds,
                         const DsDescriptor& typical, double sigma,
                         std::string category = {});

/// Indices into all_ds that pass the gate, in order.
std::vector<std::size_t> GatedIndices(std::span<const DsDescriptor> all_ds,
                                      const DsDescriptor& typical, double sigma);

struct Classification {
  std::size_t category_ordinal = 0;  // 0-based index into the profile list
  std::vector<double> divergences;
};

/// Arg-min JSD over profiles; ties go to the lowest ordinal.
Classification Classify(const DsDescriptor& query,
                        std::span<const CategoryProfile> profiles);

/// Builds one profile per typical frame and returns the largest pairwise JSD.
double ProfileStability(std::span<const DsDescriptor> all_ds,
                        std::span<const DsDescriptor> typical_frames, double sigma);

/// support_count for each sigma in `sigmas`.
std::vector<std::size_t> SupportCurve(std::span<const DsDescriptor> all_ds,
                                      const DsDescriptor& typical,
                                      std::span<const double> sigmas);

/// JSON document: category, sigma, bin_count, probs, support_count,
/// typical_frame.
std::string ProfileToJson(const CategoryProfile& profile);
CategoryProfile ProfileFromJson(const std::string& text, const std::string& source);
void SaveProfile(const std::string& path, const CategoryProfile& profile);
CategoryProfile LoadProfile(const std::string& path);

/// One row per descriptor: frame, then B probability columns.
void WriteDsCsv(const std::string& path, std::span<const DsDescriptor> descriptors);

}  // namespace scenecat
