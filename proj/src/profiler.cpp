#include "scenecat/profiler.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scenecat/error.hpp"
#include "scenecat/parallel.hpp"

namespace scenecat {

namespace {

void CheckCompatible(const SimilarityHistogram& a, const SimilarityHistogram& b) {
  if (a.bin_count() != b.bin_count()) {
    throw InvalidArgument("descriptor bin counts differ (" +
                          std::to_string(a.bin_count()) + " vs " +
                          std::to_string(b.bin_count()) + ")");
  }
}

}  // namespace

DsDescriptor ComputeDs(const Embedding& query, std::span<const Embedding> references,
                       std::size_t bins, std::size_t frame_ref) {
  if (references.empty()) throw InvalidArgument("DS needs a non-empty reference set");
  std::vector<double> sims;
  sims.reserve(references.size());
  for (const auto& r : references) sims.push_back(CosineSim(query, r));
  return {frame_ref, BuildHistogram(sims, bins)};
}

std::vector<DsDescriptor> ComputeAllDs(std::span<const Embedding> stream,
                                       std::size_t bins, std::size_t threads) {
  if (stream.empty()) throw InvalidArgument("DS of an empty stream");
  return ComputeQueryDs(stream, stream, bins, threads);
}

std::vector<DsDescriptor> ComputeQueryDs(std::span<const Embedding> queries,
                                         std::span<const Embedding> references,
                                         std::size_t bins, std::size_t threads) {
  if (references.empty()) throw InvalidArgument("DS needs a non-empty reference set");
  std::vector<DsDescriptor> out(queries.size());
  ParallelFor(queries.size(), threads, [&](std::size_t i) {
    out[i] = ComputeDs(queries[i], references, bins, i);
  });
  return out;
}

std::vector<std::size_t> GatedIndices(std::span<const DsDescriptor> all_ds,
                                      const DsDescriptor& typical, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < all_ds.size(); ++i) {
    CheckCompatible(all_ds[i].histogram, typical.histogram);
    if (JsDivergence(typical.histogram, all_ds[i].histogram) < sigma) idx.push_back(i);
  }
  return idx;
}

CategoryProfile BuildScp(std::span<const DsDescriptor> all_ds,
                         const DsDescriptor& typical, double sigma,
                         std::string category) {
  if (all_ds.empty()) throw InvalidArgument("profile needs descriptors");
  const auto gathered = GatedIndices(all_ds, typical, sigma);

  const std::size_t bins = typical.histogram.bin_count();
  std::vector<double> mean(bins, 0.0);
  if (gathered.empty()) {
    // The typical frame is not in all_ds; it still passes its own gate.
    for (std::size_t b = 0; b < bins; ++b) mean[b] = typical.histogram[b];
  } else {
    for (std::size_t i : gathered) {
      for (std::size_t b = 0; b < bins; ++b) mean[b] += all_ds[i].histogram[b];
    }
  }
  double sum = 0.0;
  for (double m : mean) sum += m;
  for (double& m : mean) m /= sum;

  CategoryProfile profile;
  profile.category = std::move(category);
  profile.histogram = SimilarityHistogram::FromProbs(std::move(mean));
  profile.sigma = sigma;
  profile.support_count = std::max<std::size_t>(gathered.size(), 1);
  profile.typical_frame = typical.frame_ref;
  return profile;
}

Classification Classify(const DsDescriptor& query,
                        std::span<const CategoryProfile> profiles) {
  if (profiles.empty()) throw InvalidArgument("classify needs at least one profile");
  Classification c;
  c.divergences.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    CheckCompatible(query.histogram, profiles[i].histogram);
    const double d = JsDivergence(query.histogram, profiles[i].histogram);
    c.divergences.push_back(d);
    if (d < c.divergences[c.category_ordinal]) c.category_ordinal = i;
  }
  return c;
}

double ProfileStability(std::span<const DsDescriptor> all_ds,
                        std::span<const DsDescriptor> typical_frames, double sigma) {
  if (typical_frames.size() < 2) {
    throw InvalidArgument("profile stability needs at least 2 typical frames");
  }
  std::vector<CategoryProfile> profiles;
  for (const auto& t : typical_frames) profiles.push_back(BuildScp(all_ds, t, sigma));
  double worst = 0.0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    for (std::size_t j = i + 1; j < profiles.size(); ++j) {
      worst = std::max(worst, JsDivergence(profiles[i].histogram, profiles[j].histogram));
    }
  }
  return worst;
}

std::vector<std::size_t> SupportCurve(std::span<const DsDescriptor> all_ds,
                                      const DsDescriptor& typical,
                                      std::span<const double> sigmas) {
  std::vector<double> div(all_ds.size());
  for (std::size_t i = 0; i < all_ds.size(); ++i) {
    CheckCompatible(all_ds[i].histogram, typical.histogram);
    div[i] = JsDivergence(typical.histogram, all_ds[i].histogram);
  }
  std::vector<std::size_t> out;
  for (double s : sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("sigma must be positive");
    std::size_t n = 0;
    for (double d : div) n += d < s ? 1 : 0;
    out.push_back(std::max<std::size_t>(n, 1));
  }
  return out;
}

std::string ProfileToJson(const CategoryProfile& profile) {
  nlohmann::ordered_json j;
  j["category"] = profile.category;
  j["sigma"] = profile.sigma;
  j["bin_count"] = profile.histogram.bin_count();
  j["probs"] = std::vector<double>(profile.histogram.probs().begin(),
                                   profile.histogram.probs().end());
  j["support_count"] = profile.support_count;
  j["typical_frame"] = profile.typical_frame;
  return j.dump(2) + "\n";
}

CategoryProfile ProfileFromJson(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source, 0, std::string("invalid JSON: ") + e.what());
  }
  try {
    CategoryProfile p;
    p.category = j.at("category").get<std::string>();
    p.sigma = j.at("sigma").get<double>();
    const auto bins = j.at("bin_count").get<std::size_t>();
    auto probs = j.at("probs").get<std::vector<double>>();
    if (probs.size() != bins) {
      throw DataError(source, 0, "bin_count " + std::to_string(bins) +
                                     " does not match " + std::to_string(probs.size()) +
                                     " probs");
    }
    p.histogram = SimilarityHistogram::FromProbs(std::move(probs));
    p.support_count = j.at("support_count").get<std::size_t>();
    p.typical_frame = j.at("typical_frame").get<std::size_t>();
    if (p.support_count < 1) throw DataError(source, 0, "support_count must be >= 1");
    if (!(p.sigma > 0.0)) throw DataError(source, 0, "sigma must be positive");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source, 0, std::string("bad profile field: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(source, 0, e.what());
  }
}

void SaveProfile(const std::string& path, const CategoryProfile& profile) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  out << ProfileToJson(profile);
  if (!out) throw DataError(path, 0, "write failed");
}

CategoryProfile LoadProfile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path, 0, "cannot open profile");
  std::stringstream ss;
  ss << in.rdbuf();
  return ProfileFromJson(ss.str(), path);
}

void WriteDsCsv(const std::string& path, std::span<const DsDescriptor> descriptors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  const std::size_t bins =
      descriptors.empty() ? 0 : descriptors.front().histogram.bin_count();
  out << "frame";
  for (std::size_t b = 0; b < bins; ++b) out << ",p" << b;
  out << '\n';
  char buf[32];
  for (const auto& d : descriptors) {
    out << d.frame_ref;
    for (double p : d.histogram.probs()) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError(path, 0, "write failed");
}

}  // namespace scenecat
