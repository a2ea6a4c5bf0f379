#include "scenecat/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "scenecat/error.hpp"

namespace scenecat {

std::vector<std::string> ReferenceLabels::AsStrings() const {
  std::vector<std::string> out;
  out.reserve(frame_labels.size());
  for (std::size_t id : frame_labels) out.push_back(vocabulary.at(id));
  return out;
}

ReferenceLabels ReferenceLabels::FromStrings(std::span<const std::string> labels) {
  ReferenceLabels r;
  std::map<std::string, std::size_t> ids;
  for (const auto& l : labels) ids.emplace(l, 0);
  for (auto& [name, id] : ids) {
    id = r.vocabulary.size();
    r.vocabulary.push_back(name);
  }
  r.frame_labels.reserve(labels.size());
  for (const auto& l : labels) r.frame_labels.push_back(ids[l]);
  return r;
}

ReferenceLabels SegmentLabels(const AnchorSet& anchors,
                              std::span<const std::string> per_segment) {
  if (per_segment.size() != anchors.size()) {
    throw InvalidArgument("got " + std::to_string(per_segment.size()) +
                          " segment labels for " + std::to_string(anchors.size()) +
                          " anchors");
  }
  std::vector<std::string> frames(anchors.stream_length());
  const auto& k = anchors.indices();
  std::size_t seg = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    while (seg + 1 < k.size() && f >= k[seg + 1]) ++seg;
    frames[f] = per_segment[seg];
  }
  return ReferenceLabels::FromStrings(frames);
}

Matrix CategorySimilarityMatrix(std::span<const Embedding> embeddings,
                                const ReferenceLabels& labels) {
  if (embeddings.size() != labels.size()) {
    throw InvalidArgument("got " + std::to_string(embeddings.size()) +
                          " embeddings for " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t c = labels.vocabulary.size();
  if (embeddings.empty()) throw InvalidArgument("no embeddings");
  const std::size_t dim = embeddings.front().dim();

  // Mean pairwise dot product factorizes into the dot product of the means.
  std::vector<std::vector<double>> sums(c, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(c, 0);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto id = labels.frame_labels[i];
    if (embeddings[i].dim() != dim) throw InvalidArgument("embedding dimension mismatch");
    for (std::size_t d = 0; d < dim; ++d) sums[id][d] += embeddings[i][d];
    ++counts[id];
  }
  for (std::size_t a = 0; a < c; ++a) {
    if (counts[a] == 0) {
      throw InvalidArgument("category '" + labels.vocabulary[a] + "' has no frames");
    }
  }
  Matrix m(c, std::vector<double>(c, 0.0));
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a; b < c; ++b) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += sums[a][d] * sums[b][d];
      s /= static_cast<double>(counts[a]) * static_cast<double>(counts[b]);
      m[a][b] = m[b][a] = std::clamp(s, -1.0, 1.0);
    }
  }
  return m;
}

ConfusionReport ConfusionAndAccuracy(std::span<const std::string> predicted,
                                     const ReferenceLabels& reference) {
  if (predicted.size() != reference.size()) {
    throw InvalidArgument("got " + std::to_string(predicted.size()) +
                          " predictions for " + std::to_string(reference.size()) +
                          " reference labels");
  }
  ConfusionReport r;
  r.labels = reference.vocabulary;
  std::map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < r.labels.size(); ++i) ids[r.labels[i]] = i;
  std::vector<std::size_t> pred_ids(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    auto [it, inserted] = ids.emplace(predicted[i], r.labels.size());
    if (inserted) r.labels.push_back(predicted[i]);
    pred_ids[i] = it->second;
  }
  const std::size_t n = r.labels.size();
  r.counts.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ++r.counts[reference.frame_labels[i]][pred_ids[i]];
  }
  r.total = predicted.size();
  r.per_class_accuracy.assign(n, 0.0);
  r.per_class_support.assign(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t row = 0;
    for (std::size_t b = 0; b < n; ++b) row += r.counts[a][b];
    r.per_class_support[a] = row;
    r.matched += r.counts[a][a];
    if (row) r.per_class_accuracy[a] = static_cast<double>(r.counts[a][a]) / row;
  }
  r.accuracy = r.total ? static_cast<double>(r.matched) / r.total : 0.0;
  return r;
}

std::string MetricsJson(const ConfusionReport& report,
                        const std::optional<Matrix>& similarity,
                        const std::vector<std::string>& similarity_labels) {
  nlohmann::ordered_json j;
  j["labels"] = report.labels;
  j["confusion"] = report.counts;
  j["total_frames"] = report.total;
  j["matched_frames"] = report.matched;
  j["overall_accuracy"] = report.accuracy;
  // Same row structure as a TP / FN percentage table.
  j["tp_percent"] = 100.0 * report.accuracy;
  j["fn_percent"] = report.total ? 100.0 * (1.0 - report.accuracy) : 0.0;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    per_class[report.labels[i]] = {{"support", report.per_class_support[i]},
                                   {"accuracy", report.per_class_accuracy[i]}};
  }
  j["per_class"] = per_class;
  if (similarity) {
    j["similarity_labels"] = similarity_labels;
    j["category_similarity"] = *similarity;
  }
  return j.dump(2) + "\n";
}

void WriteConfusionCsv(const std::string& path, const ConfusionReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  out << "reference\\predicted";
  for (const auto& l : report.labels) out << ',' << l;
  out << '\n';
  for (std::size_t a = 0; a < report.labels.size(); ++a) {
    out << report.labels[a];
    for (std::size_t c : report.counts[a]) out << ',' << c;
    out << '\n';
  }
  if (!out) throw DataError(path, 0, "write failed");
}

void WritePcaCsv(const std::string& path, std::span<const Point2> coords,
                 const ReferenceLabels& labels) {
  if (coords.size() != labels.size()) {
    throw InvalidArgument("PCA coordinates and labels differ in length");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  out << "frame,x,y,reference_label\n";
  char buf[64];
  for (std::size_t i = 0; i < coords.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", coords[i][0], coords[i][1]);
    out << i << ',' << buf << ',' << labels.label(i) << '\n';
  }
  if (!out) throw DataError(path, 0, "write failed");
}

}  // namespace scenecat
