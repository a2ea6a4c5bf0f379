#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace scenecat {

/// Ordered per-frame feature vectors, all of width d_in.
class FrameStream {
 public:
  FrameStream() = default;
  FrameStream(std::size_t d_in, std::vector<std::vector<double>> frames);

  std::size_t d_in() const { return d_in_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  std::span<const double> frame(std::size_t i) const { return frames_.at(i); }
  const std::vector<std::vector<double>>& frames() const { return frames_; }

 private:
  std::size_t d_in_ = 0;
  std::vector<std::vector<double>> frames_;
};

/// Stream CSV: first line holds d_in, then one comma-separated row per frame.
/// Values are written with 17 significant digits so they reload exactly.
FrameStream ReadStreamCsv(const std::string& path);
void WriteStreamCsv(const std::string& path, const FrameStream& stream);

/// One label token per line (per-frame or per-segment label files).
std::vector<std::string> ReadLabelFile(const std::string& path);
void WriteLabelFile(const std::string& path, const std::vector<std::string>& labels);

}  // namespace scenecat
