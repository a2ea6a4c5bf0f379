#include "scenecat/stream.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scenecat/error.hpp"

namespace scenecat {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

FrameStream::FrameStream(std::size_t d_in, std::vector<std::vector<double>> frames)
    : d_in_(d_in), frames_(std::move(frames)) {
  if (d_in_ == 0) throw InvalidArgument("frame width must be positive");
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i].size() != d_in_) {
      throw InvalidArgument("frame " + std::to_string(i) + " has width " +
                            std::to_string(frames_[i].size()) + ", expected " +
                            std::to_string(d_in_));
    }
  }
}

FrameStream ReadStreamCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path, 0, "cannot open stream file");
  std::string line;
  std::size_t lineno = 0;
  std::size_t d_in = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty()) continue;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), d_in);
    if (ec != std::errc() || ptr != t.data() + t.size() || d_in == 0) {
      throw DataError(path, lineno, "header must be the positive frame width d_in");
    }
    break;
  }
  if (d_in == 0) throw DataError(path, 0, "missing header line");

  std::vector<std::vector<double>> frames;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty()) continue;
    std::vector<double> row;
    row.reserve(d_in);
    std::size_t pos = 0;
    while (pos <= t.size()) {
      auto comma = t.find(',', pos);
      if (comma == std::string::npos) comma = t.size();
      const std::string cell = Trim(t.substr(pos, comma - pos));
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw DataError(path, lineno, "bad value '" + cell + "' in column " +
                                          std::to_string(row.size() + 1));
      }
      row.push_back(v);
      pos = comma + 1;
    }
    if (row.size() != d_in) {
      throw DataError(path, lineno, "expected " + std::to_string(d_in) +
                                        " values, got " + std::to_string(row.size()));
    }
    frames.push_back(std::move(row));
  }
  return FrameStream(d_in, std::move(frames));
}

void WriteStreamCsv(const std::string& path, const FrameStream& stream) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  out << stream.d_in() << '\n';
  char buf[32];
  for (const auto& row : stream.frames()) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError(path, 0, "write failed");
}

std::vector<std::string> ReadLabelFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path, 0, "cannot open label file");
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty()) continue;
    if (t.find_first_of(" \t,") != std::string::npos) {
      throw DataError(path, lineno, "label '" + t + "' contains a separator");
    }
    out.push_back(t);
  }
  return out;
}

void WriteLabelFile(const std::string& path, const std::vector<std::string>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path, 0, "cannot open for writing");
  for (const auto& l : labels) out << l << '\n';
  if (!out) throw DataError(path, 0, "write failed");
}

}  // namespace scenecat
