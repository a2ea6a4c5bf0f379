#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "scenecat/error.hpp"
#include "scenecat/sampling.hpp"
#include "scenecat/stream.hpp"

using namespace scenecat;
namespace fs = std::filesystem;

namespace {

fs::path TempPath(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "scenecat_stream_test";
  fs::create_directories(dir);
  return dir / name;
}

void WriteText(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_CASE("stream csv reloads exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1e3);
  std::vector<std::vector<double>> frames(20, std::vector<double>(7));
  for (auto& f : frames) {
    for (double& x : f) x = normal(rng);
  }
  frames[0][0] = 1e-300;
  const FrameStream s(7, frames);
  const auto p = TempPath("stream.csv");
  WriteStreamCsv(p.string(), s);
  const auto back = ReadStreamCsv(p.string());
  CHECK(back.d_in() == 7);
  CHECK(back.frames() == s.frames());
}

TEST_CASE("stream csv diagnostics name the line") {
  const auto p = TempPath("bad.csv");
  WriteText(p, "3\n1,2,3\n4,5\n");
  try {
    ReadStreamCsv(p.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.record() == 3);
  }
  WriteText(p, "3\n1,2,abc\n");
  CHECK_THROWS_AS(ReadStreamCsv(p.string()), DataError);
  WriteText(p, "x\n");
  CHECK_THROWS_AS(ReadStreamCsv(p.string()), DataError);
  CHECK_THROWS_AS(ReadStreamCsv((TempPath("missing") / "none.csv").string()), DataError);
}

TEST_CASE("frame width is enforced") {
  CHECK_THROWS_AS(FrameStream(3, {{1.0, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(FrameStream(0, {}), InvalidArgument);
}

TEST_CASE("anchor and label files round trip") {
  const auto a = TempPath("anchors.txt");
  WriteAnchorFile(a.string(), {0, 61, 130});
  CHECK(ReadAnchorFile(a.string()) == std::vector<std::size_t>{0, 61, 130});

  const auto l = TempPath("labels.txt");
  WriteLabelFile(l.string(), {"SR", "TR", "AT"});
  CHECK(ReadLabelFile(l.string()) == std::vector<std::string>{"SR", "TR", "AT"});
  WriteText(l, "SR\nT R\n");
  CHECK_THROWS_AS(ReadLabelFile(l.string()), DataError);
}
