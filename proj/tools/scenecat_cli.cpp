// scenecat: generate, train, profile, classify and evaluate driving-scene
// streams from the command line.
//
// Exit codes: 0 success, 2 usage (bad flags, bad config file, invalid
// parameter values), 3 data error (malformed or inconsistent input files,
// unwritable outputs).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scenecat/core.hpp"
#include "scenecat/encoder.hpp"
#include "scenecat/error.hpp"
#include "scenecat/evaluation.hpp"
#include "scenecat/parallel.hpp"
#include "scenecat/pipeline.hpp"
#include "scenecat/profiler.hpp"
#include "scenecat/sampling.hpp"
#include "scenecat/stream.hpp"
#include "scenecat/synthgen.hpp"

namespace fs = std::filesystem;
using namespace scenecat;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Fills options that were not given on the command line from a key=value
// file. Keys are long option names without the leading dashes; repeating a
// key appends to list options.
void ApplyConfigFile(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path + ": cannot open config file");
  std::map<std::string, std::vector<std::string>> values;
  std::vector<std::string> order;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = Trim(t.substr(0, eq));
    std::string value = Trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key == "config" || !sub.get_option_no_throw("--" + key)) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key +
                       "' for '" + sub.get_name() + "'");
    }
    if (!values.count(key)) order.push_back(key);
    values[key].push_back(value);
  }
  for (const auto& key : order) {
    CLI::Option* opt = sub.get_option("--" + key);
    if (opt->count() > 0) continue;  // flag wins
    for (const auto& v : values[key]) opt->add_result(v);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path + ": key '" + key + "': " + e.what());
    }
  }
}

// Echo of the effective configuration, readable back through --config.
// Output-directory and config-path keys are left out so that runs writing to
// different directories produce identical echoes.
void WriteConfigEcho(const CLI::App& sub, const fs::path& dir) {
  std::ofstream out(dir / "config.txt", std::ios::binary);
  if (!out) throw DataError((dir / "config.txt").string(), 0, "cannot open for writing");
  out << "# scenecat " << sub.get_name() << "\n";
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config" || name == "out") continue;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) out << name << "=" << r << "\n";
    } else if (!opt->get_default_str().empty()) {
      out << name << "=" << opt->get_default_str() << "\n";
    }
  }
  if (!out) throw DataError((dir / "config.txt").string(), 0, "write failed");
}

fs::path PrepareOut(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError(dir, 0, "cannot create output directory");
  }
  return fs::path(dir);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string(), 0, "cannot open for writing");
  out << text;
  if (!out) throw DataError(path.string(), 0, "write failed");
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::size_t ParseIndex(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (text.empty() || text[0] == '-' || text[0] == '+') throw std::invalid_argument("");
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    throw UsageError(what + ": '" + text + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

void CheckStreamMatchesModel(const FrameStream& stream, const EncoderParams& params,
                             const std::string& stream_path) {
  if (stream.d_in() != params.d_in) {
    throw DataError(stream_path, 0,
                    "frame width " + std::to_string(stream.d_in()) +
                        " does not match model input width " +
                        std::to_string(params.d_in));
  }
}

// Builds the anchor set, reporting both lengths when the anchors do not fit
// the stream.
AnchorSet LoadAnchors(const std::string& path, std::size_t delta,
                      const FrameStream& stream) {
  const auto indices = ReadAnchorFile(path);
  if (!indices.empty()) {
    const std::size_t needed = indices.back() + delta + 1;
    if (needed > stream.size()) {
      throw DataError(path, indices.size(),
                      "anchors need a stream of at least " + std::to_string(needed) +
                          " frames (last anchor " + std::to_string(indices.back()) +
                          " + delta " + std::to_string(delta) +
                          ") but the stream has " + std::to_string(stream.size()) +
                          " frames; anchor file has " +
                          std::to_string(indices.size()) + " entries");
    }
  }
  try {
    return AnchorSet(indices, delta, stream.size());
  } catch (const InvalidArgument& e) {
    throw DataError(path, 0,
                    std::string(e.what()) + " (anchors: " +
                        std::to_string(indices.size()) +
                        ", stream frames: " + std::to_string(stream.size()) + ")");
  }
}

// ---------------------------------------------------------------- gen

struct GenOptions {
  SynthConfig synth;
  std::string overlay = "auto";
  std::string out;
};

void SetupGen(CLI::App& app, GenOptions& o) {
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed", o.synth.seed, "Stream seed")->capture_default_str();
  app.add_option("--center-seed", o.synth.center_seed,
                 "Seed for category centers; share it to draw new streams of the same scenes")
      ->capture_default_str();
  app.add_option("--categories", o.synth.n_categories)->capture_default_str();
  app.add_option("--segments", o.synth.n_segments)->capture_default_str();
  app.add_option("--min-frames", o.synth.min_frames, "Shortest segment")->capture_default_str();
  app.add_option("--max-frames", o.synth.max_frames, "Longest segment")->capture_default_str();
  app.add_option("--d-in", o.synth.d_in, "Frame feature width")->capture_default_str();
  app.add_option("--separation", o.synth.cluster_separation)->capture_default_str();
  app.add_option("--drift", o.synth.drift_scale)->capture_default_str();
  app.add_option("--weights", o.synth.category_weights,
                 "Category weights (default halves per category)")
      ->delimiter(',');
  app.add_option("--overlay", o.overlay, "Overlaid-event category: auto, on or off")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
}

int RunGen(const CLI::App& app, GenOptions& o) {
  if (o.overlay == "on") o.synth.overlay_events = true;
  if (o.overlay == "off") o.synth.overlay_events = false;
  try {
    o.synth.Validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = PrepareOut(o.out);
  const SynthStream s = Generate(o.synth);
  WriteStreamCsv((dir / "stream.csv").string(), s.stream);
  WriteAnchorFile((dir / "anchors.txt").string(), s.anchor_indices);
  WriteLabelFile((dir / "segment_labels.txt").string(), s.segment_labels);
  WriteLabelFile((dir / "labels.txt").string(), s.labels.AsStrings());
  WriteConfigEcho(app, dir);
  std::cout << "wrote " << s.stream.size() << " frames in " << s.anchor_indices.size()
            << " segments to " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  TrainConfig cfg;
  std::string stream, anchors, out;
};

void SetupTrain(CLI::App& app, TrainOptions& o) {
  app.add_option("--stream", o.stream, "Stream CSV")->check(CLI::ExistingFile);
  app.add_option("--anchors", o.anchors, "Anchor file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed", o.cfg.seed,
                 "Run seed; init uses seed+101, batch schedule seed+202")
      ->capture_default_str();
  app.add_option("--delta", o.cfg.delta, "Anchor window length")->capture_default_str();
  app.add_option("--tau", o.cfg.temperature, "InfoNCE temperature")->capture_default_str();
  app.add_option("--n-neg", o.cfg.n_neg, "Negatives per batch")->capture_default_str();
  app.add_option("--lr", o.cfg.learning_rate)->capture_default_str();
  app.add_option("--momentum", o.cfg.momentum)->capture_default_str();
  app.add_option("--epochs", o.cfg.epochs)->capture_default_str();
  app.add_option("--embed-dim", o.cfg.embed_dim)->capture_default_str();
  app.add_option("--hidden", o.cfg.hidden)->capture_default_str();
}

int RunTrain(const CLI::App& app, TrainOptions& o) {
  try {
    o.cfg.Validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const FrameStream stream = ReadStreamCsv(o.stream);
  const AnchorSet anchors = LoadAnchors(o.anchors, o.cfg.delta, stream);
  const fs::path dir = PrepareOut(o.out);
  const TrainResult r = Train(stream, anchors, o.cfg);
  SaveParams((dir / "model.bin").string(), r.params);
  WriteLossCsv((dir / "loss.csv").string(), r.trace);
  WriteConfigEcho(app, dir);
  const auto epoch_loss = EpochMeanLoss(r.trace);
  std::cout << "trained " << o.cfg.epochs << " epochs over " << anchors.size()
            << " anchors; mean loss first " << Num(epoch_loss.front()) << " last "
            << Num(epoch_loss.back()) << "\n";
  return 0;
}

// ---------------------------------------------------------------- profile

struct ProfileOptions {
  std::string model, stream, out;
  std::vector<std::string> typical;
  std::string anchors, segment_labels;
  std::size_t per_category = 1;
  double sigma = kDefaultSigma;
  std::size_t bins = kDefaultBins;
  std::size_t threads = 1;
  std::vector<double> curve_sigmas{0.02, 0.05, 0.1, 0.2, 0.3, 0.5};
  bool write_ds = false;
};

void SetupProfile(CLI::App& app, ProfileOptions& o) {
  app.add_option("--model", o.model, "Model file")->check(CLI::ExistingFile);
  app.add_option("--stream", o.stream, "Stream CSV")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--typical", o.typical,
                 "Typical frames as CATEGORY=f1[,f2...]; the first frame builds the profile");
  app.add_option("--anchors", o.anchors, "Anchor file for automatic typical frames")
      ->check(CLI::ExistingFile);
  app.add_option("--segment-labels", o.segment_labels,
                 "Per-segment labels for automatic typical frames")
      ->check(CLI::ExistingFile);
  app.add_option("--per-category", o.per_category,
                 "Automatic typical frames per category")
      ->capture_default_str();
  app.add_option("--sigma", o.sigma, "Gate threshold")->capture_default_str();
  app.add_option("--bins", o.bins, "Histogram bins")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads, 0 for all cores")
      ->capture_default_str();
  app.add_option("--curve-sigmas", o.curve_sigmas, "Sigma values for the support curve")
      ->delimiter(',')
      ->capture_default_str();
  app.add_flag("--write-ds", o.write_ds, "Also write every frame's DS to ds.csv");
}

std::map<std::string, std::vector<std::size_t>> ParseTypical(
    const std::vector<std::string>& args) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& arg : args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
      throw UsageError("--typical '" + arg + "' must look like CATEGORY=f1[,f2...]");
    }
    const std::string cat = Trim(arg.substr(0, eq));
    std::stringstream ss(arg.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      out[cat].push_back(ParseIndex(Trim(item), "--typical " + cat));
    }
  }
  return out;
}

void CheckCategoryName(const std::string& cat) {
  if (cat.empty() || cat.find_first_of("/\\ \t,") != std::string::npos) {
    throw UsageError("category name '" + cat + "' cannot be used in a file name");
  }
}

int RunProfile(const CLI::App& app, ProfileOptions& o) {
  if (!(o.sigma > 0.0)) throw UsageError("--sigma must be positive");
  if (o.bins < 1) throw UsageError("--bins must be at least 1");
  if (o.per_category < 1) throw UsageError("--per-category must be at least 1");
  for (double s : o.curve_sigmas) {
    if (!(s > 0.0)) throw UsageError("--curve-sigmas entries must be positive");
  }
  const bool manual = !o.typical.empty();
  const bool automatic = !o.anchors.empty() || !o.segment_labels.empty();
  if (manual == automatic) {
    throw UsageError("give either --typical or both --anchors and --segment-labels");
  }
  if (automatic && (o.anchors.empty() || o.segment_labels.empty())) {
    throw UsageError("automatic typical frames need both --anchors and --segment-labels");
  }
  std::map<std::string, std::vector<std::size_t>> typical;
  if (manual) typical = ParseTypical(o.typical);
  for (const auto& [cat, frames] : typical) CheckCategoryName(cat);

  const EncoderParams params = LoadParams(o.model);
  const FrameStream stream = ReadStreamCsv(o.stream);
  CheckStreamMatchesModel(stream, params, o.stream);
  if (automatic) {
    const auto starts = ReadAnchorFile(o.anchors);
    const auto seg_labels = ReadLabelFile(o.segment_labels);
    if (starts.size() != seg_labels.size()) {
      throw DataError(o.segment_labels, 0,
                      std::to_string(seg_labels.size()) + " labels for " +
                          std::to_string(starts.size()) + " anchors in " + o.anchors);
    }
    try {
      typical = SelectTypicalFrames(stream, starts, seg_labels, o.per_category);
    } catch (const InvalidArgument& e) {
      throw DataError(o.anchors, 0, e.what());
    }
    for (const auto& [cat, frames] : typical) CheckCategoryName(cat);
  }
  for (const auto& [cat, frames] : typical) {
    for (std::size_t f : frames) {
      if (f >= stream.size()) {
        throw DataError(o.stream, 0,
                        "typical frame " + std::to_string(f) + " for '" + cat +
                            "' is out of range; stream has " +
                            std::to_string(stream.size()) + " frames");
      }
    }
  }

  const auto embeddings = EncodeAll(params, stream, o.threads);
  const auto all_ds = ComputeAllDs(embeddings, o.bins, o.threads);
  const fs::path dir = PrepareOut(o.out);

  nlohmann::ordered_json summary;
  summary["sigma"] = o.sigma;
  summary["bins"] = o.bins;
  summary["frames"] = stream.size();
  std::vector<CategoryProfile> profiles;
  nlohmann::ordered_json cats = nlohmann::ordered_json::object();
  for (const auto& [cat, frames] : typical) {
    CategoryProfile p = BuildScp(all_ds, all_ds[frames.front()], o.sigma, cat);
    SaveProfile((dir / ("profile_" + cat + ".json")).string(), p);
    nlohmann::ordered_json entry;
    entry["typical_frames"] = frames;
    entry["support_count"] = p.support_count;
    if (frames.size() >= 2) {
      std::vector<DsDescriptor> t;
      for (std::size_t f : frames) t.push_back(all_ds[f]);
      entry["stability_max_jsd"] = ProfileStability(all_ds, t, o.sigma);
    } else {
      entry["stability_max_jsd"] = nullptr;
    }
    const auto curve = SupportCurve(all_ds, all_ds[frames.front()], o.curve_sigmas);
    nlohmann::ordered_json c = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < curve.size(); ++i) {
      c.push_back({{"sigma", o.curve_sigmas[i]}, {"support_count", curve[i]}});
    }
    entry["support_curve"] = c;
    cats[cat] = entry;
    profiles.push_back(std::move(p));
  }
  summary["categories"] = cats;
  if (profiles.size() >= 2) {
    double min_cross = 1.0;
    for (std::size_t a = 0; a < profiles.size(); ++a) {
      for (std::size_t b = a + 1; b < profiles.size(); ++b) {
        min_cross = std::min(min_cross,
                             JsDivergence(profiles[a].histogram, profiles[b].histogram));
      }
    }
    summary["min_cross_category_jsd"] = min_cross;
  } else {
    summary["min_cross_category_jsd"] = nullptr;
  }
  WriteText(dir / "summary.json", summary.dump(2) + "\n");
  if (o.write_ds) WriteDsCsv((dir / "ds.csv").string(), all_ds);
  WriteConfigEcho(app, dir);
  for (const auto& p : profiles) {
    std::cout << p.category << ": typical frame " << p.typical_frame << ", support "
              << p.support_count << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- classify

struct ClassifyOptions {
  std::string model, stream, reference_stream, out;
  std::vector<std::string> profiles;
  std::size_t threads = 1;
};

void SetupClassify(CLI::App& app, ClassifyOptions& o) {
  app.add_option("--model", o.model, "Model file")->check(CLI::ExistingFile);
  app.add_option("--stream", o.stream, "Query stream CSV")->check(CLI::ExistingFile);
  app.add_option("--reference-stream", o.reference_stream,
                 "Stream the profiles were built on (default: the query stream)")
      ->check(CLI::ExistingFile);
  app.add_option("--profiles", o.profiles, "Profile JSON files")
      
      ->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--threads", o.threads, "Worker threads, 0 for all cores")
      ->capture_default_str();
}

double MillisSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

int RunClassify(const CLI::App& app, ClassifyOptions& o) {
  std::vector<CategoryProfile> profiles;
  std::map<std::string, std::string> seen;
  for (const auto& path : o.profiles) {
    CategoryProfile p = LoadProfile(path);
    if (!profiles.empty() && p.histogram.bin_count() != profiles.front().histogram.bin_count()) {
      throw DataError(path, 0,
                      "profile has " + std::to_string(p.histogram.bin_count()) +
                          " bins but " + o.profiles.front() + " has " +
                          std::to_string(profiles.front().histogram.bin_count()));
    }
    if (seen.count(p.category)) {
      throw DataError(path, 0, "category '" + p.category + "' also in " + seen[p.category]);
    }
    seen[p.category] = path;
    profiles.push_back(std::move(p));
  }
  std::sort(profiles.begin(), profiles.end(),
            [](const auto& a, const auto& b) { return a.category < b.category; });
  const std::size_t bins = profiles.front().histogram.bin_count();

  const EncoderParams params = LoadParams(o.model);
  const FrameStream queries = ReadStreamCsv(o.stream);
  CheckStreamMatchesModel(queries, params, o.stream);
  const bool separate_ref = !o.reference_stream.empty() && o.reference_stream != o.stream;
  FrameStream reference;
  if (separate_ref) {
    reference = ReadStreamCsv(o.reference_stream);
    CheckStreamMatchesModel(reference, params, o.reference_stream);
  }

  const auto t_embed = std::chrono::steady_clock::now();
  const auto q_emb = EncodeAll(params, queries, o.threads);
  const auto r_emb = separate_ref ? EncodeAll(params, reference, o.threads) : q_emb;
  const double embed_ms = MillisSince(t_embed);

  const auto t_ds = std::chrono::steady_clock::now();
  const auto ds = ComputeQueryDs(q_emb, r_emb, bins, o.threads);
  const double ds_ms = MillisSince(t_ds);

  const auto t_cls = std::chrono::steady_clock::now();
  const StreamPredictions pred = ClassifyAll(ds, profiles);
  const double cls_ms = MillisSince(t_cls);

  const fs::path dir = PrepareOut(o.out);
  WritePredictionsCsv((dir / "predictions.csv").string(), profiles, pred);

  // Wall times vary run to run, so they live apart from the predictions.
  nlohmann::ordered_json timing;
  timing["frames"] = queries.size();
  timing["reference_frames"] = r_emb.size();
  timing["threads"] = ResolveThreads(o.threads);
  timing["embed_ms"] = embed_ms;
  timing["ds_total_ms"] = ds_ms;
  timing["ds_per_frame_ms"] = queries.empty() ? 0.0 : ds_ms / queries.size();
  timing["classify_ms"] = cls_ms;
  WriteText(dir / "timing.json", timing.dump(2) + "\n");
  WriteConfigEcho(app, dir);
  std::cout << "classified " << queries.size() << " frames against " << profiles.size()
            << " profiles; DS " << Num(ds_ms / std::max<std::size_t>(1, queries.size()))
            << " ms per frame\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::string predictions, labels, anchors, segment_labels, model, stream, out;
  std::size_t delta = kDefaultDelta;
};

void SetupEvaluate(CLI::App& app, EvaluateOptions& o) {
  app.add_option("--predictions", o.predictions, "predictions.csv from classify")
      
      ->check(CLI::ExistingFile);
  app.add_option("--labels", o.labels, "Per-frame reference labels")
      ->check(CLI::ExistingFile);
  app.add_option("--anchors", o.anchors, "Anchor file, to derive labels from segments")
      ->check(CLI::ExistingFile);
  app.add_option("--segment-labels", o.segment_labels, "Per-segment labels")
      ->check(CLI::ExistingFile);
  app.add_option("--delta", o.delta, "Anchor window length, used with --anchors")
      ->capture_default_str();
  app.add_option("--model", o.model, "Model file; adds the category similarity matrix")
      ->check(CLI::ExistingFile);
  app.add_option("--stream", o.stream, "Stream CSV; enables the PCA export")
      ->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output directory");
}

struct PredictionTable {
  std::vector<std::string> categories;  // divergence columns
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> divergences;  // verbatim cells
};

PredictionTable ReadPredictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path, 0, "cannot open predictions");
  PredictionTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path, 1, "missing header");
  const auto header = SplitCsv(Trim(line));
  if (header.size() < 2 || header[0] != "frame" || header[1] != "predicted") {
    throw DataError(path, 1, "header must start with frame,predicted");
  }
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c].rfind("div_", 0) != 0) {
      throw DataError(path, 1, "column '" + header[c] + "' is not a div_ column");
    }
    t.categories.push_back(header[c].substr(4));
  }
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    const std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto cells = SplitCsv(trimmed);
    if (cells.size() != header.size()) {
      throw DataError(path, lineno,
                      "expected " + std::to_string(header.size()) + " columns, got " +
                          std::to_string(cells.size()));
    }
    const std::size_t expected = t.labels.size();
    std::size_t frame = 0;
    try {
      frame = ParseIndex(cells[0], "frame");
    } catch (const UsageError&) {
      throw DataError(path, lineno, "bad frame index '" + cells[0] + "'");
    }
    if (frame != expected) {
      throw DataError(path, lineno,
                      "frame " + cells[0] + " out of order; expected " +
                          std::to_string(expected));
    }
    if (cells[1].empty()) throw DataError(path, lineno, "empty predicted label");
    t.labels.push_back(cells[1]);
    t.divergences.emplace_back(cells.begin() + 2, cells.end());
  }
  return t;
}

int RunEvaluate(const CLI::App& app, EvaluateOptions& o) {
  const bool by_frame = !o.labels.empty();
  const bool by_segment = !o.anchors.empty() || !o.segment_labels.empty();
  if (by_frame == by_segment) {
    throw UsageError("give either --labels or both --anchors and --segment-labels");
  }
  if (by_segment && (o.anchors.empty() || o.segment_labels.empty())) {
    throw UsageError("segment labels need both --anchors and --segment-labels");
  }
  if (!o.model.empty() && o.stream.empty()) {
    throw UsageError("--model needs --stream to embed frames");
  }

  const PredictionTable pred = ReadPredictions(o.predictions);
  std::optional<FrameStream> stream;
  if (!o.stream.empty()) stream = ReadStreamCsv(o.stream);

  ReferenceLabels reference;
  std::string reference_source;
  if (by_frame) {
    const auto strings = ReadLabelFile(o.labels);
    reference = ReferenceLabels::FromStrings(strings);
    reference_source = o.labels;
  } else {
    const auto starts = ReadAnchorFile(o.anchors);
    const auto seg_labels = ReadLabelFile(o.segment_labels);
    const std::size_t length = stream ? stream->size() : pred.labels.size();
    const AnchorSet anchors = [&] {
      try {
        return AnchorSet(starts, o.delta, length);
      } catch (const InvalidArgument& e) {
        throw DataError(o.anchors, 0, e.what());
      }
    }();
    try {
      reference = SegmentLabels(anchors, seg_labels);
    } catch (const InvalidArgument& e) {
      throw DataError(o.segment_labels, 0, e.what());
    }
    reference_source = o.segment_labels;
  }
  if (reference.size() != pred.labels.size()) {
    throw DataError(o.predictions, 0,
                    std::to_string(pred.labels.size()) + " predictions but " +
                        std::to_string(reference.size()) + " reference labels in " +
                        reference_source);
  }
  if (stream && stream->size() != reference.size()) {
    throw DataError(o.stream, 0,
                    std::to_string(stream->size()) + " frames but " +
                        std::to_string(reference.size()) + " reference labels");
  }

  const ConfusionReport report = ConfusionAndAccuracy(pred.labels, reference);
  std::optional<Matrix> similarity;
  std::optional<PcaResult> pca;
  if (stream) {
    if (!o.model.empty()) {
      const EncoderParams params = LoadParams(o.model);
      CheckStreamMatchesModel(*stream, params, o.stream);
      const auto embeddings = EncodeAll(params, *stream);
      similarity = CategorySimilarityMatrix(embeddings, reference);
      if (embeddings.size() >= 3) pca = Pca2(embeddings);
    } else if (stream->size() >= 3) {
      pca = Pca2(stream->frames());
    }
  }

  const fs::path dir = PrepareOut(o.out);
  WriteText(dir / "metrics.json", MetricsJson(report, similarity, reference.vocabulary));
  WriteConfusionCsv((dir / "confusion.csv").string(), report);
  std::ostringstream frames;
  frames << "frame,reference,predicted";
  for (const auto& c : pred.categories) frames << ",div_" << c;
  frames << "\n";
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    frames << i << "," << reference.label(i) << "," << pred.labels[i];
    for (const auto& d : pred.divergences[i]) frames << "," << d;
    frames << "\n";
  }
  WriteText(dir / "frames.csv", frames.str());
  if (pca) WritePcaCsv((dir / "pca.csv").string(), pca->coords, reference);
  WriteConfigEcho(app, dir);
  std::cout << "accuracy " << Num(report.accuracy) << " (" << report.matched << "/"
            << report.total << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driving-scene categorization from contrastive embeddings"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  GenOptions gen_o;
  TrainOptions train_o;
  ProfileOptions profile_o;
  ClassifyOptions classify_o;
  EvaluateOptions evaluate_o;
  std::map<CLI::App*, std::string> config_paths;

  struct Entry {
    CLI::App* app;
    std::vector<std::string> required;
    std::function<int()> run;
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* help, std::vector<std::string> required,
                 auto setup, auto run, auto& opts) {
    CLI::App* sub = app.add_subcommand(name, help);
    setup(*sub, opts);
    sub->add_option("--config", config_paths[sub],
                    "key=value file; flags given on the command line win")
        ->check(CLI::ExistingFile);
    entries.push_back({sub, std::move(required), [sub, run, &opts] { return run(*sub, opts); }});
  };
  add("gen", "Generate a synthetic labelled stream", {"out"}, SetupGen, RunGen, gen_o);
  add("train", "Train the encoder on a stream and its anchors",
      {"stream", "anchors", "out"}, SetupTrain, RunTrain, train_o);
  add("profile", "Build one scene category profile per category",
      {"model", "stream", "out"}, SetupProfile, RunProfile,
      profile_o);
  add("classify", "Classify every frame of a stream",
      {"model", "stream", "profiles", "out"}, SetupClassify, RunClassify, classify_o);
  add("evaluate", "Score predictions against reference labels",
      {"predictions", "out"}, SetupEvaluate, RunEvaluate,
      evaluate_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  for (auto& entry : entries) {
    if (!entry.app->parsed()) continue;
    try {
      const std::string& cfg = config_paths[entry.app];
      if (!cfg.empty()) ApplyConfigFile(*entry.app, cfg);
      for (const auto& name : entry.required) {
        if (entry.app->get_option("--" + name)->count() == 0) {
          throw UsageError("--" + name + " is required");
        }
      }
      return entry.run();
    } catch (const UsageError& e) {
      std::cerr << "scenecat " << entry.app->get_name() << ": " << e.what() << "\n";
      return kExitUsage;
    } catch (const DataError& e) {
      std::cerr << "scenecat " << entry.app->get_name() << ": " << e.what() << "\n";
      return kExitData;
    } catch (const std::exception& e) {
      std::cerr << "scenecat " << entry.app->get_name() << ": " << e.what() << "\n";
      return kExitData;
    }
  }
  return kExitUsage;
}
