#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lenus {

class EmbeddingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// v / ||v||_2. Throws on the zero vector.
inline std::vector<double> normalize(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq <= 0.0) throw EmbeddingError("cannot normalize zero vector");
  double inv = 1.0 / std::sqrt(sq);
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
  return out;
}

/// Dot product of two normalized vectors; equals cosine similarity.
inline double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw EmbeddingError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// T x d matrix of unit-norm per-frame embeddings plus timing metadata.
struct EmbeddingTrace {
  int frame_count = 0;
  int dim = 0;
  double fps = 1.0;
  std::vector<double> data;  // row-major, frame_count * dim

  std::span<const double> frame(int t) const {
    return std::span<const double>(data.data() + static_cast<size_t>(t) * dim,
                                   static_cast<size_t>(dim));
  }
};

struct ScenarioEvent {
  std::string proposition;
  int start_frame = 0;
  int end_frame = 0;  // inclusive
  double similarity = 0.5;
};

/// Declarative description of a synthetic video: which propositions are
/// visible in which frame intervals, and how strongly.
struct ScenarioSpec {
  int frame_count = 0;
  int dim = 512;
  double fps = 1.0;
  double background_similarity = 0.05;
  double redundancy = 0.95;  // target pairwise similarity of in-event neighbors
  std::vector<ScenarioEvent> events;

  /// Distinct event propositions in first-occurrence order; axis i in the
  /// embedding space belongs to proposition i.
  std::vector<std::string> propositions() const {
    std::vector<std::string> out;
    for (const auto& e : events) {
      if (std::find(out.begin(), out.end(), e.proposition) == out.end())
        out.push_back(e.proposition);
    }
    return out;
  }

  void validate() const;

  static ScenarioSpec from_json(const nlohmann::json& j) {
    ScenarioSpec s;
    s.frame_count = j.at("frame_count").get<int>();
    s.dim = j.value("dim", 512);
    s.fps = j.value("fps", 1.0);
    s.background_similarity = j.value("background_similarity", 0.05);
    s.redundancy = j.value("redundancy", 0.95);
    for (const auto& je : j.value("events", nlohmann::json::array())) {
      ScenarioEvent e;
      e.proposition = je.at("proposition").get<std::string>();
      e.start_frame = je.at("start_frame").get<int>();
      e.end_frame = je.at("end_frame").get<int>();
      e.similarity = je.at("similarity").get<double>();
      s.events.push_back(std::move(e));
    }
    s.validate();
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["frame_count"] = frame_count;
    j["dim"] = dim;
    j["fps"] = fps;
    j["background_similarity"] = background_similarity;
    j["redundancy"] = redundancy;
    j["events"] = nlohmann::json::array();
    for (const auto& e : events) {
      j["events"].push_back({{"proposition", e.proposition},
                             {"start_frame", e.start_frame},
                             {"end_frame", e.end_frame},
                             {"similarity", e.similarity}});
    }
    return j;
  }
};

namespace detail {

// In-event frames carry target + jitter in [kSimJitterLo, kSimJitterHi] on
// top of the requested similarity, so the target survives renormalization.
constexpr double kSimJitterLo = 0.005;
constexpr double kSimJitterHi = 0.010;
constexpr double kMaxAxisCoeff = 0.995;

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

inline void ScenarioSpec::validate() const {
  if (frame_count < 1) throw EmbeddingError("scenario: frame_count must be >= 1");
  auto props = propositions();
  if (dim < static_cast<int>(props.size()) + 3)
    throw EmbeddingError("scenario: dim must be at least proposition count + 3");
  if (fps <= 0) throw EmbeddingError("scenario: fps must be positive");
  if (background_similarity < 0 || background_similarity >= 1)
    throw EmbeddingError("scenario: background_similarity must be in [0, 1)");
  for (const auto& e : events) {
    if (e.start_frame < 0 || e.end_frame >= frame_count || e.start_frame > e.end_frame)
      throw EmbeddingError("scenario: event interval out of range for '" + e.proposition + "'");
    if (e.similarity <= 0 || e.similarity + detail::kSimJitterHi > detail::kMaxAxisCoeff)
      throw EmbeddingError("scenario: infeasible similarity target for '" + e.proposition + "'");
  }
  // Overlapping events must leave room on the unit sphere for all demanded
  // axis coefficients simultaneously.
  std::vector<double> sq(static_cast<size_t>(frame_count) + 1, 0.0);
  for (const auto& e : events) {
    double c = e.similarity + detail::kSimJitterHi;
    sq[static_cast<size_t>(e.start_frame)] += c * c;
    sq[static_cast<size_t>(e.end_frame) + 1] -= c * c;
  }
  double acc = 0.0;
  for (int t = 0; t < frame_count; ++t) {
    acc += sq[static_cast<size_t>(t)];
    if (acc > detail::kMaxAxisCoeff * detail::kMaxAxisCoeff)
      throw EmbeddingError("scenario: overlapping events demand contradictory geometry at frame " +
                           std::to_string(t));
  }
}

/// Deterministic synthetic trace. Frames inside an event interval reach the
/// event's similarity target against that proposition's text embedding;
/// background frames stay at or below background_similarity; consecutive
/// in-event frames are nearly identical so Stage-2 can collapse them.
inline EmbeddingTrace synthetic_trace(const ScenarioSpec& scenario, uint64_t seed) {
  scenario.validate();
  const auto props = scenario.propositions();
  const int nprops = static_cast<int>(props.size());
  const int d = scenario.dim;
  const int T = scenario.frame_count;
  const int bg_axis0 = nprops;      // two axes carry the non-semantic mass
  const int bg_axis1 = nprops + 1;

  std::mt19937_64 rng(seed);

  EmbeddingTrace trace;
  trace.frame_count = T;
  trace.dim = d;
  trace.fps = scenario.fps;
  trace.data.assign(static_cast<size_t>(T) * d, 0.0);

  std::vector<double> raw(static_cast<size_t>(d));
  for (int t = 0; t < T; ++t) {
    std::fill(raw.begin(), raw.end(), 0.0);
    double sumsq = 0.0;
    uint64_t signature = 0;  // identifies the set of active events
    bool in_event = false;
    for (size_t ei = 0; ei < scenario.events.size(); ++ei) {
      const auto& e = scenario.events[ei];
      if (t < e.start_frame || t > e.end_frame) continue;
      in_event = true;
      signature = detail::mix64(signature ^ (ei + 1));
      int axis = static_cast<int>(
          std::find(props.begin(), props.end(), e.proposition) - props.begin());
      double jitter = detail::kSimJitterLo +
                      (detail::kSimJitterHi - detail::kSimJitterLo) * detail::uniform01(rng);
      double c = std::min(e.similarity + jitter, detail::kMaxAxisCoeff);
      raw[static_cast<size_t>(axis)] = std::max(raw[static_cast<size_t>(axis)], c);
    }
    if (!in_event) {
      // Small random leakage onto proposition axes, bounded by the
      // background level.
      for (int i = 0; i < nprops; ++i)
        raw[static_cast<size_t>(i)] = scenario.background_similarity * detail::uniform01(rng);
    }
    for (int i = 0; i < nprops; ++i) sumsq += raw[static_cast<size_t>(i)] * raw[static_cast<size_t>(i)];

    double rmass = std::sqrt(std::max(0.0, 1.0 - sumsq));
    double theta;
    if (in_event) {
      // One fixed direction per active-event signature keeps a whole run of
      // event frames mutually redundant.
      theta = 2.0 * M_PI *
              (static_cast<double>(detail::mix64(signature ^ seed) >> 11) * 0x1.0p-53);
      detail::uniform01(rng);  // keep the stream aligned with background frames
    } else {
      theta = 2.0 * M_PI * detail::uniform01(rng);
    }
    raw[static_cast<size_t>(bg_axis0)] = rmass * std::cos(theta);
    raw[static_cast<size_t>(bg_axis1)] = rmass * std::sin(theta);

    auto unit = normalize(raw);
    std::copy(unit.begin(), unit.end(), trace.data.begin() + static_cast<size_t>(t) * d);
  }
  return trace;
}

/// Pluggable encoder pair. Frames are referenced by index into the trace a
/// provider wraps; real pixel handling lives behind the remote provider.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> encode_frames(const std::vector<int>& frame_refs) = 0;
  virtual std::vector<std::vector<double>> encode_text(const std::vector<std::string>& texts) = 0;
  virtual double per_item_cost() const = 0;  // seconds per encoded item
};

/// Provider backed by a synthetic scenario: frame embeddings come from the
/// generated trace, text embeddings from the scenario's axis layout.
class SyntheticProvider : public EmbeddingProvider {
public:
  SyntheticProvider(ScenarioSpec scenario, uint64_t seed, double per_item_cost = 0.0)
      : scenario_(std::move(scenario)),
        trace_(synthetic_trace(scenario_, seed)),
        props_(scenario_.propositions()),
        cost_(per_item_cost) {}

  const EmbeddingTrace& trace() const { return trace_; }
  const ScenarioSpec& scenario() const { return scenario_; }

  std::vector<std::vector<double>> encode_frames(const std::vector<int>& frame_refs) override {
    std::vector<std::vector<double>> out;
    out.reserve(frame_refs.size());
    for (int t : frame_refs) {
      if (t < 0 || t >= trace_.frame_count)
        throw EmbeddingError("frame reference out of range: " + std::to_string(t));
      auto row = trace_.frame(t);
      out.emplace_back(row.begin(), row.end());
    }
    return out;
  }

  std::vector<std::vector<double>> encode_text(const std::vector<std::string>& texts) override {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& s : texts) out.push_back(text_embedding(s));
    return out;
  }

  /// Known propositions map to their event axis; unknown phrases land on a
  /// spare axis orthogonal to every frame.
  std::vector<double> text_embedding(const std::string& text) const {
    std::vector<double> v(static_cast<size_t>(scenario_.dim), 0.0);
    auto it = std::find(props_.begin(), props_.end(), text);
    if (it != props_.end()) {
      v[static_cast<size_t>(it - props_.begin())] = 1.0;
    } else {
      size_t spare_begin = props_.size() + 2;
      size_t spare_count = static_cast<size_t>(scenario_.dim) - spare_begin;
      uint64_t h = 1469598103934665603ull;
      for (char c : text) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
      v[spare_begin + h % spare_count] = 1.0;
    }
    return v;
  }

  double per_item_cost() const override { return cost_; }

private:
  ScenarioSpec scenario_;
  EmbeddingTrace trace_;
  std::vector<std::string> props_;
  double cost_;
};

// ---------------------------------------------------------------------------
// Binary trace file: magic "LENT", version u16, T u32, d u16, fps f32, then
// T*d little-endian f32 values row-major.

constexpr uint16_t kTraceFileVersion = 1;

inline void write_trace(const std::string& path, const EmbeddingTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EmbeddingError("cannot open trace file for writing: " + path);
  out.write("LENT", 4);
  auto put = [&out](const void* p, size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); };
  uint16_t ver = kTraceFileVersion;
  uint32_t T = static_cast<uint32_t>(trace.frame_count);
  uint16_t d = static_cast<uint16_t>(trace.dim);
  float fps = static_cast<float>(trace.fps);
  put(&ver, 2);
  put(&T, 4);
  put(&d, 2);
  put(&fps, 4);
  for (double x : trace.data) {
    float f = static_cast<float>(x);
    put(&f, 4);
  }
  if (!out) throw EmbeddingError("write failure on trace file: " + path);
}

inline EmbeddingTrace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingError("cannot open trace file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LENT", 4) != 0)
    throw EmbeddingError("bad trace file magic: " + path);
  auto get = [&in, &path](void* p, size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw EmbeddingError("truncated trace file: " + path);
  };
  uint16_t ver;
  uint32_t T;
  uint16_t d;
  float fps;
  get(&ver, 2);
  if (ver != kTraceFileVersion)
    throw EmbeddingError("unsupported trace file version " + std::to_string(ver));
  get(&T, 4);
  get(&d, 2);
  get(&fps, 4);
  EmbeddingTrace trace;
  trace.frame_count = static_cast<int>(T);
  trace.dim = static_cast<int>(d);
  trace.fps = static_cast<double>(fps);
  trace.data.resize(static_cast<size_t>(T) * d);
  for (auto& x : trace.data) {
    float f;
    get(&f, 4);
    x = static_cast<double>(f);
  }
  return trace;
}

/// Provider over a trace loaded from disk. Text embeddings require the
/// scenario that produced the trace (or a remote encoder instead).
class FileProvider : public EmbeddingProvider {
public:
  explicit FileProvider(EmbeddingTrace trace, std::optional<ScenarioSpec> scenario = std::nullopt,
                        double per_item_cost = 0.0)
      : trace_(std::move(trace)), cost_(per_item_cost) {
    if (scenario) text_.emplace(*std::move(scenario), 0);
  }

  const EmbeddingTrace& trace() const { return trace_; }

  std::vector<std::vector<double>> encode_frames(const std::vector<int>& frame_refs) override {
    std::vector<std::vector<double>> out;
    out.reserve(frame_refs.size());
    for (int t : frame_refs) {
      if (t < 0 || t >= trace_.frame_count)
        throw EmbeddingError("frame reference out of range: " + std::to_string(t));
      auto row = trace_.frame(t);
      out.emplace_back(row.begin(), row.end());
    }
    return out;
  }

  std::vector<std::vector<double>> encode_text(const std::vector<std::string>& texts) override {
    if (!text_)
      throw EmbeddingError("file provider has no text encoder; supply a scenario or use remote");
    return text_->encode_text(texts);
  }

  double per_item_cost() const override { return cost_; }

private:
  EmbeddingTrace trace_;
  std::optional<SyntheticProvider> text_;
  double cost_;
};

}  // namespace lenus
