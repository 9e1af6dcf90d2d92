#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedding.hpp"
#include "sampling.hpp"
#include "tlspec.hpp"

namespace lenus {

class DetectionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Frame-window handle passed to a detector backend. The anchor frame is the
/// center-most detection-set frame inside the window.
struct WindowSpan {
  int index = 0;
  int begin_frame = 0;
  int end_frame = 0;  // exclusive
  int anchor_frame = 0;
};

/// Pluggable proposition detector. One call evaluates a batch of
/// propositions against a single window's visual context.
class DetectorBackend {
public:
  virtual ~DetectorBackend() = default;
  /// One confidence in [0,1] per proposition, in input order.
  virtual std::vector<double> evaluate_batch(const WindowSpan& window,
                                             const std::vector<std::string>& propositions) = 0;
  virtual int max_batch() const = 0;
  virtual double pass_cost() const = 0;  // seconds per batched pass
};

enum class Provenance { Measured, Propagated, Default };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Measured: return "measured";
    case Provenance::Propagated: return "propagated";
    case Provenance::Default: return "default";
  }
  return "?";
}

/// N_win x |P| confidence matrix with per-window provenance. Windows of
/// size kappa tile [0, T); the last window may be short.
struct DetectionMatrix {
  int kappa = 16;
  int frame_count = 0;
  int window_count = 0;
  std::vector<std::string> propositions;
  std::vector<double> z;               // row-major, window_count * |P|
  std::vector<Provenance> provenance;  // per window
  std::vector<int> failed_windows;     // backend gave up after retries
  std::vector<std::string> diagnostics;

  double& at(int window, int prop) {
    return z[static_cast<size_t>(window) * propositions.size() + static_cast<size_t>(prop)];
  }
  double at(int window, int prop) const {
    return z[static_cast<size_t>(window) * propositions.size() + static_cast<size_t>(prop)];
  }

  std::pair<int, int> window_span(int window) const {
    int begin = window * kappa;
    int end = std::min(frame_count, begin + kappa);
    return {begin, end};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kappa"] = kappa;
    j["frame_count"] = frame_count;
    j["windows"] = window_count;
    j["propositions"] = propositions;
    j["Z"] = z;
    nlohmann::json prov = nlohmann::json::array();
    for (auto p : provenance) prov.push_back(provenance_name(p));
    j["provenance"] = std::move(prov);
    j["failed_windows"] = failed_windows;
    return j;
  }

  static DetectionMatrix from_json(const nlohmann::json& j) {
    DetectionMatrix m;
    m.kappa = j.at("kappa").get<int>();
    m.frame_count = j.at("frame_count").get<int>();
    m.window_count = j.at("windows").get<int>();
    m.propositions = j.at("propositions").get<std::vector<std::string>>();
    m.z = j.at("Z").get<std::vector<double>>();
    for (const auto& s : j.at("provenance")) {
      std::string name = s.get<std::string>();
      if (name == "measured") m.provenance.push_back(Provenance::Measured);
      else if (name == "propagated") m.provenance.push_back(Provenance::Propagated);
      else m.provenance.push_back(Provenance::Default);
    }
    if (j.contains("failed_windows"))
      m.failed_windows = j.at("failed_windows").get<std::vector<int>>();
    return m;
  }
};

inline int window_count_for(int frame_count, int kappa) {
  return (frame_count + kappa - 1) / kappa;
}

/// ceil(|P| / B) chunks of [begin, end) proposition index ranges, in order.
inline std::vector<std::pair<int, int>> plan_batches(int prop_count, int max_batch) {
  if (max_batch < 1) throw DetectionError("plan_batches: batch size must be >= 1");
  std::vector<std::pair<int, int>> chunks;
  for (int begin = 0; begin < prop_count; begin += max_batch)
    chunks.emplace_back(begin, std::min(prop_count, begin + max_batch));
  return chunks;
}

namespace detail {
inline int pick_anchor(const std::vector<int>& detect_in_window, int begin, int end) {
  // Center-most detection-set frame of the window.
  double center = (begin + end - 1) / 2.0;
  int best = detect_in_window.front();
  for (int t : detect_in_window)
    if (std::abs(t - center) < std::abs(best - center)) best = t;
  return best;
}
}  // namespace detail

/// Ground propositions over the detection set. A window is measured when it
/// contains any detection-set frame; windows whose candidate frames were all
/// discarded in Stage-2 inherit their base keyframe's row; windows pruned by
/// Stage-1 get the default confidence 0.
inline DetectionMatrix ground_detections(DetectorBackend& backend, int frame_count,
                                         const std::vector<int>& detect_set,
                                         const PropositionSet& props, const SamplingConfig& cfg,
                                         const KeyframeSet& keys, int retries = 3) {
  if (props.empty()) throw DetectionError("ground_detections: empty proposition set");
  for (int t : detect_set)
    if (t < 0 || t >= frame_count)
      throw DetectionError("ground_detections: detection-set frame out of range");

  DetectionMatrix m;
  m.kappa = cfg.kappa;
  m.frame_count = frame_count;
  m.window_count = window_count_for(frame_count, cfg.kappa);
  m.propositions = props.names();
  m.z.assign(static_cast<size_t>(m.window_count) * props.size(), 0.0);
  m.provenance.assign(static_cast<size_t>(m.window_count), Provenance::Default);

  const int P = props.size();
  auto chunks = plan_batches(P, backend.max_batch());
  auto names = props.names();

  // Bucket detection-set and discarded-candidate frames per window.
  std::vector<std::vector<int>> detect_by_window(static_cast<size_t>(m.window_count));
  for (int t : detect_set) detect_by_window[static_cast<size_t>(t / cfg.kappa)].push_back(t);
  std::vector<int> propagate_base(static_cast<size_t>(m.window_count), -1);
  for (const auto& [frame, base] : keys.base_of) {
    int wi = frame / cfg.kappa;
    if (propagate_base[static_cast<size_t>(wi)] < 0) propagate_base[static_cast<size_t>(wi)] = base;
  }

  for (int wi = 0; wi < m.window_count; ++wi) {
    const auto& detect = detect_by_window[static_cast<size_t>(wi)];
    if (detect.empty()) continue;
    auto [begin, end] = m.window_span(wi);
    WindowSpan span{wi, begin, end, detail::pick_anchor(detect, begin, end)};
    bool failed = false;
    for (const auto& [cbegin, cend] : chunks) {
      std::vector<std::string> batch(names.begin() + cbegin, names.begin() + cend);
      std::vector<double> conf;
      int attempt = 0;
      for (;;) {
        try {
          conf = backend.evaluate_batch(span, batch);
          break;
        } catch (const std::exception& e) {
          if (++attempt >= retries) {
            m.diagnostics.push_back("window " + std::to_string(wi) + ": backend failed after " +
                                    std::to_string(retries) + " attempts: " + e.what());
            failed = true;
            break;
          }
        }
      }
      if (failed) break;
      if (static_cast<int>(conf.size()) != cend - cbegin)
        throw DetectionError("backend returned wrong confidence count for window " +
                             std::to_string(wi));
      for (int i = cbegin; i < cend; ++i) {
        double c = conf[static_cast<size_t>(i - cbegin)];
        if (c < 0.0 || c > 1.0)
          throw DetectionError("backend confidence out of [0,1] for window " + std::to_string(wi));
        m.at(wi, i) = c;
      }
    }
    if (failed) {
      // Keep the pipeline going on the default row.
      for (int i = 0; i < P; ++i) m.at(wi, i) = 0.0;
      m.failed_windows.push_back(wi);
      m.provenance[static_cast<size_t>(wi)] = Provenance::Default;
    } else {
      m.provenance[static_cast<size_t>(wi)] = Provenance::Measured;
    }
  }

  // Label propagation: a window whose candidate frames were all discarded
  // copies its base keyframe's measured row. No forward propagation: the
  // base always precedes the discarded frame.
  for (int wi = 0; wi < m.window_count; ++wi) {
    if (m.provenance[static_cast<size_t>(wi)] != Provenance::Default) continue;
    int base = propagate_base[static_cast<size_t>(wi)];
    if (base < 0) continue;
    int src = base / cfg.kappa;
    if (m.provenance[static_cast<size_t>(src)] != Provenance::Measured) continue;
    for (int i = 0; i < P; ++i) m.at(wi, i) = m.at(src, i);
    m.provenance[static_cast<size_t>(wi)] = Provenance::Propagated;
  }

  return m;
}

struct CallCount {
  int windows_measured = 0;
  long backend_passes = 0;
};

/// Pass accounting: batched mode needs ceil(|P|/B) passes per measured
/// window; the sequential baseline needs |P|.
inline CallCount measured_call_count(const DetectionMatrix& m, int max_batch,
                                     bool sequential_baseline = false) {
  CallCount c;
  for (auto p : m.provenance)
    if (p == Provenance::Measured) ++c.windows_measured;
  int P = static_cast<int>(m.propositions.size());
  long per_window = sequential_baseline
                        ? P
                        : static_cast<long>(plan_batches(P, max_batch).size());
  c.backend_passes = c.windows_measured * per_window;
  return c;
}

/// Deterministic scenario-driven detector:
/// confidence = clamp(base + gain * overlap_fraction + noise, 0, 1), where
/// overlap_fraction is the share of the window inside the proposition's
/// ground-truth events. With sigma = 0 it is exact.
class SyntheticDetector : public DetectorBackend {
public:
  SyntheticDetector(ScenarioSpec scenario, int max_batch = 8, double pass_cost = 0.0,
                    double base = 0.0, double gain = 1.0, double sigma = 0.0, uint64_t seed = 0)
      : scenario_(std::move(scenario)),
        max_batch_(max_batch),
        pass_cost_(pass_cost),
        base_(base),
        gain_(gain),
        sigma_(sigma),
        seed_(seed) {}

  std::vector<double> evaluate_batch(const WindowSpan& window,
                                     const std::vector<std::string>& propositions) override {
    std::vector<double> out;
    out.reserve(propositions.size());
    for (const auto& p : propositions) {
      double frac = overlap_fraction(window, p);
      double noise = 0.0;
      if (sigma_ > 0.0) {
        // Seeded per (window, proposition) so results are independent of
        // batch partitioning and completion order.
        uint64_t h = detail::mix64(seed_ ^ detail::mix64(static_cast<uint64_t>(window.index) + 1));
        for (char c : p) h = detail::mix64(h ^ static_cast<unsigned char>(c));
        double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        noise = sigma_ * (2.0 * u - 1.0);
      }
      out.push_back(std::clamp(base_ + gain_ * frac + noise, 0.0, 1.0));
    }
    return out;
  }

  int max_batch() const override { return max_batch_; }
  double pass_cost() const override { return pass_cost_; }

  double overlap_fraction(const WindowSpan& window, const std::string& proposition) const {
    int len = window.end_frame - window.begin_frame;
    if (len <= 0) return 0.0;
    std::vector<char> covered(static_cast<size_t>(len), 0);
    for (const auto& e : scenario_.events) {
      if (e.proposition != proposition) continue;
      int lo = std::max(window.begin_frame, e.start_frame);
      int hi = std::min(window.end_frame - 1, e.end_frame);
      for (int t = lo; t <= hi; ++t) covered[static_cast<size_t>(t - window.begin_frame)] = 1;
    }
    int n = 0;
    for (char c : covered) n += c;
    return static_cast<double>(n) / len;
  }

private:
  ScenarioSpec scenario_;
  int max_batch_;
  double pass_cost_;
  double base_, gain_, sigma_;
  uint64_t seed_;
};

/// Ground-truth boolean window labels for a scenario: window x proposition,
/// true when the window overlaps one of the proposition's events.
inline std::vector<std::vector<bool>> scenario_window_labels(const ScenarioSpec& scenario,
                                                             int kappa) {
  auto props = scenario.propositions();
  int nwin = window_count_for(scenario.frame_count, kappa);
  std::vector<std::vector<bool>> labels(static_cast<size_t>(nwin),
                                        std::vector<bool>(props.size(), false));
  for (const auto& e : scenario.events) {
    size_t pi = static_cast<size_t>(
        std::find(props.begin(), props.end(), e.proposition) - props.begin());
    for (int w = e.start_frame / kappa; w <= e.end_frame / kappa && w < nwin; ++w)
      labels[static_cast<size_t>(w)][pi] = true;
  }
  return labels;
}

}  // namespace lenus
