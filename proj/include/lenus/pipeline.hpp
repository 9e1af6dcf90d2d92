#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "automaton.hpp"
#include "checker.hpp"
#include "detection.hpp"
#include "embedding.hpp"
#include "latency.hpp"
#include "sampling.hpp"
#include "tlspec.hpp"

namespace lenus {

enum class Mode { Vanilla, Sequential, Batched, Lenqa };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Vanilla: return "vanilla";
    case Mode::Sequential: return "sequential";
    case Mode::Batched: return "batched";
    case Mode::Lenqa: return "lenqa";
  }
  return "?";
}

inline Mode mode_from_name(const std::string& s) {
  if (s == "vanilla") return Mode::Vanilla;
  if (s == "sequential") return Mode::Sequential;
  if (s == "batched") return Mode::Batched;
  if (s == "lenqa") return Mode::Lenqa;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

struct CheckerConfig {
  double b = 10.0;
  double theta = 0.5;
  double theta_label = 0.5;
  int alpha_ext = 2;
  int beta_ext = 2;

  SegmentOptions segment_options() const { return {theta, theta_label, alpha_ext, beta_ext}; }
};

struct PipelineConfig {
  SamplingConfig sampling;
  CheckerConfig checker;
  LatencyParams latency = LatencyParams::table_calibrated();
  Mode mode = Mode::Lenqa;
  bool multi_segment = true;
  int budget = 32;              // answerer frame budget N
  int max_uniform_windows = 32; // fallback when Stage-1 prunes everything
  uint64_t seed = 0;

  static PipelineConfig from_json(const nlohmann::json& j) {
    PipelineConfig c;
    if (j.contains("sampling")) {
      const auto& s = j["sampling"];
      c.sampling.tau_s = s.value("tau_s", c.sampling.tau_s);
      c.sampling.tau_r = s.value("tau_r", c.sampling.tau_r);
      c.sampling.w = s.value("w", c.sampling.w);
      c.sampling.delta = s.value("delta", c.sampling.delta);
      c.sampling.kappa = s.value("kappa", c.sampling.kappa);
    }
    if (j.contains("checker")) {
      const auto& k = j["checker"];
      c.checker.b = k.value("b", c.checker.b);
      c.checker.theta = k.value("theta", c.checker.theta);
      c.checker.theta_label = k.value("theta_label", c.checker.theta_label);
      c.checker.alpha_ext = k.value("alpha_ext", c.checker.alpha_ext);
      c.checker.beta_ext = k.value("beta_ext", c.checker.beta_ext);
    }
    if (j.contains("latency")) {
      const auto& l = j["latency"];
      c.latency.l_lq2tl = l.value("l_lq2tl", c.latency.l_lq2tl);
      c.latency.l_mc = l.value("l_mc", c.latency.l_mc);
      c.latency.l_vqa = l.value("l_vqa", c.latency.l_vqa);
      c.latency.l_prop = l.value("l_prop", c.latency.l_prop);
      c.latency.l_clip = l.value("l_clip", c.latency.l_clip);
      c.latency.l_vlm = l.value("l_vlm", c.latency.l_vlm);
      c.latency.batch = l.value("batch", c.latency.batch);
    }
    if (j.contains("mode")) c.mode = mode_from_name(j["mode"].get<std::string>());
    c.multi_segment = j.value("multi_segment", c.multi_segment);
    c.budget = j.value("budget", c.budget);
    c.max_uniform_windows = j.value("max_uniform_windows", c.max_uniform_windows);
    c.seed = j.value("seed", c.seed);
    return c;
  }

  nlohmann::json to_json() const {
    return {
        {"sampling",
         {{"tau_s", sampling.tau_s},
          {"tau_r", sampling.tau_r},
          {"w", sampling.w},
          {"delta", sampling.delta},
          {"kappa", sampling.kappa}}},
        {"checker",
         {{"b", checker.b},
          {"theta", checker.theta},
          {"theta_label", checker.theta_label},
          {"alpha_ext", checker.alpha_ext},
          {"beta_ext", checker.beta_ext}}},
        {"latency",
         {{"l_lq2tl", latency.l_lq2tl},
          {"l_mc", latency.l_mc},
          {"l_vqa", latency.l_vqa},
          {"l_prop", latency.l_prop},
          {"l_clip", latency.l_clip},
          {"l_vlm", latency.l_vlm},
          {"batch", latency.batch}}},
        {"mode", mode_name(mode)},
        {"multi_segment", multi_segment},
        {"budget", budget},
        {"max_uniform_windows", max_uniform_windows},
        {"seed", seed}};
  }
};

/// Deterministic accumulation of configured per-stage costs in place of
/// wall-clock measurement.
struct VirtualClock {
  LatencyEstimate stages;

  double total() const { return stages.total(); }
};

struct RunResult {
  nlohmann::json answer;
  SegmentSet segments;
  SatisfactionProfile profile;
  nlohmann::json sampling_report;
  LatencyEstimate clock;  // virtual per-stage seconds
  CallCount calls;
  int frames_used = 0;    // frames sent through the detector
  double foi_percent = 0.0;
  bool degraded = false;
  std::vector<std::string> diagnostics;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["answer"] = answer;
    j["segments"] = nlohmann::json::array();
    for (const auto& s : segments.segments) j["segments"].push_back({s[0], s[1]});
    j["fallback"] = segments.fallback;
    j["E"] = segments.evidence_windows;
    j["V_total"] = segments.total_windows;
    j["P_sat"] = profile.p.empty() ? 0.0 : profile.p_sat;
    j["sampling"] = sampling_report;
    j["clock"] = clock.to_json();
    j["windows_measured"] = calls.windows_measured;
    j["backend_passes"] = calls.backend_passes;
    j["frames_used"] = frames_used;
    j["foi_percent"] = foi_percent;
    j["degraded"] = degraded;
    j["diagnostics"] = diagnostics;
    return j;
  }
};

namespace detail {

/// Evenly spaced selection of up to `budget` items from [0, size).
inline std::vector<int> uniform_pick(int size, int budget) {
  std::vector<int> out;
  if (size <= 0 || budget <= 0) return out;
  if (size <= budget) {
    out.resize(static_cast<size_t>(size));
    for (int i = 0; i < size; ++i) out[static_cast<size_t>(i)] = i;
    return out;
  }
  for (int i = 0; i < budget; ++i)
    out.push_back(static_cast<int>((static_cast<long>(i) * size) / budget));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<int> segment_frames(const SegmentSet& segs, const VideoAutomaton& a) {
  std::vector<int> frames;
  for (const auto& s : segs.segments) {
    auto [b0, e0] = a.window_span(s[0]);
    auto [b1, e1] = a.window_span(s[1]);
    (void)e0;
    (void)b1;
    for (int t = b0; t < e1; ++t) frames.push_back(t);
  }
  return frames;
}

}  // namespace detail

/// Desk-scale proxy for the final answering stage: scores the sampled
/// evidence frames by overlap with the scenario's ground-truth events.
inline nlohmann::json synthetic_answer(const std::vector<int>& sampled_frames,
                                       const ScenarioSpec& ground_truth) {
  int hits = 0;
  for (int t : sampled_frames) {
    for (const auto& e : ground_truth.events) {
      if (t >= e.start_frame && t <= e.end_frame) {
        ++hits;
        break;
      }
    }
  }
  double score =
      sampled_frames.empty() ? 0.0 : static_cast<double>(hits) / sampled_frames.size();
  return {{"kind", "synthetic"},
          {"sampled_frames", sampled_frames.size()},
          {"evidence_hits", hits},
          {"evidence_overlap", score},
          {"hit", hits > 0}};
}

/// End-to-end run: parse is done by the caller; this executes encode,
/// two-stage sampling, batched grounding, automaton build, probabilistic
/// check, segment extraction, and the answering proxy, accumulating the
/// virtual clock along the way. Never throws for degraded inputs: empty
/// candidate sets and unsatisfied specs produce flagged fallback results.
inline RunResult run_pipeline(const PipelineConfig& config, const FormulaPtr& formula,
                              const PropositionSet& props, const EmbeddingTrace& trace,
                              EmbeddingProvider& text_encoder, DetectorBackend& backend,
                              const ScenarioSpec* ground_truth = nullptr) {
  RunResult res;
  const int T = trace.frame_count;
  const auto& lat = config.latency;
  const SamplingConfig& scfg = config.sampling;
  const int nwin = window_count_for(T, scfg.kappa);

  if (config.mode == Mode::Vanilla) {
    // Uniform sampling straight into the answerer; no symbolic stages.
    auto frames = detail::uniform_pick(T, config.budget);
    res.clock.mode = "vanilla";
    res.clock.vqa = lat.l_vqa;
    res.frames_used = static_cast<int>(frames.size());
    res.answer = ground_truth ? synthetic_answer(frames, *ground_truth)
                              : nlohmann::json{{"kind", "uniform"}, {"sampled_frames", frames.size()}};
    res.segments.segments.push_back({0, nwin - 1});
    res.segments.total_windows = nwin;
    return res;
  }

  res.clock.mode = mode_name(config.mode);
  res.clock.lq2tl = lat.l_lq2tl;

  CandidateSet cand;
  KeyframeSet keys;
  std::vector<int> detect;

  if (config.mode == Mode::Lenqa) {
    res.clock.clip_scan = static_cast<double>(T) * lat.l_clip;
    auto prop_vecs = text_encoder.encode_text(props.names());
    auto scores = relevancy_scores(trace, prop_vecs);
    cand = semantic_filter(scores, scfg, T);
    keys = select_keyframes(trace, cand, scfg);
    detect = detection_set(keys, scfg, T);
    if (cand.empty()) {
      // Zero-relevance fallback: ground a uniform set of windows so an
      // answer is still produced.
      res.degraded = true;
      res.diagnostics.push_back("stage-1 pruned every frame; uniform fallback grounding");
      auto windows = detail::uniform_pick(nwin, config.max_uniform_windows);
      for (int w : windows) {
        int center = std::min(T - 1, w * scfg.kappa + scfg.kappa / 2);
        keys.keyframes.push_back(center);
        detect.push_back(center);
      }
      std::sort(keys.keyframes.begin(), keys.keyframes.end());
      std::sort(detect.begin(), detect.end());
    }
  } else {
    // Sequential and plain-batched modes ground every window.
    for (int t = 0; t < T; ++t) {
      cand.frame_indices.push_back(t);
      detect.push_back(t);
    }
    if (T > 0) cand.merged_segments.push_back({0, T - 1});
    keys.keyframes = cand.frame_indices;
  }

  res.sampling_report = sampling_report(scfg, cand, keys, detect, T);
  res.frames_used = static_cast<int>(detect.size());
  res.foi_percent = 100.0 * static_cast<double>(detect.size()) / T;

  const int batch = config.mode == Mode::Sequential ? 1 : lat.batch;
  class BatchCapped : public DetectorBackend {
  public:
    BatchCapped(DetectorBackend& inner, int cap) : inner_(inner), cap_(cap) {}
    std::vector<double> evaluate_batch(const WindowSpan& w,
                                       const std::vector<std::string>& p) override {
      return inner_.evaluate_batch(w, p);
    }
    int max_batch() const override { return cap_; }
    double pass_cost() const override { return inner_.pass_cost(); }

  private:
    DetectorBackend& inner_;
    int cap_;
  } capped(backend, batch);

  DetectionMatrix matrix = ground_detections(capped, T, detect, props, scfg, keys);
  for (const auto& d : matrix.diagnostics) res.diagnostics.push_back(d);
  if (!matrix.failed_windows.empty()) res.degraded = true;

  res.calls = measured_call_count(matrix, batch);
  double per_pass = config.mode == Mode::Sequential ? lat.l_prop : lat.l_vlm;
  res.clock.grounding = static_cast<double>(res.calls.backend_passes) * per_pass;

  VideoAutomaton automaton = build_automaton(matrix);
  res.clock.mc = lat.l_mc;
  res.profile = check(automaton, formula, config.checker.b);

  auto opts = config.checker.segment_options();
  res.segments = config.multi_segment
                     ? extract_multi_segments(res.profile, automaton, formula, opts)
                     : extract_primary_segment(res.profile, automaton, formula, opts);
  if (res.segments.fallback) {
    res.degraded = true;
    res.diagnostics.push_back("no window reached theta; whole-video fallback segment");
  }

  auto pool = detail::segment_frames(res.segments, automaton);
  auto picks = detail::uniform_pick(static_cast<int>(pool.size()), config.budget);
  std::vector<int> sampled;
  sampled.reserve(picks.size());
  for (int i : picks) sampled.push_back(pool[static_cast<size_t>(i)]);

  res.clock.vqa = lat.l_vqa;
  res.answer = ground_truth
                   ? synthetic_answer(sampled, *ground_truth)
                   : nlohmann::json{{"kind", "segments"}, {"sampled_frames", sampled.size()}};
  return res;
}

// ---------------------------------------------------------------------------
// Benchmark harness

struct BenchRow {
  double video_seconds = 0.0;
  long frame_count = 0;
  std::string mode;
  int frames_used = 0;
  double foi_percent = 0.0;
  double completion_seconds = 0.0;
  double speedup_vs_sequential = 0.0;

  nlohmann::json to_json() const {
    return {{"video_seconds", video_seconds},
            {"frames", frame_count},
            {"mode", mode},
            {"frames_used", frames_used},
            {"foi_percent", foi_percent},
            {"completion_seconds", completion_seconds},
            {"speedup_vs_sequential", speedup_vs_sequential}};
  }
};

/// Synthetic workload whose event coverage shrinks with duration, mirroring
/// the way long videos carry proportionally less query-relevant content.
inline ScenarioSpec bench_scenario(long frame_count, double event_density, uint64_t seed) {
  ScenarioSpec s;
  s.frame_count = static_cast<int>(frame_count);
  s.dim = 16;
  s.fps = 1.0;
  s.background_similarity = 0.05;
  const int k = frame_count < 100 ? 2 : 4;  // event count
  long event_len = std::max<long>(1, static_cast<long>(event_density * frame_count / k));
  std::mt19937_64 rng(seed);
  for (int i = 0; i < k; ++i) {
    long slot = frame_count / k;
    long start = i * slot + static_cast<long>(detail::uniform01(rng) * std::max<long>(1, slot - event_len));
    long end = std::min<long>(frame_count - 1, start + event_len - 1);
    ScenarioEvent e;
    e.proposition = (i % 2 == 0) ? "p1" : "p2";
    e.start_frame = static_cast<int>(start);
    e.end_frame = static_cast<int>(end);
    e.similarity = 0.5;
    s.events.push_back(e);
  }
  return s;
}

/// Event density schedule for the bench grid, decreasing in duration.
inline double bench_density(double video_seconds) {
  double d = 0.85 - 0.1186 * std::log(std::max(1.0, video_seconds / 15.0));
  return std::clamp(d, 0.10, 0.90);
}

/// Run the pipeline on generated scenarios across a duration grid and
/// report frames used, FOI share, virtual completion time, and speedup
/// against the sequential baseline.
inline std::vector<BenchRow> bench(const PipelineConfig& base_config,
                                   const std::vector<double>& video_seconds,
                                   const std::vector<Mode>& modes, double fps = 1.0) {
  std::vector<BenchRow> rows;
  ParsedSpec spec = parse_spec("(F p1) & (F p2)");
  for (double secs : video_seconds) {
    long T = std::max<long>(1, static_cast<long>(secs * fps));
    ScenarioSpec scenario = bench_scenario(T, bench_density(secs), base_config.seed + 1);
    SyntheticProvider provider(scenario, base_config.seed);
    SyntheticDetector detector(scenario, base_config.latency.batch);

    double sequential_time = 0.0;
    {
      PipelineConfig c = base_config;
      c.mode = Mode::Sequential;
      c.latency.frame_count = T;
      c.latency.p_count = 2;
      auto r = run_pipeline(c, spec.formula, spec.props, provider.trace(), provider, detector,
                            &scenario);
      sequential_time = r.clock.total();
    }

    for (Mode m : modes) {
      PipelineConfig c = base_config;
      c.mode = m;
      c.latency.frame_count = T;
      c.latency.p_count = 2;
      auto r = run_pipeline(c, spec.formula, spec.props, provider.trace(), provider, detector,
                            &scenario);
      BenchRow row;
      row.video_seconds = secs;
      row.frame_count = T;
      row.mode = mode_name(m);
      row.frames_used = r.frames_used;
      row.foi_percent = r.foi_percent;
      row.completion_seconds = r.clock.total();
      row.speedup_vs_sequential =
          row.completion_seconds > 0 ? sequential_time / row.completion_seconds : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

/// Table-shaped ablation at a fixed workload: sequential baseline, batched
/// grounding, and adaptive window retention, all from the analytical model.
inline nlohmann::json ablation_report(const LatencyParams& calibrated, long adaptive_windows) {
  LatencyParams p = calibrated;
  long windows = p.windows();
  nlohmann::json rows = nlohmann::json::array();

  LatencyEstimate seq = sequential_latency(p);
  rows.push_back({{"mode", "sequential_baseline"},
                  {"windows", windows},
                  {"vlm_calls", static_cast<double>(windows) * p.p_count},
                  {"latency", seq.total()}});

  double batched = static_cast<double>(windows) * p.l_vlm + p.fixed();
  rows.push_back({{"mode", "batched"},
                  {"windows", windows},
                  {"vlm_calls", windows},
                  {"latency", batched}});

  double adaptive = static_cast<double>(adaptive_windows) * p.l_vlm + p.fixed() +
                    static_cast<double>(p.frame_count) * p.l_clip;
  rows.push_back({{"mode", "adaptive"},
                  {"windows", adaptive_windows},
                  {"vlm_calls", adaptive_windows},
                  {"latency", adaptive}});
  return rows;
}

inline std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "video_s    frames  mode        frames_used  foi%     time_s    speedup\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-10.0f %-7ld %-11s %-12d %-8.2f %-9.2f %.2fx\n",
                  r.video_seconds, r.frame_count, r.mode.c_str(), r.frames_used, r.foi_percent,
                  r.completion_seconds, r.speedup_vs_sequential);
    os << buf;
  }
  return os.str();
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "video_seconds,frames,mode,frames_used,foi_percent,completion_seconds,speedup\n";
  for (const auto& r : rows) {
    os << r.video_seconds << "," << r.frame_count << "," << r.mode << "," << r.frames_used << ","
       << r.foi_percent << "," << r.completion_seconds << "," << r.speedup_vs_sequential << "\n";
  }
  return os.str();
}

}  // namespace lenus
