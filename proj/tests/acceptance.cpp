// Acceptance gate: one check per release criterion, each printing a single
// pass/fail line. The process exits nonzero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <lenus/automaton.hpp>
#include <lenus/checker.hpp>
#include <lenus/detection.hpp>
#include <lenus/embedding.hpp>
#include <lenus/latency.hpp>
#include <lenus/pipeline.hpp>
#include <lenus/sampling.hpp>
#include <lenus/tlspec.hpp>

#include "oracles.hpp"

using namespace lenus;

namespace {

struct Criterion {
  std::string name;
  std::function<void(std::ostringstream&)> run;  // throws or writes detail on failure
};

class Failure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure(what);
}

VideoAutomaton from_lambda(const std::vector<std::vector<double>>& lambda) {
  VideoAutomaton a;
  a.kappa = 16;
  a.state_count = static_cast<int>(lambda.size());
  a.frame_count = a.state_count * a.kappa;
  size_t k = lambda.empty() ? 0 : lambda[0].size();
  for (size_t i = 0; i < k; ++i) a.propositions.push_back("p" + std::to_string(i + 1));
  for (const auto& row : lambda)
    for (double x : row) a.labels.push_back(x);
  return a;
}

// --- 1: probabilistic checker agrees with exhaustive enumeration ------------

void criterion_checker_exact(std::ostringstream& detail) {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    int n = 1 + static_cast<int>(rng() % 3);
    int k = 1 + static_cast<int>(rng() % 2);
    std::vector<std::vector<double>> lambda(static_cast<size_t>(n),
                                            std::vector<double>(static_cast<size_t>(k)));
    for (auto& row : lambda)
      for (auto& x : row) x = oracles::uniform01(rng);
    auto f = oracles::random_formula(rng, k, 3);
    auto prof = check(from_lambda(lambda), f);
    for (int t = 0; t < n; ++t) {
      double expect = oracles::brute_force_probability(f, lambda, static_cast<size_t>(t));
      worst = std::max(worst, std::fabs(prof.p[static_cast<size_t>(t)] - expect));
    }
  }
  detail << "max |error| = " << worst;
  require(worst <= 1e-9, "checker deviates from brute force by " + std::to_string(worst));
}

// --- 2: closed-form speedup at the reference operating point ----------------

void criterion_speedup_form(std::ostringstream& detail) {
  LatencyParams p;
  p.p_count = 5;
  p.alpha = 0.05;
  p.rho = 1.0;
  p.l_clip = 0.0;
  p.l_vlm = 0.5;
  p.frame_count = 1600;
  double s = speedup(p);
  detail << "speedup = " << s;
  require(std::fabs(s - 100.0) <= 1e-12, "expected exactly 100x");
}

// --- 3: batch planning and the batched/sequential cost ratio ----------------

void criterion_batching(std::ostringstream& detail) {
  for (int P = 1; P <= 32; ++P)
    for (int B = 1; B <= 32; ++B)
      require(static_cast<int>(plan_batches(P, B).size()) == (P + B - 1) / B,
              "plan_batches wrong at P=" + std::to_string(P) + " B=" + std::to_string(B));

  // With equal per-pass costs and a batch that fits every proposition, the
  // batched grounding bill is exactly the sequential bill divided by |P|.
  ScenarioSpec s;
  s.frame_count = 320;
  s.dim = 16;
  s.events.push_back({"p1", 40, 90, 0.5});
  const double cost = 0.3;
  for (int P : {1, 2, 3, 5, 8}) {
    PropositionSet props;
    for (int i = 0; i < P; ++i) props.add("p" + std::to_string(i + 1));
    SamplingConfig cfg;
    KeyframeSet keys;
    keys.keyframes = {50, 150, 250};
    auto detect = detection_set(keys, cfg, s.frame_count);
    SyntheticDetector backend(s, P);
    auto m = ground_detections(backend, s.frame_count, detect, props, cfg, keys);
    double batched = static_cast<double>(measured_call_count(m, P).backend_passes) * cost;
    double sequential =
        static_cast<double>(measured_call_count(m, P, true).backend_passes) * cost;
    require(std::fabs(batched - sequential / P) <= 1e-9,
            "cost ratio broken at P=" + std::to_string(P));
  }
  detail << "grid 32x32 + exact 1/|P| ratio";
}

// --- 4: calibrated workload totals ------------------------------------------

void criterion_calibration(std::ostringstream& detail) {
  auto j = ablation_report(LatencyParams::table_calibrated(), 56);
  double seq = j[0]["latency"].get<double>();
  double bat = j[1]["latency"].get<double>();
  double ada = j[2]["latency"].get<double>();
  detail << "sequential = " << seq << " s, batched = " << bat << " s, adaptive = " << ada << " s";
  require(std::fabs(seq - 553.68) <= 1e-6, "sequential total off calibration");
  require(std::fabs(bat - 171.05) <= 1e-6, "batched total off calibration");
  require(std::fabs(ada - 45.28) / 45.28 <= 0.15, "adaptive total outside 15% of 45.28");
  require(ada < 60.0, "adaptive total not under a minute");
}

// --- 5: speedup grows with video length -------------------------------------

void criterion_bench_scaling(std::ostringstream& detail) {
  PipelineConfig cfg;
  auto rows = bench(cfg, {15.0, 60.0, 600.0, 3600.0}, {Mode::Lenqa});
  require(rows.size() == 4, "unexpected bench row count");
  detail << "speedups:";
  double prev = 0.0;
  for (const auto& r : rows) {
    detail << " " << r.video_seconds << "s=" << r.speedup_vs_sequential << "x";
    require(r.speedup_vs_sequential > prev, "speedup not strictly increasing");
    prev = r.speedup_vs_sequential;
  }
  require(rows.back().speedup_vs_sequential > 10.0, "long-video speedup below 10x");
}

// --- 6: two-stage sampling invariants ----------------------------------------

void criterion_sampling_invariants(std::ostringstream&) {
  std::mt19937_64 rng(606);
  for (int iter = 0; iter < 500; ++iter) {
    ScenarioSpec s;
    s.frame_count = 40 + static_cast<int>(rng() % 200);
    s.dim = 12;
    int start = static_cast<int>(rng() % (s.frame_count / 2));
    int len = 1 + static_cast<int>(rng() % 30);
    s.events.push_back({"p1", start, std::min(s.frame_count - 1, start + len),
                        0.3 + 0.4 * oracles::uniform01(rng)});
    auto trace = synthetic_trace(s, rng());

    SamplingConfig cfg;
    cfg.tau_s = 0.05 + 0.4 * oracles::uniform01(rng);
    cfg.tau_r = 0.4 + 0.59 * oracles::uniform01(rng);
    cfg.w = static_cast<int>(rng() % 6);
    cfg.delta = static_cast<int>(rng() % 4);

    SyntheticProvider provider(s, 0);
    auto scores = relevancy_scores(trace, provider.encode_text({"p1"}));
    auto cand = semantic_filter(scores, cfg, trace.frame_count);
    auto keys = select_keyframes(trace, cand, cfg);
    auto detect = detection_set(keys, cfg, trace.frame_count);

    // Every above-threshold frame is a candidate; candidates stay in range
    // and strictly increase.
    for (int t = 0; t < trace.frame_count; ++t)
      if (scores[static_cast<size_t>(t)] > cfg.tau_s)
        require(std::binary_search(cand.frame_indices.begin(), cand.frame_indices.end(), t),
                "seed frame missing from candidates");
    for (size_t i = 1; i < cand.frame_indices.size(); ++i)
      require(cand.frame_indices[i] > cand.frame_indices[i - 1], "candidates not increasing");
    if (!cand.empty())
      require(cand.frame_indices.front() >= 0 &&
                  cand.frame_indices.back() < trace.frame_count,
              "candidate out of range");

    // Stage-2 equals the rolling-base reference and keeps a subset.
    require(keys.keyframes == oracles::reference_keyframes(trace, cand.frame_indices, cfg.tau_r),
            "keyframes deviate from reference recurrence");
    for (int kf : keys.keyframes)
      require(std::binary_search(cand.frame_indices.begin(), cand.frame_indices.end(), kf),
              "keyframe outside candidate set");

    // Detection set covers every keyframe and stays in range.
    for (int kf : keys.keyframes)
      require(std::binary_search(detect.begin(), detect.end(), kf),
              "keyframe missing from detection set");
    if (!detect.empty())
      require(detect.front() >= 0 && detect.back() < trace.frame_count,
              "detection frame out of range");

    auto stats = retention_stats(cand, keys, trace.frame_count);
    require(stats.alpha >= 0.0 && stats.alpha <= 1.0, "alpha out of range");
    require(stats.rho >= 0.0 && stats.rho <= 1.0, "rho out of range");
  }
}

// --- 7: multi-segment retrieval beats the continuous span -------------------

void criterion_multi_segment(std::ostringstream& detail) {
  std::mt19937_64 rng(707);
  int tighter = 0;
  for (int iter = 0; iter < 100; ++iter) {
    ScenarioSpec s;
    s.frame_count = 640;
    s.dim = 16;
    int a0 = 32 + static_cast<int>(rng() % 96);
    int b0 = 420 + static_cast<int>(rng() % 120);
    s.events.push_back({"p1", a0, a0 + 30, 0.5});
    s.events.push_back({"p2", b0, b0 + 30, 0.5});

    auto spec = parse_spec("(F p1) & (F p2)");
    SyntheticProvider provider(s, rng());
    SyntheticDetector detector(s, 8);
    PipelineConfig cfg;
    cfg.latency.frame_count = s.frame_count;
    cfg.latency.p_count = 2;

    cfg.multi_segment = true;
    auto multi = run_pipeline(cfg, spec.formula, spec.props, provider.trace(), provider,
                              detector, &s);
    cfg.multi_segment = false;
    auto single = run_pipeline(cfg, spec.formula, spec.props, provider.trace(), provider,
                               detector, &s);

    require(!multi.degraded, "adaptive run degraded on a well-posed scenario");
    require(multi.answer["hit"].get<bool>(), "answerer missed the evidence");
    require(multi.segments.total_windows <= single.segments.total_windows,
            "multi-segment context larger than the continuous span");
    if (multi.segments.total_windows < single.segments.total_windows) ++tighter;
    double hit_multi = hit_probability(multi.segments.evidence_windows,
                                       multi.segments.total_windows, cfg.budget);
    double hit_single = hit_probability(single.segments.evidence_windows,
                                        single.segments.total_windows, cfg.budget);
    require(hit_multi >= hit_single - 1e-12, "multi-segment hit probability regressed");
  }
  detail << tighter << "/100 scenarios strictly tighter";
  require(tighter >= 90, "multi-segment retrieval rarely tightened the context");
}

// --- 8: determinism and serialization round trips ---------------------------

void criterion_round_trips(std::ostringstream&) {
  ScenarioSpec s;
  s.frame_count = 256;
  s.dim = 16;
  s.events.push_back({"p1", 30, 60, 0.5});
  s.events.push_back({"p2", 180, 210, 0.5});

  // Trace file: float32 storage, re-written bytes are stable.
  auto trace = synthetic_trace(s, 12);
  write_trace("acc_rt.lent", trace);
  auto loaded = read_trace("acc_rt.lent");
  write_trace("acc_rt2.lent", loaded);
  auto loaded2 = read_trace("acc_rt2.lent");
  std::remove("acc_rt.lent");
  std::remove("acc_rt2.lent");
  require(loaded.data == loaded2.data, "trace file round trip unstable");
  for (size_t i = 0; i < trace.data.size(); ++i)
    require(std::fabs(loaded.data[i] - trace.data[i]) <= 1e-6, "trace precision loss too large");

  // Scenario and pipeline-config JSON round trips.
  require(ScenarioSpec::from_json(s.to_json()).to_json() == s.to_json(),
          "scenario JSON round trip changed content");
  PipelineConfig cfg;
  cfg.seed = 5;
  require(PipelineConfig::from_json(cfg.to_json()).to_json() == cfg.to_json(),
          "config JSON round trip changed content");

  // Automaton text round trip through a grounded run.
  auto spec = parse_spec("(F p1) & (F p2)");
  SyntheticProvider provider(s, 12);
  SyntheticDetector detector(s, 8);
  SamplingConfig scfg;
  auto scores = relevancy_scores(provider.trace(), provider.encode_text(spec.props.names()));
  auto cand = semantic_filter(scores, scfg, s.frame_count);
  auto keys = select_keyframes(provider.trace(), cand, scfg);
  auto detect = detection_set(keys, scfg, s.frame_count);
  auto matrix = ground_detections(detector, s.frame_count, detect, spec.props, scfg, keys);
  auto automaton = build_automaton(matrix);
  require(import_automaton(export_automaton(automaton)) == automaton,
          "automaton text round trip changed the model");
  require(build_automaton(DetectionMatrix::from_json(matrix.to_json())) == automaton,
          "matrix JSON round trip changed the model");

  // Full pipeline determinism across repeated runs.
  PipelineConfig pcfg;
  pcfg.latency.frame_count = s.frame_count;
  pcfg.latency.p_count = 2;
  auto r1 = run_pipeline(pcfg, spec.formula, spec.props, provider.trace(), provider, detector, &s);
  auto r2 = run_pipeline(pcfg, spec.formula, spec.props, provider.trace(), provider, detector, &s);
  require(r1.to_json() == r2.to_json(), "pipeline runs are not deterministic");
}

// --- 9: latency bound soundness and the critical-length law -----------------

void criterion_latency_laws(std::ostringstream& detail) {
  std::mt19937_64 rng(909);
  for (int iter = 0; iter < 1000; ++iter) {
    LatencyParams p;
    p.kappa = 4 + static_cast<int>(rng() % 29);
    p.frame_count = static_cast<long>(1 + rng() % 500) * p.kappa;
    p.p_count = 1 + static_cast<int>(rng() % 8);
    p.batch = static_cast<int>(p.p_count) + static_cast<int>(rng() % 8);  // B >= |P|
    p.l_vlm = 0.05 + oracles::uniform01(rng);
    p.l_prop = 0.05 + oracles::uniform01(rng);
    p.l_clip = 0.002 * oracles::uniform01(rng);
    p.alpha = oracles::uniform01(rng);
    p.rho = oracles::uniform01(rng);

    // The simulated pipeline never exceeds the analytical bound.
    double sim = simulated_estimate(p).total();
    double bound = lenqa_bound(p).total();
    require(sim <= bound + 1e-9, "simulated run exceeded the bound");

    // Efficiency condition agrees with the linear form of the bound.
    double l_max = p.fixed() + oracles::uniform01(rng) * 100.0;
    auto eff = efficiency_condition(p, l_max);
    double linear = p.fixed() + static_cast<double>(p.frame_count) * p.l_clip +
                    p.alpha * p.rho * static_cast<double>(p.windows()) * p.l_vlm;
    require(eff.feasible == (linear <= l_max + 1e-12),
            "efficiency condition disagrees with the linear bound");

    // Critical length: bisection on the continuous grounding-vs-fixed
    // crossing lands on the closed form.
    double lo = 1e-9, hi = 1e12;
    auto excess = [&](double T) { return T / p.kappa * p.p_count * p.l_prop - p.fixed(); };
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    double tcrit = critical_length(p);
    require(std::fabs(0.5 * (lo + hi) - tcrit) <= 1e-6 * tcrit,
            "bisection disagrees with the critical-length formula");
  }
  detail << "1000 random parameter draws";
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"checker matches exhaustive enumeration (tol 1e-9)", criterion_checker_exact},
      {"closed-form speedup is exactly 100x at |P|=5, retention 0.05", criterion_speedup_form},
      {"batch planning and exact 1/|P| grounding-cost ratio", criterion_batching},
      {"calibrated totals: 553.68 s / 171.05 s / adaptive under 60 s", criterion_calibration},
      {"speedup strictly grows with duration, above 10x at 3600 s", criterion_bench_scaling},
      {"two-stage sampling invariants over 500 random traces", criterion_sampling_invariants},
      {"multi-segment retrieval never widens the evidence context", criterion_multi_segment},
      {"determinism and serialization round trips", criterion_round_trips},
      {"latency bound soundness and critical-length law, 1000 draws", criterion_latency_laws},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    std::ostringstream detail;
    std::string verdict = "PASS";
    std::string reason;
    try {
      criteria[i].run(detail);
    } catch (const std::exception& e) {
      verdict = "FAIL";
      reason = e.what();
      ++failures;
    }
    std::printf("criterion %zu [%s]: %s%s%s%s%s\n", i + 1, criteria[i].name.c_str(),
                verdict.c_str(), detail.str().empty() ? "" : " (",
                detail.str().c_str(), detail.str().empty() ? "" : ")",
                reason.empty() ? "" : ("; " + reason).c_str());
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
