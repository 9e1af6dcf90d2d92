#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace lenus {

class LatencyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Calibrated per-stage costs and workload shape for the analytical model.
/// p_count may be fractional to represent a per-query average.
struct LatencyParams {
  double l_lq2tl = 2.0;   // query-to-TL translation, s
  double l_mc = 0.5;      // model checking, s
  double l_vqa = 4.15;    // final answering, s
  double l_prop = 0.0;    // per proposition-window pair, s (sequential)
  double l_clip = 0.001;  // per frame scanned, s
  double l_vlm = 0.0;     // per batched window pass, s
  int kappa = 16;         // frames per window
  double p_count = 5.0;   // |P|
  int batch = 8;          // B
  long frame_count = 0;   // T
  double alpha = 1.0;     // Stage-1 retention
  double rho = 1.0;       // Stage-2 retention

  double fixed() const { return l_lq2tl + l_mc + l_vqa; }
  long windows() const { return (frame_count + kappa - 1) / kappa; }

  void validate() const {
    if (l_lq2tl < 0 || l_mc < 0 || l_vqa < 0 || l_prop < 0 || l_clip < 0 || l_vlm < 0)
      throw LatencyError("latency params: stage costs must be nonnegative");
    if (kappa < 1 || batch < 1 || p_count < 1 || frame_count < 1)
      throw LatencyError("latency params: kappa, batch, p_count, frame_count must be >= 1");
    if (alpha < 0 || alpha > 1 || rho < 0 || rho > 1)
      throw LatencyError("latency params: retention ratios must be in [0, 1]");
  }

  /// Defaults calibrated to the global-average workload: the sequential
  /// baseline totals 553.68 s at 268 windows x 4.5 propositions, and the
  /// batched pass cost matches the 171.05 s batched total at the same
  /// workload. Window count 268 at kappa 16 gives T = 4288 frames.
  static LatencyParams table_calibrated() {
    LatencyParams p;
    p.kappa = 16;
    p.p_count = 4.5;
    p.frame_count = 268L * 16;
    p.batch = 8;
    p.l_prop = (553.68 - p.fixed()) / (268.0 * 4.5);
    p.l_vlm = (171.05 - p.fixed()) / 268.0;
    p.l_clip = 0.001;
    return p;
  }
};

/// Per-stage seconds of one predicted or simulated run.
struct LatencyEstimate {
  double lq2tl = 0.0;
  double clip_scan = 0.0;
  double grounding = 0.0;
  double mc = 0.0;
  double vqa = 0.0;
  std::string mode;

  double total() const { return lq2tl + clip_scan + grounding + mc + vqa; }

  nlohmann::json to_json() const {
    return {{"lq2tl", lq2tl},     {"clip_scan", clip_scan}, {"grounding", grounding},
            {"mc", mc},           {"vqa", vqa},             {"total", total()},
            {"mode", mode}};
  }
};

/// Baseline: ceil(T/kappa) * |P| * L_prop grounding, no embedding scan.
inline LatencyEstimate sequential_latency(const LatencyParams& p) {
  p.validate();
  LatencyEstimate e;
  e.mode = "sequential_baseline";
  e.lq2tl = p.l_lq2tl;
  e.mc = p.l_mc;
  e.vqa = p.l_vqa;
  e.grounding = static_cast<double>(p.windows()) * p.p_count * p.l_prop;
  return e;
}

/// Video length beyond which sequential grounding dominates the fixed
/// overhead: T_crit = kappa * L_fixed / (|P| * L_prop).
inline double critical_length(const LatencyParams& p) {
  if (p.p_count * p.l_prop <= 0.0)
    throw LatencyError("critical_length: |P| * L_prop must be positive");
  return p.kappa * p.fixed() / (p.p_count * p.l_prop);
}

/// Upper bound on the optimized pipeline:
/// L <= L_lq2tl + T*L_clip + ceil(alpha*rho*T/kappa)*L_vlm + L_mc + L_vqa.
inline LatencyEstimate lenqa_bound(const LatencyParams& p) {
  p.validate();
  LatencyEstimate e;
  e.mode = "lenqa_bound";
  e.lq2tl = p.l_lq2tl;
  e.mc = p.l_mc;
  e.vqa = p.l_vqa;
  e.clip_scan = static_cast<double>(p.frame_count) * p.l_clip;
  e.grounding = std::ceil(p.alpha * p.rho * p.frame_count / p.kappa) * p.l_vlm;
  return e;
}

struct EfficiencyResult {
  bool feasible = false;
  double max_alpha_rho = 0.0;
};

/// Retention budget for a latency target, using the linear (un-ceiled)
/// form: alpha*rho <= (L_max - L_fixed - T*L_clip) / (N_win * L_vlm).
/// A negative bound means no retention level can meet the target.
inline EfficiencyResult efficiency_condition(const LatencyParams& p, double l_max) {
  p.validate();
  double denom = static_cast<double>(p.windows()) * p.l_vlm;
  if (denom <= 0.0) throw LatencyError("efficiency_condition: N_win * L_vlm must be positive");
  EfficiencyResult r;
  r.max_alpha_rho = (l_max - p.fixed() - static_cast<double>(p.frame_count) * p.l_clip) / denom;
  r.feasible = r.max_alpha_rho >= 0.0 && p.alpha * p.rho <= r.max_alpha_rho;
  return r;
}

/// Theoretical grounding-stage speedup over the sequential baseline:
/// |P|/(alpha*rho) * 1 / (1 + T*L_clip / (N_win * L_vlm)).
inline double speedup(const LatencyParams& p) {
  p.validate();
  if (p.alpha * p.rho <= 0.0) throw LatencyError("speedup: retention must be positive");
  double clip_term =
      static_cast<double>(p.frame_count) * p.l_clip / (static_cast<double>(p.windows()) * p.l_vlm);
  return p.p_count / (p.alpha * p.rho) / (1.0 + clip_term);
}

/// Virtual-clock accumulation of the optimized pipeline at the parameter
/// level: one batched pass group per processed window. Matches what the
/// full pipeline's clock reports for the same workload shape.
inline LatencyEstimate simulated_estimate(const LatencyParams& p) {
  p.validate();
  LatencyEstimate e;
  e.mode = "simulated";
  e.lq2tl = p.l_lq2tl;
  e.mc = p.l_mc;
  e.vqa = p.l_vqa;
  e.clip_scan = static_cast<double>(p.frame_count) * p.l_clip;
  long processed = static_cast<long>(std::ceil(p.alpha * p.rho * static_cast<double>(p.windows())));
  long passes_per_window = (static_cast<long>(std::ceil(p.p_count)) + p.batch - 1) / p.batch;
  for (long w = 0; w < processed; ++w) e.grounding += static_cast<double>(passes_per_window) * p.l_vlm;
  return e;
}

}  // namespace lenus
