#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "embedding.hpp"

namespace lenus {

struct SamplingConfig {
  double tau_s = 0.21;  // semantic threshold
  double tau_r = 0.9;   // redundancy threshold
  int w = 4;            // Stage-1 context radius, frames
  int delta = 2;        // detection neighborhood radius, frames
  int kappa = 16;       // window size, frames
};

/// Frames surviving Stage-1 semantic filtering, as both a flat index list
/// and the merged segments that produced it.
struct CandidateSet {
  std::vector<int> frame_indices;                 // strictly increasing
  std::vector<std::array<int, 2>> merged_segments;  // disjoint, sorted, inclusive

  bool empty() const { return frame_indices.empty(); }
};

/// Stage-2 result: kept keyframes plus, for every discarded candidate, the
/// base keyframe whose labels it inherits.
struct KeyframeSet {
  std::vector<int> keyframes;   // strictly increasing
  std::map<int, int> base_of;   // discarded candidate frame -> base keyframe
};

/// s_t = max over propositions of sim(f_t, p_j).
inline std::vector<double> relevancy_scores(const EmbeddingTrace& trace,
                                            const std::vector<std::vector<double>>& prop_embeddings) {
  if (trace.frame_count < 1) throw EmbeddingError("relevancy_scores: empty trace");
  if (prop_embeddings.empty()) throw EmbeddingError("relevancy_scores: no propositions");
  for (const auto& p : prop_embeddings)
    if (static_cast<int>(p.size()) != trace.dim)
      throw EmbeddingError("relevancy_scores: proposition embedding dimension mismatch");
  std::vector<double> scores(static_cast<size_t>(trace.frame_count));
  for (int t = 0; t < trace.frame_count; ++t) {
    double best = -1.0;
    auto row = trace.frame(t);
    for (const auto& p : prop_embeddings) best = std::max(best, similarity(row, p));
    scores[static_cast<size_t>(t)] = best;
  }
  return scores;
}

/// Seeds are frames with score strictly above tau_s; each expands to
/// [t-w, t+w] clipped to [0, T); intervals that overlap or share an
/// endpoint merge.
inline CandidateSet semantic_filter(const std::vector<double>& scores, const SamplingConfig& cfg,
                                    int frame_count) {
  CandidateSet out;
  std::vector<std::array<int, 2>> raw;
  for (int t = 0; t < static_cast<int>(scores.size()); ++t) {
    if (scores[static_cast<size_t>(t)] > cfg.tau_s) {
      int lo = std::max(0, t - cfg.w);
      int hi = std::min(frame_count - 1, t + cfg.w);
      raw.push_back({lo, hi});
    }
  }
  if (raw.empty()) return out;
  // Seeds arrive in temporal order, so the expanded intervals are sorted by
  // start already; merge intervals that overlap or share an endpoint.
  // Exactly-adjacent intervals like [2,4] and [5,6] stay separate.
  for (const auto& seg : raw) {
    if (!out.merged_segments.empty() && seg[0] <= out.merged_segments.back()[1]) {
      out.merged_segments.back()[1] = std::max(out.merged_segments.back()[1], seg[1]);
    } else {
      out.merged_segments.push_back(seg);
    }
  }
  for (const auto& seg : out.merged_segments)
    for (int t = seg[0]; t <= seg[1]; ++t) out.frame_indices.push_back(t);
  return out;
}

/// Sequential keyframe selection against a rolling base: the first candidate
/// always enters; a later frame enters iff its similarity to the current
/// base drops below tau_r, and then becomes the new base.
inline KeyframeSet select_keyframes(const EmbeddingTrace& trace, const CandidateSet& cand,
                                    const SamplingConfig& cfg) {
  KeyframeSet out;
  if (cand.empty()) return out;
  int base = cand.frame_indices.front();
  out.keyframes.push_back(base);
  for (size_t i = 1; i < cand.frame_indices.size(); ++i) {
    int t = cand.frame_indices[i];
    double r = similarity(trace.frame(base), trace.frame(t));
    if (r < cfg.tau_r) {
      out.keyframes.push_back(t);
      base = t;
    } else {
      out.base_of[t] = base;
    }
  }
  return out;
}

/// F_detect: union of [k-delta, k+delta] over keyframes, clipped and sorted.
inline std::vector<int> detection_set(const KeyframeSet& keys, const SamplingConfig& cfg,
                                      int frame_count) {
  std::vector<int> out;
  for (int k : keys.keyframes) {
    int lo = std::max(0, k - cfg.delta);
    int hi = std::min(frame_count - 1, k + cfg.delta);
    for (int t = lo; t <= hi; ++t) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct RetentionStats {
  double alpha = 0.0;  // |F_cand| / T
  double rho = 0.0;    // |K| / |F_cand|, 0 when F_cand is empty
};

inline RetentionStats retention_stats(const CandidateSet& cand, const KeyframeSet& keys,
                                      int frame_count) {
  if (frame_count < 1) throw std::invalid_argument("retention_stats: frame_count must be >= 1");
  RetentionStats s;
  s.alpha = static_cast<double>(cand.frame_indices.size()) / frame_count;
  s.rho = cand.empty() ? 0.0
                       : static_cast<double>(keys.keyframes.size()) / cand.frame_indices.size();
  return s;
}

inline nlohmann::json sampling_report(const SamplingConfig& cfg, const CandidateSet& cand,
                                      const KeyframeSet& keys, const std::vector<int>& detect_set,
                                      int frame_count) {
  RetentionStats s = retention_stats(cand, keys, frame_count);
  nlohmann::json j;
  j["T"] = frame_count;
  j["tau_s"] = cfg.tau_s;
  j["tau_r"] = cfg.tau_r;
  j["w"] = cfg.w;
  j["delta"] = cfg.delta;
  j["candidate_segments"] = nlohmann::json::array();
  for (const auto& seg : cand.merged_segments)
    j["candidate_segments"].push_back({seg[0], seg[1]});
  j["keyframes"] = keys.keyframes;
  j["alpha"] = s.alpha;
  j["rho"] = s.rho;
  j["foi_percent"] = 100.0 * static_cast<double>(detect_set.size()) / frame_count;
  return j;
}

}  // namespace lenus
