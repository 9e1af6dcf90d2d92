#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "automaton.hpp"
#include "tlspec.hpp"

namespace lenus {

class CheckerError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Per-window suffix-satisfaction probabilities for one query.
struct SatisfactionProfile {
  std::vector<double> p;         // P_t, suffix satisfaction from window t
  std::vector<double> smoothed;  // F_b(P_t)
  double p_sat = 0.0;            // P_0
  double b = 10.0;
  double theta = 0.5;
};

struct SegmentOptions {
  double theta = 0.5;        // decision threshold on smoothed P_t
  double theta_label = 0.5;  // boolean labeling threshold on lambda
  int alpha_ext = 2;         // windows prepended to each segment
  int beta_ext = 2;          // windows appended to each segment
};

/// Disjoint ordered window intervals retrieved as evidence.
struct SegmentSet {
  std::vector<std::array<int, 2>> segments;  // inclusive window intervals
  bool fallback = false;                     // whole video, nothing reached theta
  int evidence_windows = 0;                  // |E|
  int total_windows = 0;                     // |V_total|
  int alpha_ext = 0;
  int beta_ext = 0;
  int core_start = -1;  // unextended satisfying interval
  int core_end = -1;
};

namespace progression {

// Interned formula arena with boolean simplification. Progression closure
// stays small for the formula sizes this engine accepts.

enum class Op : uint8_t { True, False, Atom, Not, And, Or, Eventually, Always, Until, Next };

struct Node {
  Op op;
  int atom = -1;  // Atom: bit position in the symbol mask
  int a = -1;
  int b = -1;
};

class Engine {
public:
  static constexpr int kTrue = 0;
  static constexpr int kFalse = 1;

  Engine() {
    nodes_.push_back({Op::True, -1, -1, -1});
    nodes_.push_back({Op::False, -1, -1, -1});
  }

  int atom(int bit) { return intern({Op::Atom, bit, -1, -1}); }

  int mk_not(int x) {
    if (x == kTrue) return kFalse;
    if (x == kFalse) return kTrue;
    if (nodes_[static_cast<size_t>(x)].op == Op::Not) return nodes_[static_cast<size_t>(x)].a;
    return intern({Op::Not, -1, x, -1});
  }

  int mk_and(int x, int y) {
    if (x == kFalse || y == kFalse) return kFalse;
    if (x == kTrue) return y;
    if (y == kTrue) return x;
    if (x == y) return x;
    if (x > y) std::swap(x, y);  // commutative: canonical child order
    return intern({Op::And, -1, x, y});
  }

  int mk_or(int x, int y) {
    if (x == kTrue || y == kTrue) return kTrue;
    if (x == kFalse) return y;
    if (y == kFalse) return x;
    if (x == y) return x;
    if (x > y) std::swap(x, y);
    return intern({Op::Or, -1, x, y});
  }

  int mk_eventually(int x) {
    if (x == kTrue || x == kFalse) return x;
    return intern({Op::Eventually, -1, x, -1});
  }

  int mk_always(int x) {
    if (x == kTrue || x == kFalse) return x;
    return intern({Op::Always, -1, x, -1});
  }

  int mk_until(int x, int y) {
    if (y == kTrue || y == kFalse) return y;
    if (x == kFalse) return y;  // false U b == b holds now
    if (x == kTrue) return mk_eventually(y);
    return intern({Op::Until, -1, x, y});
  }

  int mk_next(int x) {
    // No constant folding for X true: the strong next fails at the last
    // window regardless of the operand.
    if (x == kFalse) return kFalse;
    return intern({Op::Next, -1, x, -1});
  }

  /// Obligation on the remaining trace after reading `symbol` at a non-final
  /// window.
  int progress(int f, uint32_t symbol) {
    uint64_t key = (static_cast<uint64_t>(f) << 32) | symbol;
    auto it = prog_memo_.find(key);
    if (it != prog_memo_.end()) return it->second;
    const Node n = nodes_[static_cast<size_t>(f)];
    int r;
    switch (n.op) {
      case Op::True: r = kTrue; break;
      case Op::False: r = kFalse; break;
      case Op::Atom: r = (symbol >> n.atom) & 1u ? kTrue : kFalse; break;
      case Op::Not: r = mk_not(progress(n.a, symbol)); break;
      case Op::And: r = mk_and(progress(n.a, symbol), progress(n.b, symbol)); break;
      case Op::Or: r = mk_or(progress(n.a, symbol), progress(n.b, symbol)); break;
      case Op::Next: r = n.a; break;
      case Op::Eventually: r = mk_or(progress(n.a, symbol), f); break;
      case Op::Always: r = mk_and(progress(n.a, symbol), f); break;
      case Op::Until:
        r = mk_or(progress(n.b, symbol), mk_and(progress(n.a, symbol), f));
        break;
    }
    prog_memo_.emplace(key, r);
    return r;
  }

  /// Truth at the final window: Next is false, Eventually and Until must
  /// witness immediately, Always reduces to the current symbol.
  bool eval_last(int f, uint32_t symbol) const {
    const Node& n = nodes_[static_cast<size_t>(f)];
    switch (n.op) {
      case Op::True: return true;
      case Op::False: return false;
      case Op::Atom: return (symbol >> n.atom) & 1u;
      case Op::Not: return !eval_last(n.a, symbol);
      case Op::And: return eval_last(n.a, symbol) && eval_last(n.b, symbol);
      case Op::Or: return eval_last(n.a, symbol) || eval_last(n.b, symbol);
      case Op::Next: return false;
      case Op::Eventually: return eval_last(n.a, symbol);
      case Op::Always: return eval_last(n.a, symbol);
      case Op::Until: return eval_last(n.b, symbol);
    }
    return false;
  }

  size_t size() const { return nodes_.size(); }

private:
  int intern(Node n) {
    uint64_t key = (static_cast<uint64_t>(n.op) << 56) ^
                   (static_cast<uint64_t>(static_cast<uint32_t>(n.atom)) << 40) ^
                   (static_cast<uint64_t>(static_cast<uint32_t>(n.a + 1)) << 20) ^
                   static_cast<uint64_t>(static_cast<uint32_t>(n.b + 1));
    auto it = intern_.find(key);
    if (it != intern_.end()) return it->second;
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    intern_.emplace(key, id);
    return id;
  }

  std::vector<Node> nodes_;
  std::unordered_map<uint64_t, int> intern_;
  std::unordered_map<uint64_t, int> prog_memo_;
};

}  // namespace progression

namespace detail {

/// Map formula atoms onto label columns of the automaton; out[bit] is the
/// column of the atom assigned to that symbol bit.
inline std::vector<int> atom_columns(const FormulaPtr& f, const VideoAutomaton& a,
                                     int max_atoms) {
  PropositionSet used = free_propositions(f);
  std::vector<int> cols;
  for (const auto& p : used.items()) {
    auto it = std::find(a.propositions.begin(), a.propositions.end(), p.name);
    if (it == a.propositions.end())
      throw CheckerError("unknown atom '" + p.name + "' not labeled in the automaton");
    cols.push_back(static_cast<int>(it - a.propositions.begin()));
  }
  if (static_cast<int>(cols.size()) > max_atoms)
    throw CheckerError("formula has " + std::to_string(cols.size()) +
                       " atoms, above the exact-enumeration cap of " + std::to_string(max_atoms));
  return cols;
}

inline int to_engine(const FormulaPtr& f, progression::Engine& eng,
                     const PropositionSet& used) {
  switch (f->kind) {
    case NodeKind::Atom: return eng.atom(used.find(f->atom_name));
    case NodeKind::Not: return eng.mk_not(to_engine(f->lhs, eng, used));
    case NodeKind::And:
      return eng.mk_and(to_engine(f->lhs, eng, used), to_engine(f->rhs, eng, used));
    case NodeKind::Or:
      return eng.mk_or(to_engine(f->lhs, eng, used), to_engine(f->rhs, eng, used));
    case NodeKind::Eventually: return eng.mk_eventually(to_engine(f->lhs, eng, used));
    case NodeKind::Always: return eng.mk_always(to_engine(f->lhs, eng, used));
    case NodeKind::Until:
      return eng.mk_until(to_engine(f->lhs, eng, used), to_engine(f->rhs, eng, used));
    case NodeKind::Next: return eng.mk_next(to_engine(f->lhs, eng, used));
  }
  throw CheckerError("unreachable formula kind");
}

}  // namespace detail

/// Exact suffix-satisfaction probabilities under independent Bernoulli
/// labels: P_t is the probability that the sampled boolean trace over
/// windows t..N-1 satisfies f. Finite-trace semantics: Until and Eventually
/// need a witness before the trace ends, Next is false at the last window.
inline SatisfactionProfile check(const VideoAutomaton& a, const FormulaPtr& f,
                                 double smoothing_b = 10.0, int max_atoms = 16) {
  if (a.state_count < 1) throw CheckerError("check: automaton has no states");
  std::vector<int> cols = detail::atom_columns(f, a, max_atoms);
  const int k = static_cast<int>(cols.size());
  const uint32_t nsym = 1u << k;
  const int N = a.state_count;

  progression::Engine eng;
  PropositionSet used = free_propositions(f);
  int root = detail::to_engine(f, eng, used);

  // Per-window symbol distribution from the independent Bernoulli labels.
  auto symbol_prob = [&](int t, uint32_t sym) {
    double p = 1.0;
    for (int i = 0; i < k; ++i) {
      double lam = a.label(t, cols[static_cast<size_t>(i)]);
      p *= ((sym >> i) & 1u) ? lam : 1.0 - lam;
    }
    return p;
  };

  // Backward dynamic program over (window, formula-state).
  // value[id] at step t holds Pr[suffix from t satisfies state id].
  std::unordered_map<uint64_t, double> memo;
  std::vector<double> p_out(static_cast<size_t>(N));
  std::function<double(int, int)> value = [&](int t, int id) -> double {
    if (id == progression::Engine::kTrue) return 1.0;
    if (id == progression::Engine::kFalse) return 0.0;
    uint64_t key = (static_cast<uint64_t>(t) << 32) | static_cast<uint32_t>(id);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double v = 0.0;
    for (uint32_t sym = 0; sym < nsym; ++sym) {
      double pr = symbol_prob(t, sym);
      if (pr == 0.0) continue;
      if (t == N - 1) {
        if (eng.eval_last(id, sym)) v += pr;
      } else {
        v += pr * value(t + 1, eng.progress(id, sym));
      }
    }
    memo.emplace(key, v);
    return v;
  };

  SatisfactionProfile out;
  out.b = smoothing_b;
  for (int t = N - 1; t >= 0; --t) p_out[static_cast<size_t>(t)] = value(t, root);
  out.p = std::move(p_out);
  out.p_sat = out.p.front();
  out.smoothed.reserve(out.p.size());
  for (double x : out.p) out.smoothed.push_back(1.0 / (1.0 + std::exp(-smoothing_b * (x - 0.5))));
  return out;
}

/// Logistic smoothing centered at 0.5: strictly increasing, F_b(0.5) = 0.5.
inline std::vector<double> smooth(const std::vector<double>& p, double b) {
  if (b <= 0.0) throw CheckerError("smooth: sharpness must be positive");
  std::vector<double> out;
  out.reserve(p.size());
  for (double x : p) out.push_back(1.0 / (1.0 + std::exp(-b * (x - 0.5))));
  return out;
}

/// Classical finite-trace evaluation of f over a boolean trace of symbol
/// masks (bit i carries the i-th atom of free_propositions(f)).
inline bool evaluate_boolean_trace(const FormulaPtr& f, const std::vector<uint32_t>& trace,
                                   const PropositionSet& used, size_t pos = 0) {
  if (pos >= trace.size()) return false;
  switch (f->kind) {
    case NodeKind::Atom:
      return (trace[pos] >> used.find(f->atom_name)) & 1u;
    case NodeKind::Not:
      return !evaluate_boolean_trace(f->lhs, trace, used, pos);
    case NodeKind::And:
      return evaluate_boolean_trace(f->lhs, trace, used, pos) &&
             evaluate_boolean_trace(f->rhs, trace, used, pos);
    case NodeKind::Or:
      return evaluate_boolean_trace(f->lhs, trace, used, pos) ||
             evaluate_boolean_trace(f->rhs, trace, used, pos);
    case NodeKind::Next:
      return pos + 1 < trace.size() && evaluate_boolean_trace(f->lhs, trace, used, pos + 1);
    case NodeKind::Eventually:
      for (size_t s = pos; s < trace.size(); ++s)
        if (evaluate_boolean_trace(f->lhs, trace, used, s)) return true;
      return false;
    case NodeKind::Always:
      for (size_t s = pos; s < trace.size(); ++s)
        if (!evaluate_boolean_trace(f->lhs, trace, used, s)) return false;
      return true;
    case NodeKind::Until:
      for (size_t s = pos; s < trace.size(); ++s) {
        if (evaluate_boolean_trace(f->rhs, trace, used, s)) return true;
        if (!evaluate_boolean_trace(f->lhs, trace, used, s)) return false;
      }
      return false;
  }
  return false;
}

namespace detail {

/// Threshold the automaton labels for the formula's atoms into symbol masks.
inline std::vector<uint32_t> thresholded_trace(const VideoAutomaton& a, const FormulaPtr& f,
                                               double theta_label) {
  std::vector<int> cols = atom_columns(f, a, 31);
  std::vector<uint32_t> out(static_cast<size_t>(a.state_count), 0);
  for (int t = 0; t < a.state_count; ++t) {
    uint32_t sym = 0;
    for (size_t i = 0; i < cols.size(); ++i)
      if (a.label(t, cols[i]) >= theta_label) sym |= 1u << i;
    out[static_cast<size_t>(t)] = sym;
  }
  return out;
}

inline std::vector<std::array<int, 2>> extend_and_merge(
    const std::vector<std::array<int, 2>>& runs, int alpha_ext, int beta_ext, int n) {
  std::vector<std::array<int, 2>> out;
  for (auto [lo, hi] : runs) {
    lo = std::max(0, lo - alpha_ext);
    hi = std::min(n - 1, hi + beta_ext);
    if (!out.empty() && lo <= out.back()[1] + 1) {
      out.back()[1] = std::max(out.back()[1], hi);
    } else {
      out.push_back({lo, hi});
    }
  }
  return out;
}

}  // namespace detail

/// Earliest window whose smoothed score reaches theta starts the segment;
/// the end is the first window such that the thresholded boolean trace over
/// [start, end] satisfies f. The interval is then extended by
/// (alpha_ext, beta_ext) windows and clipped. When no window reaches theta
/// the whole video is returned flagged fallback.
inline SegmentSet extract_primary_segment(const SatisfactionProfile& profile,
                                          const VideoAutomaton& a, const FormulaPtr& f,
                                          const SegmentOptions& opt = {}) {
  const int N = a.state_count;
  SegmentSet out;
  out.alpha_ext = opt.alpha_ext;
  out.beta_ext = opt.beta_ext;

  int start = -1;
  for (int t = 0; t < N; ++t) {
    if (profile.smoothed[static_cast<size_t>(t)] >= opt.theta) {
      start = t;
      break;
    }
  }
  auto masks = detail::thresholded_trace(a, f, opt.theta_label);
  PropositionSet used = free_propositions(f);
  if (start < 0) {
    out.fallback = true;
    out.segments.push_back({0, N - 1});
    out.total_windows = N;
    for (uint32_t m : masks)
      if (m) ++out.evidence_windows;
    return out;
  }

  int end = N - 1;
  for (int t = start; t < N; ++t) {
    std::vector<uint32_t> sub(masks.begin() + start, masks.begin() + t + 1);
    if (evaluate_boolean_trace(f, sub, used)) {
      end = t;
      break;
    }
  }
  for (int t = start; t <= end; ++t)
    if (masks[static_cast<size_t>(t)]) ++out.evidence_windows;
  int lo = std::max(0, start - opt.alpha_ext);
  int hi = std::min(N - 1, end + opt.beta_ext);
  out.segments.push_back({lo, hi});
  out.total_windows = hi - lo + 1;
  out.core_start = start;
  out.core_end = end;
  return out;
}

/// Within the primary satisfying interval, each atom's maximal runs of
/// thresholded-true windows become separate segments; each run is extended
/// by (alpha_ext, beta_ext) and overlapping extensions merge. The temporal
/// gaps between events drop out of the retrieved context.
inline SegmentSet extract_multi_segments(const SatisfactionProfile& profile,
                                         const VideoAutomaton& a, const FormulaPtr& f,
                                         const SegmentOptions& opt = {}) {
  SegmentSet primary = extract_primary_segment(profile, a, f, opt);
  if (primary.fallback) return primary;

  const int N = a.state_count;
  const int start = primary.core_start;
  const int end = primary.core_end;
  auto masks = detail::thresholded_trace(a, f, opt.theta_label);
  std::vector<std::array<int, 2>> runs;
  int run_start = -1;
  int evidence = 0;
  for (int t = start; t <= end; ++t) {
    if (masks[static_cast<size_t>(t)]) {
      ++evidence;
      if (run_start < 0) run_start = t;
    } else if (run_start >= 0) {
      runs.push_back({run_start, t - 1});
      run_start = -1;
    }
  }
  if (run_start >= 0) runs.push_back({run_start, end});

  SegmentSet out;
  out.alpha_ext = opt.alpha_ext;
  out.beta_ext = opt.beta_ext;
  out.evidence_windows = evidence;
  out.core_start = start;
  out.core_end = end;
  if (runs.empty()) {
    // Satisfaction without any thresholded-true window (e.g. negated
    // specs); keep the primary interval.
    return primary;
  }
  out.segments = detail::extend_and_merge(runs, opt.alpha_ext, opt.beta_ext, N);
  for (const auto& seg : out.segments) out.total_windows += seg[1] - seg[0] + 1;
  return out;
}

/// P(Hit) = 1 - (1 - E/V_total)^N: probability that uniformly sampling N
/// frames from the retrieved context includes at least one evidence frame.
inline double hit_probability(int evidence, int total, int budget) {
  if (evidence < 0 || total < 1 || evidence > total || budget < 1)
    throw CheckerError("hit_probability: domain violation");
  double miss = 1.0 - static_cast<double>(evidence) / total;
  return 1.0 - std::pow(miss, budget);
}

inline nlohmann::json checker_report(const SatisfactionProfile& profile, const SegmentSet& segs,
                                     const VideoAutomaton& a,
                                     const std::vector<int>& hit_budgets = {32}) {
  nlohmann::json j;
  j["P_sat"] = profile.p_sat;
  j["P"] = profile.p;
  j["smoothed"] = profile.smoothed;
  j["fallback"] = segs.fallback;
  j["segments"] = nlohmann::json::array();
  for (const auto& seg : segs.segments) {
    auto [b0, e0] = a.window_span(seg[0]);
    auto [b1, e1] = a.window_span(seg[1]);
    (void)e0;
    (void)b1;
    j["segments"].push_back({{"start_window", seg[0]},
                             {"end_window", seg[1]},
                             {"start_frame", b0},
                             {"end_frame", e1 - 1}});
  }
  j["E"] = segs.evidence_windows;
  j["V_total"] = segs.total_windows;
  nlohmann::json hits;
  for (int n : hit_budgets)
    hits[std::to_string(n)] =
        segs.total_windows > 0 ? hit_probability(segs.evidence_windows, segs.total_windows, n)
                               : 0.0;
  j["hit_probability_at_budget"] = std::move(hits);
  return j;
}

}  // namespace lenus
