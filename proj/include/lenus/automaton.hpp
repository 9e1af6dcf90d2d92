#pragma once

#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "detection.hpp"

namespace lenus {

class AutomatonError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Linear-chain DTMC over frame windows. The transition relation is
/// implicit: q_t -> q_{t+1} with probability 1, and the final state is
/// absorbing so the chain is total.
struct VideoAutomaton {
  int kappa = 16;
  int frame_count = 0;
  int state_count = 0;
  std::vector<std::string> propositions;
  std::vector<double> labels;  // row-major, state_count * |P|

  double label(int state, int prop) const {
    return labels[static_cast<size_t>(state) * propositions.size() + static_cast<size_t>(prop)];
  }

  std::pair<int, int> window_span(int state) const {
    int begin = state * kappa;
    int end = std::min(frame_count, begin + kappa);
    return {begin, end};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kappa"] = kappa;
    j["frame_count"] = frame_count;
    j["states"] = state_count;
    j["propositions"] = propositions;
    j["labels"] = labels;
    return j;
  }
};

inline bool operator==(const VideoAutomaton& a, const VideoAutomaton& b) {
  return a.kappa == b.kappa && a.frame_count == b.frame_count && a.state_count == b.state_count &&
         a.propositions == b.propositions && a.labels == b.labels;
}

/// One state per window in temporal order; labels copy the detection matrix.
inline VideoAutomaton build_automaton(const DetectionMatrix& m) {
  if (m.window_count < 1) throw AutomatonError("build_automaton: empty detection matrix");
  VideoAutomaton a;
  a.kappa = m.kappa;
  a.frame_count = m.frame_count;
  a.state_count = m.window_count;
  a.propositions = m.propositions;
  a.labels = m.z;
  return a;
}

/// Explicit-model text form: unit-probability chain transitions with
/// per-state confidence annotations, for cross-checking with external
/// probabilistic model checkers.
inline std::string export_automaton(const VideoAutomaton& a) {
  std::ostringstream os;
  os << "dtmc\n";
  os << "states " << a.state_count << "\n";
  os << "kappa " << a.kappa << "\n";
  os << "frames " << a.frame_count << "\n";
  os << "props";
  for (const auto& p : a.propositions) os << " " << p;
  os << "\n";
  os << std::setprecision(17);
  for (int s = 0; s < a.state_count; ++s) {
    os << "label " << s;
    for (size_t i = 0; i < a.propositions.size(); ++i) os << " " << a.label(s, static_cast<int>(i));
    os << "\n";
  }
  for (int s = 0; s < a.state_count; ++s) {
    int succ = (s + 1 < a.state_count) ? s + 1 : s;  // final state absorbs
    os << "trans " << s << " " << succ << " 1\n";
  }
  return os.str();
}

inline VideoAutomaton import_automaton(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word;
  if (!(in >> word) || word != "dtmc") throw AutomatonError("import: missing dtmc header");
  VideoAutomaton a;
  bool have_states = false;
  while (in >> word) {
    if (word == "states") {
      in >> a.state_count;
      have_states = true;
    } else if (word == "kappa") {
      in >> a.kappa;
    } else if (word == "frames") {
      in >> a.frame_count;
    } else if (word == "props") {
      std::string line;
      std::getline(in, line);
      std::istringstream ls(line);
      std::string p;
      while (ls >> p) a.propositions.push_back(p);
      a.labels.assign(static_cast<size_t>(a.state_count) * a.propositions.size(), 0.0);
    } else if (word == "label") {
      int s;
      in >> s;
      if (!have_states || s < 0 || s >= a.state_count)
        throw AutomatonError("import: label state out of range");
      for (size_t i = 0; i < a.propositions.size(); ++i)
        in >> a.labels[static_cast<size_t>(s) * a.propositions.size() + i];
    } else if (word == "trans") {
      int from, to;
      double p;
      in >> from >> to >> p;
      int expect = (from + 1 < a.state_count) ? from + 1 : from;
      if (to != expect || p != 1.0)
        throw AutomatonError("import: transition breaks the linear chain");
    } else {
      throw AutomatonError("import: unknown directive '" + word + "'");
    }
    if (in.fail()) throw AutomatonError("import: malformed automaton text");
  }
  if (!have_states || a.state_count < 1) throw AutomatonError("import: no states");
  return a;
}

}  // namespace lenus
