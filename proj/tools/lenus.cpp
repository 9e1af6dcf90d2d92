// Command-line front end for the temporal-logic video query engine.
// Each stage of the pipeline is exposed as a subcommand that reads and
// writes the stage artifacts, so stages are independently scriptable.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <lenus/automaton.hpp>
#include <lenus/checker.hpp>
#include <lenus/detection.hpp>
#include <lenus/embedding.hpp>
#include <lenus/latency.hpp>
#include <lenus/pipeline.hpp>
#include <lenus/remote.hpp>
#include <lenus/sampling.hpp>
#include <lenus/tlspec.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;
constexpr int kExitDegraded = 4;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text(out_path, j.dump(2) + "\n");
  }
}

struct CommonOpts {
  std::string config_path;
  std::string scenario_path;
  std::string trace_path;
  std::string spec_text;
  std::string spec_file;
  std::string out_path;
  std::string mode = "lenqa";
  uint64_t seed = 0;
  double tau_s = -1, tau_r = -1;
  int kappa = -1, batch = -1, budget = -1, w = -1, delta = -1;

  lenus::PipelineConfig resolve() const {
    lenus::PipelineConfig c;
    if (!config_path.empty()) c = lenus::PipelineConfig::from_json(load_json(config_path));
    if (tau_s >= 0) c.sampling.tau_s = tau_s;
    if (tau_r >= 0) c.sampling.tau_r = tau_r;
    if (kappa > 0) c.sampling.kappa = kappa;
    if (w >= 0) c.sampling.w = w;
    if (delta >= 0) c.sampling.delta = delta;
    if (batch > 0) c.latency.batch = batch;
    if (budget > 0) c.budget = budget;
    c.mode = lenus::mode_from_name(mode);
    c.seed = seed;
    return c;
  }

  std::string spec() const {
    if (!spec_text.empty()) return spec_text;
    if (!spec_file.empty()) {
      std::ifstream in(spec_file);
      if (!in) throw std::runtime_error("cannot open spec file " + spec_file);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }
    throw CLI::ValidationError("--spec or --spec-file is required");
  }
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_spec) {
  cmd->add_option("--config", o.config_path, "pipeline config JSON");
  cmd->add_option("--scenario", o.scenario_path, "scenario JSON file");
  cmd->add_option("--trace", o.trace_path, "binary embedding trace file");
  if (needs_spec) {
    cmd->add_option("--spec", o.spec_text, "temporal-logic specification text");
    cmd->add_option("--spec-file", o.spec_file, "file containing the specification");
  }
  cmd->add_option("--out", o.out_path, "output file (default stdout)");
  cmd->add_option("--seed", o.seed, "deterministic seed");
  cmd->add_option("--tau-s", o.tau_s, "semantic threshold");
  cmd->add_option("--tau-r", o.tau_r, "redundancy threshold");
  cmd->add_option("--kappa", o.kappa, "window size in frames");
  cmd->add_option("--batch", o.batch, "detector batch size");
  cmd->add_option("--budget", o.budget, "answerer frame budget");
  cmd->add_option("-w,--context-radius", o.w, "stage-1 expansion radius in frames");
  cmd->add_option("--delta", o.delta, "detection neighborhood radius in frames");
}

lenus::ScenarioSpec require_scenario(const CommonOpts& o) {
  if (o.scenario_path.empty()) throw CLI::ValidationError("--scenario is required");
  return lenus::ScenarioSpec::from_json(load_json(o.scenario_path));
}

lenus::EmbeddingTrace load_or_generate_trace(const CommonOpts& o,
                                             const lenus::ScenarioSpec& scenario) {
  if (!o.trace_path.empty()) return lenus::read_trace(o.trace_path);
  return lenus::synthetic_trace(scenario, o.seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Temporal-logic video query engine: adaptive sampling, batched proposition\n"
      "grounding, probabilistic verification, and latency benchmarking.\n\n"
      "Specification grammar: atoms are lowercase identifiers; unary ! F G X;\n"
      "binary & | U; precedence unary > U > & > |; U is right-associative."};
  app.require_subcommand(1);

  // --- translate -----------------------------------------------------------
  auto* cmd_translate = app.add_subcommand("translate", "translate a query via a remote service");
  std::string query, host = "127.0.0.1";
  int port = 8080;
  cmd_translate->add_option("--query", query, "natural-language query")->required();
  cmd_translate->add_option("--host", host, "remote service host");
  cmd_translate->add_option("--port", port, "remote service port");

  // --- synth ---------------------------------------------------------------
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic trace and ground truth");
  CommonOpts synth_opts;
  std::string labels_path;
  add_common(cmd_synth, synth_opts, false);
  cmd_synth->add_option("--labels", labels_path, "ground-truth window label output");

  // --- sample --------------------------------------------------------------
  auto* cmd_sample = app.add_subcommand("sample", "run two-stage adaptive sampling");
  CommonOpts sample_opts;
  add_common(cmd_sample, sample_opts, true);

  // --- ground --------------------------------------------------------------
  auto* cmd_ground = app.add_subcommand("ground", "ground propositions into a detection matrix");
  CommonOpts ground_opts;
  add_common(cmd_ground, ground_opts, true);

  // --- check ---------------------------------------------------------------
  auto* cmd_check = app.add_subcommand("check", "verify a specification over a detection matrix");
  CommonOpts check_opts;
  std::string matrix_path;
  add_common(cmd_check, check_opts, true);
  cmd_check->add_option("--matrix", matrix_path, "detection matrix JSON")->required();

  // --- export-automaton ----------------------------------------------------
  auto* cmd_export = app.add_subcommand("export-automaton",
                                        "emit the explicit DTMC model for a detection matrix");
  CommonOpts export_opts;
  std::string export_matrix;
  add_common(cmd_export, export_opts, false);
  cmd_export->add_option("--matrix", export_matrix, "detection matrix JSON")->required();

  // --- run -----------------------------------------------------------------
  auto* cmd_run = app.add_subcommand("run", "execute the full pipeline end to end");
  CommonOpts run_opts;
  bool single_segment = false;
  cmd_run->add_option("--mode", run_opts.mode, "vanilla|sequential|batched|lenqa");
  cmd_run->add_flag("--single-segment", single_segment, "continuous-span retrieval");
  add_common(cmd_run, run_opts, true);

  // --- bench ---------------------------------------------------------------
  auto* cmd_bench = app.add_subcommand("bench", "latency benchmark over a duration grid");
  CommonOpts bench_opts;
  std::vector<double> grid = {15, 60, 600, 3600};
  std::vector<std::string> bench_modes = {"vanilla", "sequential", "batched", "lenqa"};
  double fps = 1.0;
  std::string csv_path;
  bool ablation = false;
  cmd_bench->add_option("--grid", grid, "video durations in seconds");
  cmd_bench->add_option("--modes", bench_modes, "modes to benchmark");
  cmd_bench->add_option("--fps", fps, "frames per second for desk-scale frame counts");
  cmd_bench->add_option("--csv", csv_path, "CSV output path");
  cmd_bench->add_flag("--ablation", ablation, "also emit the fixed-workload ablation table");
  add_common(cmd_bench, bench_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*cmd_translate) {
      lenus::RemoteConfig rc;
      rc.host = host;
      rc.port = port;
      if (const char* tok = std::getenv("LENUS_REMOTE_TOKEN")) rc.auth_token = tok;
      lenus::RemoteTranslator translator(rc);
      std::cout << translator.translate(query) << "\n";
      return kExitOk;
    }

    if (*cmd_synth) {
      auto scenario = require_scenario(synth_opts);
      auto trace = lenus::synthetic_trace(scenario, synth_opts.seed);
      std::string out = synth_opts.out_path.empty() ? "trace.lent" : synth_opts.out_path;
      lenus::write_trace(out, trace);
      auto cfg = synth_opts.resolve();
      auto labels = lenus::scenario_window_labels(scenario, cfg.sampling.kappa);
      nlohmann::json lj;
      lj["kappa"] = cfg.sampling.kappa;
      lj["propositions"] = scenario.propositions();
      lj["labels"] = labels;
      if (!labels_path.empty()) write_text(labels_path, lj.dump(2) + "\n");
      std::cerr << "wrote " << out << " (" << trace.frame_count << " frames x " << trace.dim
                << ")\n";
      return kExitOk;
    }

    if (*cmd_sample) {
      auto cfg = sample_opts.resolve();
      auto scenario = require_scenario(sample_opts);
      auto trace = load_or_generate_trace(sample_opts, scenario);
      auto spec = lenus::parse_spec(sample_opts.spec());
      lenus::SyntheticProvider provider(scenario, sample_opts.seed);
      auto scores = lenus::relevancy_scores(trace, provider.encode_text(spec.props.names()));
      auto cand = lenus::semantic_filter(scores, cfg.sampling, trace.frame_count);
      auto keys = lenus::select_keyframes(trace, cand, cfg.sampling);
      auto detect = lenus::detection_set(keys, cfg.sampling, trace.frame_count);
      emit(lenus::sampling_report(cfg.sampling, cand, keys, detect, trace.frame_count),
           sample_opts.out_path);
      return kExitOk;
    }

    if (*cmd_ground) {
      auto cfg = ground_opts.resolve();
      auto scenario = require_scenario(ground_opts);
      auto trace = load_or_generate_trace(ground_opts, scenario);
      auto spec = lenus::parse_spec(ground_opts.spec());
      lenus::SyntheticProvider provider(scenario, ground_opts.seed);
      auto scores = lenus::relevancy_scores(trace, provider.encode_text(spec.props.names()));
      auto cand = lenus::semantic_filter(scores, cfg.sampling, trace.frame_count);
      auto keys = lenus::select_keyframes(trace, cand, cfg.sampling);
      auto detect = lenus::detection_set(keys, cfg.sampling, trace.frame_count);
      lenus::SyntheticDetector detector(scenario, cfg.latency.batch);
      auto matrix = lenus::ground_detections(detector, trace.frame_count, detect, spec.props,
                                             cfg.sampling, keys);
      emit(matrix.to_json(), ground_opts.out_path);
      return kExitOk;
    }

    if (*cmd_check) {
      auto cfg = check_opts.resolve();
      auto spec = lenus::parse_spec(check_opts.spec());
      auto matrix = lenus::DetectionMatrix::from_json(load_json(matrix_path));
      auto automaton = lenus::build_automaton(matrix);
      auto profile = lenus::check(automaton, spec.formula, cfg.checker.b);
      auto segments = lenus::extract_multi_segments(profile, automaton, spec.formula,
                                                    cfg.checker.segment_options());
      emit(lenus::checker_report(profile, segments, automaton, {cfg.budget}),
           check_opts.out_path);
      return kExitOk;
    }

    if (*cmd_export) {
      auto matrix = lenus::DetectionMatrix::from_json(load_json(export_matrix));
      auto automaton = lenus::build_automaton(matrix);
      auto text = lenus::export_automaton(automaton);
      if (export_opts.out_path.empty()) {
        std::cout << text;
      } else {
        write_text(export_opts.out_path, text);
      }
      return kExitOk;
    }

    if (*cmd_run) {
      auto cfg = run_opts.resolve();
      cfg.multi_segment = !single_segment;
      auto scenario = require_scenario(run_opts);
      auto trace = load_or_generate_trace(run_opts, scenario);
      cfg.latency.frame_count = trace.frame_count;
      auto spec = lenus::parse_spec(run_opts.spec());
      cfg.latency.p_count = std::max(1, spec.props.size());
      lenus::SyntheticProvider provider(scenario, run_opts.seed);
      lenus::SyntheticDetector detector(scenario, cfg.latency.batch);
      auto result = lenus::run_pipeline(cfg, spec.formula, spec.props, trace, provider, detector,
                                        &scenario);
      emit(result.to_json(), run_opts.out_path);
      return result.degraded ? kExitDegraded : kExitOk;
    }

    if (*cmd_bench) {
      auto cfg = bench_opts.resolve();
      std::vector<lenus::Mode> modes;
      for (const auto& m : bench_modes) modes.push_back(lenus::mode_from_name(m));
      auto rows = lenus::bench(cfg, grid, modes, fps);
      nlohmann::json j;
      j["rows"] = nlohmann::json::array();
      for (const auto& r : rows) j["rows"].push_back(r.to_json());
      if (ablation) j["ablation"] = lenus::ablation_report(cfg.latency, 56);
      std::cerr << lenus::bench_table(rows);
      emit(j, bench_opts.out_path);
      if (!csv_path.empty()) write_text(csv_path, lenus::bench_csv(rows));
      return kExitOk;
    }
  } catch (const lenus::ParseError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const lenus::RemoteError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
