#include "cli.h"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stgib/array_io.h"
#include "stgib/checkpoint.h"
#include "stgib/data.h"
#include "stgib/errors.h"
#include "stgib/experiment.h"
#include "stgib/explain.h"
#include "stgib/trainer.h"

namespace stgib::cli {
namespace fs = std::filesystem;

namespace {

constexpr char kOutRootEnv[] = "STGIB_OUT_ROOT";

fs::path DefaultRunDir(const std::string& command, const std::string& stem, uint64_t seed) {
  const char* root = std::getenv(kOutRootEnv);
  const fs::path base = root != nullptr && *root != '\0' ? fs::path(root) : fs::path("runs");
  return base / (command + "-" + stem + "-seed" + std::to_string(seed));
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void ApplyAblations(const std::vector<std::string>& flags, Ablation& ab) {
  for (const std::string& f : flags) {
    if (f == "none") {
      ab = Ablation{};
    } else if (f == "no_spatial_ib") {
      ab.no_spatial_ib = true;
    } else if (f == "no_temporal_ib") {
      ab.no_temporal_ib = true;
    } else if (f.rfind("random_drop=", 0) == 0) {
      try {
        ab.random_drop_p = std::stod(f.substr(12));
      } catch (const std::exception&) {
        throw ConfigError("--ablation random_drop=P needs a number, got '" + f + "'");
      }
    } else {
      throw ConfigError("unknown ablation '" + f + "' (none, no_spatial_ib, no_temporal_ib, random_drop=P)");
    }
  }
}

struct LoadedConfig {
  ExperimentConfig config;
  fs::path base_dir;
  std::string stem;
};

LoadedConfig LoadConfig(const fs::path& path) {
  LoadedConfig lc;
  lc.config = LoadExperimentConfig(path);
  lc.base_dir = path.parent_path();
  lc.stem = path.stem().string();
  return lc;
}

// Paths inside an echoed config are made absolute so the copy stays usable
// from the run directory.
ExperimentConfig Materialize(ExperimentConfig c, const fs::path& base) {
  auto fix = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = fs::absolute(base / p).lexically_normal().string();
  };
  fix(c.data.values);
  fix(c.data.distances);
  fix(c.data.planted_edges);
  fix(c.data.graph);
  return c;
}

struct TrainedRun {
  Metrics test;
  TrainResult result;
};

TrainedRun TrainOnce(const ExperimentConfig& cfg, const fs::path& base_dir, const fs::path& run_dir,
                     std::ostream& out) {
  const PreparedData data = PrepareData(cfg, base_dir);
  Model model(cfg.model, data.dims, data.graph, data.scaler, cfg.train.seed);
  EnsureDir(run_dir);
  WriteText(run_dir / "config.json", Json(Materialize(cfg, base_dir)).dump(2) + "\n");
  std::ofstream log(run_dir / "epochs.jsonl", std::ios::trunc);
  if (!log) throw IoError("cannot open epoch log in '" + run_dir.string() + "'");
  TrainOutputs outputs;
  outputs.epoch_log = &log;
  outputs.checkpoint_dir = run_dir;
  TrainedRun run;
  run.result = Train(model, data.train, data.val, cfg.train, outputs);
  run.test = Evaluate(model, data.test);
  Json metrics{{"split", "test"}, {"mae", run.test.mae}, {"rmse", run.test.rmse}, {"mape", run.test.mape},
               {"best_epoch", run.result.best_epoch}};
  WriteText(run_dir / "metrics.json", metrics.dump(2) + "\n");
  out << "trained " << cfg.train.epochs << " epochs -> " << run_dir.string() << "\n";
  return run;
}

const std::vector<STWindow>& PickSplit(const PreparedData& data, const std::string& split) {
  if (split == "train") return data.train;
  if (split == "val") return data.val;
  if (split == "test") return data.test;
  throw ConfigError("unknown split '" + split + "' (train, val, test)");
}

fs::path ConfigBesideCheckpoint(const fs::path& checkpoint, const std::string& given) {
  if (!given.empty()) return given;
  return checkpoint.parent_path() / "config.json";
}

// ---- commands ---------------------------------------------------------------

struct SynthArgs {
  int nodes = 8;
  int steps = 2000;
  int planted = 12;
  std::string planted_file;
  double noise = 0.1;
  int period = 24;
  uint64_t seed = 0;
  int distractors = -1;
  std::string out;
};

int CmdSynth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  spec.num_nodes = a.nodes;
  spec.total_steps = a.steps;
  spec.noise_std = a.noise;
  spec.seed = a.seed;
  spec.period = a.period;
  if (!a.planted_file.empty()) {
    int n = 0;
    spec.planted_edges = ReadEdgeList(a.planted_file, &n);
    if (n != a.nodes) throw ConfigError("--planted-file: node count differs from --nodes");
  } else {
    if (a.planted < 1) throw ConfigError("--planted: at least one planted edge is required");
    spec.planted_edges = RandomPlantedEdges(a.nodes, a.planted, a.seed);
  }
  if (spec.planted_edges.empty()) throw ConfigError("planted edge set is empty");
  const SyntheticData syn = GenerateSynthetic(spec);
  const fs::path dir = a.out.empty() ? DefaultRunDir("synth", "data", a.seed) : fs::path(a.out);
  EnsureDir(dir);
  WriteArray(dir / "values.arr", SeriesToArray(syn.values));
  WriteEdgeList(dir / "planted_edges.json", a.nodes, syn.planted_edges);
  const SpatialGraph cand = a.distractors < 0 ? BuildCompleteGraph(a.nodes)
                                              : BuildCandidateGraph(a.nodes, syn.planted_edges, a.distractors, a.seed + 1);
  WriteEdgeList(dir / "graph.json", a.nodes, cand.edges());

  ExperimentConfig cfg;
  cfg.task = Task::kSynthetic;
  cfg.data.values = "values.arr";
  cfg.data.planted_edges = "planted_edges.json";
  cfg.data.graph = "graph.json";
  cfg.data.period = a.period;
  cfg.model.steps_per_day = a.period;
  cfg.train.seed = a.seed;
  WriteText(dir / "experiment.json", Json(cfg).dump(2) + "\n");
  out << "synth: nodes=" << a.nodes << " steps=" << a.steps << " planted=" << syn.planted_edges.size()
      << " candidate_edges=" << cand.edges().size() << " noise_std=" << a.noise << " seed=" << a.seed << " -> "
      << dir.string() << "\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::vector<std::string> ablations;
};

int CmdTrain(const TrainArgs& a, std::ostream& out) {
  LoadedConfig lc = LoadConfig(a.config);
  ExperimentConfig& cfg = lc.config;
  if (a.seed) cfg.train.seed = *a.seed;
  ApplyAblations(a.ablations, cfg.model.ablation);
  cfg.Validate();
  const fs::path run_dir = !a.out.empty()               ? fs::path(a.out)
                           : !cfg.output_dir.empty() ? fs::path(cfg.output_dir)
                                                     : DefaultRunDir("train", lc.stem, cfg.train.seed);
  const TrainedRun run = TrainOnce(cfg, lc.base_dir, run_dir, out);
  out << "test mae=" << run.test.mae << " rmse=" << run.test.rmse << " mape=" << run.test.mape << "\n";
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string split = "test";
  std::string out;
};

int CmdEvaluate(const EvalArgs& a, std::ostream& out) {
  LoadedCheckpoint ck = LoadCheckpoint(a.checkpoint);
  LoadedConfig lc = LoadConfig(ConfigBesideCheckpoint(a.checkpoint, a.config));
  lc.config.model = ck.model->config();
  const PreparedData data = PrepareData(lc.config, lc.base_dir);
  const std::vector<STWindow>& windows = PickSplit(data, a.split);
  if (windows.empty()) throw ConfigError("split '" + a.split + "' has no windows");
  const Metrics m = Evaluate(*ck.model, windows);
  Json record{{"split", a.split}, {"checkpoint", a.checkpoint}, {"mae", m.mae}, {"rmse", m.rmse}, {"mape", m.mape},
              {"windows", windows.size()}};
  const fs::path dir = a.out.empty() ? fs::path(a.checkpoint).parent_path() : fs::path(a.out);
  if (!dir.empty()) {
    EnsureDir(dir);
    WriteText(dir / ("metrics_" + a.split + ".json"), record.dump(2) + "\n");
  }
  out << record.dump() << "\n";
  return kOk;
}

struct ExplainArgs {
  std::string checkpoint;
  std::string config;
  std::optional<double> threshold;
  std::optional<double> top_fraction;
  std::string split = "test";
  std::string count = "edges";
  uint64_t seed = 0;
  std::string probs;
  std::string out;
};

int CmdExplain(const ExplainArgs& a, std::ostream& out) {
  if (a.threshold.has_value() == a.top_fraction.has_value()) {
    throw ConfigError("give exactly one of --threshold and --top-fraction");
  }
  LoadedCheckpoint ck = LoadCheckpoint(a.checkpoint);
  LoadedConfig lc = LoadConfig(ConfigBesideCheckpoint(a.checkpoint, a.config));
  lc.config.model = ck.model->config();
  const PreparedData data = PrepareData(lc.config, lc.base_dir);
  const std::vector<STWindow>& windows = PickSplit(data, a.split);
  if (windows.empty()) throw ConfigError("split '" + a.split + "' has no windows");

  ExplainOptions opts;
  opts.threshold = a.threshold;
  opts.top_fraction = a.top_fraction;
  if (a.count == "nodes") {
    opts.count = SparsityCount::kNodes;
  } else if (a.count != "edges") {
    throw ConfigError("--count must be edges or nodes");
  }
  opts.baseline_seed = a.seed;
  opts.planted_edges = data.planted_edges;
  const ExplainReport report = RunExplain(*ck.model, windows, opts);

  const fs::path dir = a.out.empty() ? fs::path(a.checkpoint).parent_path() : fs::path(a.out);
  if (!dir.empty()) EnsureDir(dir);
  std::ostringstream csv;
  WriteExplainCsv(csv, report);
  WriteText(dir / "explain.csv", csv.str());
  Json summary = ExplainSummary(report);
  summary["split"] = a.split;
  WriteText(dir / "explain_summary.json", summary.dump(2) + "\n");
  if (!a.probs.empty()) {
    DistillResult mean;
    mean.spatial_probs = report.mean_spatial_probs;
    mean.temporal_probs = report.mean_temporal_probs;
    std::ostringstream probs;
    WriteProbabilityCsv(probs, *ck.model, mean);
    WriteText(a.probs, probs.str());
  }
  for (const ExplainRow& r : report.rows) {
    out << GraphKindName(r.kind) << ": sparsity=" << r.sparsity << " fidelity=" << r.fidelity
        << " baseline_fidelity=" << r.baseline_fidelity;
    if (r.auc) out << " auc=" << *r.auc << (r.auc_degenerate ? " (degenerate)" : "");
    out << "\n";
  }
  return kOk;
}

struct RobustnessArgs {
  std::string config;
  std::vector<double> levels{0.1, 0.3, 0.5};
  std::optional<uint64_t> seed;
  int repeats = 1;
  std::string out;
  std::vector<std::string> ablations;
};

int CmdRobustness(const RobustnessArgs& a, std::ostream& out) {
  LoadedConfig lc = LoadConfig(a.config);
  ExperimentConfig base = lc.config;
  if (a.seed) base.train.seed = *a.seed;
  ApplyAblations(a.ablations, base.model.ablation);
  base.Validate();
  if (a.repeats < 1) throw ConfigError("--repeats must be >= 1");
  const fs::path dir = !a.out.empty() ? fs::path(a.out) : DefaultRunDir("robustness", lc.stem, base.train.seed);
  EnsureDir(dir);
  std::ostringstream table;
  table << "drop_rate,mae,rmse,mape\n";
  table.precision(10);
  for (double level : a.levels) {
    if (!(level >= 0.0 && level < 1.0)) throw ConfigError("--drop-levels entries must be in [0, 1)");
    Metrics sum;
    for (int r = 0; r < a.repeats; ++r) {
      ExperimentConfig cfg = base;
      cfg.train.seed = base.train.seed + static_cast<uint64_t>(r);
      cfg.missing_rate = level;
      cfg.missing_seed = cfg.train.seed;
      std::ostringstream name;
      name << "drop" << level << "-seed" << cfg.train.seed;
      const TrainedRun run = TrainOnce(cfg, lc.base_dir, dir / name.str(), out);
      sum.mae += run.test.mae / a.repeats;
      sum.rmse += run.test.rmse / a.repeats;
      sum.mape += run.test.mape / a.repeats;
    }
    table << level << ',' << sum.mae << ',' << sum.rmse << ',' << sum.mape << '\n';
    out << "drop_rate=" << level << " mae=" << sum.mae << " rmse=" << sum.rmse << " mape=" << sum.mape << "\n";
  }
  WriteText(dir / "robustness.csv", table.str());
  return kOk;
}

int ExitCodeFor(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kNumericError;
  if (dynamic_cast<const IoError*>(&e) != nullptr) return kIoError;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kIoError;
  return kConfigError;
}

}  // namespace

int Run(int argc, char** argv) { return Run(argc, argv, std::cout, std::cerr); }

int Run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explainable spatio-temporal graph forecasting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stgib 0.1.0");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate planted-structure synthetic data");
  s->add_option("--nodes", synth.nodes, "Number of nodes")->check(CLI::PositiveNumber);
  s->add_option("--steps", synth.steps, "Number of time steps")->check(CLI::PositiveNumber);
  s->add_option("--planted", synth.planted, "Number of random planted edges");
  s->add_option("--planted-file", synth.planted_file, "Edge-list JSON with the planted edges");
  s->add_option("--noise", synth.noise, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  s->add_option("--period", synth.period, "Steps per sinusoid cycle")->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--distractors", synth.distractors,
                "Non-planted arcs added to the candidate graph (-1: complete graph)");
  s->add_option("--out", synth.out, "Output directory");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model from an experiment config");
  t->add_option("--config", train.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("--seed", train.seed, "Override train.seed");
  t->add_option("--out", train.out, "Run directory");
  t->add_option("--ablation", train.ablations, "none | no_spatial_ib | no_temporal_ib | random_drop=P");

  EvalArgs eval;
  auto* e = app.add_subcommand("evaluate", "Compute MAE / RMSE / MAPE of a checkpoint");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  e->add_option("--config", eval.config, "Experiment config; defaults to config.json beside the checkpoint");
  e->add_option("--split", eval.split, "train | val | test");
  e->add_option("--out", eval.out, "Directory for the metrics record");

  ExplainArgs expl;
  auto* x = app.add_subcommand("explain", "Extract explanations and report Sparsity+ / Fidelity+");
  x->add_option("--checkpoint", expl.checkpoint, "Checkpoint file")->required();
  x->add_option("--config", expl.config, "Experiment config; defaults to config.json beside the checkpoint");
  auto* th = x->add_option("--threshold", expl.threshold, "Keep edges with probability >= threshold");
  auto* tf = x->add_option("--top-fraction", expl.top_fraction, "Keep this fraction of most probable edges");
  th->excludes(tf);
  x->add_option("--split", expl.split, "train | val | test");
  x->add_option("--count", expl.count, "Sparsity counting: edges | nodes");
  x->add_option("--seed", expl.seed, "Seed of the random baseline explanations");
  x->add_option("--probs", expl.probs, "Write mean edge probabilities (CSV) here");
  x->add_option("--out", expl.out, "Report directory");

  RobustnessArgs rob;
  auto* r = app.add_subcommand("robustness", "Train and test under increasing missing-data rates");
  r->add_option("--config", rob.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  r->add_option("--drop-levels", rob.levels, "Missing rates, e.g. 0,0.1,0.3,0.5")->delimiter(',');
  r->add_option("--seed", rob.seed, "Override train.seed");
  r->add_option("--repeats", rob.repeats, "Seeds averaged per level");
  r->add_option("--out", rob.out, "Output directory");
  r->add_option("--ablation", rob.ablations, "none | no_spatial_ib | no_temporal_ib | random_drop=P");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (s->parsed()) return CmdSynth(synth, out);
    if (t->parsed()) return CmdTrain(train, out);
    if (e->parsed()) return CmdEvaluate(eval, out);
    if (x->parsed()) return CmdExplain(expl, out);
    if (r->parsed()) return CmdRobustness(rob, out);
  } catch (const Json::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kConfigError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return ExitCodeFor(ex);
  }
  return kConfigError;
}

}  // namespace stgib::cli
