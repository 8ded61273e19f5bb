// Command-line entry point: generate-data, train, eval, report.

#include "inornet/checkpoint.hpp"
#include "inornet/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace inornet;

namespace {

struct GenerateArgs {
  std::string out;
  std::vector<std::string> shapes;
  std::size_t train = 100, test = 30, points = 1024;
  double noise = 0.0, deform = 0.0;
  std::uint64_t seed = 0;
  bool recipes_only = false;
};

struct TrainArgs {
  std::string config, out, run_id;
  std::size_t threads = 1;
};

struct EvalArgs {
  std::string checkpoint, split = "test", out, run_id, dataset;
  bool no_sfc = false;
  std::size_t threads = 1;
};

struct ReportArgs {
  std::vector<std::string> runs;
  std::string ref, out;
};

int generate(const GenerateArgs& a) {
  std::vector<SyntheticClassSpec> spec;
  for (const auto& s : a.shapes.empty() ? synthetic_shape_kinds() : a.shapes) spec.push_back({s, a.train, a.test});
  SyntheticOptions opts;
  opts.points = a.points;
  opts.noise_sigma = a.noise;
  opts.deform = a.deform;
  opts.seed = a.seed;
  opts.write_files = !a.recipes_only;
  const auto manifest = generate_synthetic_dataset(spec, opts, a.out);
  std::cout << "wrote " << manifest.samples.size() << " samples of " << manifest.class_count() << " classes to "
            << (fs::path(a.out) / "manifest.json").string() << "\n";
  return 0;
}

int train(const TrainArgs& a) {
  TrainConfig cfg = load_config(a.config);
  cfg.threads = a.threads;
  const fs::path out = a.out;
  fs::create_directories(out);
  const std::string run_id = a.run_id.empty() ? out.filename().string() : a.run_id;
  const auto data = load_incremental_data(cfg);
  const auto result = run_incremental(cfg, data, run_id, [&](const IncrementalTrainer& tr, const IncrementalData& d, int s) {
    const auto path = out / ("s" + std::to_string(s) + ".ckpt");
    save_checkpoint(path, tr, d);
    std::cerr << "state " << s << " done, checkpoint " << path.string() << "\n";
  });
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  write_text(out / "config.json", cfg.to_json().dump(2) + "\n");
  write_text(out / "metrics.json", result.metrics.to_json().dump(2) + "\n");
  write_text(out / "metrics.csv", metrics_csv(result.metrics));
  write_text(out / "loss_trace.csv", loss_trace_csv(result.trace));
  write_text(out / "plot.json", plot_data({result.metrics}).dump(2) + "\n");
  std::cout << metrics_csv(result.metrics);
  return 0;
}

int eval(const EvalArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  IncrementalTrainer& tr = *ck.trainer;
  tr.config().threads = a.threads;
  if (tr.completed_states() < 1) throw ValidationError("checkpoint has no completed state");
  TrainConfig cfg = tr.config();
  if (!a.dataset.empty()) cfg.dataset = a.dataset;
  const auto manifest = load_manifest(cfg.dataset);
  IncrementalSchedule schedule;
  for (const auto& group : tr.states()) {
    std::vector<int> g;
    for (int col : group) g.push_back(ck.class_order.at(col));
    schedule.state_classes.push_back(g);
  }
  const auto data = IncrementalData::load(manifest, schedule, cfg.U);
  if (data.class_names != ck.class_names) throw ValidationError("dataset classes do not match the checkpoint");
  const Split split = split_from_string(a.split);
  const int s = tr.completed_states();
  const auto samples = seen_samples(split == Split::Train ? data.train : data.test, data, s);
  const bool sfc = !a.no_sfc;

  RunMetrics m;
  m.run_id = a.run_id.empty() ? fs::path(a.checkpoint).stem().string() : a.run_id;
  m.seed = cfg.seed;
  m.sfc = sfc;
  for (const auto& group : data.states) {
    nlohmann::json names = nlohmann::json::array();
    for (int c : group) names.push_back(data.class_names[c]);
    m.schedule.push_back(names);
  }
  m.states.push_back(evaluate_state(tr, data, samples, s, sfc));
  const std::string text = m.to_json().dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
  }
  return 0;
}

fs::path metrics_path(const std::string& run) {
  const fs::path p = run;
  return fs::is_directory(p) ? p / "metrics.json" : p;
}

int report(const ReportArgs& a) {
  std::vector<RunMetrics> runs;
  for (const auto& r : a.runs) runs.push_back(read_metrics(metrics_path(r)));
  const std::string csv = report_csv(runs, a.ref);
  if (a.out.empty()) {
    std::cout << csv;
    return 0;
  }
  const fs::path out = a.out;
  fs::create_directories(out);
  write_text(out / "report.csv", csv);
  write_text(out / "report.json", merge_report(runs, a.ref).dump(2) + "\n");
  write_text(out / "plot.json", plot_data(runs).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-incremental point-cloud recognition"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate-data", "Write a synthetic point-cloud dataset");
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--shapes", ga.shapes, "Shape kinds, one class each (default: all)")->delimiter(',');
  gen->add_option("--train", ga.train, "Training samples per class");
  gen->add_option("--test", ga.test, "Test samples per class");
  gen->add_option("--points", ga.points, "Points per sample");
  gen->add_option("--noise", ga.noise, "Gaussian surface noise sigma");
  gen->add_option("--deform", ga.deform, "Per-axis random stretch amplitude");
  gen->add_option("--seed", ga.seed, "Generator seed");
  gen->add_flag("--recipes-only", ga.recipes_only, "Store recipes in the manifest instead of PCLD files");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Run every incremental state of a config");
  tr->add_option("--config", ta.config, "Config JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", ta.out, "Run directory")->required();
  tr->add_option("--run-id", ta.run_id, "Run id (default: run directory name)");
  tr->add_option("--threads", ta.threads, "Worker threads")->check(CLI::PositiveNumber);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint on the classes it has seen");
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", ea.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  ev->add_flag("--no-sfc", ea.no_sfc, "Disable score fairness compensation");
  ev->add_option("--out", ea.out, "Metrics JSON path (default: stdout)");
  ev->add_option("--run-id", ea.run_id, "Run id (default: checkpoint name)");
  ev->add_option("--dataset", ea.dataset, "Override the manifest path stored in the checkpoint");
  ev->add_option("--threads", ea.threads, "Worker threads")->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Merge metric files into CSV/JSON tables");
  rep->add_option("--runs", ra.runs, "Run directories or metrics files")->required();
  rep->add_option("--ref", ra.ref, "Reference run id for deltas");
  rep->add_option("--out", ra.out, "Output directory (default: CSV on stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return generate(ga);
    if (tr->parsed()) return train(ta);
    if (ev->parsed()) return eval(ea);
    if (rep->parsed()) return report(ra);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: a subcommand is required\n" << app.help();
  return 2;
}
