#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "klstm/errors.hpp"
#include "klstm/experiment.hpp"

namespace {

using klstm::ConfigError;
using klstm::ExperimentConfig;
using klstm::TaskSpec;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct RunOptions {
  std::string task = "teacher";
  std::string optimizer = "alg2";
  long hidden = 16;
  long steps = 2500;
  std::vector<std::uint64_t> seeds{1};
  long tbptt = klstm::kDefaultTbpttDepth;
  long k = 50;
  std::optional<double> zeta_min, zeta_bar, p0, q_start, q_end, r_start, r_end, lr;
  std::string delimiter = ",";
  std::vector<long> target_columns{-1};
  bool header = false;
  int summands = 3;
  bool no_knse = false;
  int workers = 0;
  std::string out;
};

TaskSpec parse_task(const RunOptions& o) {
  TaskSpec t;
  if (o.task == "teacher") {
    t.kind = TaskSpec::Kind::kTeacher;
  } else if (o.task == "binadd") {
    t.kind = TaskSpec::Kind::kBinaryAddition;
    t.summands = o.summands;
  } else if (o.task.rfind("file:", 0) == 0) {
    t.kind = TaskSpec::Kind::kFile;
    t.path = o.task.substr(5);
    if (o.delimiter == "whitespace" || o.delimiter == "space") {
      t.delimiter = ' ';
    } else if (o.delimiter == "tab" || o.delimiter == "\\t") {
      t.delimiter = '\t';
    } else if (o.delimiter.size() == 1) {
      t.delimiter = o.delimiter[0];
    } else {
      throw ConfigError("delimiter must be a single character, 'tab' or 'whitespace'");
    }
    t.target_columns.assign(o.target_columns.begin(), o.target_columns.end());
    t.has_header = o.header;
  } else {
    throw ConfigError("unknown task '" + o.task + "' (expected file:<path>, teacher or binadd)");
  }
  return t;
}

ExperimentConfig build_config(const RunOptions& o) {
  ExperimentConfig c;
  c.task = parse_task(o);
  c.optimizer = klstm::default_optimizer(klstm::trainer_kind_from_string(o.optimizer), c.task.kind);
  if (o.lr) c.optimizer.learning_rate = *o.lr;
  if (o.p0) c.optimizer.p0 = *o.p0;
  if (o.q_start) c.optimizer.q.start = *o.q_start;
  if (o.q_end) c.optimizer.q.end = *o.q_end;
  if (o.r_start) c.optimizer.r.start = *o.r_start;
  if (o.r_end) c.optimizer.r.end = *o.r_end;
  if (o.zeta_min) c.optimizer.zeta_min = *o.zeta_min;
  if (o.zeta_bar) c.optimizer.zeta_bar = *o.zeta_bar;
  c.hidden = o.hidden;
  c.steps = o.steps;
  c.seeds = o.seeds;
  c.tbptt = o.tbptt;
  c.k = o.k;
  c.compute_knse = !o.no_knse;
  c.workers = o.workers;
  c.out_dir = o.out;
  c.validate();
  return c;
}

void print_report(const klstm::ExperimentReport& r) {
  const auto& c = r.config;
  std::printf("%-8s NSE median %.6g [%.6g, %.6g]", klstm::to_string(c.optimizer.kind).c_str(), r.median_nse,
              r.nse.lower, r.nse.upper);
  if (r.knse) std::printf("  kNSE(k=%ld) %.6g [%.6g, %.6g]", c.k, r.knse->median, r.knse->lower, r.knse->upper);
  std::printf("  wall %.3fs (median/seed)\n", r.median_wall_seconds);
  for (const auto& s : r.seeds) {
    std::printf("  seed %-6llu nse %.6g updates %ld%s", static_cast<unsigned long long>(s.seed), s.nse, s.updates,
                s.diverged ? " DIVERGED" : "");
    if (c.task.kind == TaskSpec::Kind::kBinaryAddition)
      std::printf(" sustainable %s", s.sustainable ? std::to_string(*s.sustainable).c_str() : "Failed");
    std::printf("\n");
  }
}

int cmd_run(const RunOptions& o) {
  const ExperimentConfig c = build_config(o);
  const klstm::ExperimentReport report = klstm::run_experiment(c);
  print_report(report);
  if (!c.out_dir.empty()) {
    const klstm::EmittedFiles files = klstm::emit_outputs(report, c.out_dir);
    std::printf("wrote %s\nwrote %s\n", files.curve.c_str(), files.summary.c_str());
  }
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep config '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ConfigError(std::string("sweep config is not valid JSON: ") + e.what());
  }
  const klstm::SweepConfig config = klstm::sweep_config_from_json(j);
  const std::vector<klstm::SweepResult> results = klstm::grid_sweep(config);

  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& p : r.points) {
      nlohmann::ordered_json values = nlohmann::ordered_json::object();
      for (const auto& [name, v] : p.values) values[name] = v;
      points.push_back({{"values", values}, {"mean_mse", std::isfinite(p.mean_mse) ? nlohmann::ordered_json(p.mean_mse)
                                                                                    : nlohmann::ordered_json("inf")}});
    }
    nlohmann::ordered_json best = nlohmann::ordered_json::object();
    for (const auto& [name, v] : r.best_point.values) best[name] = v;
    std::printf("%-8s best", klstm::to_string(r.kind).c_str());
    for (const auto& [name, v] : r.best_point.values) std::printf(" %s=%g", name.c_str(), v);
    std::printf("  mean MSE %.6g\n", r.best_point.mean_mse);
    doc.push_back({{"optimizer", klstm::to_string(r.kind)}, {"best", best}, {"points", points}});
  }
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw klstm::IoError("cannot write '" + out + "'");
    f << doc.dump(2) << '\n';
  }
  return 0;
}

int cmd_binadd(int n, int streams, const std::vector<std::string>& optimizers, long hidden, long steps,
               const std::string& out, int workers) {
  if (n < 2) throw ConfigError("--n must be at least 2");
  if (streams < 1) throw ConfigError("--streams must be positive");
  for (const std::string& name : optimizers) {
    ExperimentConfig c;
    c.task.kind = TaskSpec::Kind::kBinaryAddition;
    c.task.summands = n;
    c.optimizer = klstm::default_optimizer(klstm::trainer_kind_from_string(name), c.task.kind);
    c.hidden = hidden;
    c.steps = steps;
    c.seeds.clear();
    for (int s = 1; s <= streams; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
    c.compute_knse = false;
    c.stop_when_sustained = true;
    c.workers = workers;
    c.validate();
    const klstm::ExperimentReport report = klstm::run_experiment(c);
    std::printf("%-8s n=%d:", name.c_str(), n);
    for (const auto& s : report.seeds)
      std::printf(" %s", s.sustainable ? std::to_string(*s.sustainable).c_str() : "Failed");
    std::printf("  (wall %.1fs median)\n", report.median_wall_seconds);
    if (!out.empty()) klstm::emit_outputs(report, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online LSTM regression with Kalman-filter and first-order trainers"};
  app.require_subcommand(1);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Train on one task across seeds and report NSE/kNSE");
  run_cmd->add_option("--task", run.task, "file:<path> | teacher | binadd")->capture_default_str();
  run_cmd->add_option("--optimizer", run.optimizer, "sgd|rmsprop|adam|ekf|dekf|alg1|alg2")->capture_default_str();
  run_cmd->add_option("--hidden", run.hidden, "Hidden size n_s")->capture_default_str();
  run_cmd->add_option("--steps", run.steps, "Stream length T")->capture_default_str();
  run_cmd->add_option("--seeds", run.seeds, "Seed list")->delimiter(',')->capture_default_str();
  run_cmd->add_option("--tbptt", run.tbptt, "TBPTT depth")->capture_default_str();
  run_cmd->add_option("--k", run.k, "kNSE horizon")->capture_default_str();
  run_cmd->add_option("--zeta-min", run.zeta_min, "Smallest residual bound in the Alg2 grid");
  run_cmd->add_option("--zeta-bar", run.zeta_bar, "Residual bound for Alg1");
  run_cmd->add_option("--p0", run.p0, "Initial covariance scale");
  run_cmd->add_option("--q-start", run.q_start, "Process noise at t=0");
  run_cmd->add_option("--q-end", run.q_end, "Process noise at the end of the run");
  run_cmd->add_option("--r-start", run.r_start, "Measurement noise at t=0");
  run_cmd->add_option("--r-end", run.r_end, "Measurement noise at the end of the run");
  run_cmd->add_option("--lr", run.lr, "Learning rate for first-order trainers");
  run_cmd->add_option("--delimiter", run.delimiter, "File delimiter: a character, 'tab' or 'whitespace'");
  run_cmd->add_option("--target-columns", run.target_columns, "0-based target columns, negative from the right")
      ->delimiter(',');
  run_cmd->add_flag("--header", run.header, "File has a header row");
  run_cmd->add_option("--summands", run.summands, "Number of summands for binadd")->capture_default_str();
  run_cmd->add_flag("--no-knse", run.no_knse, "Skip the k-step forecast metric");
  run_cmd->add_option("--workers", run.workers, "Worker threads (0: KLSTM_WORKERS or processor count)");
  run_cmd->add_option("--out", run.out, "Output directory for curve and summary files");

  std::string sweep_config;
  std::string sweep_out;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Grid search over hyperparameters");
  sweep_cmd->add_option("--config", sweep_config, "Sweep config (JSON)")->required();
  sweep_cmd->add_option("--out", sweep_out, "Write sweep results as JSON");

  int bin_n = 3;
  int bin_streams = 5;
  long bin_hidden = 12;
  long bin_steps = klstm::kSustainableLimit;
  int bin_workers = 0;
  std::vector<std::string> bin_optimizers{"ekf", "alg2", "rmsprop"};
  std::string bin_out;
  CLI::App* bin_cmd = app.add_subcommand("binadd", "Sustainable prediction on binary addition streams");
  bin_cmd->add_option("--n", bin_n, "Number of summands")->check(CLI::Range(2, 16))->capture_default_str();
  bin_cmd->add_option("--streams", bin_streams, "Number of seeded streams")->capture_default_str();
  bin_cmd->add_option("--optimizer", bin_optimizers, "Optimizers to compare")->delimiter(',')->capture_default_str();
  bin_cmd->add_option("--hidden", bin_hidden, "Hidden size n_s")->capture_default_str();
  bin_cmd->add_option("--steps", bin_steps, "Maximum symbols per stream")->capture_default_str();
  bin_cmd->add_option("--workers", bin_workers, "Worker threads");
  bin_cmd->add_option("--out", bin_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(sweep_config, sweep_out);
    if (*bin_cmd) return cmd_binadd(bin_n, bin_streams, bin_optimizers, bin_hidden, bin_steps, bin_out, bin_workers);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
