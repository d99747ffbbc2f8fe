#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "klstm/data.hpp"
#include "klstm/metrics.hpp"
#include "klstm/trainers.hpp"

namespace klstm {

struct TaskSpec {
  enum class Kind { kFile, kTeacher, kBinaryAddition };
  Kind kind = Kind::kTeacher;

  // file
  std::string path;
  char delimiter = ',';
  std::vector<Index> target_columns{-1};  ///< -1: last column
  bool has_header = false;

  // teacher
  TeacherTaskSpec teacher;

  // binary addition
  int summands = 3;
};

/// Hyperparameters for one optimizer. Schedules with horizon 0 span the whole run.
struct OptimizerSpec {
  TrainerKind kind = TrainerKind::kAlg2;
  double learning_rate = 0.004;
  double p0 = 10.0;  ///< P_1 scale (EKF/DEKF) or p_1 (Alg1/Alg2)
  NoiseSchedule q{1e-7, 1e-8, 0};
  NoiseSchedule r{10.0, 3.0, 0};
  double zeta_min = 0.01;
  double zeta_bar = 0.1;  ///< Alg1 only
  long spd_check_interval = 100;
};

/// Documented defaults (regression task / binary-addition task).
OptimizerSpec default_optimizer(TrainerKind kind, TaskSpec::Kind task = TaskSpec::Kind::kTeacher);

struct ExperimentConfig {
  TaskSpec task;
  OptimizerSpec optimizer;
  Index hidden = 16;
  long steps = 2500;
  Index tbptt = kDefaultTbpttDepth;
  std::vector<std::uint64_t> seeds{1};
  long k = 50;
  double init_std = 0.1;
  bool compute_knse = true;
  /// Binary tasks: stop a seed once sustainable prediction is reached.
  bool stop_when_sustained = false;
  /// 0: from KLSTM_WORKERS, else the number of logical processors.
  int workers = 0;
  std::string out_dir;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> losses;  ///< ‖e_t‖² per step
  double nse = 0.0;
  std::optional<double> knse;
  double wall_seconds = 0.0;
  long updates = 0;
  bool diverged = false;
  std::optional<long> sustainable;  ///< binary tasks only
  KalmanDiagnostics diagnostics;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  double target_variance = 1.0;
  /// Per-timestep percentiles of the normalized squared error across seeds.
  ConfidenceBand band;
  Interval nse;
  std::optional<Interval> knse;
  double median_nse = 0.0;  ///< median over seeds of per-seed NSE
  double median_wall_seconds = 0.0;
};

/// Worker count from KLSTM_WORKERS, defaulting to the number of logical processors.
int default_worker_count();

RegressionStream make_stream(const TaskSpec& task, std::uint64_t seed, long steps);
std::unique_ptr<Trainer> make_trainer(const OptimizerSpec& spec, const LstmParams<double>& init, long steps,
                                      Index tbptt);
ModelDims learner_dims(const ExperimentConfig& config, const RegressionStream& stream);

/// Single seed: fresh init (std init_std), fresh stream, full online run.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed);
ExperimentReport run_experiment(const ExperimentConfig& config);

struct SweepGrid {
  TrainerKind kind = TrainerKind::kAdam;
  /// Hyperparameter name → candidate values, in declaration order.
  std::vector<std::pair<std::string, std::vector<double>>> axes;
};

struct SweepConfig {
  ExperimentConfig base;
  std::vector<SweepGrid> grids;
  long repeats = 10;
  long prefix = 1000;
};

struct SweepPoint {
  std::vector<std::pair<std::string, double>> values;
  double mean_mse = 0.0;  ///< +inf when any repeat diverged
};

struct SweepResult {
  TrainerKind kind;
  OptimizerSpec best;
  SweepPoint best_point;
  std::vector<SweepPoint> points;
};

SweepConfig sweep_config_from_json(const nlohmann::ordered_json& j);
/// Sets one named hyperparameter (lr, p0, q_start, q_end, r_start, r_end, zeta_min, zeta_bar).
void apply_hyperparameter(OptimizerSpec& spec, const std::string& name, double value);
std::vector<SweepResult> grid_sweep(const SweepConfig& config);

struct EmittedFiles {
  std::string curve;
  std::string summary;
};

/// Writes <dir>/<optimizer>_curve.csv and <dir>/<optimizer>_summary.json.
EmittedFiles emit_outputs(const ExperimentReport& report, const std::string& dir);
nlohmann::json summary_json(const ExperimentReport& report);

}  // namespace klstm
