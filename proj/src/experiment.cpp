#include "klstm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "klstm/errors.hpp"

namespace klstm {

using nlohmann::json;

OptimizerSpec default_optimizer(TrainerKind kind, TaskSpec::Kind task) {
  OptimizerSpec s;
  s.kind = kind;
  const bool binary = task == TaskSpec::Kind::kBinaryAddition;
  switch (kind) {
    case TrainerKind::kSgd: s.learning_rate = 0.2; break;
    case TrainerKind::kRmsprop: s.learning_rate = binary ? 0.02 : 0.009; break;
    case TrainerKind::kAdam: s.learning_rate = 0.004; break;
    case TrainerKind::kEkf:
    case TrainerKind::kDekf:
      s.p0 = 100.0;
      s.r = binary ? NoiseSchedule::constant(3.0) : NoiseSchedule{10.0, 3.0, 0};
      s.q = binary ? NoiseSchedule{1e-3, 1e-6, 0} : NoiseSchedule{1e-4, 1e-6, 0};
      break;
    case TrainerKind::kAlg1:
    case TrainerKind::kAlg2:
      s.p0 = 10.0;
      s.q = binary ? NoiseSchedule::constant(1e-7) : NoiseSchedule{1e-7, 1e-8, 0};
      break;
  }
  return s;
}

void ExperimentConfig::validate() const {
  if (steps <= 0) throw ConfigError("steps must be positive");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (hidden <= 0) throw ConfigError("hidden size must be positive");
  if (tbptt <= 0) throw ConfigError("TBPTT depth must be positive");
  if (!(init_std >= 0.0)) throw ConfigError("init std must be non-negative");
  if (task.kind == TaskSpec::Kind::kFile && task.path.empty()) throw ConfigError("file task needs a path");
  if (task.kind == TaskSpec::Kind::kBinaryAddition && task.summands < 2)
    throw ConfigError("binary addition needs at least two summands");
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  const OptimizerSpec& o = optimizer;
  switch (o.kind) {
    case TrainerKind::kSgd:
    case TrainerKind::kRmsprop:
    case TrainerKind::kAdam:
      if (!positive(o.learning_rate)) throw ConfigError("learning rate must be positive");
      break;
    default:
      if (!positive(o.p0)) throw ConfigError("initial covariance scale must be positive");
      if (!positive(o.q.start) || !positive(o.q.end) || !positive(o.r.start) || !positive(o.r.end))
        throw ConfigError("noise schedule endpoints must be positive");
      if (o.q.horizon < 0 || o.r.horizon < 0) throw ConfigError("schedule horizons must be non-negative");
      if (o.spd_check_interval < 1) throw ConfigError("spd check interval must be positive");
  }
  if (o.kind == TrainerKind::kAlg1 && !positive(o.zeta_bar)) throw ConfigError("zeta_bar must be positive");
  if (o.kind == TrainerKind::kAlg2 && !positive(o.zeta_min)) throw ConfigError("zeta_min must be positive");
}

// --- JSON -----------------------------------------------------------------

namespace {

const char* task_kind_name(TaskSpec::Kind k) {
  switch (k) {
    case TaskSpec::Kind::kFile: return "file";
    case TaskSpec::Kind::kTeacher: return "teacher";
    case TaskSpec::Kind::kBinaryAddition: return "binadd";
  }
  return "teacher";
}

TaskSpec::Kind task_kind_from(const std::string& s) {
  if (s == "file") return TaskSpec::Kind::kFile;
  if (s == "teacher") return TaskSpec::Kind::kTeacher;
  if (s == "binadd") return TaskSpec::Kind::kBinaryAddition;
  throw ConfigError("unknown task kind '" + s + "'");
}

json schedule_json(const NoiseSchedule& s) { return {{"start", s.start}, {"end", s.end}, {"horizon", s.horizon}}; }

NoiseSchedule schedule_from(const json& j) {
  return {j.at("start").get<double>(), j.at("end").get<double>(), j.at("horizon").get<long>()};
}

json task_json(const TaskSpec& t) {
  json j{{"kind", task_kind_name(t.kind)}};
  switch (t.kind) {
    case TaskSpec::Kind::kFile:
      j["path"] = t.path;
      j["delimiter"] = std::string(1, t.delimiter);
      j["target_columns"] = t.target_columns;
      j["has_header"] = t.has_header;
      break;
    case TaskSpec::Kind::kTeacher:
      j["n_x"] = t.teacher.dims.n_x;
      j["teacher_hidden"] = t.teacher.dims.n_s;
      j["n_d"] = t.teacher.dims.n_d;
      j["teacher_seed"] = t.teacher.teacher_seed;
      j["teacher_std"] = t.teacher.teacher_std;
      j["noise_std"] = t.teacher.noise_std;
      j["input_seed"] = t.teacher.input_seed;
      break;
    case TaskSpec::Kind::kBinaryAddition:
      j["summands"] = t.summands;
      break;
  }
  return j;
}

TaskSpec task_from(const json& j) {
  TaskSpec t;
  t.kind = task_kind_from(j.at("kind").get<std::string>());
  switch (t.kind) {
    case TaskSpec::Kind::kFile: {
      t.path = j.at("path").get<std::string>();
      const std::string delim = j.value("delimiter", std::string(","));
      if (delim.size() != 1) throw ConfigError("delimiter must be a single character");
      t.delimiter = delim[0];
      t.target_columns = j.value("target_columns", std::vector<Index>{-1});
      t.has_header = j.value("has_header", false);
      break;
    }
    case TaskSpec::Kind::kTeacher:
      t.teacher.dims.n_x = j.value("n_x", t.teacher.dims.n_x);
      t.teacher.dims.n_s = j.value("teacher_hidden", t.teacher.dims.n_s);
      t.teacher.dims.n_d = j.value("n_d", t.teacher.dims.n_d);
      t.teacher.teacher_seed = j.value("teacher_seed", t.teacher.teacher_seed);
      t.teacher.teacher_std = j.value("teacher_std", t.teacher.teacher_std);
      t.teacher.noise_std = j.value("noise_std", t.teacher.noise_std);
      t.teacher.input_seed = j.value("input_seed", t.teacher.input_seed);
      break;
    case TaskSpec::Kind::kBinaryAddition:
      t.summands = j.value("summands", t.summands);
      break;
  }
  return t;
}

json optimizer_json(const OptimizerSpec& o) {
  return {{"kind", to_string(o.kind)},
          {"lr", o.learning_rate},
          {"p0", o.p0},
          {"q", schedule_json(o.q)},
          {"r", schedule_json(o.r)},
          {"zeta_min", o.zeta_min},
          {"zeta_bar", o.zeta_bar},
          {"spd_check_interval", o.spd_check_interval}};
}

OptimizerSpec optimizer_from(const json& j, TaskSpec::Kind task) {
  OptimizerSpec o = default_optimizer(trainer_kind_from_string(j.at("kind").get<std::string>()), task);
  o.learning_rate = j.value("lr", o.learning_rate);
  o.p0 = j.value("p0", o.p0);
  if (j.contains("q")) o.q = schedule_from(j.at("q"));
  if (j.contains("r")) o.r = schedule_from(j.at("r"));
  o.zeta_min = j.value("zeta_min", o.zeta_min);
  o.zeta_bar = j.value("zeta_bar", o.zeta_bar);
  o.spd_check_interval = j.value("spd_check_interval", o.spd_check_interval);
  return o;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  return {{"task", task_json(c.task)},
          {"optimizer", optimizer_json(c.optimizer)},
          {"hidden", c.hidden},
          {"steps", c.steps},
          {"tbptt", c.tbptt},
          {"seeds", c.seeds},
          {"k", c.k},
          {"init_std", c.init_std},
          {"compute_knse", c.compute_knse},
          {"stop_when_sustained", c.stop_when_sustained},
          {"workers", c.workers},
          {"out_dir", c.out_dir}};
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    if (j.contains("task")) c.task = task_from(j.at("task"));
    if (j.contains("optimizer"))
      c.optimizer = optimizer_from(j.at("optimizer"), c.task.kind);
    else
      c.optimizer = default_optimizer(c.optimizer.kind, c.task.kind);
    c.hidden = j.value("hidden", c.hidden);
    c.steps = j.value("steps", c.steps);
    c.tbptt = j.value("tbptt", c.tbptt);
    c.seeds = j.value("seeds", c.seeds);
    c.k = j.value("k", c.k);
    c.init_std = j.value("init_std", c.init_std);
    c.compute_knse = j.value("compute_knse", c.compute_knse);
    c.stop_when_sustained = j.value("stop_when_sustained", c.stop_when_sustained);
    c.workers = j.value("workers", c.workers);
    c.out_dir = j.value("out_dir", c.out_dir);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// --- running ----------------------------------------------------------------

int default_worker_count() {
  if (const char* env = std::getenv("KLSTM_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

/// Runs fn(i) for i in [0, count) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t pool = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (pool <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> threads;
  threads.reserve(pool);
  for (std::size_t w = 0; w < pool; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  threads.clear();
  if (failure) std::rethrow_exception(failure);
}

NoiseSchedule resolve(NoiseSchedule s, long steps) {
  if (s.horizon <= 0) s.horizon = std::max(1L, steps);
  return s;
}

double median_of(std::vector<double> v) { return v.empty() ? 0.0 : percentile(std::move(v), 0.5); }

}  // namespace

RegressionStream make_stream(const TaskSpec& task, std::uint64_t seed, long steps) {
  switch (task.kind) {
    case TaskSpec::Kind::kFile: {
      DelimitedOptions opts;
      opts.delimiter = task.delimiter;
      opts.has_header = task.has_header;
      opts.target_columns = task.target_columns;
      return load_delimited(task.path, opts).prefix(steps);
    }
    case TaskSpec::Kind::kTeacher:
      return teacher_lstm_stream(task.teacher, steps);
    case TaskSpec::Kind::kBinaryAddition:
      return binary_addition_stream(task.summands, seed, steps);
  }
  throw ConfigError("unknown task");
}

std::unique_ptr<Trainer> make_trainer(const OptimizerSpec& spec, const LstmParams<double>& init, long steps,
                                      Index tbptt) {
  const NoiseSchedule q = resolve(spec.q, steps);
  const NoiseSchedule r = resolve(spec.r, steps);
  const SpdGuard guard{spec.spd_check_interval};
  switch (spec.kind) {
    case TrainerKind::kSgd:
      return std::make_unique<FirstOrderTrainer>(init, FirstOrderConfig{FirstOrderKind::kSgd, spec.learning_rate},
                                                 tbptt);
    case TrainerKind::kRmsprop:
      return std::make_unique<FirstOrderTrainer>(
          init, FirstOrderConfig{FirstOrderKind::kRmsprop, spec.learning_rate}, tbptt);
    case TrainerKind::kAdam:
      return std::make_unique<FirstOrderTrainer>(init, FirstOrderConfig{FirstOrderKind::kAdam, spec.learning_rate},
                                                 tbptt);
    case TrainerKind::kEkf:
      return std::make_unique<EkfTrainer>(init, spec.p0, q, r, tbptt, guard);
    case TrainerKind::kDekf:
      return std::make_unique<IekfTrainer>(init, node_partition(init.dims()), spec.p0, q, r, tbptt, guard);
    case TrainerKind::kAlg1:
      return std::make_unique<Alg1Trainer>(init, spec.zeta_bar, spec.p0, q, tbptt, guard);
    case TrainerKind::kAlg2:
      return std::make_unique<Alg2Trainer>(init, spec.zeta_min, spec.p0, q, tbptt, guard);
  }
  throw ConfigError("unknown optimizer");
}

ModelDims learner_dims(const ExperimentConfig& config, const RegressionStream& stream) {
  return {stream.n_x(), config.hidden, stream.n_d()};
}

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const RegressionStream stream = make_stream(config.task, seed, config.steps);
  const long steps = std::min<long>(config.steps, static_cast<long>(stream.length()));
  const LstmParams<double> init = init_params(learner_dims(config, stream), config.init_std, seed);
  std::unique_ptr<Trainer> trainer = make_trainer(config.optimizer, init, steps, config.tbptt);

  const bool binary = config.task.kind == TaskSpec::Kind::kBinaryAddition;
  const bool want_knse = config.compute_knse && config.k < steps;
  SustainedRunTracker tracker;

  SeedResult result;
  result.seed = seed;
  result.losses.reserve(static_cast<std::size_t>(steps));
  double knse_sum = 0.0;
  long knse_count = 0;

  using Clock = std::chrono::steady_clock;
  VectorXd x(stream.n_x());
  VectorXd d(stream.n_d());
  for (long t = 0; t < steps; ++t) {
    x = stream.inputs.row(t).transpose();
    d = stream.targets.row(t).transpose();
    const auto begin = Clock::now();
    const VectorXd prediction = trainer->predict(x);
    const StepOutcome o = trainer->observe(d);
    result.wall_seconds += std::chrono::duration<double>(Clock::now() - begin).count();

    if (!std::isfinite(o.loss) || !prediction.allFinite()) {
      result.diverged = true;
      break;
    }
    result.losses.push_back(o.loss);
    if (o.updated) ++result.updates;

    if (binary) {
      const bool correct = (prediction[0] > 0.0) == (d[0] > 0.0);
      if (tracker.push(correct) && config.stop_when_sustained) break;
    }
    if (want_knse && t + 1 + config.k <= steps) {
      knse_sum += knse_error(trainer->freeze(), stream, t + 1, config.k);
      ++knse_count;
    }
  }

  const double var = target_variance(stream.targets.topRows(steps));
  if (result.diverged) {
    result.losses.resize(static_cast<std::size_t>(steps), std::numeric_limits<double>::infinity());
    result.nse = std::numeric_limits<double>::infinity();
    if (want_knse) result.knse = std::numeric_limits<double>::infinity();
  } else {
    const long evaluated = static_cast<long>(result.losses.size());
    result.nse = evaluated >= 2 ? nse(result.losses, stream.targets.topRows(evaluated))
                                : (evaluated == 1 ? result.losses.front() / var : 0.0);
    if (want_knse && knse_count > 0) result.knse = knse_sum / static_cast<double>(knse_count) / var;
  }
  if (binary) result.sustainable = tracker.result();
  if (const KalmanDiagnostics* diag = trainer->diagnostics()) result.diagnostics = *diag;
  return result;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  report.seeds.resize(config.seeds.size());
  const int workers = config.workers > 0 ? config.workers : default_worker_count();
  parallel_for(config.seeds.size(), workers,
               [&](std::size_t i) { report.seeds[i] = run_seed(config, config.seeds[i]); });

  const RegressionStream stream = make_stream(config.task, config.seeds.front(), config.steps);
  const long steps = std::min<long>(config.steps, static_cast<long>(stream.length()));
  report.target_variance = target_variance(stream.targets.topRows(steps));

  std::vector<double> nses;
  std::vector<double> walls;
  std::vector<std::vector<double>> curves;
  bool equal_length = true;
  for (const SeedResult& s : report.seeds) {
    nses.push_back(s.nse);
    walls.push_back(s.wall_seconds);
    std::vector<double> curve(s.losses);
    for (double& v : curve) v /= report.target_variance;
    equal_length = equal_length && static_cast<long>(curve.size()) == steps;
    curves.push_back(std::move(curve));
  }
  report.median_nse = median_of(nses);
  report.median_wall_seconds = median_of(walls);

  if (curves.size() >= 2 && equal_length) {
    report.band = confidence_band(curves);
  } else if (curves.size() == 1 && equal_length) {
    report.band.p5 = report.band.p50 = report.band.p95 = curves.front();
    double m = 0.0;
    for (double v : curves.front()) m += v;
    m /= static_cast<double>(std::max<std::size_t>(1, curves.front().size()));
    report.band.average = {m, m, m};
  }
  report.nse = {percentile(nses, 0.05), percentile(nses, 0.5), percentile(nses, 0.95)};
  if (report.band.p50.size() == static_cast<std::size_t>(steps)) report.nse = report.band.average;

  std::vector<double> knses;
  for (const SeedResult& s : report.seeds)
    if (s.knse) knses.push_back(*s.knse);
  if (!knses.empty() && knses.size() == report.seeds.size())
    report.knse = Interval{percentile(knses, 0.05), percentile(knses, 0.5), percentile(knses, 0.95)};
  return report;
}

// --- sweep ------------------------------------------------------------------

void apply_hyperparameter(OptimizerSpec& spec, const std::string& name, double value) {
  if (name == "lr") spec.learning_rate = value;
  else if (name == "p0") spec.p0 = value;
  else if (name == "q_start") spec.q.start = value;
  else if (name == "q_end") spec.q.end = value;
  else if (name == "r_start") spec.r.start = value;
  else if (name == "r_end") spec.r.end = value;
  else if (name == "zeta_min") spec.zeta_min = value;
  else if (name == "zeta_bar") spec.zeta_bar = value;
  else throw ConfigError("unknown hyperparameter '" + name + "'");
}

SweepConfig sweep_config_from_json(const nlohmann::ordered_json& j) {
  try {
    SweepConfig c;
    c.base = config_from_json(json::parse(j.dump()));
    c.repeats = j.value("repeats", c.repeats);
    c.prefix = j.value("prefix", c.prefix);
    if (c.repeats < 1) throw ConfigError("repeats must be positive");
    if (c.prefix < 2) throw ConfigError("prefix must be at least 2");
    if (!j.contains("grids") || !j.at("grids").is_array() || j.at("grids").empty())
      throw ConfigError("sweep config needs a non-empty 'grids' array");
    for (const auto& g : j.at("grids")) {
      SweepGrid grid;
      grid.kind = trainer_kind_from_string(g.at("optimizer").get<std::string>());
      if (g.contains("values")) {
        for (const auto& [name, values] : g.at("values").items()) {
          std::vector<double> v = values.get<std::vector<double>>();
          if (v.empty()) throw ConfigError("grid axis '" + name + "' is empty");
          grid.axes.emplace_back(name, std::move(v));
        }
      }
      c.grids.push_back(std::move(grid));
    }
    return c;
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ConfigError(std::string("malformed sweep config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<SweepResult> grid_sweep(const SweepConfig& config) {
  std::vector<SweepResult> results;
  for (const SweepGrid& grid : config.grids) {
    // Cartesian product, last axis varying fastest.
    std::vector<SweepPoint> points(1);
    for (const auto& [name, values] : grid.axes) {
      std::vector<SweepPoint> expanded;
      for (const SweepPoint& p : points)
        for (double v : values) {
          SweepPoint q = p;
          q.values.emplace_back(name, v);
          expanded.push_back(std::move(q));
        }
      points = std::move(expanded);
    }

    SweepResult result{grid.kind, {}, {}, {}};
    std::size_t best = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      ExperimentConfig run = config.base;
      run.optimizer = default_optimizer(grid.kind, run.task.kind);
      for (const auto& [name, v] : points[i].values) apply_hyperparameter(run.optimizer, name, v);
      run.steps = config.prefix;
      run.compute_knse = false;
      run.seeds.clear();
      for (long r = 0; r < config.repeats; ++r) run.seeds.push_back(static_cast<std::uint64_t>(r + 1));

      const ExperimentReport report = run_experiment(run);
      double total = 0.0;
      for (const SeedResult& s : report.seeds) total += s.nse * report.target_variance;
      points[i].mean_mse = std::isfinite(total) ? total / static_cast<double>(report.seeds.size())
                                                : std::numeric_limits<double>::infinity();
      if (points[i].mean_mse < points[best].mean_mse) best = i;
    }
    result.best = default_optimizer(grid.kind, config.base.task.kind);
    for (const auto& [name, v] : points[best].values) apply_hyperparameter(result.best, name, v);
    result.best_point = points[best];
    result.points = std::move(points);
    results.push_back(std::move(result));
  }
  return results;
}

// --- output -----------------------------------------------------------------

namespace {

json interval_json(const Interval& i) { return {{"lower", i.lower}, {"median", i.median}, {"upper", i.upper}}; }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json summary_json(const ExperimentReport& report) {
  json seeds = json::array();
  for (const SeedResult& s : report.seeds) {
    json j{{"seed", s.seed},
           {"nse", std::isfinite(s.nse) ? json(s.nse) : json("inf")},
           {"wall_seconds", s.wall_seconds},
           {"updates", s.updates},
           {"diverged", s.diverged},
           {"steps_run", s.losses.size()}};
    if (s.knse) j["knse"] = std::isfinite(*s.knse) ? json(*s.knse) : json("inf");
    if (report.config.task.kind == TaskSpec::Kind::kBinaryAddition)
      j["sustainable_prediction"] = s.sustainable ? json(*s.sustainable) : json("Failed");
    if (s.diagnostics.node_updates > 0) {
      j["kalman"] = {{"node_updates", s.diagnostics.node_updates},
                     {"skipped_nodes", s.diagnostics.skipped_nodes},
                     {"trace_violations", s.diagnostics.trace_violations},
                     {"jitter_repairs", s.diagnostics.jitter_repairs}};
    }
    seeds.push_back(std::move(j));
  }
  json out{{"optimizer", to_string(report.config.optimizer.kind)},
           {"config", to_json(report.config)},
           {"seeds", report.config.seeds},
           {"target_variance", report.target_variance},
           {"nse", interval_json(report.nse)},
           {"median_nse", report.median_nse},
           {"median_wall_seconds", report.median_wall_seconds},
           {"per_seed", std::move(seeds)}};
  if (report.knse) out["knse"] = interval_json(*report.knse);
  return out;
}

EmittedFiles emit_outputs(const ExperimentReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const std::string name = to_string(report.config.optimizer.kind);
  EmittedFiles files{(fs::path(dir) / (name + "_curve.csv")).string(),
                     (fs::path(dir) / (name + "_summary.json")).string()};

  std::ofstream curve(files.curve, std::ios::binary | std::ios::trunc);
  if (!curve) throw IoError("cannot write '" + files.curve + "'");
  curve << "timestep,median_nse,p5,p95\n";
  for (std::size_t t = 0; t < report.band.p50.size(); ++t) {
    curve << (t + 1) << ',' << format_double(report.band.p50[t]) << ',' << format_double(report.band.p5[t]) << ','
          << format_double(report.band.p95[t]) << '\n';
  }
  if (!curve) throw IoError("failed writing '" + files.curve + "'");

  std::ofstream summary(files.summary, std::ios::binary | std::ios::trunc);
  if (!summary) throw IoError("cannot write '" + files.summary + "'");
  summary << summary_json(report).dump(2) << '\n';
  if (!summary) throw IoError("failed writing '" + files.summary + "'");
  return files;
}

}  // namespace klstm
