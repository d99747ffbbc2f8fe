#include "klstm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "klstm/errors.hpp"

namespace klstm {

RegressionStream RegressionStream::prefix(Index n) const {
  const Index m = std::min(n, length());
  return {source, inputs.topRows(m), targets.topRows(m), scaling};
}

ScaledTargets scale_targets(const MatrixXd& raw) {
  ScaledTargets out{MatrixXd(raw.rows(), raw.cols()), {}};
  out.scaling.reserve(static_cast<std::size_t>(raw.cols()));
  for (Index c = 0; c < raw.cols(); ++c) {
    TargetScaling s{raw.col(c).minCoeff(), raw.col(c).maxCoeff()};
    if (!(s.max > s.min)) throw ConstantTarget(static_cast<std::size_t>(c));
    for (Index r = 0; r < raw.rows(); ++r) out.scaled(r, c) = std::clamp(s.scale(raw(r, c)), -1.0, 1.0);
    out.scaling.push_back(s);
  }
  return out;
}

MatrixXd unscale_targets(const MatrixXd& scaled, const std::vector<TargetScaling>& scaling) {
  if (static_cast<Index>(scaling.size()) != scaled.cols())
    throw DimensionMismatch("unscale_targets: one scaling per column required");
  MatrixXd raw(scaled.rows(), scaled.cols());
  for (Index c = 0; c < scaled.cols(); ++c)
    for (Index r = 0; r < scaled.rows(); ++r) raw(r, c) = scaling[static_cast<std::size_t>(c)].unscale(scaled(r, c));
  return raw;
}

namespace {

std::vector<std::string> split_row(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  if (delimiter == ' ') {
    std::istringstream in(line);
    std::string cell;
    while (in >> cell) cells.push_back(cell);
    return cells;
  }
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delimiter)) cells.push_back(cell);
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) throw ParseError(row, col, cell);
  return value;
}

}  // namespace

RegressionStream load_delimited(const std::string& path, const DelimitedOptions& options) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open '" + path + "'");
  if (options.target_columns.empty()) throw std::invalid_argument("load_delimited: no target columns given");

  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string line;
  bool header_pending = options.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const std::vector<std::string> cells = split_row(line, options.delimiter);
    if (rows.empty()) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw RaggedRows("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " columns, expected " + std::to_string(width));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], line_no, c + 1);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw std::invalid_argument("load_delimited: '" + path + "' has no data rows");

  std::vector<bool> is_target(width, false);
  std::vector<Index> targets = options.target_columns;
  for (Index& c : targets) {
    if (c < 0) c += static_cast<Index>(width);  // negative counts from the right
    if (c < 0 || static_cast<std::size_t>(c) >= width)
      throw std::invalid_argument("target column " + std::to_string(c) + " out of range");
    is_target[static_cast<std::size_t>(c)] = true;
  }
  const Index n_d = static_cast<Index>(options.target_columns.size());
  const Index n_features = static_cast<Index>(width) - n_d;
  if (n_features < 0) throw std::invalid_argument("duplicate target columns");

  const Index length = static_cast<Index>(rows.size());
  MatrixXd inputs(length, n_features + 1);
  MatrixXd raw_targets(length, n_d);
  for (Index r = 0; r < length; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    Index f = 0;
    for (std::size_t c = 0; c < width; ++c)
      if (!is_target[c]) inputs(r, f++) = row[c];
    inputs(r, n_features) = 1.0;
    for (Index k = 0; k < n_d; ++k)
      raw_targets(r, k) = row[static_cast<std::size_t>(targets[static_cast<std::size_t>(k)])];
  }
  ScaledTargets scaled = scale_targets(raw_targets);
  return {path, std::move(inputs), std::move(scaled.scaled), std::move(scaled.scaling)};
}

// ---------------------------------------------------------------------------

BinaryAdditionTask::BinaryAdditionTask(int n, std::uint64_t seed) : n_(n), rng_(seed) {
  if (n < 2) throw std::invalid_argument("binary addition needs at least two summands");
}

BinaryAdditionTask::Symbol BinaryAdditionTask::add(const std::vector<int>& bits) {
  if (static_cast<int>(bits.size()) != n_) throw DimensionMismatch("binary addition: wrong number of bits");
  int s = carry_;
  for (int b : bits) s += b;
  carry_ = s / 2;
  return {bits, s % 2, carry_};
}

BinaryAdditionTask::Symbol BinaryAdditionTask::next() {
  std::vector<int> bits(static_cast<std::size_t>(n_));
  for (int& b : bits) b = coin_(rng_) ? 1 : 0;
  return add(bits);
}

RegressionStream binary_addition_stream(int n, std::uint64_t seed, Index length) {
  BinaryAdditionTask task(n, seed);
  RegressionStream out;
  out.source = "binadd-n" + std::to_string(n) + "-seed" + std::to_string(seed);
  out.inputs.resize(length, n + 1);
  out.targets.resize(length, 1);
  out.scaling = {TargetScaling{-1.0, 1.0}};
  for (Index t = 0; t < length; ++t) {
    const BinaryAdditionTask::Symbol s = task.next();
    for (int k = 0; k < n; ++k) out.inputs(t, k) = s.bits[static_cast<std::size_t>(k)];
    out.inputs(t, n) = 1.0;
    out.targets(t, 0) = s.sum_bit ? 1.0 : -1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

LstmParams<double> teacher_params(const TeacherTaskSpec& spec) {
  return init_params(spec.dims, spec.teacher_std, spec.teacher_seed);
}

RegressionStream teacher_lstm_stream(const TeacherTaskSpec& spec, Index length) {
  if (!(spec.noise_std >= 0.0)) throw std::invalid_argument("teacher noise std must be non-negative");
  const LstmParams<double> teacher = teacher_params(spec);
  const ModelDims& d = spec.dims;
  std::mt19937_64 rng(spec.input_seed);
  std::mt19937_64 noise_rng(spec.input_seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  RegressionStream out;
  out.source = "teacher";
  out.inputs.resize(length, d.n_x);
  out.targets.resize(length, d.n_d);
  out.scaling.assign(static_cast<std::size_t>(d.n_d), TargetScaling{-1.0, 1.0});

  LstmState<double> state = LstmState<double>::zeros(d.n_s);
  VectorXd x(d.n_x);
  for (Index t = 0; t < length; ++t) {
    for (Index k = 0; k + 1 < d.n_x; ++k) x[k] = normal(rng);
    x[d.n_x - 1] = 1.0;
    Prediction<double> p = predict_step(teacher, x, state);
    state = std::move(p.next);
    out.inputs.row(t) = x.transpose();
    for (Index k = 0; k < d.n_d; ++k) {
      const double noisy = p.d_hat[k] + (spec.noise_std > 0.0 ? spec.noise_std * noise(noise_rng) : 0.0);
      out.targets(t, k) = std::clamp(noisy, -1.0, 1.0);
    }
  }
  return out;
}

}  // namespace klstm
