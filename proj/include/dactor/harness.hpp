#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dactor/agents.hpp"
#include "dactor/diagnostics.hpp"
#include "dactor/envs.hpp"
#include "dactor/replay.hpp"
#include "dactor/rng.hpp"

namespace dactor {

/// Everything needed to reproduce one training run. Read from a flat `key = value` file
/// (`#` starts a comment) and command-line overrides using the same keys.
struct RunConfig {
  std::string algorithm = "darc";
  std::string env = "goldminer";
  std::uint64_t seed = 1;
  std::size_t total_steps = 50'000;
  std::size_t warmup_steps = 1'000;
  std::size_t eval_interval = 1'000;
  std::size_t eval_episodes = 10;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  TargetConfig target;
  ExplorationConfig exploration;
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  std::size_t buffer_capacity = 1'000'000;
  UpdateScheme update_scheme = UpdateScheme::Cross;
  bool value_correction = true;
  std::size_t policy_delay = 2;

  std::size_t bias_interval = 0;  // 0 disables bias rows
  std::size_t bias_states = 100;
  std::size_t bias_horizon = 200;
  std::size_t deviance_samples = 1'000;

  std::string out_dir = "out";

  /// Throws std::invalid_argument, naming the offending field.
  void validate() const;
  AgentConfig agent_config(const EnvSpec& env_spec) const;
};

/// Sets one field by key. Throws std::invalid_argument for unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);
void parse_config_text(RunConfig& cfg, std::string_view text);
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);
/// All keys with their current values, in a fixed order; parse_config_text accepts the output.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);
std::vector<std::string> config_keys();

struct EvalRow {
  std::size_t step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  bool operator==(const EvalRow&) const = default;
};

struct BiasRow {
  std::size_t step = 0;
  double mean_estimate = 0.0;
  double mean_true = 0.0;
  double bias = 0.0;
  bool operator==(const BiasRow&) const = default;
};

struct VisitRow {
  std::size_t episode = 0;
  VisitHistogram visits;
  bool operator==(const VisitRow&) const = default;
};

struct RunRecord {
  RunConfig config;
  std::vector<EvalRow> evaluations;
  std::vector<BiasRow> bias;
  std::vector<VisitRow> visits;
  double final_score = 0.0;  // last evaluation's mean return, 0 without evaluations
  std::optional<double> final_critic_deviance;

  VisitHistogram cumulative_visits() const;
};

/// A run that can be advanced one environment step at a time.
///
/// Random streams are derived from the master seed by name: "env", "action_noise",
/// "target_noise", "sampling", "init", "eval", "bias" and "deviance".
class TrainingSession {
 public:
  explicit TrainingSession(RunConfig cfg);

  /// Act, store, and (after warmup) train once. Evaluations and bias rows fall due on
  /// steps that are multiples of their interval. No-op once finished().
  void step();
  void run();
  bool finished() const { return steps_done_ >= cfg_.total_steps; }
  std::size_t steps_done() const { return steps_done_; }

  /// Closes the current episode's visit row and computes the final summary fields.
  RunRecord finish();

  const RunConfig& config() const { return cfg_; }
  const AgentState& agent() const { return *agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const Environment& environment() const { return *env_; }
  const RunRecord& record() const { return record_; }

  /// Mean return and population std of eval_episodes greedy episodes on a copy of the
  /// environment. Never touches the buffer or the networks.
  EvalRow evaluate() const;

 private:
  void close_episode();

  RunConfig cfg_;
  std::unique_ptr<Environment> env_;
  std::unique_ptr<AgentState> agent_;
  ReplayBuffer buffer_;
  Rng env_rng_;
  Rng action_rng_;
  Rng target_rng_;
  Rng sampling_rng_;
  Rng bias_rng_;
  std::vector<double> state_;
  VisitHistogram episode_visits_;
  std::size_t episode_ = 0;
  std::size_t steps_done_ = 0;
  RunRecord record_;
};

RunRecord run_training(const RunConfig& cfg);

/// Trailing mean: out[k] = mean(series[max(0, k - window + 1) .. k]).
std::vector<double> smooth(std::span<const double> series, std::size_t window);

struct Aggregate {
  std::vector<std::size_t> steps;
  std::vector<double> mean;
  std::vector<double> std;  // population
  std::vector<double> final_scores;
  double final_mean = 0.0;
  double final_std = 0.0;
};

/// Throws std::invalid_argument if the records do not share one evaluation step grid.
Aggregate aggregate(std::span<const RunRecord> records);

// ---------------------------------------------------------------------------
// Output

std::string format_double(double x);  // shortest round-trip text
double parse_double(std::string_view text);

std::string curve_csv(std::span<const EvalRow> rows);
std::string curve_csv(const Aggregate& agg);
std::string bias_csv(std::span<const BiasRow> rows);
std::string visits_csv(std::span<const VisitRow> rows);
std::vector<EvalRow> parse_curve_csv(std::string_view text);

std::string summary_json(const RunRecord& record);

struct CurveSeries {
  std::string label;
  std::vector<double> steps;
  std::vector<double> mean;
  std::vector<double> std;
};

/// Standalone SVG line plot with a shaded +-std band per series.
std::string render_svg(std::span<const CurveSeries> series, std::string_view title);

/// Writes curve.csv, bias.csv, visits.csv, summary.json and curve.svg into `dir`.
void emit_outputs(const RunRecord& record, const std::filesystem::path& dir);

struct SweepResult {
  std::vector<std::string> algorithms;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<RunRecord>> runs;  // [algorithm][seed]
  std::vector<Aggregate> aggregates;
};

/// Runs every (algorithm, seed) pair on up to `threads` workers.
SweepResult run_sweep(const RunConfig& base, std::span<const std::string> algorithms,
                      std::span<const std::uint64_t> seeds, std::size_t threads);

/// summary.json for a sweep; improvement is relative to the first algorithm, seed by seed.
std::string sweep_summary_json(const SweepResult& sweep);

/// Per-run outputs under <dir>/<algo>/seed<k>/, aggregate curves under <dir>/<algo>/,
/// plus <dir>/summary.json, <dir>/improvement.csv and <dir>/curve.svg.
void emit_sweep(const SweepResult& sweep, const std::filesystem::path& dir);

/// "1..5" or "1,3,7" style seed lists.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace dactor
