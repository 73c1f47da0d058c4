#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "dactor/harness.hpp"
#include "dactor/properties.hpp"

namespace fs = std::filesystem;
using namespace dactor;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kNumericalError = 2, kPropertyViolation = 3 };

struct RunOptions {
  std::string config_path;
  std::optional<std::string> algo;
  std::optional<std::string> env;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<double> nu;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::vector<std::string> settings;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool single_algo) {
  if (single_algo) cmd->add_option("--algo", o.algo, "ddpg, td3, daddpg, datd3, ctd3 or darc");
  cmd->add_option("--env", o.env, "goldminer or pointreach");
  if (single_algo) cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--steps", o.steps, "total environment steps");
  cmd->add_option("--nu", o.nu, "soft-target weight");
  cmd->add_option("--lambda", o.lambda, "critic-deviance penalty");
  cmd->add_option("--config", o.config_path, "key = value file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.settings, "extra key=value overrides (repeatable)");
}

RunConfig build_config(const RunOptions& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) load_config_file(cfg, o.config_path);
  if (o.algo) cfg.algorithm = *o.algo;
  if (o.env) cfg.env = *o.env;
  if (o.seed) cfg.seed = *o.seed;
  if (o.steps) {
    cfg.total_steps = *o.steps;
    cfg.warmup_steps = std::min(cfg.warmup_steps, cfg.total_steps);
  }
  if (o.nu) cfg.target.nu = *o.nu;
  if (o.lambda) cfg.target.lambda = *o.lambda;
  if (o.out) cfg.out_dir = *o.out;
  for (const std::string& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + s);
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int cmd_train(const RunOptions& o, bool with_bias) {
  RunConfig cfg = build_config(o);
  if (with_bias && cfg.bias_interval == 0) cfg.bias_interval = 2'000;
  const RunRecord rec = run_training(cfg);
  emit_outputs(rec, cfg.out_dir);
  std::printf("%s on %s seed %llu: final score %s", cfg.algorithm.c_str(), cfg.env.c_str(),
              static_cast<unsigned long long>(cfg.seed), format_double(rec.final_score).c_str());
  if (rec.final_critic_deviance) {
    std::printf(", critic deviance %s", format_double(*rec.final_critic_deviance).c_str());
  }
  std::printf("\nwrote %s\n", cfg.out_dir.c_str());
  return kOk;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_sweep(const RunOptions& o, const std::string& algos, const std::string& seeds,
              std::size_t threads) {
  const RunConfig base = build_config(o);
  const std::vector<std::string> names = split_list(algos);
  if (names.empty()) throw std::invalid_argument("--algos is empty");
  const std::vector<std::uint64_t> seed_list = parse_seed_list(seeds);
  const SweepResult sweep = run_sweep(base, names, seed_list, threads);
  emit_sweep(sweep, base.out_dir);
  for (std::size_t a = 0; a < names.size(); ++a) {
    std::printf("%-8s %s +- %s\n", names[a].c_str(),
                format_double(sweep.aggregates[a].final_mean).c_str(),
                format_double(sweep.aggregates[a].final_std).c_str());
  }
  std::printf("wrote %s\n", base.out_dir.c_str());
  return kOk;
}

int cmd_plot(const fs::path& in, const fs::path& out) {
  std::vector<CurveSeries> series;
  auto load = [&](const fs::path& dir, std::string label) {
    const std::vector<EvalRow> rows = parse_curve_csv(read_text_file(dir / "curve.csv"));
    CurveSeries s;
    s.label = std::move(label);
    for (const EvalRow& r : rows) {
      s.steps.push_back(static_cast<double>(r.step));
      s.mean.push_back(r.mean_return);
      s.std.push_back(r.std_return);
    }
    s.mean = smooth(s.mean, 3);
    series.push_back(std::move(s));
  };
  if (fs::exists(in / "curve.csv")) load(in, in.filename().string());
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(in)) {
    if (entry.is_directory() && fs::exists(entry.path() / "curve.csv")) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const fs::path& d : subdirs) load(d, d.filename().string());
  if (series.empty()) throw std::invalid_argument("no curve.csv under " + in.string());
  write_text_file(out, render_svg(series, in.filename().string()));
  std::printf("wrote %s (%zu series)\n", out.string().c_str(), series.size());
  return kOk;
}

int cmd_check() {
  const SuiteResult results[] = {
      check_daddpg_below_ddpg(1000, 1),
      check_datd3_above_td3(1000, 1),
      check_soft_target(1000, 1),
      check_gradients(20, 1),
  };
  bool ok = true;
  for (const SuiteResult& r : results) {
    std::printf("%s  %-40s %zu/%zu  worst %.3g  %.2fs %s\n", r.ok() ? "ok  " : "FAIL",
                r.name.c_str(), r.passed, r.cases, r.worst, r.seconds, r.note.c_str());
    ok = ok && r.ok();
  }
  return ok ? kOk : kPropertyViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-actor deterministic policy-gradient experiments"};
  app.require_subcommand(1);

  RunOptions train_opts;
  auto* train = app.add_subcommand("train", "train one agent and write curve/summary files");
  add_run_options(train, train_opts, true);

  RunOptions bias_opts;
  auto* bias = app.add_subcommand("bias", "train with periodic estimator-bias measurements");
  add_run_options(bias, bias_opts, true);

  RunOptions sweep_opts;
  std::string algos;
  std::string seeds = "1..5";
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run algorithms x seeds and aggregate");
  add_run_options(sweep, sweep_opts, false);
  sweep->add_option("--algos", algos, "comma-separated algorithm names")->required();
  sweep->add_option("--seeds", seeds, "seed range a..b or list a,b,c");
  sweep->add_option("--threads", threads, "parallel runs");

  std::string plot_in;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "render curve.csv files as SVG");
  plot->add_option("--in", plot_in, "run or sweep directory")->required();
  plot->add_option("--out", plot_out, "SVG path")->required();

  auto* check = app.add_subcommand("check", "run the estimator and gradient property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) return cmd_train(train_opts, false);
    if (*bias) return cmd_train(bias_opts, true);
    if (*sweep) return cmd_sweep(sweep_opts, algos, seeds, threads);
    if (*plot) return cmd_plot(plot_in, plot_out);
    if (*check) return cmd_check();
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumericalError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  }
  return kOk;
}
