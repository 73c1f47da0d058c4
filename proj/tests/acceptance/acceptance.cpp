// Acceptance checks. One PASS/FAIL line per criterion.
//
//   acceptance                 run all ten
//   acceptance --criterion N   run one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "dactor/agents.hpp"
#include "dactor/diagnostics.hpp"
#include "dactor/harness.hpp"
#include "dactor/properties.hpp"

using namespace dactor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

fs::path self_dir;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<std::uint64_t> seeds(std::uint64_t n) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 1; i <= n; ++i) s.push_back(i);
  return s;
}

Outcome suite(const SuiteResult& r, double limit) {
  Outcome o;
  o.pass = r.ok() && r.seconds < limit;
  o.detail = fmt("%zu/%zu cases, worst %.3g, %.2fs (limit %.0fs)", r.passed, r.cases, r.worst,
                 r.seconds, limit);
  if (!r.note.empty()) o.detail += ", " + r.note;
  return o;
}

Outcome criterion1() { return suite(check_daddpg_below_ddpg(1000, 1), 10.0); }
Outcome criterion2() { return suite(check_datd3_above_td3(1000, 2), 10.0); }
Outcome criterion3() {
  SuiteResult r = check_soft_target(1000, 3);
  Outcome o;
  o.pass = r.ok();
  o.detail = fmt("%zu/%zu cases, %.2fs", r.passed, r.cases, r.seconds);
  return o;
}
Outcome criterion4() { return suite(check_gradients(20, 4), 30.0); }

// Baseline vs double-actor exploration on GoldMiner, 10 seeds x 5e4 steps.
Outcome exploration_study(const std::string& baseline, const std::string& method,
                          std::size_t min_seeds) {
  RunConfig base;
  base.env = "goldminer";
  base.total_steps = 50'000;
  base.value_correction = false;
  base.exploration.mode = ExplorationMode::MaxQ;
  const std::vector<std::string> algos{baseline, method};
  const auto s = seeds(10);

  const auto t0 = Clock::now();
  const SweepResult sweep = run_sweep(base, algos, s, worker_count());
  const double elapsed = seconds_since(t0);

  std::size_t more_right = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto b = sweep.runs[0][i].cumulative_visits().right_mine_visits;
    const auto m = sweep.runs[1][i].cumulative_visits().right_mine_visits;
    if (m > b) ++more_right;
  }
  const double mb = sweep.aggregates[0].final_mean;
  const double mm = sweep.aggregates[1].final_mean;

  Outcome o;
  o.pass = mm > mb && more_right >= min_seeds && elapsed <= 900.0;
  o.detail = fmt("%s %.1f vs %s %.1f, more right-mine visits in %zu/10 seeds (need %zu), %.0fs "
                 "(limit 900s)",
                 method.c_str(), mm, baseline.c_str(), mb, more_right, min_seeds, elapsed);
  return o;
}

Outcome criterion5() { return exploration_study("ddpg", "daddpg", 8); }
Outcome criterion6() { return exploration_study("td3", "datd3", 7); }

Outcome criterion7() {
  const auto s = seeds(5);
  const std::vector<std::string> algos{"darc"};
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (const std::string env : {"goldminer", "pointreach"}) {
    RunConfig base;
    base.env = env;
    base.total_steps = 30'000;
    base.deviance_samples = 1'000;
    RunConfig plain = base;
    plain.target.lambda = 0.0;
    base.target.lambda = 0.005;
    const SweepResult reg = run_sweep(base, algos, s, worker_count());
    const SweepResult un = run_sweep(plain, algos, s, worker_count());
    std::size_t ok = 0;
    std::vector<double> reductions;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double e0 = un.runs[0][i].final_critic_deviance.value_or(0.0);
      const double e1 = reg.runs[0][i].final_critic_deviance.value_or(0.0);
      const double r = e0 > 0.0 ? deviance_reduction(e0, e1) : 0.0;
      reductions.push_back(r);
      if (r >= 0.5) ++ok;
    }
    pass = pass && ok >= 4;
    std::string rs;
    for (double r : reductions) rs += fmt("%s%.0f%%", rs.empty() ? "" : " ", 100.0 * r);
    detail += fmt("%s %zu/5 [%s]; ", env.c_str(), ok, rs.c_str());
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = pass && elapsed <= 1200.0;
  o.detail = detail + fmt("%.0fs (limit 1200s)", elapsed);
  return o;
}

// DDPG and DADDPG trained side by side; at every checkpoint both are measured on the same
// states drawn from DDPG's buffer.
Outcome criterion8() {
  std::vector<double> ddpg_bias;
  std::size_t checkpoints = 0;
  std::size_t lower = 0;
  for (std::uint64_t seed : seeds(5)) {
    RunConfig cfg;
    cfg.env = "goldminer";
    cfg.seed = seed;
    cfg.total_steps = 30'000;
    RunConfig cd = cfg;
    cd.algorithm = "ddpg";
    RunConfig ca = cfg;
    ca.algorithm = "daddpg";
    TrainingSession d(cd);
    TrainingSession a(ca);
    Rng rng = Rng::stream(seed, "bias");
    while (!d.finished()) {
      d.step();
      a.step();
      const std::size_t t = d.steps_done();
      if (t <= cfg.warmup_steps || t % 2'000 != 0) continue;
      const Batch states = d.buffer().sample(cfg.bias_states, rng);
      const BiasReport rd = estimate_bias_on(d.agent(), states, d.environment(), cfg.bias_horizon);
      const BiasReport ra = estimate_bias_on(a.agent(), states, a.environment(), cfg.bias_horizon);
      ddpg_bias.push_back(rd.bias);
      ++checkpoints;
      if (ra.mean_estimate <= rd.mean_estimate) ++lower;
    }
  }
  std::vector<double> sorted = ddpg_bias;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n == 0 ? 0.0
                        : n % 2 ? sorted[n / 2]
                                : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double frac = checkpoints ? static_cast<double>(lower) / checkpoints : 0.0;
  Outcome o;
  o.pass = median > 0.0 && frac >= 0.7;
  o.detail = fmt("DDPG median bias %.3f, DADDPG estimate <= DDPG at %zu/%zu checkpoints (%.0f%%)",
                 median, lower, checkpoints, 100.0 * frac);
  return o;
}

Outcome criterion9() {
  const char* env_cli = std::getenv("DACTOR_CLI");
  const std::string cli = env_cli ? std::string(env_cli) : (self_dir / "dactor").string();
  const fs::path root = fs::temp_directory_path() / "dactor_acceptance_determinism";
  fs::remove_all(root);
  auto run = [&](const std::string& name) {
    const std::string cmd = "\"" + cli + "\" train --algo darc --env goldminer --seed 11 --steps 4000 --out \"" +
                            (root / name).string() + "\" > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  Outcome o;
  if (run("a") != 0 || run("b") != 0) {
    o.detail = "could not run " + cli;
    return o;
  }
  bool same = true;
  for (const char* f : {"curve.csv", "summary.json"}) {
    const std::string x = read_text_file(root / "a" / f);
    const std::string y = read_text_file(root / "b" / f);
    same = same && !x.empty() && x == y;
  }
  fs::remove_all(root);
  o.pass = same;
  o.detail = same ? "curve.csv and summary.json byte-identical" : "outputs differ";
  return o;
}

Outcome criterion10() {
  const double pct = 100.0 * deviance_reduction(1.6504, 0.6062);
  const std::vector<double> d{120.0, 80.0, 200.0};
  const std::vector<double> m{150.0, 80.0, 100.0};
  const Improvement self = improvement_metric(d, d);
  const Improvement imp = improvement_metric(d, m);
  const double expected = 100.0 * (1.0 + (0.25 + 0.0 - 0.5) / 3.0);
  Outcome o;
  o.pass = std::abs(pct - 63.27) <= 0.01 && self.percent == 100.0 &&
           std::abs(imp.percent - expected) < 1e-12;
  o.detail = fmt("reduction %.4f%%, baseline %.1f%%, example %.4f%%", pct, self.percent,
                 imp.percent);
  return o;
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<Outcome()>>> list{
      {"DADDPG target never above DDPG", criterion1},
      {"DATD3 target never below TD3", criterion2},
      {"soft target endpoint and monotonicity", criterion3},
      {"gradient oracle", criterion4},
      {"GoldMiner exploration, DADDPG vs DDPG", criterion5},
      {"GoldMiner underexploration, DATD3 vs TD3", criterion6},
      {"DARC critic deviance reduction", criterion7},
      {"bias direction, DDPG vs DADDPG", criterion8},
      {"train determinism", criterion9},
      {"metric formulas", criterion10},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  self_dir = fs::absolute(argv[0]).parent_path();
  std::vector<std::size_t> which;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      which.push_back(std::stoul(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }
  if (which.empty())
    for (std::size_t k = 1; k <= criteria().size(); ++k) which.push_back(k);

  bool all = true;
  for (std::size_t k : which) {
    if (k < 1 || k > criteria().size()) {
      std::fprintf(stderr, "no criterion %zu\n", k);
      return 2;
    }
    const auto& [name, fn] = criteria()[k - 1];
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %zu %s: %s (%s) [%.1fs]\n", k, o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
