#include <doctest.h>

#include <filesystem>
#include <limits>

#include <json.hpp>

#include "dactor/harness.hpp"

using namespace dactor;
namespace fs = std::filesystem;

namespace {

RunConfig tiny(const std::string& algo, std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.algorithm = algo;
  cfg.env = "goldminer";
  cfg.seed = seed;
  cfg.total_steps = 600;
  cfg.warmup_steps = 200;
  cfg.eval_interval = 200;
  cfg.eval_episodes = 2;
  cfg.batch_size = 16;
  cfg.actor_hidden = {8};
  cfg.critic_hidden = {8};
  return cfg;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dactor_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config text parsing and overrides") {
  RunConfig cfg;
  parse_config_text(cfg, "# comment\nalgo = td3\n  nu=0.5  # trailing\n\nactor_hidden = 32, 16\n"
                         "value_correction = false\nupdate_scheme = both\n");
  CHECK(cfg.algorithm == "td3");
  CHECK(cfg.target.nu == 0.5);
  CHECK(cfg.actor_hidden == std::vector<std::size_t>{32, 16});
  CHECK_FALSE(cfg.value_correction);
  CHECK(cfg.update_scheme == UpdateScheme::Both);
  CHECK_THROWS_AS(parse_config_text(cfg, "bogus = 1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text(cfg, "seed = -3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text(cfg, "just words"), std::invalid_argument);
}

TEST_CASE("config entries round-trip through the text format") {
  RunConfig a;
  a.algorithm = "ctd3";
  a.target.lambda = 0.0123;
  a.learning_rate = 3e-4;
  a.critic_hidden = {5, 7, 9};
  std::string text;
  for (const auto& [k, v] : config_entries(a)) text += k + " = " + v + "\n";
  RunConfig b;
  parse_config_text(b, text);
  CHECK(config_entries(a) == config_entries(b));
}

TEST_CASE("defaults") {
  const RunConfig cfg;
  CHECK(cfg.batch_size == 100);
  CHECK(cfg.learning_rate == 1e-3);
  CHECK(cfg.target.gamma == 0.99);
  CHECK(cfg.target.tau == 0.005);
  CHECK(cfg.target.lambda == 0.005);
  CHECK(cfg.target.nu == 0.25);
  CHECK(cfg.target.target_noise == 0.2);
  CHECK(cfg.target.noise_clip == 0.5);
  CHECK(cfg.exploration.action_noise == 0.1);
  CHECK(cfg.buffer_capacity == 1'000'000);
  CHECK(cfg.eval_episodes == 10);
  CHECK(cfg.total_steps == 50'000);
  CHECK(cfg.warmup_steps == 1'000);
  CHECK(cfg.eval_interval == 1'000);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("validation rejects bad configs before running") {
  RunConfig cfg = tiny("nope");
  CHECK_THROWS_AS(run_training(cfg), std::invalid_argument);
  cfg = tiny("ddpg");
  cfg.env = "atari";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny("ddpg");
  cfg.warmup_steps = cfg.total_steps + 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny("ddpg");
  cfg.eval_interval = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny("ddpg");
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("smooth") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(smooth(x, 1) == x);
  CHECK(smooth(x, 3) == std::vector<double>{1, 1.5, 2, 3});
  CHECK(smooth(std::vector<double>{2, 2, 2}, 2) == std::vector<double>{2, 2, 2});
  CHECK(smooth(std::vector<double>{}, 3).empty());
  CHECK_THROWS_AS(smooth(x, 0), std::invalid_argument);
}

TEST_CASE("aggregate") {
  RunRecord a, b;
  a.evaluations = {{100, 1.0, 0.0}, {200, 100.0, 0.0}};
  b.evaluations = {{100, 3.0, 0.0}, {200, 300.0, 0.0}};
  a.final_score = 100.0;
  b.final_score = 300.0;
  const std::vector<RunRecord> ab{a, b};
  const Aggregate g = aggregate(ab);
  CHECK(g.final_mean == 200.0);
  CHECK(g.final_std == 100.0);
  CHECK(g.mean == std::vector<double>{2.0, 200.0});
  CHECK(g.std == std::vector<double>{1.0, 100.0});
  const std::vector<RunRecord> ba{b, a};
  CHECK(aggregate(ba).mean == g.mean);

  const std::vector<RunRecord> one{a};
  for (double s : aggregate(one).std) CHECK(s == 0.0);

  RunRecord c = b;
  c.evaluations[1].step = 250;
  const std::vector<RunRecord> bad{a, c};
  CHECK_THROWS_AS(aggregate(bad), std::invalid_argument);
}

TEST_CASE("CSV round-trip is exact") {
  std::vector<EvalRow> rows{{1000, 0.1, 1.0 / 3.0},
                            {2000, -123.456789012345678, 5e-300},
                            {3000, std::numeric_limits<double>::max(), 0.0}};
  CHECK(parse_curve_csv(curve_csv(rows)) == rows);
  CHECK(parse_double(format_double(0.1)) == 0.1);
  CHECK_THROWS_AS(parse_curve_csv("wrong,header\n"), std::invalid_argument);
}

TEST_CASE("empty record writes headers-only CSVs") {
  RunConfig cfg = tiny("ddpg");
  cfg.total_steps = 0;
  cfg.warmup_steps = 0;
  const RunRecord rec = run_training(cfg);
  CHECK(rec.evaluations.empty());
  const fs::path dir = scratch_dir("empty");
  emit_outputs(rec, dir);
  CHECK(read_text_file(dir / "curve.csv") == "step,mean_return,std_return\n");
  CHECK(read_text_file(dir / "bias.csv") == "step,mean_estimate,mean_true,bias\n");
  CHECK(read_text_file(dir / "visits.csv") == "episode,left,right,other\n");
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(read_text_file(dir / "curve.svg").find("<svg") == 0);
  fs::remove_all(dir);
}

TEST_CASE("training runs are reproducible") {
  RunConfig cfg = tiny("darc");
  cfg.bias_interval = 200;
  cfg.bias_states = 5;
  cfg.bias_horizon = 20;
  const RunRecord a = run_training(cfg);
  const RunRecord b = run_training(cfg);
  CHECK(curve_csv(a.evaluations) == curve_csv(b.evaluations));
  CHECK(summary_json(a) == summary_json(b));
  CHECK(a.bias == b.bias);
  CHECK(a.visits == b.visits);
  REQUIRE(a.evaluations.size() == 3);
  CHECK(a.evaluations.back().step == 600);
  CHECK(a.final_score == a.evaluations.back().mean_return);
  CHECK(a.bias.size() == 2);  // steps 400 and 600, after warmup
  CHECK(a.final_critic_deviance.has_value());
  CHECK(a.visits.size() == 3);
  CHECK(a.cumulative_visits().total() == 600);

  cfg.seed = 2;
  CHECK(curve_csv(run_training(cfg).evaluations) != curve_csv(a.evaluations));
}

TEST_CASE("evaluation does not touch the buffer or the networks") {
  TrainingSession session(tiny("td3"));
  for (int i = 0; i < 300; ++i) session.step();
  const std::size_t before = session.buffer().size();
  const auto actors = session.agent().actors;
  const EvalRow r1 = session.evaluate();
  const EvalRow r2 = session.evaluate();
  CHECK(r1 == r2);
  CHECK(session.buffer().size() == before);
  CHECK(session.agent().actors == actors);
}

TEST_CASE("summary improvement can be recomputed from the file") {
  RunConfig base = tiny("ddpg");
  base.env = "pointreach";
  const std::vector<std::string> algos{"ddpg", "darc"};
  const std::vector<std::uint64_t> seeds{1, 2};
  const SweepResult sweep = run_sweep(base, algos, seeds, 2);
  const auto j = nlohmann::json::parse(sweep_summary_json(sweep));
  const auto d = j["algorithms"]["ddpg"]["final_scores"].get<std::vector<double>>();
  const auto a = j["algorithms"]["darc"]["final_scores"].get<std::vector<double>>();
  const Improvement imp = improvement_metric(d, a);
  CHECK(j["algorithms"]["darc"]["improvement"]["percent"].get<double>() == imp.percent);
  CHECK(j["baseline"] == "ddpg");

  // Parallel and serial sweeps agree.
  const SweepResult serial = run_sweep(base, algos, seeds, 1);
  CHECK(sweep_summary_json(serial) == sweep_summary_json(sweep));

  const fs::path dir = scratch_dir("sweep");
  emit_sweep(sweep, dir);
  CHECK(fs::exists(dir / "ddpg" / "seed1" / "curve.csv"));
  CHECK(fs::exists(dir / "darc" / "curve.csv"));
  CHECK(fs::exists(dir / "improvement.csv"));
  CHECK(fs::exists(dir / "curve.svg"));
  fs::remove_all(dir);
}

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("1..5") == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(parse_seed_list("3,9") == std::vector<std::uint64_t>{3, 9});
  CHECK_THROWS_AS(parse_seed_list("5..1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_seed_list("x"), std::invalid_argument);
}

TEST_CASE("svg rendering escapes labels") {
  CurveSeries s;
  s.label = "a<b";
  s.steps = {0, 1};
  s.mean = {0, 1};
  s.std = {0, 0};
  const std::vector<CurveSeries> v{s};
  const std::string svg = render_svg(v, "t&t");
  CHECK(svg.find("a&lt;b") != std::string::npos);
  CHECK(svg.find("t&amp;t") != std::string::npos);
}
