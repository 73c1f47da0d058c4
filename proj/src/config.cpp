#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dactor/harness.hpp"

namespace dactor {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: " + std::string(key) + " expects a non-negative integer, got '" +
                                std::string(v) + "'");
  }
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  try {
    return parse_double(v);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("config: " + std::string(key) + " expects a number, got '" +
                                std::string(v) + "'");
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config: " + std::string(key) + " expects true/false, got '" +
                              std::string(v) + "'");
}

std::vector<std::size_t> to_sizes(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(to_size(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw std::invalid_argument("config: " + std::string(key) + " is empty");
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(sizes[i]);
  }
  return out;
}

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

using FieldTable = std::vector<std::pair<std::string, Field>>;

#define DACTOR_SIZE_FIELD(name, member)                                               \
  {name, {[](RunConfig& c, std::string_view v) { c.member = to_size(name, v); },     \
          [](const RunConfig& c) { return std::to_string(c.member); }}}
#define DACTOR_REAL_FIELD(name, member)                                               \
  {name, {[](RunConfig& c, std::string_view v) { c.member = to_real(name, v); },     \
          [](const RunConfig& c) { return format_double(c.member); }}}

const FieldTable& fields() {
  static const FieldTable table = {
      {"algo", {[](RunConfig& c, std::string_view v) { c.algorithm = std::string(v); },
                [](const RunConfig& c) { return c.algorithm; }}},
      {"env", {[](RunConfig& c, std::string_view v) { c.env = std::string(v); },
               [](const RunConfig& c) { return c.env; }}},
      {"seed", {[](RunConfig& c, std::string_view v) { c.seed = to_size("seed", v); },
                [](const RunConfig& c) { return std::to_string(c.seed); }}},
      DACTOR_SIZE_FIELD("total_steps", total_steps),
      DACTOR_SIZE_FIELD("warmup_steps", warmup_steps),
      DACTOR_SIZE_FIELD("eval_interval", eval_interval),
      DACTOR_SIZE_FIELD("eval_episodes", eval_episodes),
      DACTOR_SIZE_FIELD("batch_size", batch_size),
      DACTOR_REAL_FIELD("learning_rate", learning_rate),
      DACTOR_REAL_FIELD("gamma", target.gamma),
      DACTOR_REAL_FIELD("tau", target.tau),
      DACTOR_REAL_FIELD("nu", target.nu),
      DACTOR_REAL_FIELD("lambda", target.lambda),
      DACTOR_REAL_FIELD("target_noise", target.target_noise),
      DACTOR_REAL_FIELD("noise_clip", target.noise_clip),
      DACTOR_REAL_FIELD("action_noise", exploration.action_noise),
      {"exploration",
       {[](RunConfig& c, std::string_view v) { c.exploration.mode = parse_exploration_mode(v); },
        [](const RunConfig& c) { return std::string(to_string(c.exploration.mode)); }}},
      {"actor_hidden",
       {[](RunConfig& c, std::string_view v) { c.actor_hidden = to_sizes("actor_hidden", v); },
        [](const RunConfig& c) { return join_sizes(c.actor_hidden); }}},
      {"critic_hidden",
       {[](RunConfig& c, std::string_view v) { c.critic_hidden = to_sizes("critic_hidden", v); },
        [](const RunConfig& c) { return join_sizes(c.critic_hidden); }}},
      DACTOR_SIZE_FIELD("buffer_capacity", buffer_capacity),
      {"update_scheme",
       {[](RunConfig& c, std::string_view v) { c.update_scheme = parse_update_scheme(v); },
        [](const RunConfig& c) { return std::string(to_string(c.update_scheme)); }}},
      {"value_correction",
       {[](RunConfig& c, std::string_view v) { c.value_correction = to_bool("value_correction", v); },
        [](const RunConfig& c) { return std::string(c.value_correction ? "true" : "false"); }}},
      DACTOR_SIZE_FIELD("policy_delay", policy_delay),
      DACTOR_SIZE_FIELD("bias_interval", bias_interval),
      DACTOR_SIZE_FIELD("bias_states", bias_states),
      DACTOR_SIZE_FIELD("bias_horizon", bias_horizon),
      DACTOR_SIZE_FIELD("deviance_samples", deviance_samples),
      {"out", {[](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); },
               [](const RunConfig& c) { return c.out_dir; }}},
  };
  return table;
}

#undef DACTOR_SIZE_FIELD
#undef DACTOR_REAL_FIELD

}  // namespace

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
}

void parse_config_text(RunConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  parse_config_text(cfg, ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(cfg));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& entry : fields()) out.push_back(entry.first);
  return out;
}

void RunConfig::validate() const {
  parse_algorithm(algorithm);
  make_environment(env);
  if (total_steps < warmup_steps) throw std::invalid_argument("total_steps must be >= warmup_steps");
  if (eval_interval == 0) throw std::invalid_argument("eval_interval must be positive");
  if (eval_episodes == 0) throw std::invalid_argument("eval_episodes must be positive");
  if (buffer_capacity == 0) throw std::invalid_argument("buffer_capacity must be positive");
  if (bias_interval > 0 && (bias_states == 0 || bias_horizon == 0)) {
    throw std::invalid_argument("bias_states and bias_horizon must be positive");
  }
  for (std::size_t h : actor_hidden) {
    if (h == 0) throw std::invalid_argument("actor_hidden sizes must be positive");
  }
  for (std::size_t h : critic_hidden) {
    if (h == 0) throw std::invalid_argument("critic_hidden sizes must be positive");
  }
  if (!(target.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  agent_config(make_environment(env)->spec()).validate();
}

AgentConfig RunConfig::agent_config(const EnvSpec& env_spec) const {
  AgentConfig a;
  a.algorithm = parse_algorithm(algorithm);
  a.env = env_spec;
  a.actor_hidden = actor_hidden;
  a.critic_hidden = critic_hidden;
  a.learning_rate = learning_rate;
  a.batch_size = batch_size;
  a.target = target;
  a.exploration = exploration;
  a.update_scheme = update_scheme;
  a.value_correction = value_correction;
  a.policy_delay = policy_delay;
  return a;
}

}  // namespace dactor
