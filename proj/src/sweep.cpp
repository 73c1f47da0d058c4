#include <atomic>
#include <charconv>
#include <exception>
#include <mutex>
#include <thread>

#include "dactor/harness.hpp"

namespace dactor {

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  auto number = [](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw std::invalid_argument("bad seed '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t lo = number(text.substr(0, dots));
    const std::uint64_t hi = number(text.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("seed range is empty");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  while (!text.empty()) {
    const auto comma = text.find(',');
    seeds.push_back(number(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

SweepResult run_sweep(const RunConfig& base, std::span<const std::string> algorithms,
                      std::span<const std::uint64_t> seeds, std::size_t threads) {
  SweepResult out;
  out.algorithms.assign(algorithms.begin(), algorithms.end());
  out.seeds.assign(seeds.begin(), seeds.end());
  out.runs.assign(algorithms.size(), std::vector<RunRecord>(seeds.size()));

  std::vector<RunConfig> jobs;
  for (const std::string& algo : algorithms) {
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.algorithm = algo;
      cfg.seed = seed;
      cfg.validate();
      jobs.push_back(std::move(cfg));
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        out.runs[j / seeds.size()][j % seeds.size()] = run_training(jobs[j]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs.size());
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& runs : out.runs) out.aggregates.push_back(aggregate(runs));
  return out;
}

}  // namespace dactor
