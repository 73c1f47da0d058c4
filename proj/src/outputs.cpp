#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dactor/harness.hpp"

namespace dactor {

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return {buf.data(), ptr};
}

double parse_double(std::string_view text) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

std::string curve_csv(std::span<const EvalRow> rows) {
  std::string out = "step,mean_return,std_return\n";
  for (const EvalRow& r : rows) {
    out += std::to_string(r.step) + ',' + format_double(r.mean_return) + ',' +
           format_double(r.std_return) + '\n';
  }
  return out;
}

std::string curve_csv(const Aggregate& agg) {
  std::string out = "step,mean_return,std_return\n";
  for (std::size_t k = 0; k < agg.steps.size(); ++k) {
    out += std::to_string(agg.steps[k]) + ',' + format_double(agg.mean[k]) + ',' +
           format_double(agg.std[k]) + '\n';
  }
  return out;
}

std::string bias_csv(std::span<const BiasRow> rows) {
  std::string out = "step,mean_estimate,mean_true,bias\n";
  for (const BiasRow& r : rows) {
    out += std::to_string(r.step) + ',' + format_double(r.mean_estimate) + ',' +
           format_double(r.mean_true) + ',' + format_double(r.bias) + '\n';
  }
  return out;
}

std::string visits_csv(std::span<const VisitRow> rows) {
  std::string out = "episode,left,right,other\n";
  for (const VisitRow& r : rows) {
    out += std::to_string(r.episode) + ',' + std::to_string(r.visits.left_mine_visits) + ',' +
           std::to_string(r.visits.right_mine_visits) + ',' +
           std::to_string(r.visits.other_visits) + '\n';
  }
  return out;
}

std::vector<EvalRow> parse_curve_csv(std::string_view text) {
  std::vector<EvalRow> rows;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "step,mean_return,std_return") {
        throw std::invalid_argument("curve.csv: unexpected header");
      }
      header = false;
      continue;
    }
    std::array<std::string_view, 3> cells;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto comma = line.find(',');
      if ((c < 2) == (comma == std::string_view::npos)) {
        throw std::invalid_argument("curve.csv: expected three columns");
      }
      cells[c] = line.substr(0, comma);
      line.remove_prefix(comma == std::string_view::npos ? line.size() : comma + 1);
    }
    EvalRow r;
    const auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), r.step);
    if (ec != std::errc() || ptr != cells[0].data() + cells[0].size()) {
      throw std::invalid_argument("curve.csv: bad step '" + std::string(cells[0]) + "'");
    }
    r.mean_return = parse_double(cells[1]);
    r.std_return = parse_double(cells[2]);
    rows.push_back(r);
  }
  if (header) throw std::invalid_argument("curve.csv: missing header");
  return rows;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_entries(cfg)) {
    if (key == "out") continue;
    j[key] = value;
  }
  return j;
}

nlohmann::ordered_json visits_json(const VisitHistogram& v) {
  return {{"left", v.left_mine_visits}, {"right", v.right_mine_visits}, {"other", v.other_visits}};
}

}  // namespace

std::string summary_json(const RunRecord& record) {
  nlohmann::ordered_json j;
  j["algorithm"] = record.config.algorithm;
  j["env"] = record.config.env;
  j["seed"] = record.config.seed;
  j["final_score"] = record.final_score;
  j["evaluations"] = record.evaluations.size();
  if (record.final_critic_deviance) {
    j["final_critic_deviance"] = *record.final_critic_deviance;
  } else {
    j["final_critic_deviance"] = nullptr;
  }
  if (!record.visits.empty()) j["cumulative_visits"] = visits_json(record.cumulative_visits());
  if (!record.bias.empty()) {
    std::vector<double> b;
    for (const BiasRow& r : record.bias) b.push_back(r.bias);
    std::sort(b.begin(), b.end());
    const std::size_t m = b.size() / 2;
    j["median_bias"] = b.size() % 2 == 1 ? b[m] : 0.5 * (b[m - 1] + b[m]);
  }
  j["config"] = config_json(record.config);
  return j.dump(2) + '\n';
}

std::string sweep_summary_json(const SweepResult& sweep) {
  nlohmann::ordered_json j;
  j["env"] = sweep.runs.empty() || sweep.runs.front().empty() ? std::string()
                                                              : sweep.runs.front().front().config.env;
  j["seeds"] = sweep.seeds;
  j["baseline"] = sweep.algorithms.empty() ? std::string() : sweep.algorithms.front();
  nlohmann::ordered_json algos = nlohmann::ordered_json::object();
  for (std::size_t a = 0; a < sweep.algorithms.size(); ++a) {
    const Aggregate& agg = sweep.aggregates[a];
    nlohmann::ordered_json entry;
    entry["final_scores"] = agg.final_scores;
    entry["final_mean"] = agg.final_mean;
    entry["final_std"] = agg.final_std;
    std::vector<double> deviance;
    for (const RunRecord& r : sweep.runs[a]) {
      if (r.final_critic_deviance) deviance.push_back(*r.final_critic_deviance);
    }
    if (!deviance.empty()) entry["final_critic_deviance"] = deviance;
    if (a > 0) {
      try {
        const Improvement imp = improvement_metric(sweep.aggregates[0].final_scores, agg.final_scores);
        entry["improvement"] = {{"relative", imp.relative}, {"percent", imp.percent}};
      } catch (const std::domain_error&) {
        entry["improvement"] = nullptr;
      }
    }
    algos[sweep.algorithms[a]] = entry;
  }
  j["algorithms"] = algos;
  if (!sweep.runs.empty() && !sweep.runs.front().empty()) {
    j["config"] = config_json(sweep.runs.front().front().config);
    j["config"].erase("algo");
    j["config"].erase("seed");
  }
  return j.dump(2) + '\n';
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::fixed, 2);
  return ec == std::errc() ? std::string(buf.data(), ptr) : std::string("0");
}

std::string tick_label(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x,
                                       std::chars_format::general, 4);
  return ec == std::errc() ? std::string(buf.data(), ptr) : std::string("?");
}

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string render_svg(std::span<const CurveSeries> series, std::string_view title) {
  constexpr double W = 720, H = 440, L = 70, R = 160, T = 40, B = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const CurveSeries& s : series) {
    for (std::size_t k = 0; k < s.steps.size(); ++k) {
      const double sd = k < s.std.size() ? s.std[k] : 0.0;
      if (!any) {
        x0 = x1 = s.steps[k];
        y0 = s.mean[k] - sd;
        y1 = s.mean[k] + sd;
        any = true;
      }
      x0 = std::min(x0, s.steps[k]);
      x1 = std::max(x1, s.steps[k]);
      y0 = std::min(y0, s.mean[k] - sd);
      y1 = std::max(y1, s.mean[k] + sd);
    }
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) {
    y0 -= 1;
    y1 += 1;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  o << "<g stroke=\"#888\" fill=\"none\"><rect x=\"" << L << "\" y=\"" << T << "\" width=\""
    << W - L - R << "\" height=\"" << H - T - B << "\"/></g>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0;
    const double yv = y0 + (y1 - y0) * t / 4.0;
    o << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(yv) + 4) << "\" text-anchor=\"end\">"
      << tick_label(yv) << "</text>\n";
    o << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << fixed(py(yv)) << "\" y2=\""
      << fixed(py(yv)) << "\" stroke=\"#eee\"/>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\">step</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\" text-anchor=\"middle\">return</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const CurveSeries& s = series[i];
    const char* colour = kPalette[i % kPalette.size()];
    if (!s.steps.empty()) {
      std::string band;
      for (std::size_t k = 0; k < s.steps.size(); ++k) {
        const double sd = k < s.std.size() ? s.std[k] : 0.0;
        band += fixed(px(s.steps[k])) + ',' + fixed(py(s.mean[k] + sd)) + ' ';
      }
      for (std::size_t k = s.steps.size(); k-- > 0;) {
        const double sd = k < s.std.size() ? s.std[k] : 0.0;
        band += fixed(px(s.steps[k])) + ',' + fixed(py(s.mean[k] - sd)) + ' ';
      }
      o << "<polygon points=\"" << band << "\" fill=\"" << colour
        << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
      std::string line;
      for (std::size_t k = 0; k < s.steps.size(); ++k) {
        line += fixed(px(s.steps[k])) + ',' + fixed(py(s.mean[k])) + ' ';
      }
      o << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << colour
        << "\" stroke-width=\"2\"/>\n";
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(i);
    o << "<line x1=\"" << W - R + 12 << "\" x2=\"" << W - R + 36 << "\" y1=\"" << ly
      << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"3\"/>\n";
    o << "<text x=\"" << W - R + 42 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------

namespace {

CurveSeries series_of(std::string label, std::span<const EvalRow> rows) {
  CurveSeries s;
  s.label = std::move(label);
  for (const EvalRow& r : rows) {
    s.steps.push_back(static_cast<double>(r.step));
    s.mean.push_back(r.mean_return);
    s.std.push_back(r.std_return);
  }
  return s;
}

CurveSeries series_of(std::string label, const Aggregate& agg) {
  CurveSeries s;
  s.label = std::move(label);
  for (std::size_t k = 0; k < agg.steps.size(); ++k) {
    s.steps.push_back(static_cast<double>(agg.steps[k]));
    s.mean.push_back(agg.mean[k]);
    s.std.push_back(agg.std[k]);
  }
  return s;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void emit_outputs(const RunRecord& record, const std::filesystem::path& dir) {
  ensure_directory(dir);
  write_text_file(dir / "curve.csv", curve_csv(record.evaluations));
  write_text_file(dir / "bias.csv", bias_csv(record.bias));
  write_text_file(dir / "visits.csv", visits_csv(record.visits));
  write_text_file(dir / "summary.json", summary_json(record));
  const std::array<CurveSeries, 1> s{series_of(record.config.algorithm, record.evaluations)};
  write_text_file(dir / "curve.svg",
                  render_svg(s, record.config.algorithm + " on " + record.config.env +
                                    " (seed " + std::to_string(record.config.seed) + ")"));
}

void emit_sweep(const SweepResult& sweep, const std::filesystem::path& dir) {
  ensure_directory(dir);
  std::vector<CurveSeries> all;
  for (std::size_t a = 0; a < sweep.algorithms.size(); ++a) {
    const std::filesystem::path algo_dir = dir / sweep.algorithms[a];
    for (const RunRecord& r : sweep.runs[a]) {
      emit_outputs(r, algo_dir / ("seed" + std::to_string(r.config.seed)));
    }
    write_text_file(algo_dir / "curve.csv", curve_csv(sweep.aggregates[a]));
    CurveSeries s = series_of(sweep.algorithms[a], sweep.aggregates[a]);
    s.mean = smooth(s.mean, 3);
    all.push_back(std::move(s));
  }
  write_text_file(dir / "summary.json", sweep_summary_json(sweep));

  std::string table = "algorithm,final_mean,final_std,improvement_percent\n";
  for (std::size_t a = 0; a < sweep.algorithms.size(); ++a) {
    const Aggregate& agg = sweep.aggregates[a];
    std::string pct = "100";
    if (a > 0) {
      try {
        pct = format_double(improvement_metric(sweep.aggregates[0].final_scores, agg.final_scores).percent);
      } catch (const std::domain_error&) {
        pct = "nan";
      }
    }
    table += sweep.algorithms[a] + ',' + format_double(agg.final_mean) + ',' +
             format_double(agg.final_std) + ',' + pct + '\n';
  }
  write_text_file(dir / "improvement.csv", table);
  const std::string env = sweep.runs.empty() || sweep.runs.front().empty()
                              ? std::string()
                              : sweep.runs.front().front().config.env;
  write_text_file(dir / "curve.svg", render_svg(all, env));
}

}  // namespace dactor
