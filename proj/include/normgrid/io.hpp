#pragma once
// Persistence for run reports. Every file is deterministic for a fixed
// (config, seed): doubles print in shortest round-trip form, JSON keys are
// sorted, and the only volatile values live under summary.json's "timing"
// node. Each file carries the config hash and master seed.
//
// Layout under the output directory:
//   returns.csv           per-evaluation-episode per-agent returns, all series
//   summary.json          aggregates, config echo, detector/egta sections
//   payoff_before.json    strategy study only
//   payoff_after.json     strategy study only
//   detector_metrics.csv  detector sweep only
//   plots/*.csv, *.svg    table/figure data

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "normgrid/experiments.hpp"
#include "normgrid/text.hpp"

namespace normgrid {

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("io: write failed for '" + path + "'");
}

inline std::string stamp_comment(const RunReport& report) {
  return "# config_hash=" + report.config.config_hash + "\n# seed=" +
         format_int(static_cast<std::int64_t>(report.config.seed)) + "\n";
}

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal deterministic SVG line chart: axes, ticks at the extremes, one
// polyline per series, legend swatches top-left.
inline std::string render_line_chart(const std::string& title,
                                     const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<PlotSeries>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  const double width = 640, height = 400;
  const double left = 70, right = 20, top = 50, bottom = 50;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  }
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  if (ymax == ymin) {
    ymin -= 1;
    ymax += 1;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const auto px = [&](double x) {
    return left + (x - xmin) / (xmax - xmin) * (width - left - right);
  };
  const auto py = [&](double y) {
    return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(width)
      << "\" height=\"" << format_double(height) << "\" viewBox=\"0 0 "
      << format_double(width) << " " << format_double(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << format_double(width / 2)
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << title << "</text>\n";

  // Axes.
  svg << "<line x1=\"" << format_double(left) << "\" y1=\"" << format_double(py(ymin))
      << "\" x2=\"" << format_double(width - right) << "\" y2=\""
      << format_double(py(ymin)) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << format_double(left) << "\" y1=\"" << format_double(py(ymin))
      << "\" x2=\"" << format_double(left) << "\" y2=\"" << format_double(py(ymax))
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << format_double(width / 2) << "\" y=\""
      << format_double(height - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << format_double(height / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 "
      << format_double(height / 2) << ")\">" << y_label << "</text>\n";

  // Extreme ticks.
  for (double x : {xmin, xmax}) {
    svg << "<text x=\"" << format_double(px(x)) << "\" y=\""
        << format_double(py(ymin) + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << format_double(x) << "</text>\n";
  }
  for (double y : {ymin + ypad, ymax - ypad}) {
    svg << "<text x=\"" << format_double(left - 6) << "\" y=\""
        << format_double(py(y) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << format_double(y) << "</text>\n";
  }

  // Series lines, point markers and legend.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 4];
    if (series[s].points.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\" points=\"";
      for (const auto& [x, y] : series[s].points) {
        svg << format_double(px(x)) << "," << format_double(py(y)) << " ";
      }
      svg << "\"/>\n";
    }
    for (const auto& [x, y] : series[s].points) {
      svg << "<circle cx=\"" << format_double(px(x)) << "\" cy=\""
          << format_double(py(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 16 * static_cast<double>(s);
    svg << "<rect x=\"" << format_double(left + 8) << "\" y=\"" << format_double(ly - 8)
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << format_double(left + 22) << "\" y=\"" << format_double(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[s].label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline json series_to_json(const SeriesResult& s) {
  json j;
  j["name"] = s.name;
  j["boycott_ratio"] = s.boycott_b;
  j["counterfactual"] = s.counterfactual;
  j["avg_c"] = s.avg_c;
  if (s.avg_d) j["avg_d"] = *s.avg_d;
  if (s.weak_mean) j["weak_mean"] = *s.weak_mean;
  if (s.strong_mean) j["strong_mean"] = *s.strong_mean;
  j["mean_returns"] = s.mean_returns;
  j["roles"] = json::array();
  for (Role r : s.roles) j["roles"].push_back(role_name(r));
  j["classes"] = s.class_labels;
  j["flag_rates"] = s.flag_rates;
  j["final_verdicts"] = json::array();
  for (bool v : s.final_verdicts) j["final_verdicts"].push_back(v);
  return j;
}

inline json equilibria_to_json(const PayoffMatrix2x2& m,
                               const std::vector<EquilibriumClassification>& nash) {
  json arr = json::array();
  for (const auto& eq : nash) {
    json e;
    e["profile"] = {m.labels[static_cast<std::size_t>(eq.profile[0])],
                    m.labels[static_cast<std::size_t>(eq.profile[1])]};
    e["kind"] = nash_kind_name(eq.kind);
    arr.push_back(e);
  }
  return arr;
}

inline json payoff_document(const RunReport& report, const PayoffMatrix2x2& matrix,
                            const std::vector<CellEstimate>& cells,
                            const std::vector<EquilibriumClassification>& nash,
                            const EnforcementResult& enforcement, double b) {
  const EgtaReport& egta = *report.egta;
  json j;
  j["config_hash"] = report.config.config_hash;
  j["seed"] = report.config.seed;
  j["boycott_ratio"] = b;
  j["fixture"] = egta.fixture;
  j["eval_episodes"] = report.config.eval_episodes;
  j["replicates"] = egta.fixture ? 0 : report.config.egta.replicates;
  j["matrix"] = payoff_matrix_to_json(matrix);
  j["cells"] = json::array();
  for (const auto& c : cells) {
    json cj;
    cj["row"] = c.row;
    cj["col"] = c.col;
    cj["profile"] = {matrix.labels[static_cast<std::size_t>(c.row)],
                     matrix.labels[static_cast<std::size_t>(c.col)]};
    cj["payoff"] = {c.payoff0, c.payoff1};
    cj["replicate_payoffs"] = {c.replicate_payoff0, c.replicate_payoff1};
    j["cells"].push_back(cj);
  }
  j["equilibria"] = equilibria_to_json(matrix, nash);
  j["enforcement"] = {{"holds", enforcement.holds}, {"margins", enforcement.margins}};
  return j;
}

}  // namespace detail

inline void emit_outputs(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "plots", ec);
  if (ec) {
    throw std::runtime_error("io: cannot create '" + out_dir + "': " + ec.message());
  }
  const std::string stamp = detail::stamp_comment(report);

  // returns.csv: one row per (series, evaluation episode, agent).
  {
    std::ostringstream csv;
    csv << stamp << "series,boycott_ratio,episode,agent_id,role,class,return\n";
    for (const SeriesResult& s : report.series) {
      for (std::size_t e = 0; e < s.returns.size(); ++e) {
        for (std::size_t a = 0; a < s.returns[e].size(); ++a) {
          csv << s.name << "," << format_double(s.boycott_b) << ","
              << format_int(static_cast<std::int64_t>(e)) << ","
              << format_int(static_cast<std::int64_t>(a)) << "," << role_name(s.roles[a])
              << "," << s.class_labels[a] << "," << format_double(s.returns[e][a])
              << "\n";
        }
      }
    }
    detail::write_file(out_dir + "/returns.csv", csv.str());
  }

  // summary.json: aggregates plus the full config echo.
  {
    json j;
    j["scenario"] = report.config.scenario;
    j["seed"] = report.config.seed;
    j["config_hash"] = report.config.config_hash;
    j["config"] = report.config.effective;
    j["series"] = json::array();
    for (const SeriesResult& s : report.series) {
      j["series"].push_back(detail::series_to_json(s));
    }
    if (report.egta) {
      const EgtaReport& e = *report.egta;
      json eg;
      eg["fixture"] = e.fixture;
      eg["before_b"] = e.before_b;
      eg["after_b"] = e.after_b;
      eg["before"] = {{"matrix", payoff_matrix_to_json(e.before)},
                      {"equilibria", detail::equilibria_to_json(e.before, e.before_nash)},
                      {"enforcement",
                       {{"holds", e.before_enforcement.holds},
                        {"margins", e.before_enforcement.margins}}}};
      eg["after"] = {{"matrix", payoff_matrix_to_json(e.after)},
                     {"equilibria", detail::equilibria_to_json(e.after, e.after_nash)},
                     {"enforcement",
                      {{"holds", e.after_enforcement.holds},
                       {"margins", e.after_enforcement.margins}}}};
      j["egta"] = eg;
    }
    if (!report.detector_rows.empty() || report.detector_training) {
      json d;
      if (!report.detector_rows.empty()) {
        d["rows"] = json::array();
        for (const LengthAccuracy& r : report.detector_rows) {
          d["rows"].push_back({{"length", r.length},
                               {"train_accuracy", r.train_accuracy},
                               {"test_accuracy", r.test_accuracy}});
        }
      }
      if (report.detector_training) {
        d["training"] = {{"train_accuracy", report.detector_training->train_accuracy},
                         {"test_accuracy", report.detector_training->test_accuracy},
                         {"final_loss", report.detector_training->final_loss},
                         {"epochs", report.detector_training->epochs}};
      }
      j["detector"] = d;
    }
    j["timing"] = {{"timestamp", report.timestamp},
                   {"wall_seconds", report.wall_seconds}};
    detail::write_file(out_dir + "/summary.json", j.dump(2) + "\n");
  }

  if (report.egta) {
    const EgtaReport& e = *report.egta;
    detail::write_file(out_dir + "/payoff_before.json",
                       detail::payoff_document(report, e.before, e.before_cells,
                                               e.before_nash, e.before_enforcement,
                                               e.before_b)
                               .dump(2) +
                           "\n");
    detail::write_file(out_dir + "/payoff_after.json",
                       detail::payoff_document(report, e.after, e.after_cells,
                                               e.after_nash, e.after_enforcement,
                                               e.after_b)
                               .dump(2) +
                           "\n");
  }

  if (!report.detector_rows.empty()) {
    std::ostringstream csv;
    csv << stamp << "length,train_accuracy,test_accuracy\n";
    for (const LengthAccuracy& r : report.detector_rows) {
      csv << format_int(r.length) << "," << format_double(r.train_accuracy) << ","
          << format_double(r.test_accuracy) << "\n";
    }
    detail::write_file(out_dir + "/detector_metrics.csv", csv.str());

    std::ostringstream plot;
    plot << stamp << "length,train_accuracy,test_accuracy\n";
    detail::PlotSeries train{"train", {}}, test{"test", {}};
    for (const LengthAccuracy& r : report.detector_rows) {
      plot << format_int(r.length) << "," << format_double(r.train_accuracy) << ","
           << format_double(r.test_accuracy) << "\n";
      train.points.push_back({static_cast<double>(r.length), r.train_accuracy});
      test.points.push_back({static_cast<double>(r.length), r.test_accuracy});
    }
    detail::write_file(out_dir + "/plots/accuracy_vs_length.csv", plot.str());
    detail::write_file(out_dir + "/plots/accuracy_vs_length.svg",
                       "<!-- config_hash=" + report.config.config_hash + " -->\n" +
                           detail::render_line_chart("Detector accuracy vs window length",
                                                     "sequence length", "accuracy",
                                                     {train, test}));
  }

  // Sweep plot: average return against the boycott ratio, with the
  // all-compliant baseline as a reference line.
  {
    detail::PlotSeries avg_c{"Avg(C)", {}}, avg_d{"Avg(D)", {}};
    const SeriesResult* baseline = nullptr;
    for (const SeriesResult& s : report.series) {
      if (s.counterfactual) {
        baseline = &s;
        continue;
      }
      avg_c.points.push_back({s.boycott_b, s.avg_c});
      if (s.avg_d) avg_d.points.push_back({s.boycott_b, *s.avg_d});
    }
    if (!avg_c.points.empty()) {
      std::ostringstream csv;
      csv << stamp << "boycott_ratio,avg_c,avg_d,all_compliant_avg_c\n";
      for (std::size_t i = 0; i < avg_c.points.size(); ++i) {
        csv << format_double(avg_c.points[i].first) << ","
            << format_double(avg_c.points[i].second) << ","
            << (i < avg_d.points.size() ? format_double(avg_d.points[i].second) : "")
            << "," << (baseline ? format_double(baseline->avg_c) : "") << "\n";
      }
      detail::write_file(out_dir + "/plots/avg_return_vs_b.csv", csv.str());

      std::vector<detail::PlotSeries> chart{avg_c};
      if (!avg_d.points.empty()) chart.push_back(avg_d);
      if (baseline && avg_c.points.size() > 1) {
        detail::PlotSeries ref{"all-compliant Avg(C)", {}};
        ref.points.push_back({avg_c.points.front().first, baseline->avg_c});
        ref.points.push_back({avg_c.points.back().first, baseline->avg_c});
        chart.push_back(ref);
      }
      detail::write_file(out_dir + "/plots/avg_return_vs_b.svg",
                         "<!-- config_hash=" + report.config.config_hash + " -->\n" +
                             detail::render_line_chart(
                                 "Average episode return vs boycott ratio",
                                 "boycott ratio", "average episode return", chart));
    }
  }
}

// Reload what emit_outputs wrote and re-derive the aggregates: every summary
// Avg must match a recomputation from returns.csv, and each series must hold
// exactly eval_episodes x agents rows. Throws on the first inconsistency.
inline void verify_outputs(const std::string& out_dir) {
  const json summary = parse_json_file(out_dir + "/summary.json");
  const std::string returns_path = out_dir + "/returns.csv";
  std::ifstream in(returns_path);
  if (!in) throw std::runtime_error("io: cannot open '" + returns_path + "'");

  // Accumulate per (series, agent) in file order so the recomputation walks
  // the same floating-point path as the original aggregation: per-agent mean
  // over episodes first, then the mean across agents of a role.
  struct AgentAcc {
    double sum = 0;
    std::int64_t rows = 0;
    std::string role;
  };
  std::vector<std::pair<std::string, std::vector<AgentAcc>>> acc;
  const auto slot = [&](const std::string& name) -> std::vector<AgentAcc>& {
    for (auto& [n, a] : acc) {
      if (n == name) return a;
    }
    acc.push_back({name, {}});
    return acc.back().second;
  };

  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "series,boycott_ratio,episode,agent_id,role,class,return") {
        throw std::runtime_error("verify: unexpected returns.csv header");
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw std::runtime_error("verify: malformed returns.csv row");
    auto& agents_acc = slot(fields[0]);
    const std::size_t agent = static_cast<std::size_t>(std::stoll(fields[3]));
    if (agent >= agents_acc.size()) agents_acc.resize(agent + 1);
    agents_acc[agent].sum += std::stod(fields[6]);
    ++agents_acc[agent].rows;
    agents_acc[agent].role = fields[4];
  }

  const std::int64_t episodes = summary.at("config").at("eval_episodes").get<std::int64_t>();
  const std::int64_t agents = summary.at("config").at("agents").get<std::int64_t>();
  for (const json& s : summary.at("series")) {
    const std::string name = s.at("name").get<std::string>();
    const std::vector<AgentAcc>* found = nullptr;
    for (const auto& [n, a] : acc) {
      if (n == name) found = &a;
    }
    if (!found) {
      throw std::runtime_error("verify: series '" + name + "' missing from returns.csv");
    }
    std::int64_t rows = 0;
    double c_sum = 0, d_sum = 0;
    int c_n = 0, d_n = 0;
    for (const AgentAcc& a : *found) {
      rows += a.rows;
      if (a.rows != episodes) {
        throw std::runtime_error("verify: series '" + name + "' episode count mismatch");
      }
      const double mean = a.sum / static_cast<double>(episodes);
      if (a.role == "compliant") {
        c_sum += mean;
        ++c_n;
      } else {
        d_sum += mean;
        ++d_n;
      }
    }
    if (rows != episodes * agents) {
      throw std::runtime_error("verify: series '" + name + "' row count mismatch");
    }
    const double avg_c = c_n > 0 ? c_sum / c_n : 0.0;
    if (std::abs(avg_c - s.at("avg_c").get<double>()) > 1e-9) {
      throw std::runtime_error("verify: series '" + name + "' avg_c mismatch");
    }
    if (s.contains("avg_d")) {
      const double avg_d = d_n > 0 ? d_sum / d_n : 0.0;
      if (std::abs(avg_d - s.at("avg_d").get<double>()) > 1e-9) {
        throw std::runtime_error("verify: series '" + name + "' avg_d mismatch");
      }
    }
  }
}

}  // namespace normgrid
