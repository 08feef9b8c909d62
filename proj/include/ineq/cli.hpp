#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ineq/aggregation.hpp"
#include "ineq/atkinson.hpp"
#include "ineq/bootstrap.hpp"
#include "ineq/config.hpp"
#include "ineq/csv.hpp"
#include "ineq/elicitation.hpp"
#include "ineq/elicitation_server.hpp"
#include "ineq/error.hpp"
#include "ineq/inference.hpp"
#include "ineq/network.hpp"
#include "ineq/report.hpp"

namespace ineq::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_io = 2;

/// Values of a metrics CSV grouped by metric name, in first-seen order.
struct MetricTable {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> values;
};

inline MetricTable read_metric_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  csv_reader reader(in, path.string());
  reader.expect_header({"member_id", "metric_name", "value"});
  MetricTable table;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    const auto where = path.string() + " line " + std::to_string(reader.line_number());
    if (f.size() != 3 || f[0].empty() || f[1].empty()) {
      throw validation_error(errc::data_error, where + ": expected member_id,metric_name,value");
    }
    const auto value = parse_double(f[2]);
    if (!value) throw validation_error(errc::data_error, where + ": value is not a number");
    std::string name(f[1]);
    auto [it, inserted] = table.values.try_emplace(name);
    if (inserted) table.names.push_back(name);
    it->second.push_back(*value);
  }
  return table;
}

inline Sidedness parse_sidedness(const std::string& s) {
  if (s == "two-sided") return Sidedness::two_sided;
  if (s == "greater") return Sidedness::greater;
  if (s == "less") return Sidedness::less;
  throw validation_error(errc::out_of_domain, "--test must be two-sided, greater or less");
}

inline std::vector<AversionParam> to_params(const std::vector<double>& eps) {
  std::vector<AversionParam> out;
  for (double e : eps) out.emplace_back(e);
  return out;
}

/// Writes `text` to `out_path` when given, else to `out`.
inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw io_error("cannot write " + out_path);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
  if (!f) throw io_error("write to " + out_path + " failed");
}

/// Runs the command line. Reports go to `out` (or --out), diagnostics to `err`.
/// Returns 0 on success, 1 on validation or usage errors, 2 on I/O errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Inequality impact of A/B experiments measured with the Atkinson index", "ineq"};
  app.require_subcommand(1);
  std::string out_path;
  app.add_option("--out", out_path, "Write the report to this file instead of standard output");

  // compute
  auto* compute = app.add_subcommand("compute", "Atkinson index and variance of a metrics CSV");
  std::string compute_file;
  std::vector<double> compute_eps;
  std::string compute_metric;
  compute->add_option("metrics", compute_file, "member_id,metric_name,value CSV")->required();
  compute->add_option("--epsilon", compute_eps, "Inequality aversion, comma list")->required()->delimiter(',');
  compute->add_option("--metric", compute_metric, "Only this metric");

  // abtest
  auto* abtest = app.add_subcommand("abtest", "Treatment vs control inequality test");
  std::string ab_treatment;
  std::string ab_control;
  std::vector<double> ab_eps;
  double ab_alpha = 0.05;
  std::string ab_test = "two-sided";
  std::string ab_metric;
  abtest->add_option("treatment", ab_treatment, "Treatment metrics CSV")->required();
  abtest->add_option("control", ab_control, "Control metrics CSV")->required();
  abtest->add_option("--epsilon", ab_eps, "Inequality aversion, comma list")->required()->delimiter(',');
  abtest->add_option("--alpha", ab_alpha, "Significance level");
  abtest->add_option("--test", ab_test, "two-sided, greater or less");
  abtest->add_option("--metric", ab_metric, "Only this metric");

  // scan and sitewide share their inputs
  struct ScanArgs {
    std::vector<std::string> assignments;
    std::vector<std::string> metrics;
    std::string config;
    double alpha = 0.05;
    double srm_alpha = default_srm_alpha;
    unsigned threads = 0;
    bool no_zero_fill = false;
    bool allow_conflicts = false;
    double max_malformed = 0.01;
    std::string test = "two-sided";
    std::size_t top = 0;
  } scan_args;
  auto add_scan_options = [&](CLI::App* sub) {
    sub->add_option("--assignments", scan_args.assignments, "Assignment CSV files")->required();
    sub->add_option("--metrics", scan_args.metrics, "Metric CSV files")->required();
    sub->add_option("--config", scan_args.config, "Experiment config JSON")->required();
    sub->add_option("--alpha", scan_args.alpha, "Significance level of comparisons");
    sub->add_option("--srm-alpha", scan_args.srm_alpha, "Significance level of the SRM check");
    sub->add_option("--threads", scan_args.threads, "Worker threads (default: all cores)");
    sub->add_flag("--no-zero-fill", scan_args.no_zero_fill,
                  "Exclude assigned members without metric rows instead of counting them as 0");
    sub->add_flag("--allow-conflicts", scan_args.allow_conflicts,
                  "Drop members with conflicting assignments instead of failing");
    sub->add_option("--max-malformed", scan_args.max_malformed, "Tolerated fraction of malformed rows");
    sub->add_option("--test", scan_args.test, "two-sided, greater or less");
  };
  auto* scan_cmd = app.add_subcommand("scan", "Scan many experiments from flat files");
  add_scan_options(scan_cmd);
  scan_cmd->add_option("--top", scan_args.top, "Also emit the K largest significant impacts");
  auto* sitewide_cmd = app.add_subcommand("sitewide", "Site-wide inequality impact of configured experiments");
  add_scan_options(sitewide_cmd);

  // bootstrap-check
  auto* boot = app.add_subcommand("bootstrap-check", "Compare bootstrap and theoretical variances");
  std::string boot_config;
  std::string boot_format = "csv";
  unsigned boot_threads = 0;
  boot->add_option("config", boot_config, "Bootstrap config JSON")->required();
  boot->add_option("--format", boot_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  boot->add_option("--threads", boot_threads, "Worker threads (default: all cores)");

  // cohorts
  auto* cohorts = app.add_subcommand("cohorts", "Social-capital cohorts from an edge list");
  std::string edges_file;
  cohorts->add_option("edges", edges_file, "src,dst CSV")->required();

  // elicit
  auto* elicit = app.add_subcommand("elicit", "Elicit inequality aversion");
  elicit->require_subcommand(1);
  auto* serve = elicit->add_subcommand("serve", "Run the choice-experiment HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string static_dir;
  serve->add_option("--port", port, "Port")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--static", static_dir, "Directory of UI files to serve");
  auto* solve = elicit->add_subcommand("solve", "Epsilon making two scenarios equivalent");
  double t1 = 0, s1 = 0, t2 = 0, s2 = 0;
  solve->add_option("--t1", t1, "Total of the first scenario")->required();
  solve->add_option("--s1", s1, "Richest share of the first scenario")->required();
  solve->add_option("--t2", t2, "Total of the second scenario")->required();
  solve->add_option("--s2", s2, "Richest share of the second scenario")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_validation;
  }

  auto scan_options = [&] {
    ScanOptions opt;
    opt.alpha = scan_args.alpha;
    opt.srm_alpha = scan_args.srm_alpha;
    opt.threads = scan_args.threads;
    opt.zero_fill = !scan_args.no_zero_fill;
    opt.fail_on_conflict = !scan_args.allow_conflicts;
    opt.max_malformed_fraction = scan_args.max_malformed;
    opt.sidedness = parse_sidedness(scan_args.test);
    return opt;
  };
  auto run_scan = [&] {
    const auto configs = load_experiment_configs(scan_args.config);
    std::vector<std::filesystem::path> a(scan_args.assignments.begin(), scan_args.assignments.end());
    std::vector<std::filesystem::path> m(scan_args.metrics.begin(), scan_args.metrics.end());
    auto report = scan_files(a, m, configs, scan_options());
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    return report;
  };

  try {
    if (*compute) {
      const auto table = read_metric_table(compute_file);
      json results = json::array();
      for (const auto& name : table.names) {
        if (!compute_metric.empty() && name != compute_metric) continue;
        const auto& xs = table.values.at(name);
        for (const auto& eps : to_params(compute_eps)) {
          json r = to_json(estimate_from_sums(moment_sums(xs, eps)));
          r["metric"] = name;
          results.push_back(std::move(r));
        }
      }
      if (!compute_metric.empty() && results.empty()) {
        throw validation_error(errc::empty_input, "metric '" + compute_metric + "' not found");
      }
      emit(json{{"results", results}}.dump(2), out_path, out);
    } else if (*abtest) {
      const auto side = parse_sidedness(ab_test);
      const auto treatment = read_metric_table(ab_treatment);
      const auto control = read_metric_table(ab_control);
      json results = json::array();
      for (const auto& name : treatment.names) {
        if (!ab_metric.empty() && name != ab_metric) continue;
        if (!control.values.contains(name)) {
          err << "warning: metric '" << name << "' missing from control, skipped\n";
          continue;
        }
        for (const auto& eps : to_params(ab_eps)) {
          const auto t = estimate_from_sums(moment_sums(treatment.values.at(name), eps));
          const auto c = estimate_from_sums(moment_sums(control.values.at(name), eps));
          json r = to_json(compare(t, c, ab_alpha, side));
          r["metric"] = name;
          r["epsilon"] = eps.value();
          r["treatment"] = to_json(t);
          r["control"] = to_json(c);
          results.push_back(std::move(r));
        }
      }
      if (results.empty()) throw validation_error(errc::empty_input, "no metric present in both files");
      emit(json{{"results", results}}.dump(2), out_path, out);
    } else if (*scan_cmd) {
      const auto report = run_scan();
      json j = to_json(report);
      if (scan_args.top > 0) {
        json top = json::array();
        for (const auto& c : rank_report(report, scan_args.top)) top.push_back(to_json(c));
        j["top"] = std::move(top);
      }
      emit(j.dump(2), out_path, out);
    } else if (*sitewide_cmd) {
      const auto report = run_scan();
      json results = json::array();
      for (const auto& c : report.comparisons) {
        if (!c.sitewide && c.sitewide_error.empty()) continue;
        json e = to_json(c);
        results.push_back(std::move(e));
      }
      emit(json{{"sitewide", results}, {"counters", to_json(report.counters)}}.dump(2), out_path, out);
    } else if (*boot) {
      std::ifstream in(boot_config);
      if (!in) throw io_error("cannot open " + boot_config);
      nlohmann::json doc;
      try {
        in >> doc;
      } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(errc::bad_config, boot_config + ": " + e.what());
      }
      auto cfg = BootstrapConfig::from_json(doc);
      cfg.threads = boot_threads;
      const auto table = ratio_table(cfg);
      if (boot_format == "json") {
        emit(to_json(table).dump(2), out_path, out);
      } else {
        std::ostringstream csv;
        write_csv(csv, table);
        emit(csv.str(), out_path, out);
        err << "rng: " << table.rng << '\n';
      }
    } else if (*cohorts) {
      std::ifstream in(edges_file, std::ios::binary);
      if (!in) throw io_error("cannot open " + edges_file);
      const auto graph = read_edge_list(in);
      const auto report = bucket(graph);
      std::ostringstream csv;
      write_csv(csv, report);
      emit(csv.str(), out_path, out);
      err << "eligible: " << report.eligible << ", tail size: " << report.tail_size
          << ", self-loops dropped: " << graph.self_loops_dropped()
          << ", duplicate edges dropped: " << graph.duplicate_edges_dropped() << '\n';
    } else if (*solve) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10g", solve_epsilon(t1, s1, t2, s2));
      emit(buf, out_path, out);
    } else if (*serve) {
      std::optional<std::filesystem::path> dir;
      if (!static_dir.empty()) dir = static_dir;
      ElicitationServer server(dir);
      err << "serving elicitation sessions on http://" << host << ':' << port << '\n';
      if (!server.listen(host, port)) throw io_error("cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const validation_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const io_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }
  return exit_ok;
}

}  // namespace ineq::cli
