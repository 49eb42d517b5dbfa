#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fleetsim/scenario.hpp"
#include "fleetsim/store.hpp"

namespace fleetsim {

namespace cli_exit {
constexpr int ok = 0;
constexpr int runtime_error = 1;
constexpr int validation_error = 2;
}  // namespace cli_exit

inline int cli_validate(const std::string& config_path) {
  std::vector<std::string> diagnostics;
  try {
    ScenarioConfig config = load_scenario_config(config_path);
    diagnostics = validate_config(config);
  } catch (const std::exception& e) {
    diagnostics = {e.what()};
  }
  if (diagnostics.empty()) {
    std::printf("ok: %s\n", config_path.c_str());
    return cli_exit::ok;
  }
  for (const auto& d : diagnostics) std::fprintf(stderr, "diagnostic: %s\n", d.c_str());
  return cli_exit::validation_error;
}

inline int cli_run(const std::string& config_path, const std::string& out_dir,
                   const std::string& report_path, std::optional<std::uint64_t> seed_override) {
  ScenarioConfig config;
  try {
    config = load_scenario_config(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "diagnostic: %s\n", e.what());
    return cli_exit::validation_error;
  }
  if (seed_override) config.seed = *seed_override;
  auto diagnostics = validate_config(config);
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics) std::fprintf(stderr, "diagnostic: %s\n", d.c_str());
    return cli_exit::validation_error;
  }
  try {
    std::filesystem::create_directories(out_dir);
    ScenarioRuntime runtime{config, out_dir};
    runtime.run();
    nlohmann::json report = runtime.report();
    {
      std::filesystem::path rp{report_path};
      if (rp.has_parent_path()) std::filesystem::create_directories(rp.parent_path());
      std::ofstream out(report_path);
      if (!out) throw SimError("cannot write report to '" + report_path + "'");
      out << report.dump(2) << "\n";
    }
    std::printf("episodes: %zu\n", report["episodes"].size());
    for (const auto& episode : report["episodes"]) {
      std::printf("  %s enter=%.3fs", episode["pair"].get<std::string>().c_str(),
                  episode["t_enter"].get<double>());
      if (episode.contains("t_leave")) std::printf(" leave=%.3fs", episode["t_leave"].get<double>());
      if (episode.contains("instance_id"))
        std::printf(" instance=%s", episode["instance_id"].get<std::string>().c_str());
      std::printf("\n");
    }
    const auto& latency = report["latency"];
    auto num = [&](const char* key) {
      return latency.contains(key) && !latency[key].is_null() ? latency[key].get<double>() : 0.0;
    };
    std::printf("latency: detection=%.1fms translation=%.3fms reconciliation=%.3fs storage=%.3fs\n",
                num("detection_ms"), num("translation_ms"), num("reconciliation_s"),
                num("storage_s"));
    std::printf("report: %s\n", report_path.c_str());
    return cli_exit::ok;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli_exit::runtime_error;
  }
}

inline int cli_inspect(const std::string& store_path, const std::string& pattern, double from_s,
                       double to_s, bool quiet) {
  if (!is_valid_pattern(pattern)) {
    std::fprintf(stderr, "error: invalid topic pattern '%s'\n", pattern.c_str());
    return cli_exit::validation_error;
  }
  if (!std::filesystem::exists(store_path)) {
    std::fprintf(stderr, "error: no such store '%s'\n", store_path.c_str());
    return cli_exit::runtime_error;
  }
  try {
    auto entries = RecordStore::query_file(store_path, pattern, VirtualTime::from_seconds(from_s),
                                           VirtualTime::from_seconds(to_s));
    std::map<std::string, std::uint64_t> per_topic;
    std::uint64_t bytes = 0;
    for (const auto& entry : entries) {
      if (!quiet)
        std::printf("%8llu  %-32s  t=%.6fs  %-10s  %zu bytes\n",
                    static_cast<unsigned long long>(entry.store_sequence), entry.topic.c_str(),
                    entry.publish_time.seconds(), entry.schema_tag.c_str(), entry.payload.size());
      ++per_topic[entry.topic];
      bytes += entry.payload.size();
    }
    std::printf("topics:\n");
    for (const auto& [topic, count] : per_topic)
      std::printf("  %-32s %llu\n", topic.c_str(), static_cast<unsigned long long>(count));
    std::printf("total: %zu entries, %llu payload bytes\n", entries.size(),
                static_cast<unsigned long long>(bytes));
    return cli_exit::ok;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli_exit::runtime_error;
  }
}

inline int cli_main(int argc, char** argv) {
  CLI::App app{"fleetsim - virtual-time simulator for event-driven fleet orchestration"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string report_path = "out/report.json";
  std::string log_level = "warn";
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "scenario config file")->required();
    cmd->add_option("--log-level", log_level, "debug|info|warn|error|off");
  };

  CLI::App* validate = app.add_subcommand("validate", "check a scenario config");
  add_common(validate, true);

  CLI::App* run = app.add_subcommand("run", "run a scenario and write the report");
  add_common(run, true);
  run->add_option("--out-dir", out_dir, "directory for recording stores");
  run->add_option("--report", report_path, "report output path");
  run->add_option("--seed", seed_override, "override the config seed");

  std::string store_path;
  std::string pattern = "#";
  double from_s = 0.0;
  double to_s = 1e9;  // roughly 31 simulated years; keeps the ns clock in range
  bool quiet = false;
  CLI::App* inspect = app.add_subcommand("inspect", "summarize a recording store");
  inspect->add_option("store", store_path, "recording store (.ndjson)")->required();
  inspect->add_option("--pattern", pattern, "topic pattern filter");
  inspect->add_option("--from", from_s, "range start, seconds");
  inspect->add_option("--to", to_s, "range end, seconds");
  inspect->add_flag("--quiet", quiet, "totals only, no per-entry lines");
  add_common(inspect, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli_exit::ok : cli_exit::validation_error;
  }

  if (!log::set_level(log_level)) {
    std::fprintf(stderr, "error: unknown log level '%s'\n", log_level.c_str());
    return cli_exit::validation_error;
  }

  if (validate->parsed()) return cli_validate(config_path);
  if (run->parsed()) return cli_run(config_path, out_dir, report_path, seed_override);
  if (inspect->parsed()) return cli_inspect(store_path, pattern, from_s, to_s, quiet);
  return cli_exit::validation_error;
}

}  // namespace fleetsim
