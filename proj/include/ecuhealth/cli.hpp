#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecuhealth/commands.hpp"

namespace ecuhealth::cli {

/// Parses arguments and dispatches to a subcommand. Returns the process exit
/// status.
inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensor health monitoring for ECU telemetry", "ecuhealth"};
  app.require_subcommand(1);

  std::optional<std::string> catalog;
  std::optional<std::uint64_t> seed;
  auto add_catalog = [&](CLI::App* sub) {
    sub->add_option("--catalog", catalog, "Sensor catalog JSON (default: built-in catalog)");
  };
  auto as_path = [](const std::optional<std::string>& s) {
    return s ? std::optional<std::filesystem::path>(*s) : std::nullopt;
  };

  GenerateOptions gen;
  std::string gen_config, gen_out;
  std::optional<std::string> gen_truth;
  auto* generate = app.add_subcommand("generate", "Generate synthetic telemetry with injected faults");
  generate->add_option("--config", gen_config, "Scenario configuration JSON")->required();
  generate->add_option("--out", gen_out, "Telemetry CSV to write")->required();
  generate->add_option("--truth", gen_truth, "Ground-truth CSV to write (default: <out>_truth.csv)");
  generate->add_option("--seed", seed, "Override the scenario seed");
  add_catalog(generate);

  TrainOptions tr;
  std::string tr_data, tr_out;
  std::optional<std::string> tr_config;
  auto* train_cmd = app.add_subcommand("train", "Fit the monitor and write a model artifact");
  train_cmd->add_option("--data", tr_data, "Telemetry CSV")->required();
  train_cmd->add_option("--out", tr_out, "Model artifact to write")->required();
  train_cmd->add_option("--config", tr_config, "Training configuration JSON");
  train_cmd->add_option("--seed", seed, "Override the training seed");
  add_catalog(train_cmd);

  EvaluateOptions ev;
  std::string ev_model, ev_data;
  std::optional<std::string> ev_truth, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "Report regression quality and detection scores");
  evaluate->add_option("--model", ev_model, "Model artifact")->required();
  evaluate->add_option("--data", ev_data, "Telemetry CSV")->required();
  evaluate->add_option("--truth", ev_truth, "Ground-truth CSV; adds the detection benchmark");
  evaluate->add_option("--out", ev_out, "Also write the evaluation as JSON");
  add_catalog(evaluate);

  MonitorOptions mon;
  std::string mon_model, mon_threshold = "almost-defective", mon_alerts = "alerts.jsonl";
  auto* monitor = app.add_subcommand("monitor", "Classify a frame stream and raise alerts");
  monitor->add_option("--model", mon_model, "Model artifact")->required();
  monitor->add_option("--input", mon.input, "Telemetry CSV or frame records ('-' for stdin)");
  monitor->add_option("--out", mon.out, "Report lines ('-' for stdout)");
  monitor->add_option("--alert-log", mon_alerts, "Alert log to write");
  monitor
      ->add_option("--alert-threshold", mon_threshold, "Lowest health class that raises an alert")
      ->check(CLI::IsMember({"healthy", "almost-healthy", "normal", "almost-defective", "defective"}));
  add_catalog(monitor);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "ecuhealth: " << e.what() << '\n';
    return kUsageError;
  }

  if (generate->parsed()) {
    gen.config = gen_config;
    gen.out = gen_out;
    gen.truth = as_path(gen_truth);
    gen.catalog = as_path(catalog);
    gen.seed = seed;
    return cmd_generate(gen, out, err);
  }
  if (train_cmd->parsed()) {
    tr.telemetry = tr_data;
    tr.out = tr_out;
    tr.config = as_path(tr_config);
    tr.catalog = as_path(catalog);
    tr.seed = seed;
    return cmd_train(tr, out, err);
  }
  if (evaluate->parsed()) {
    ev.artifact = ev_model;
    ev.telemetry = ev_data;
    ev.truth = as_path(ev_truth);
    ev.out = as_path(ev_out);
    ev.catalog = as_path(catalog);
    return cmd_evaluate(ev, out, err);
  }
  mon.artifact = mon_model;
  mon.alert_log = mon_alerts;
  mon.alert_threshold = *parse_health_index(mon_threshold);
  mon.catalog = as_path(catalog);
  return cmd_monitor(mon, in, out, err);
}

}  // namespace ecuhealth::cli
