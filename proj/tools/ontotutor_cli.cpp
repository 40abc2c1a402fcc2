// ontotutor: command-line front end for the tutoring engine.
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 validation error,
// 4 io error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ontotutor/ontotutor.hpp"

namespace {

using namespace ontotutor;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::IoError: return 4;
    default: return 3;
  }
}

ActionVec parse_action(const std::string& text) {
  ActionVec a;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      a.values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad action component '" + cell + "'");
    }
  }
  for (double v : a.values)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::ConfigError, "action components must lie in [0, 1]");
  return a;
}

int cmd_validate(const std::string& file) {
  const std::string text = detail::read_file(file);
  const OntologyGraph graph = parse_ontology(text);
  const auto report = validate(graph);
  if (report.ok()) {
    std::cout << file << ": ok (" << graph.size() << " concepts, " << graph.edges().size() << " edges, "
              << graph.content().size() << " content items, " << graph.assignments().size() << " agents)\n";
    return 0;
  }
  for (const auto& v : report.violations) std::cout << to_string(v.kind) << ": " << v.message << "\n";
  std::cout << file << ": " << report.violations.size() << " violation(s)\n";
  return 3;
}

int cmd_transform_check(const std::string& binding_file, const std::string& input, const std::string& output) {
  const auto binding = load_binding_file(binding_file);
  const auto out = transform_csv(binding, detail::read_file(input));
  if (output.empty()) std::cout << out;
  else detail::write_file(output, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ontotutor: ontology-driven adaptive tutoring engine"};
  app.require_subcommand(1);

  std::string validate_file;
  auto* validate_cmd = app.add_subcommand("validate", "Validate an ontology document");
  validate_cmd->add_option("file", validate_file, "Ontology JSON file")->required();

  std::string binding_file, input_file, output_file;
  auto* transform_cmd = app.add_subcommand("transform-check", "Apply a binding to a telemetry CSV");
  transform_cmd->add_option("--binding", binding_file, "Binding JSON file")->required();
  transform_cmd->add_option("--input", input_file, "Telemetry CSV (header = source metric names)")->required();
  transform_cmd->add_option("--output", output_file, "Write transformed CSV here instead of stdout");

  std::string config_file, output_dir;
  std::optional<std::size_t> episodes;
  std::optional<std::uint64_t> seed;
  bool emit_plans = false, parallel_agents = false;
  auto* train_cmd = app.add_subcommand("train", "Train agents and write metrics and checkpoints");
  train_cmd->add_option("--config", config_file, "Experiment config JSON")->required();
  train_cmd->add_option("--output-dir", output_dir, "Override output directory");
  train_cmd->add_option("--episodes", episodes, "Override episode count");
  train_cmd->add_option("--seed", seed, "Override seed");
  train_cmd->add_flag("--emit-plans", emit_plans, "Write plans.ndjson");
  train_cmd->add_flag("--parallel-agents", parallel_agents, "Train agents concurrently at episode boundaries");

  std::string checkpoint_dir;
  bool random_baseline = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpointed agents without exploration");
  eval_cmd->add_option("--config", config_file, "Experiment config JSON")->required();
  eval_cmd->add_option("--checkpoints", checkpoint_dir, "Directory of <agent>.ckpt.json files");
  eval_cmd->add_flag("--random-baseline", random_baseline, "Evaluate a uniform-random policy instead");

  std::string report_file;
  auto* jump_cmd = app.add_subcommand("jumpstart", "Compare jump-started and cold late-attached agents");
  jump_cmd->add_option("--config", config_file, "Experiment config JSON")->required();
  jump_cmd->add_option("--output", report_file, "Write the JSON report here");

  std::string action_text, population_csv_file;
  std::size_t passes = 1;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the student simulator with a fixed action");
  sim_cmd->add_option("--config", config_file, "Experiment config JSON")->required();
  sim_cmd->add_option("--action", action_text, "Comma-separated action components")->required();
  sim_cmd->add_option("--passes", passes, "Passes through the lesson order");
  sim_cmd->add_option("--population-csv", population_csv_file, "Also export the sampled population");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) return cmd_validate(validate_file);
    if (*transform_cmd) return cmd_transform_check(binding_file, input_file, output_file);

    ExperimentConfig config = load_config_file(config_file);
    if (*train_cmd) {
      if (!output_dir.empty()) config.output_dir = output_dir;
      if (episodes) config.episodes = *episodes;
      if (seed) config.seed = *seed;
      config.emit_plans = config.emit_plans || emit_plans;
      config.parallel_agents = config.parallel_agents || parallel_agents;
      const auto summary = run_experiment(config);
      std::cout << summary_to_json(summary).dump(2) << "\n";
      return 0;
    }
    if (*eval_cmd) {
      if (random_baseline) {
        std::cout << eval_to_json(eval_random_policy(config)).dump(2) << "\n";
        return 0;
      }
      if (checkpoint_dir.empty()) checkpoint_dir = (config.output_dir / "checkpoints").string();
      std::cout << eval_to_json(eval_policy(checkpoint_dir, config)).dump(2) << "\n";
      return 0;
    }
    if (*jump_cmd) {
      const auto report = compare_jumpstart(config);
      const auto text = jumpstart_to_json(report).dump(2) + "\n";
      if (!report_file.empty()) detail::write_file(report_file, text);
      std::cout << jumpstart_csv(report);
      std::cout << "median_shared," << report.median_shared << "\nmedian_cold," << report.median_cold << "\n";
      return 0;
    }
    if (*sim_cmd) {
      if (!population_csv_file.empty()) {
        const auto env = build_environment(config);
        detail::write_file(population_csv_file, population_csv(env.cohort));
      }
      std::cout << simulate_fixed_action(config, parse_action(action_text), passes);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
