// Command-line front end: solve, compare, check, ensemble, list.
//
// Exit codes: 0 success (converged / equivalent / not refuted), 2 step budget
// exhausted (solve only), 1 any error.

#include <CLI11.hpp>

#include <iostream>

#include "tmd/harness/config.hpp"
#include "tmd/harness/experiment.hpp"

namespace {

using tmd::harness::CommandResult;
using tmd::harness::ExperimentConfig;

int run(CommandResult (*command)(const ExperimentConfig&), const std::string& path,
        const std::vector<std::string>& overrides) {
  try {
    ExperimentConfig config = ExperimentConfig::load(path);
    for (const std::string& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --set expects key=value, got '" << item << "'\n";
        return tmd::harness::kExitError;
      }
      config.set(item.substr(0, eq), item.substr(eq + 1));
    }
    const CommandResult result = command(config);
    for (const std::string& file : result.files) std::cout << "wrote " << file << "\n";
    const auto& report = result.report;
    if (report.contains("termination")) std::cout << "termination: " << report["termination"].get<std::string>() << "\n";
    if (report.contains("max_deviation")) std::cout << "max deviation: " << report["max_deviation"].dump() << "\n";
    if (report.contains("refuted")) std::cout << "refuted: " << report["refuted"].dump() << "\n";
    return result.exit_code;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return tmd::harness::kExitError;
  }
}

void print_list(const std::string& title, const std::vector<std::string>& names) {
  std::cout << title << ":\n";
  for (const auto& name : names) std::cout << "  " << name << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target mirror descent solver harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  struct Entry {
    const char* name;
    const char* help;
    CommandResult (*command)(const ExperimentConfig&);
  };
  const Entry entries[] = {
      {"solve", "Run one experiment; write trajectory CSV and summary JSON",
       &tmd::harness::command_solve},
      {"compare", "Run a preset against its reference iteration",
       &tmd::harness::command_compare},
      {"check", "Sampled checks of the design conditions", &tmd::harness::command_check},
      {"ensemble", "Run an ensemble and its synthesized single TMD",
       &tmd::harness::command_ensemble},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subcommands;
  for (const Entry& entry : entries) {
    CLI::App* sub = app.add_subcommand(entry.name, entry.help);
    sub->add_option("config", config_path, "Config file")->required();
    sub->add_option("--set", overrides, "Override a config key (key=value), repeatable");
    subcommands.emplace_back(sub, &entry);
  }
  CLI::App* list = app.add_subcommand("list", "List problems, geometries and presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : tmd::harness::kExitError;
  }

  if (list->parsed()) {
    print_list("problems", tmd::harness::problem_names());
    print_list("geometries", tmd::harness::geometry_names());
    print_list("presets", tmd::harness::preset_names());
    return 0;
  }
  for (const auto& [sub, entry] : subcommands) {
    if (sub->parsed()) return run(entry->command, config_path, overrides);
  }
  return tmd::harness::kExitError;
}
