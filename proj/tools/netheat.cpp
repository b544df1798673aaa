// netheat: command line front end for scenario files.
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "netheat/error.hpp"
#include "netheat/scenario_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Heat diffusion on metric graphs"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  for (const char* name : {"validate", "spectrum", "simulate", "analyze", "convergence"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: current directory)");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto scenario = netheat::parse_scenario(scenario_path);
    const auto report = netheat::run(scenario, netheat::parse_command(command), out_dir);
    std::cout << report.json;
    return 0;
  } catch (const netheat::Error& e) {
    std::cerr << "netheat " << command << ": " << e.what() << '\n';
    return e.kind() == netheat::ErrorKind::schema ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "netheat " << command << ": " << e.what() << '\n';
    return 1;
  }
}
