#include "octl/scenario.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"octl - optimal control of the spectrally truncated Schrodinger system"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;

  CLI::App* run = app.add_subcommand("run", "execute a scenario config");
  run->add_option("config", config_path, "scenario config file (JSON)")
      ->required();
  run->add_option("--set", overrides,
                  "override a config entry, key=value with dotted paths");
  run->add_option("--out", out_dir, "output directory override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : octl::kExitConfigError;
  }

  if (run->parsed()) {
    return octl::run_scenario_file(config_path, overrides, out_dir, std::cout);
  }
  return 0;
}
